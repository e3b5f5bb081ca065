#include "curio/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <functional>
#include <map>
#include <sstream>
#include <variant>

#include "curio/errors.hpp"
#include "curio/metrics.hpp"

namespace curio {
namespace {

using FieldPtr = std::variant<int*, double*, bool*, uint64_t*, std::string*, std::vector<int>*>;

// One entry per config key; the map doubles as the serialization order.
std::map<std::string, FieldPtr> field_table(ExperimentConfig& c) {
    return {
        {"algorithm", &c.algorithm},
        {"seeds", &c.seeds},
        {"out", &c.out},
        {"env.rooms", &c.env.rooms},
        {"env.cell", &c.env.cell},
        {"env.view_radius", &c.env.view_radius},
        {"env.keys", &c.env.keys},
        {"env.max_keys", &c.env.max_keys},
        {"env.step_limit", &c.env.step_limit},
        {"env.procedural", &c.env.procedural},
        {"env.layout_seed", &c.env.layout_seed},
        {"env.noise_tile", &c.env.noise_tile},
        {"wm.embed_n", &c.wm.embed_n},
        {"wm.history_m", &c.wm.history_m},
        {"wm.horizon", &c.wm.horizon},
        {"wm.alpha", &c.wm.alpha},
        {"wm.action_embed", &c.wm.action_embed},
        {"wm.enc_hidden", &c.wm.enc_hidden},
        {"wm.pred_hidden", &c.wm.pred_hidden},
        {"reward.lambda", &c.reward.lambda},
        {"reward.alpha", &c.reward.alpha},
        {"reward.clipping", &c.reward.clipping},
        {"reward.clip_alpha", &c.reward.clip_alpha},
        {"reward.extrinsic", &c.reward.extrinsic},
        {"rl.sharing", &c.rl.sharing},
        {"rl.gamma", &c.rl.gamma},
        {"rl.value_weight", &c.rl.value_weight},
        {"rl.entropy_weight", &c.rl.entropy_weight},
        {"rl.lr", &c.rl.lr},
        {"rl.beta1", &c.rl.beta1},
        {"rl.byol_weight", &c.rl.byol_weight},
        {"train.learner_steps", &c.train.learner_steps},
        {"train.segment_len", &c.train.segment_len},
        {"train.batch_envs", &c.train.batch_envs},
        {"train.eval_every", &c.train.eval_every},
        {"train.eval_episodes", &c.train.eval_episodes},
        {"score.human", &c.score.human},
        {"score.random", &c.score.random},
    };
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    const char* first = value.data();
    const char* last = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc() || ptr != last) {
        throw ConfigError("config key " + key + ": cannot parse value '" + value + "'");
    }
    return out;
}

void assign_field(const std::string& key, const std::string& value, FieldPtr field) {
    std::visit(
        [&](auto* p) {
            using T = std::remove_pointer_t<decltype(p)>;
            if constexpr (std::is_same_v<T, int> || std::is_same_v<T, uint64_t>) {
                *p = parse_number<T>(key, value);
            } else if constexpr (std::is_same_v<T, double>) {
                *p = parse_number<double>(key, value);
            } else if constexpr (std::is_same_v<T, bool>) {
                if (value == "true") *p = true;
                else if (value == "false") *p = false;
                else throw ConfigError("config key " + key + ": expected true or false, got '" +
                                       value + "'");
            } else if constexpr (std::is_same_v<T, std::string>) {
                *p = value;
            } else { // std::vector<int>
                p->clear();
                std::string item;
                std::istringstream ss(value);
                while (std::getline(ss, item, ',')) {
                    p->push_back(parse_number<int>(key, trim(item)));
                }
            }
        },
        field);
}

std::string render_field(FieldPtr field) {
    return std::visit(
        [&](auto* p) -> std::string {
            using T = std::remove_pointer_t<decltype(p)>;
            if constexpr (std::is_same_v<T, int> || std::is_same_v<T, uint64_t>) {
                return std::to_string(*p);
            } else if constexpr (std::is_same_v<T, double>) {
                return format_double(*p);
            } else if constexpr (std::is_same_v<T, bool>) {
                return *p ? "true" : "false";
            } else if constexpr (std::is_same_v<T, std::string>) {
                return *p;
            } else {
                std::string out;
                for (size_t i = 0; i < p->size(); ++i) {
                    if (i) out += ",";
                    out += std::to_string((*p)[i]);
                }
                return out;
            }
        },
        field);
}

void require(bool ok, const std::string& message) {
    if (!ok) throw ConfigError(message);
}

} // namespace

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg;
    auto table = field_table(cfg);
    std::vector<std::string> seen;

    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected 'key = value', got '" + line + "'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        auto it = table.find(key);
        if (it == table.end()) {
            throw ConfigError("config key " + key + ": unknown key");
        }
        if (std::find(seen.begin(), seen.end(), key) != seen.end()) {
            throw ConfigError("config key " + key + ": assigned twice");
        }
        seen.push_back(key);
        assign_field(key, value, it->second);
    }
    return cfg;
}

std::string serialize_config(const ExperimentConfig& cfg) {
    auto table = field_table(const_cast<ExperimentConfig&>(cfg));
    std::string out;
    for (const auto& [key, field] : table) {
        out += key;
        out += " = ";
        out += render_field(field);
        out += "\n";
    }
    return out;
}

void validate_config(const ExperimentConfig& cfg) {
    const bool known_algorithm = cfg.algorithm == "byol-explore" || cfg.algorithm == "rnd" ||
                                 cfg.algorithm == "icm" || cfg.algorithm == "pure-rl";
    require(known_algorithm,
            "config key algorithm: unknown algorithm '" + cfg.algorithm +
                "' (expected byol-explore, rnd, icm, or pure-rl)");
    require(!cfg.seeds.empty(), "config key seeds: at least one seed required");
    require(!cfg.out.empty(), "config key out: output directory must be non-empty");

    require(cfg.env.rooms >= 1, "config key env.rooms: must be >= 1");
    require(cfg.env.cell >= 2, "config key env.cell: must be >= 2");
    require(cfg.env.view_radius >= 1, "config key env.view_radius: must be >= 1");
    require(cfg.env.keys >= 0, "config key env.keys: must be >= 0");
    require(cfg.env.max_keys >= cfg.env.keys, "config key env.max_keys: must be >= env.keys");
    require(cfg.env.step_limit >= 1, "config key env.step_limit: must be >= 1");

    require(cfg.wm.embed_n >= 1, "config key wm.embed_n: must be >= 1");
    require(cfg.wm.history_m >= 1, "config key wm.history_m: must be >= 1");
    require(cfg.wm.horizon >= 1, "config key wm.horizon: must be >= 1");
    require(cfg.wm.alpha >= 0.0 && cfg.wm.alpha <= 1.0,
            "config key wm.alpha: must lie in [0, 1]");
    require(cfg.wm.action_embed >= 1, "config key wm.action_embed: must be >= 1");
    require(cfg.wm.enc_hidden >= 1, "config key wm.enc_hidden: must be >= 1");
    require(cfg.wm.pred_hidden >= 1, "config key wm.pred_hidden: must be >= 1");

    require(cfg.reward.lambda >= 0.0, "config key reward.lambda: must be >= 0");
    require(cfg.reward.alpha >= 0.0 && cfg.reward.alpha < 1.0,
            "config key reward.alpha: must lie in [0, 1)");
    require(cfg.reward.clip_alpha >= 0.0 && cfg.reward.clip_alpha < 1.0,
            "config key reward.clip_alpha: must lie in [0, 1)");

    require(cfg.rl.gamma >= 0.0 && cfg.rl.gamma < 1.0, "config key rl.gamma: must lie in [0, 1)");
    require(cfg.rl.value_weight >= 0.0, "config key rl.value_weight: must be >= 0");
    require(cfg.rl.entropy_weight >= 0.0, "config key rl.entropy_weight: must be >= 0");
    require(cfg.rl.lr > 0.0, "config key rl.lr: must be > 0");
    require(cfg.rl.beta1 >= 0.0 && cfg.rl.beta1 < 1.0, "config key rl.beta1: must lie in [0, 1)");
    require(cfg.rl.byol_weight >= 0.0, "config key rl.byol_weight: must be >= 0");

    require(cfg.train.learner_steps >= 1, "config key train.learner_steps: must be >= 1");
    require(cfg.train.segment_len >= 2, "config key train.segment_len: must be >= 2");
    require(cfg.train.batch_envs >= 1, "config key train.batch_envs: must be >= 1");
    require(cfg.train.eval_every >= 1, "config key train.eval_every: must be >= 1");
    require(cfg.train.eval_episodes >= 1, "config key train.eval_episodes: must be >= 1");

    require(cfg.score.human != cfg.score.random,
            "config key score.human: must differ from score.random for normalized scores");
}

const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names = {"fixed-targets",    "horizon-1", "no-clipping",
                                                   "no-sharing",       "pure-exploration",
                                                   "pure-rl"};
    return names;
}

void apply_preset(ExperimentConfig& cfg, const std::string& name) {
    if (name == "fixed-targets") {
        cfg.wm.alpha = 1.0;
    } else if (name == "horizon-1") {
        cfg.wm.horizon = 1;
    } else if (name == "no-clipping") {
        cfg.reward.clipping = false;
    } else if (name == "no-sharing") {
        cfg.rl.sharing = false;
    } else if (name == "pure-exploration") {
        cfg.reward.extrinsic = false;
    } else if (name == "pure-rl") {
        cfg.algorithm = "pure-rl";
        cfg.reward.lambda = 0.0;
    } else {
        std::string valid;
        for (const auto& n : preset_names()) {
            if (!valid.empty()) valid += ", ";
            valid += n;
        }
        throw ConfigError("unknown preset '" + name + "' (valid presets: " + valid + ")");
    }
}

} // namespace curio
