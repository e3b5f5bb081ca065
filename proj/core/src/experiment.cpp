#include "curio/experiment.hpp"

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>

#include "curio/checkpoint.hpp"
#include "curio/errors.hpp"
#include "curio/rng.hpp"

namespace curio {
namespace {

const std::vector<std::string> kTrainingHeader = {
    "learner_step", "env_steps",    "policy_loss",    "value_loss",
    "entropy",      "model_loss",   "reward_sigma",   "intrinsic_mean"};

std::string truncation_row(size_t width) {
    std::vector<std::string> cells(width);
    cells[0] = "truncated";
    return csv_row(cells);
}

} // namespace

Trainer::Trainer(const ExperimentConfig& cfg, int seed) : cfg_(cfg), seed_(seed) {
    validate_config(cfg_);

    const int B = cfg_.train.batch_envs;
    envs_.reserve(static_cast<size_t>(B));
    for (int j = 0; j < B; ++j) envs_.emplace_back(cfg_.env);
    const int obs_dim = envs_[0].obs_dim();

    std::mt19937_64 init_rng = substream(static_cast<uint64_t>(seed_), "init");
    if (cfg_.algorithm == "byol-explore") {
        WorldModelConfig wc;
        wc.obs_dim = obs_dim;
        wc.action_count = MultiRoomWorld::kActions;
        wc.embed_n = cfg_.wm.embed_n;
        wc.history_m = cfg_.wm.history_m;
        wc.horizon_k = cfg_.wm.horizon;
        wc.target_alpha = cfg_.wm.alpha;
        wc.action_embed = cfg_.wm.action_embed;
        wc.enc_hidden = cfg_.wm.enc_hidden;
        wc.pred_hidden = cfg_.wm.pred_hidden;
        wm_ = std::make_unique<WorldModel>(wc, online_, "wm", init_rng);
    } else if (cfg_.algorithm == "rnd" || cfg_.algorithm == "icm") {
        BaselineConfig bc;
        bc.obs_dim = obs_dim;
        bc.action_count = MultiRoomWorld::kActions;
        bc.embed_n = cfg_.wm.embed_n;
        bc.enc_hidden = cfg_.wm.enc_hidden;
        bc.head_hidden = cfg_.wm.pred_hidden;
        if (cfg_.algorithm == "rnd") {
            rnd_ = std::make_unique<RndModel>(bc, online_, "rnd", init_rng);
        } else {
            icm_ = std::make_unique<IcmModel>(bc, online_, "icm", init_rng);
        }
    }

    PolicyConfig pc;
    pc.obs_dim = obs_dim;
    pc.action_count = MultiRoomWorld::kActions;
    pc.embed_n = cfg_.wm.embed_n;
    pc.history_m = cfg_.wm.history_m;
    pc.action_embed = cfg_.wm.action_embed;
    pc.enc_hidden = cfg_.wm.enc_hidden;
    // Torso sharing is defined against the world model; the other
    // algorithms always train a standalone policy torso.
    pc.sharing = cfg_.rl.sharing && wm_ != nullptr;
    net_ = std::make_unique<PolicyValueNetwork>(pc, online_, wm_.get(), init_rng);

    adam_ = AdamState::init(online_);
    adam_cfg_.lr = cfg_.rl.lr;
    adam_cfg_.beta1 = cfg_.rl.beta1;
    norm_.decay = cfg_.reward.alpha;
    clip_.mean_tracker.decay = cfg_.reward.clip_alpha;
    update_weights_.gamma = cfg_.rl.gamma;
    update_weights_.value_weight = cfg_.rl.value_weight;
    update_weights_.entropy_weight = cfg_.rl.entropy_weight;

    ti_ = tape_.register_tree(online_);

    episode_rng_.reserve(static_cast<size_t>(B));
    act_rng_.reserve(static_cast<size_t>(B));
    for (int j = 0; j < B; ++j) {
        episode_rng_.push_back(
            substream(static_cast<uint64_t>(seed_), "episode", static_cast<uint64_t>(j)));
        act_rng_.push_back(
            substream(static_cast<uint64_t>(seed_), "act", static_cast<uint64_t>(j)));
    }
    state_.assign(static_cast<size_t>(B),
                  std::vector<double>(static_cast<size_t>(pc.history_m), 0.0));
    obs_.resize(static_cast<size_t>(B));
    prev_action_.assign(static_cast<size_t>(B), -1);
    episode_return_.assign(static_cast<size_t>(B), 0.0);
    for (int j = 0; j < B; ++j) {
        obs_[static_cast<size_t>(j)] = envs_[static_cast<size_t>(j)].reset(
            episode_rng_[static_cast<size_t>(j)]());
    }
}

void Trainer::collect(RolloutBatch* out) {
    const int B = cfg_.train.batch_envs;
    const int T = cfg_.train.segment_len;
    const int M = net_->config().history_m;

    out->traj.envs = B;
    out->traj.len = T;
    out->traj.obs_dim = envs_[0].obs_dim();
    out->traj.action_count = MultiRoomWorld::kActions;
    out->traj.resize();
    out->log_probs.assign(static_cast<size_t>(B) * T, 0.0);
    out->values.assign(static_cast<size_t>(B) * T, 0.0);
    out->initial_state.assign(static_cast<size_t>(B) * M, 0.0);
    out->bootstrap_value.assign(static_cast<size_t>(B), 0.0);
    out->bootstrap_terminated.assign(static_cast<size_t>(B), 0);
    finished_.clear();

    for (int j = 0; j < B; ++j) {
        auto& env = envs_[static_cast<size_t>(j)];
        std::copy(state_[static_cast<size_t>(j)].begin(), state_[static_cast<size_t>(j)].end(),
                  out->initial_state.begin() + static_cast<size_t>(j) * M);
        for (int t = 0; t < T; ++t) {
            const size_t i = out->traj.idx(j, t);
            std::copy(obs_[static_cast<size_t>(j)].begin(), obs_[static_cast<size_t>(j)].end(),
                      out->traj.obs_at(j, t));
            out->traj.prev_actions[i] = prev_action_[static_cast<size_t>(j)];

            const PolicyValueNetwork::ActResult a =
                net_->act(online_, obs_[static_cast<size_t>(j)].data(),
                          prev_action_[static_cast<size_t>(j)], state_[static_cast<size_t>(j)],
                          canonical(act_rng_[static_cast<size_t>(j)]));
            out->traj.actions[i] = a.action;
            out->log_probs[i] = a.log_prob;
            out->values[i] = a.value;

            StepOutcome o = env.step(a.action);
            ++env_steps_;
            out->traj.rewards[i] = o.reward;
            out->traj.terminated[i] = o.terminated ? 1 : 0;
            episode_return_[static_cast<size_t>(j)] += o.reward;

            if (o.terminated) {
                EpisodeStats st;
                st.ret = episode_return_[static_cast<size_t>(j)];
                st.length = env.steps_taken();
                st.rooms_visited = o.rooms_visited;
                finished_.push_back(st);
                episode_return_[static_cast<size_t>(j)] = 0.0;
                obs_[static_cast<size_t>(j)] = env.reset(episode_rng_[static_cast<size_t>(j)]());
                prev_action_[static_cast<size_t>(j)] = -1;
                state_[static_cast<size_t>(j)].assign(static_cast<size_t>(M), 0.0);
            } else {
                obs_[static_cast<size_t>(j)] = std::move(o.obs);
                prev_action_[static_cast<size_t>(j)] = a.action;
            }
        }
        out->bootstrap_terminated[static_cast<size_t>(j)] = out->traj.terminated[out->traj.idx(j, T - 1)];
        if (!out->bootstrap_terminated[static_cast<size_t>(j)]) {
            out->bootstrap_value[static_cast<size_t>(j)] =
                net_->bootstrap(online_, obs_[static_cast<size_t>(j)].data(),
                                prev_action_[static_cast<size_t>(j)], state_[static_cast<size_t>(j)]);
        }
    }
}

std::vector<double> Trainer::intrinsic_and_model_loss(const TrajectoryBatch& traj,
                                                      Var* model_loss) {
    std::vector<double> raw;
    if (wm_) {
        PerTermLosses terms;
        *model_loss = wm_->loss_batch(tape_, ti_, traj, &terms);
        raw = accumulate_uncertainties(terms).value;
    } else if (rnd_) {
        *model_loss = rnd_->compute(tape_, ti_, traj, &raw);
    } else if (icm_) {
        double inv = 0.0, fwd = 0.0;
        *model_loss = icm_->compute(tape_, ti_, traj, &raw, &inv, &fwd);
    }
    return raw;
}

TrainDiagnostics Trainer::step() {
    RolloutBatch rollout;
    collect(&rollout);

    tape_.reset();
    Var model_loss = -1;
    const std::vector<double> raw = intrinsic_and_model_loss(rollout.traj, &model_loss);

    TrainDiagnostics diag;
    std::vector<double> mixed;
    if (!raw.empty()) {
        const std::vector<double> normalized = normalize_batch(norm_, raw);
        const std::vector<double> prioritized =
            prioritize(clip_, normalized, cfg_.reward.clipping);
        diag.reward_sigma = norm_.sigma();
        double sum = 0.0;
        for (double v : prioritized) sum += v;
        diag.intrinsic_mean = sum / static_cast<double>(prioritized.size());

        std::vector<double> extrinsic = rollout.traj.rewards;
        if (!cfg_.reward.extrinsic) extrinsic.assign(extrinsic.size(), 0.0);
        mixed = mix_rewards(extrinsic, prioritized, cfg_.reward.lambda, rollout.traj.envs,
                            rollout.traj.len);
    } else if (cfg_.reward.extrinsic) {
        mixed = rollout.traj.rewards;
    } else {
        mixed.assign(rollout.traj.rewards.size(), 0.0);
    }

    const PolicyLossParts parts =
        policy_loss_on_tape(tape_, ti_, *net_, rollout, mixed, update_weights_);
    diag.policy_loss = parts.policy_loss;
    diag.value_loss = parts.value_loss;
    diag.entropy = parts.entropy;

    Var total = parts.total;
    if (model_loss >= 0) {
        diag.model_loss = tape_.scalar(model_loss);
        const double model_weight = wm_ ? cfg_.rl.byol_weight : 1.0;
        const std::array<Var, 2> terms{parts.total, model_loss};
        const std::array<double, 2> weights{1.0, model_weight};
        total = tape_.accumulate(terms, weights);
    }

    tape_.backward(total);
    const ParamTree grads = tape_.grad(ti_);
    adam_update(online_, grads, adam_, adam_cfg_);
    if (wm_) wm_->target_step(online_);

    ++learner_step_;
    diag.learner_step = learner_step_;
    diag.env_steps = env_steps_;
    return diag;
}

EvalSummary Trainer::evaluate(int point_index) {
    const int E = cfg_.train.eval_episodes;
    const int M = net_->config().history_m;
    EvalSummary out;
    for (int e = 0; e < E; ++e) {
        const uint64_t idx =
            static_cast<uint64_t>(point_index) * static_cast<uint64_t>(E) + static_cast<uint64_t>(e);
        MultiRoomWorld env(cfg_.env);
        std::mt19937_64 env_rng = substream(static_cast<uint64_t>(seed_), "eval-env", idx);
        std::mt19937_64 act_rng = substream(static_cast<uint64_t>(seed_), "eval-act", idx);
        std::vector<double> obs = env.reset(env_rng());
        std::vector<double> st(static_cast<size_t>(M), 0.0);
        int prev = -1;
        double ret = 0.0;
        while (!env.terminated()) {
            const PolicyValueNetwork::ActResult a =
                net_->act(online_, obs.data(), prev, st, canonical(act_rng));
            StepOutcome o = env.step(a.action);
            ret += o.reward;
            prev = a.action;
            if (!o.terminated) obs = std::move(o.obs);
        }
        out.mean_return += ret;
        out.mean_length += env.steps_taken();
        out.mean_rooms += env.rooms_visited();
        out.max_rooms = std::max(out.max_rooms, static_cast<double>(env.rooms_visited()));
    }
    out.mean_return /= E;
    out.mean_length /= E;
    out.mean_rooms /= E;
    return out;
}

ParamTree Trainer::checkpoint_tree() const {
    ParamTree t;
    for (const auto& e : online_.entries()) {
        t.add(e.name, e.shape).data = e.data;
    }
    if (wm_) {
        for (const auto& e : wm_->target_tree().entries()) {
            t.add("target/" + e.name, e.shape).data = e.data;
        }
    }
    return t;
}

void run_seed(const ExperimentConfig& cfg, int seed, const std::string& out_dir,
              const std::atomic<bool>* stop) {
    validate_config(cfg);
    std::filesystem::create_directories(out_dir);

    ExperimentConfig echo = cfg;
    echo.seeds = {seed};
    write_text_file(out_dir + "/manifest.txt", serialize_config(echo));

    Trainer trainer(cfg, seed);

    std::ofstream train_csv(out_dir + "/training.csv", std::ios::binary | std::ios::trunc);
    std::ofstream metrics_csv(out_dir + "/metrics.csv", std::ios::binary | std::ios::trunc);
    if (!train_csv || !metrics_csv) {
        throw UsageError("cannot create CSV files under " + out_dir);
    }
    train_csv << csv_row(kTrainingHeader);
    metrics_csv << csv_row(kScoreHeader);

    int point = 0;
    const auto eval_and_record = [&] {
        const EvalSummary ev = trainer.evaluate(point++);
        ScoreRecord r;
        r.learner_step = trainer.learner_steps_done();
        r.env_steps = trainer.env_steps();
        r.mean_return = ev.mean_return;
        r.mean_length = ev.mean_length;
        r.mean_rooms = ev.mean_rooms;
        r.max_rooms = ev.max_rooms;
        const Hns h = compute_hns(ev.mean_return, cfg.score.human, cfg.score.random);
        r.hns = h.hns;
        r.chns = h.chns;
        metrics_csv << score_row(r);
        metrics_csv.flush();
    };

    eval_and_record(); // untrained baseline point

    bool truncated = false;
    for (int s = 1; s <= cfg.train.learner_steps; ++s) {
        if (stop && stop->load()) {
            truncated = true;
            break;
        }
        const TrainDiagnostics d = trainer.step();
        const std::vector<std::string> cells = {
            std::to_string(d.learner_step), std::to_string(d.env_steps),
            format_double(d.policy_loss),   format_double(d.value_loss),
            format_double(d.entropy),       format_double(d.model_loss),
            format_double(d.reward_sigma),  format_double(d.intrinsic_mean)};
        train_csv << csv_row(cells);
        if (s % cfg.train.eval_every == 0 || s == cfg.train.learner_steps) eval_and_record();
    }
    if (truncated) {
        train_csv << truncation_row(kTrainingHeader.size());
        metrics_csv << truncation_row(kScoreHeader.size());
    }
    train_csv.flush();
    metrics_csv.flush();
    save_checkpoint(trainer.checkpoint_tree(), out_dir + "/checkpoint.bin");
}

void run_experiment(const ExperimentConfig& cfg, const std::atomic<bool>* stop) {
    validate_config(cfg);
    for (int seed : cfg.seeds) {
        if (stop && stop->load()) break;
        run_seed(cfg, seed, cfg.out + "/seed_" + std::to_string(seed), stop);
    }
}

} // namespace curio
