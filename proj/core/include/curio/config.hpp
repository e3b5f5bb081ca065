#pragma once

// Experiment configuration: a typed struct plus a flat `section.key = value`
// text format. The format is deliberately minimal so that serialized configs
// diff cleanly and parse without ambiguity: one assignment per line, `#`
// comments, no sections, no escaping. serialize_config emits keys sorted and
// doubles in shortest round-trip form, so parse -> serialize -> parse is the
// identity on resolved configs.

#include <cstdint>
#include <string>
#include <vector>

#include "curio/env.hpp"

namespace curio {

struct ExperimentConfig {
    // byol-explore | rnd | icm | pure-rl
    std::string algorithm = "byol-explore";
    std::vector<int> seeds = {0};
    std::string out = "out";

    EnvConfig env;

    struct {
        int embed_n = 16;      // latent embedding width
        int history_m = 32;    // recurrent state width
        int horizon = 8;       // open-loop prediction horizon K
        double alpha = 0.99;   // target-network EMA rate
        int action_embed = 8;
        int enc_hidden = 64;
        int pred_hidden = 64;
    } wm;

    struct {
        double lambda = 0.1;     // intrinsic-reward mixing weight
        double alpha = 0.99;     // EMA rate of the reward std estimator
        bool clipping = true;    // subtract the running mean, floor at zero
        double clip_alpha = 0.99;
        bool extrinsic = true;   // false: train on intrinsic reward only
    } reward;

    struct {
        bool sharing = true;     // policy torso aliases the world-model torso
        double gamma = 0.999;
        double value_weight = 0.5;
        double entropy_weight = 0.001;
        double lr = 1e-4;
        double beta1 = 0.9;
        double byol_weight = 1.0; // world-model loss scale in the combined step
    } rl;

    struct {
        int learner_steps = 2000;
        int segment_len = 16;   // T
        int batch_envs = 8;     // B
        int eval_every = 1000;  // learner steps between evaluation points
        int eval_episodes = 10;
    } train;

    struct {
        double human = 1.0;  // scripted-solver reference score
        double random = 0.0; // random-policy reference score
    } score;
};

// Parses the flat text format. Unknown keys, duplicate keys, and malformed
// values raise ConfigError naming the key. Does not validate ranges; call
// validate_config for that.
ExperimentConfig parse_config(const std::string& text);

// Sorted `key = value` lines, one per field, LF-terminated.
std::string serialize_config(const ExperimentConfig& cfg);

// Range and cross-field checks; throws ConfigError naming the offending key.
void validate_config(const ExperimentConfig& cfg);

// Applies one named delta on top of cfg. Valid names: fixed-targets,
// horizon-1, no-clipping, no-sharing, pure-exploration, pure-rl.
void apply_preset(ExperimentConfig& cfg, const std::string& name);

const std::vector<std::string>& preset_names();

} // namespace curio
