#pragma once

// Recurrent advantage actor-critic. The torso (observation encoder, action
// embedding, closed-loop cell) mirrors the world model's closed-loop path;
// with representation sharing on it literally reuses the world model's
// parameter entries, so both losses shape one representation. Acting uses
// plain forwards and training replays the identical arithmetic on the
// tape, so recomputed action log-probabilities match the collected ones
// bit for bit.

#include <random>
#include <span>
#include <string>
#include <vector>

#include "curio/env.hpp"
#include "curio/nn.hpp"
#include "curio/param_tree.hpp"
#include "curio/tape.hpp"
#include "curio/trajectory.hpp"
#include "curio/world_model.hpp"

namespace curio {

struct PolicyConfig {
    int obs_dim = 0;
    int action_count = 0;
    int embed_n = 16;
    int history_m = 32;
    int action_embed = 8;
    int enc_hidden = 64;
    bool sharing = true;
};

class PolicyValueNetwork {
public:
    // With sharing on, `wm` must be non-null and the torso refs alias the
    // world model's entries; otherwise fresh entries of identical shapes
    // are allocated under "rl".
    PolicyValueNetwork(const PolicyConfig& cfg, ParamTree& online, const WorldModel* wm,
                       std::mt19937_64& init_rng);

    const PolicyConfig& config() const { return cfg_; }
    bool sharing() const { return cfg_.sharing; }

    struct ActResult {
        int action = 0;
        double log_prob = 0.0;
        double value = 0.0;
    };

    // One acting step: advances `state` (length M) in place and samples an
    // action using the uniform draw `u` from the caller's stream.
    ActResult act(const ParamTree& online, const double* obs, int prev_action,
                  std::vector<double>& state, double u) const;

    // Value of the successor state without advancing `state`; used to
    // bootstrap returns at segment ends.
    double bootstrap(const ParamTree& online, const double* obs, int prev_action,
                     const std::vector<double>& state) const;

    // Training-time unroll over a whole batch: fills per-step logits and
    // value nodes in row-major (j, t) order. initial_states is B x M.
    void unroll(Tape& tape, int online_ti, const TrajectoryBatch& batch,
                const std::vector<double>& initial_states, std::vector<Var>* logits,
                std::vector<Var>* values) const;

private:
    void torso_fwd(const ParamTree& online, const double* obs, int prev_action,
                   const double* state_in, double* state_out) const;

    PolicyConfig cfg_;
    DenseRef enc0_, enc1_, aemb_, pi_, v_;
    GruRef closed_;
};

struct UpdateWeights {
    double gamma = 0.999;
    double value_weight = 0.5;
    double entropy_weight = 0.001;
};

// n-step returns within the segment: bootstrap from the recorded successor
// value at the segment end only; terminations cut the recursion. Throws
// ConfigError when gamma is outside [0, 1).
std::vector<double> compute_returns(const RolloutBatch& batch, std::span<const double> rewards,
                                    double gamma);

struct PolicyLossParts {
    Var total = -1;          // scalar node on the tape
    double policy_loss = 0;  // mean of -log pi(a) * advantage
    double value_loss = 0;   // mean squared return error (unweighted)
    double entropy = 0;      // mean policy entropy
};

// Actor-critic loss on the tape. Returns and advantages are computed from
// the collected rewards and values and enter the graph as constants, so
// the gradient is exactly the gradient of the expression the diagnostics
// describe.
PolicyLossParts policy_loss_on_tape(Tape& tape, int online_ti, const PolicyValueNetwork& net,
                                    const RolloutBatch& batch, std::span<const double> rewards,
                                    const UpdateWeights& weights);

} // namespace curio
