#pragma once

// Latent-predictive world model: an online network (observation encoder,
// closed-loop recurrent cell over real observations, open-loop recurrent
// cell over actions only, and a predictor head) trained to match the
// embeddings of a slowly-moving target encoder under a cosine loss. The
// per-term losses double as the raw uncertainty signal for intrinsic
// rewards, so one forward pass serves both purposes.

#include <cstdint>
#include <string>
#include <vector>

#include "curio/nn.hpp"
#include "curio/param_tree.hpp"
#include "curio/tape.hpp"
#include "curio/trajectory.hpp"

namespace curio {

struct WorldModelConfig {
    int obs_dim = 0;
    int action_count = 0;
    int embed_n = 16;    // N, embedding size
    int history_m = 32;  // M, recurrent state size
    int horizon_k = 8;   // K, open-loop horizon
    double target_alpha = 0.99;
    int action_embed = 8;
    int enc_hidden = 64;
    int pred_hidden = 64;
};

// Open-loop prediction losses indexed (trajectory j, source step t, lookahead
// k in [1, K]). A term is valid when its window [t, t+k) crosses no episode
// termination; invalid slots stay zero and are excluded everywhere.
struct PerTermLosses {
    int envs = 0, len = 0, horizon = 0; // B, T, K
    std::vector<double> value;          // B * (T-1) * K
    std::vector<uint8_t> valid;

    void resize(int b, int t, int k) {
        envs = b;
        len = t;
        horizon = k;
        value.assign(static_cast<size_t>(b) * (t - 1) * k, 0.0);
        valid.assign(value.size(), 0);
    }
    size_t idx(int j, int t, int k) const {
        return (static_cast<size_t>(j) * (len - 1) + t) * horizon + (k - 1);
    }
};

// Raw uncertainties, one per transition: shape B x (T-1).
struct UncertaintyMatrix {
    int envs = 0, len = 0;
    std::vector<double> value;

    size_t idx(int j, int t) const { return static_cast<size_t>(j) * (len - 1) + t; }
};

class WorldModel {
public:
    // Allocates this model's parameter entries under `prefix` inside the
    // caller's online tree and initializes them from `init_rng`. The target
    // encoder starts as an exact copy of the online encoder.
    WorldModel(const WorldModelConfig& cfg, ParamTree& online, std::string prefix,
               std::mt19937_64& init_rng);

    const WorldModelConfig& config() const { return cfg_; }
    const std::string& prefix() const { return prefix_; }
    const ParamTree& target_tree() const { return target_; }
    void set_target_tree(ParamTree t);

    // Online encoder as a tape subgraph: relu MLP with a linear output.
    Var encode(Tape& tape, int online_ti, Var obs) const;

    // Target embedding of one observation, normalized to unit length
    // (plus the norm epsilon); plain arithmetic, never on the tape.
    void target_embed_unit(const double* obs, double* out_unit) const;

    // Closed-loop unroll over a whole batch. Returns B*T recurrent states
    // in row-major (j, t) order. initial_states is B x M (zeros when null);
    // the state re-zeroes after any step flagged terminated.
    std::vector<Var> unroll_closed_loop(Tape& tape, int online_ti, const TrajectoryBatch& batch,
                                        const std::vector<double>* initial_states = nullptr) const;

    // Open-loop predictions from one starting state: feeds each action
    // through the open-loop cell and returns the predictor output after
    // every step, i.e. one N-vector per lookahead. Throws UsageError when
    // no actions are supplied.
    std::vector<Var> unroll_open_loop(Tape& tape, int online_ti, Var state,
                                      std::span<const int> actions) const;

    // Full multi-step loss over a batch: mean over valid (j, t) pairs of the
    // per-pair mean over valid lookaheads of the cosine loss against the
    // target embedding of the future observation. Also fills `terms` with
    // the detached per-term values. Throws UsageError when T < 2.
    Var loss_batch(Tape& tape, int online_ti, const TrajectoryBatch& batch,
                   PerTermLosses* terms = nullptr) const;

    // EMA update of the target encoder toward the online encoder.
    void target_step(const ParamTree& online);

    // Torso layer refs, exposed so the policy can reuse the same entries
    // when representation sharing is on.
    const DenseRef& enc0() const { return enc0_; }
    const DenseRef& enc1() const { return enc1_; }
    const DenseRef& action_embed_ref() const { return aemb_; }
    const GruRef& closed_ref() const { return closed_; }

private:
    WorldModelConfig cfg_;
    std::string prefix_;
    DenseRef enc0_, enc1_, aemb_, pred0_, pred1_;
    GruRef closed_, open_;
    ParamTree target_;      // encoder entries only, same names as online
    DenseRef tgt_enc0_, tgt_enc1_;
};

// Sums valid per-term losses whose predicted observation index is t+1:
// entry (j, t) accumulates term(j, p, q) over all p + q = t + 1.
UncertaintyMatrix accumulate_uncertainties(const PerTermLosses& terms);

} // namespace curio
