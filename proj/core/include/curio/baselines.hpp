#pragma once

// Intrinsic-reward baselines built on the same network stack and feeding
// the same normalization pipeline as the main method.
//
// Random network distillation: a trainable predictor regresses the output
// of a frozen, randomly initialized target network on each observation;
// the per-observation error is the novelty signal.
//
// Curiosity module: an encoder trained through an inverse-dynamics head
// (predict the action between consecutive embeddings), plus a forward
// model predicting the next embedding; the forward error is the novelty
// signal and never trains the encoder.

#include <random>
#include <string>
#include <vector>

#include "curio/nn.hpp"
#include "curio/param_tree.hpp"
#include "curio/tape.hpp"
#include "curio/trajectory.hpp"

namespace curio {

struct BaselineConfig {
    int obs_dim = 0;
    int action_count = 0; // 0 means a continuous action space (rejected by ICM)
    int embed_n = 16;
    int enc_hidden = 64;
    int head_hidden = 64;
    double inverse_weight = 1.0;
    double forward_weight = 1.0;
};

class RndModel {
public:
    RndModel(const BaselineConfig& cfg, ParamTree& online, std::string prefix,
             std::mt19937_64& init_rng);

    // Training loss (mean per-observation squared error over all B*T
    // observations) on the tape; fills raw_rewards with B*(T-1) values,
    // where the reward for transition t is the error at observation t+1.
    // Throws UsageError when T < 2.
    Var compute(Tape& tape, int online_ti, const TrajectoryBatch& batch,
                std::vector<double>* raw_rewards) const;

    const ParamTree& target_tree() const { return target_; }

private:
    BaselineConfig cfg_;
    std::string prefix_;
    DenseRef pred0_, pred1_;
    ParamTree target_; // frozen after construction
    DenseRef tgt0_, tgt1_;
};

class IcmModel {
public:
    // Throws ConfigError when the action space is not discrete.
    IcmModel(const BaselineConfig& cfg, ParamTree& online, std::string prefix,
             std::mt19937_64& init_rng);

    // Combined training loss (inverse cross-entropy + forward squared
    // error, each with its config weight) on the tape; fills raw_rewards
    // with the forward error per transition t (B*(T-1) values); reports
    // the two unweighted mean losses. Throws UsageError when T < 2.
    Var compute(Tape& tape, int online_ti, const TrajectoryBatch& batch,
                std::vector<double>* raw_rewards, double* inverse_loss, double* forward_loss) const;

private:
    BaselineConfig cfg_;
    std::string prefix_;
    DenseRef enc0_, enc1_, inv0_, inv1_, fwd0_, fwd1_;
};

} // namespace curio
