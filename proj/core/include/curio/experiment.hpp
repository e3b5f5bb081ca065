#pragma once

// Experiment runner: owns the environments, the selected model, the policy,
// and the optimizer for one seed, and drives the collect/update loop. One
// learner step = collect a B x T segment on-policy, compute the intrinsic
// rewards, and take one combined Adam step on the policy and model losses.
// run_seed adds the artifact layer (CSV files, manifest, checkpoint).

#include <atomic>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "curio/agent.hpp"
#include "curio/baselines.hpp"
#include "curio/config.hpp"
#include "curio/env.hpp"
#include "curio/metrics.hpp"
#include "curio/optim.hpp"
#include "curio/param_tree.hpp"
#include "curio/reward_norm.hpp"
#include "curio/tape.hpp"
#include "curio/trajectory.hpp"
#include "curio/world_model.hpp"

namespace curio {

// One CSV row of training diagnostics per learner step.
struct TrainDiagnostics {
    long long learner_step = 0;
    long long env_steps = 0;
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
    double model_loss = 0.0;     // world-model / predictor loss, 0 without one
    double reward_sigma = 0.0;   // current intrinsic-reward std estimate
    double intrinsic_mean = 0.0; // mean intrinsic reward after normalization
};

struct EvalSummary {
    double mean_return = 0.0;
    double mean_length = 0.0;
    double mean_rooms = 0.0;
    double max_rooms = 0.0;
};

class Trainer {
public:
    Trainer(const ExperimentConfig& cfg, int seed);

    // Collect one segment and apply one combined update.
    TrainDiagnostics step();

    // Collect one segment without updating; advances the environments and
    // the acting streams exactly as step() would.
    RolloutBatch collect_segment() {
        RolloutBatch out;
        collect(&out);
        return out;
    }

    // Runs eval_episodes fresh episodes on dedicated RNG substreams keyed
    // by point_index; never consumes training randomness.
    EvalSummary evaluate(int point_index);

    long long env_steps() const { return env_steps_; }
    long long learner_steps_done() const { return learner_step_; }
    const ParamTree& online() const { return online_; }
    const WorldModel* world_model() const { return wm_.get(); }
    const PolicyValueNetwork& policy() const { return *net_; }

    // Episode stats completed during the most recent step().
    const std::vector<EpisodeStats>& finished_episodes() const { return finished_; }

    // Online parameters plus, for the main method, the target encoder under
    // "target/".
    ParamTree checkpoint_tree() const;

private:
    void collect(RolloutBatch* out);
    std::vector<double> intrinsic_and_model_loss(const TrajectoryBatch& traj, Var* model_loss);

    ExperimentConfig cfg_;
    int seed_ = 0;

    ParamTree online_;
    std::unique_ptr<WorldModel> wm_;
    std::unique_ptr<RndModel> rnd_;
    std::unique_ptr<IcmModel> icm_;
    std::unique_ptr<PolicyValueNetwork> net_;
    AdamState adam_;
    AdamConfig adam_cfg_;
    NormalizerState norm_;
    ClipState clip_;
    UpdateWeights update_weights_;

    Tape tape_;
    int ti_ = -1;

    std::vector<MultiRoomWorld> envs_;
    std::vector<std::mt19937_64> episode_rng_; // episode seeds, one stream per env
    std::vector<std::mt19937_64> act_rng_;     // action sampling, one stream per env
    std::vector<std::vector<double>> state_;   // persistent policy state per env
    std::vector<std::vector<double>> obs_;     // current observation per env
    std::vector<int> prev_action_;
    std::vector<double> episode_return_;
    std::vector<EpisodeStats> finished_;

    long long env_steps_ = 0;
    long long learner_step_ = 0;
};

// Full training run for one seed: writes manifest.txt, training.csv,
// metrics.csv, and checkpoint.bin into out_dir. A set `stop` flag ends the
// run early and leaves a truncation marker row in both CSV files.
void run_seed(const ExperimentConfig& cfg, int seed, const std::string& out_dir,
              const std::atomic<bool>* stop = nullptr);

// Runs every configured seed sequentially into <cfg.out>/seed_<n>/.
void run_experiment(const ExperimentConfig& cfg, const std::atomic<bool>* stop = nullptr);

} // namespace curio
