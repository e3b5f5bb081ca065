#pragma once

#include <cstdint>
#include <vector>

namespace curio {

// Fixed-length segment of experience from B parallel environments. Episodes
// may end mid-segment; `terminated[j][t]` marks that step t of trajectory j
// ended its episode, so step t+1 (if any) starts a fresh one.
//
// `prev_action[j][t]` is the action taken one step before step t, or -1 at
// episode starts. At t = 0 it reaches back into the previous segment, which
// is how recurrent cells keep their action input across segment boundaries.
struct TrajectoryBatch {
    int envs = 0;        // B
    int len = 0;         // T
    int obs_dim = 0;
    int action_count = 0;

    std::vector<double> obs;       // B * T * obs_dim
    std::vector<int> actions;      // B * T
    std::vector<int> prev_actions; // B * T, -1 = episode start
    std::vector<double> rewards;   // B * T, extrinsic
    std::vector<uint8_t> terminated; // B * T

    void resize() {
        obs.assign(static_cast<size_t>(envs) * len * obs_dim, 0.0);
        actions.assign(static_cast<size_t>(envs) * len, 0);
        prev_actions.assign(static_cast<size_t>(envs) * len, -1);
        rewards.assign(static_cast<size_t>(envs) * len, 0.0);
        terminated.assign(static_cast<size_t>(envs) * len, 0);
    }

    size_t idx(int j, int t) const { return static_cast<size_t>(j) * len + t; }
    const double* obs_at(int j, int t) const {
        return obs.data() + (static_cast<size_t>(j) * len + t) * obs_dim;
    }
    double* obs_at(int j, int t) {
        return obs.data() + (static_cast<size_t>(j) * len + t) * obs_dim;
    }
};

// TrajectoryBatch plus everything the policy update and the diagnostics
// need about how the batch was collected.
struct RolloutBatch {
    TrajectoryBatch traj;

    std::vector<double> log_probs;       // B * T, log pi(a_t) at collection time
    std::vector<double> values;          // B * T, value estimates at collection time
    std::vector<double> initial_state;   // B * M, policy recurrent state at segment start
    std::vector<double> bootstrap_value; // B, value of the post-segment state
    std::vector<uint8_t> bootstrap_terminated; // B, final step ended its episode
};

// Per-episode statistics reported as episodes finish during collection.
struct EpisodeStats {
    double ret = 0.0;
    int length = 0;
    int rooms_visited = 0;
};

} // namespace curio
