// Microbenchmarks for the hot paths of a learner step: environment
// stepping, acting, the world-model loss with and without backward,
// the policy update, and reward normalization. Sizes match the default
// experiment scale (3x3 rooms, cell 5, B=8, T=16).

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "curio/agent.hpp"
#include "curio/env.hpp"
#include "curio/optim.hpp"
#include "curio/param_tree.hpp"
#include "curio/reward_norm.hpp"
#include "curio/rng.hpp"
#include "curio/tape.hpp"
#include "curio/trajectory.hpp"
#include "curio/world_model.hpp"

namespace {

constexpr int kEnvs = 8;
constexpr int kLen = 16;

curio::EnvConfig bench_env_config() {
    curio::EnvConfig cfg;
    cfg.rooms = 3;
    cfg.cell = 5;
    cfg.view_radius = 2;
    cfg.keys = 1;
    cfg.max_keys = 2;
    cfg.step_limit = 500;
    return cfg;
}

curio::TrajectoryBatch random_batch(int obs_dim, int action_count, std::mt19937_64& rng) {
    curio::TrajectoryBatch batch;
    batch.envs = kEnvs;
    batch.len = kLen;
    batch.obs_dim = obs_dim;
    batch.action_count = action_count;
    batch.resize();
    for (double& v : batch.obs) v = curio::canonical(rng);
    for (size_t i = 0; i < batch.actions.size(); ++i) {
        batch.actions[i] = curio::uniform_int(rng, action_count);
        batch.prev_actions[i] = (i % kLen == 0) ? -1 : batch.actions[i - 1];
    }
    return batch;
}

} // namespace

static void BM_env_step(benchmark::State& state) {
    curio::MultiRoomWorld world(bench_env_config());
    std::mt19937_64 rng = curio::substream(7, "bench");
    world.reset(1);
    uint64_t episode = 2;
    for (auto _ : state) {
        if (world.terminated()) world.reset(episode++);
        const curio::StepOutcome out =
            world.step(curio::uniform_int(rng, curio::MultiRoomWorld::kActions));
        benchmark::DoNotOptimize(out.reward);
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_env_step);

static void BM_env_reset(benchmark::State& state) {
    curio::MultiRoomWorld world(bench_env_config());
    uint64_t seed = 0;
    for (auto _ : state) {
        std::vector<double> obs = world.reset(seed++);
        benchmark::DoNotOptimize(obs.data());
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_env_reset);

static void BM_policy_act(benchmark::State& state) {
    curio::MultiRoomWorld world(bench_env_config());
    curio::PolicyConfig cfg;
    cfg.obs_dim = world.obs_dim();
    cfg.action_count = curio::MultiRoomWorld::kActions;
    cfg.sharing = false;
    curio::ParamTree online;
    std::mt19937_64 init = curio::substream(7, "init");
    curio::PolicyValueNetwork net(cfg, online, nullptr, init);

    std::mt19937_64 rng = curio::substream(7, "act");
    std::vector<double> obs = world.reset(1);
    std::vector<double> hidden(static_cast<size_t>(cfg.history_m), 0.0);
    int prev = -1;
    for (auto _ : state) {
        const auto res = net.act(online, obs.data(), prev, hidden, curio::canonical(rng));
        prev = res.action;
        benchmark::DoNotOptimize(res.log_prob);
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_policy_act);

static void BM_model_loss_forward(benchmark::State& state) {
    curio::MultiRoomWorld world(bench_env_config());
    curio::WorldModelConfig cfg;
    cfg.obs_dim = world.obs_dim();
    cfg.action_count = curio::MultiRoomWorld::kActions;
    curio::ParamTree online;
    std::mt19937_64 init = curio::substream(7, "init");
    curio::WorldModel model(cfg, online, "wm", init);
    std::mt19937_64 rng = curio::substream(7, "data");
    const curio::TrajectoryBatch batch = random_batch(cfg.obs_dim, cfg.action_count, rng);

    for (auto _ : state) {
        curio::Tape tape;
        const int ti = tape.register_tree(online);
        curio::PerTermLosses terms;
        const curio::Var loss = model.loss_batch(tape, ti, batch, &terms);
        benchmark::DoNotOptimize(tape.scalar(loss));
    }
}
BENCHMARK(BM_model_loss_forward)->Unit(benchmark::kMillisecond);

static void BM_model_loss_backward(benchmark::State& state) {
    curio::MultiRoomWorld world(bench_env_config());
    curio::WorldModelConfig cfg;
    cfg.obs_dim = world.obs_dim();
    cfg.action_count = curio::MultiRoomWorld::kActions;
    curio::ParamTree online;
    std::mt19937_64 init = curio::substream(7, "init");
    curio::WorldModel model(cfg, online, "wm", init);
    std::mt19937_64 rng = curio::substream(7, "data");
    const curio::TrajectoryBatch batch = random_batch(cfg.obs_dim, cfg.action_count, rng);

    for (auto _ : state) {
        curio::Tape tape;
        const int ti = tape.register_tree(online);
        const curio::Var loss = model.loss_batch(tape, ti, batch, nullptr);
        tape.backward(loss);
        curio::ParamTree grad = tape.grad(ti);
        benchmark::DoNotOptimize(grad.entries().size());
    }
}
BENCHMARK(BM_model_loss_backward)->Unit(benchmark::kMillisecond);

static void BM_policy_update(benchmark::State& state) {
    curio::MultiRoomWorld world(bench_env_config());
    curio::PolicyConfig cfg;
    cfg.obs_dim = world.obs_dim();
    cfg.action_count = curio::MultiRoomWorld::kActions;
    cfg.sharing = false;
    curio::ParamTree online;
    std::mt19937_64 init = curio::substream(7, "init");
    curio::PolicyValueNetwork net(cfg, online, nullptr, init);

    std::mt19937_64 rng = curio::substream(7, "data");
    curio::RolloutBatch batch;
    batch.traj = random_batch(cfg.obs_dim, cfg.action_count, rng);
    const size_t bt = batch.traj.actions.size();
    batch.log_probs.assign(bt, -1.5);
    batch.values.assign(bt, 0.1);
    batch.initial_state.assign(static_cast<size_t>(kEnvs) * cfg.history_m, 0.0);
    batch.bootstrap_value.assign(kEnvs, 0.05);
    batch.bootstrap_terminated.assign(kEnvs, 0);
    for (int j = 0; j < kEnvs; ++j)
        batch.traj.terminated[batch.traj.idx(j, kLen - 1)] = 0;
    std::vector<double> rewards(bt);
    for (double& r : rewards) r = curio::canonical(rng);

    const curio::UpdateWeights weights;
    for (auto _ : state) {
        curio::Tape tape;
        const int ti = tape.register_tree(online);
        const curio::PolicyLossParts parts =
            curio::policy_loss_on_tape(tape, ti, net, batch, rewards, weights);
        tape.backward(parts.total);
        curio::ParamTree grad = tape.grad(ti);
        benchmark::DoNotOptimize(grad.entries().size());
    }
}
BENCHMARK(BM_policy_update)->Unit(benchmark::kMillisecond);

static void BM_normalize_and_prioritize(benchmark::State& state) {
    std::mt19937_64 rng = curio::substream(7, "data");
    std::vector<double> raw(static_cast<size_t>(kEnvs) * (kLen - 1));
    for (double& v : raw) v = curio::canonical(rng);
    curio::NormalizerState norm;
    curio::ClipState clip;
    for (auto _ : state) {
        const std::vector<double> scaled = curio::normalize_batch(norm, raw);
        const std::vector<double> kept = curio::prioritize(clip, scaled, true);
        benchmark::DoNotOptimize(kept.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(raw.size()));
}
BENCHMARK(BM_normalize_and_prioritize);

static void BM_target_ema_step(benchmark::State& state) {
    curio::MultiRoomWorld world(bench_env_config());
    curio::WorldModelConfig cfg;
    cfg.obs_dim = world.obs_dim();
    cfg.action_count = curio::MultiRoomWorld::kActions;
    curio::ParamTree online;
    std::mt19937_64 init = curio::substream(7, "init");
    curio::WorldModel model(cfg, online, "wm", init);
    for (auto _ : state) {
        model.target_step(online);
        benchmark::DoNotOptimize(model.target_tree().entries().size());
    }
}
BENCHMARK(BM_target_ema_step);

BENCHMARK_MAIN();
