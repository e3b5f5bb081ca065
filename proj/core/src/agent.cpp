#include "curio/agent.hpp"

#include <array>
#include <cmath>

#include "curio/errors.hpp"
#include "curio/nn_kernels.hpp"

namespace curio {

PolicyValueNetwork::PolicyValueNetwork(const PolicyConfig& cfg, ParamTree& online,
                                       const WorldModel* wm, std::mt19937_64& init_rng)
    : cfg_(cfg) {
    if (cfg_.obs_dim < 1 || cfg_.action_count < 1) {
        throw ConfigError("policy: obs_dim and action_count must be >= 1");
    }
    if (cfg_.sharing) {
        if (!wm) throw ConfigError("policy: sharing requires a world model");
        const auto& w = wm->config();
        if (w.obs_dim != cfg_.obs_dim || w.embed_n != cfg_.embed_n ||
            w.history_m != cfg_.history_m || w.action_embed != cfg_.action_embed ||
            w.enc_hidden != cfg_.enc_hidden) {
            throw ConfigError("policy: sharing requires matching torso sizes with the world model");
        }
        enc0_ = wm->enc0();
        enc1_ = wm->enc1();
        aemb_ = wm->action_embed_ref();
        closed_ = wm->closed_ref();
    } else {
        add_dense(online, "rl/enc/l0", cfg_.enc_hidden, cfg_.obs_dim);
        add_dense(online, "rl/enc/l1", cfg_.embed_n, cfg_.enc_hidden);
        add_dense(online, "rl/aemb", cfg_.action_embed, cfg_.action_count);
        add_gru(online, "rl/closed", cfg_.history_m, cfg_.embed_n + cfg_.action_embed);
        for (const char* name : {"rl/enc/l0/w", "rl/enc/l0/b", "rl/enc/l1/w", "rl/enc/l1/b",
                                 "rl/aemb/w", "rl/aemb/b",
                                 "rl/closed/wz", "rl/closed/bz", "rl/closed/wr", "rl/closed/br",
                                 "rl/closed/wn", "rl/closed/bn"}) {
            fill_entry_uniform(online.at(name), init_rng);
        }
        enc0_ = dense_ref(online, "rl/enc/l0");
        enc1_ = dense_ref(online, "rl/enc/l1");
        aemb_ = dense_ref(online, "rl/aemb");
        closed_ = gru_ref(online, "rl/closed");
    }

    add_dense(online, "rl/pi", cfg_.action_count, cfg_.history_m);
    add_dense(online, "rl/v", 1, cfg_.history_m);
    for (const char* name : {"rl/pi/w", "rl/pi/b", "rl/v/w", "rl/v/b"}) {
        fill_entry_uniform(online.at(name), init_rng);
    }
    pi_ = dense_ref(online, "rl/pi");
    v_ = dense_ref(online, "rl/v");
}

void PolicyValueNetwork::torso_fwd(const ParamTree& online, const double* obs, int prev_action,
                                   const double* state_in, double* state_out) const {
    std::vector<double> hidden(static_cast<size_t>(cfg_.enc_hidden));
    std::vector<double> x(static_cast<size_t>(cfg_.embed_n + cfg_.action_embed));
    std::vector<double> onehot(static_cast<size_t>(cfg_.action_count));
    std::vector<double> scratch;

    dense_fwd(online, enc0_, obs, hidden.data());
    relu_inplace(hidden.data(), cfg_.enc_hidden);
    dense_fwd(online, enc1_, hidden.data(), x.data());
    one_hot_into(onehot.data(), cfg_.action_count, prev_action);
    dense_fwd(online, aemb_, onehot.data(), x.data() + cfg_.embed_n);
    gru_fwd(online, closed_, x.data(), state_in, state_out, scratch);
}

PolicyValueNetwork::ActResult PolicyValueNetwork::act(const ParamTree& online, const double* obs,
                                                      int prev_action, std::vector<double>& state,
                                                      double u) const {
    std::vector<double> next(static_cast<size_t>(cfg_.history_m));
    torso_fwd(online, obs, prev_action, state.data(), next.data());
    state = std::move(next);

    std::vector<double> logits(static_cast<size_t>(cfg_.action_count));
    dense_fwd(online, pi_, state.data(), logits.data());
    std::vector<double> probs(logits.size());
    softmax(logits.data(), cfg_.action_count, probs.data());

    ActResult r;
    r.action = sample_categorical(probs.data(), cfg_.action_count, u);
    r.log_prob = log_softmax_at(logits.data(), cfg_.action_count, r.action);
    double value = 0.0;
    dense_fwd(online, v_, state.data(), &value);
    r.value = value;
    return r;
}

double PolicyValueNetwork::bootstrap(const ParamTree& online, const double* obs, int prev_action,
                                     const std::vector<double>& state) const {
    std::vector<double> next(static_cast<size_t>(cfg_.history_m));
    torso_fwd(online, obs, prev_action, state.data(), next.data());
    double value = 0.0;
    dense_fwd(online, v_, next.data(), &value);
    return value;
}

void PolicyValueNetwork::unroll(Tape& tape, int online_ti, const TrajectoryBatch& batch,
                                const std::vector<double>& initial_states, std::vector<Var>* logits,
                                std::vector<Var>* values) const {
    if (batch.obs_dim != cfg_.obs_dim) {
        throw ConfigError("policy: batch obs_dim does not match encoder input");
    }
    if (initial_states.size() != static_cast<size_t>(batch.envs) * cfg_.history_m) {
        throw ConfigError("policy: initial state block must be B x M");
    }
    const std::vector<double> zeros(static_cast<size_t>(cfg_.history_m), 0.0);
    const Var zero_state = tape.constant(zeros);
    std::vector<double> onehot(static_cast<size_t>(cfg_.action_count));

    logits->clear();
    values->clear();
    logits->reserve(static_cast<size_t>(batch.envs) * batch.len);
    values->reserve(static_cast<size_t>(batch.envs) * batch.len);
    for (int j = 0; j < batch.envs; ++j) {
        Var state = tape.constant(std::span<const double>(
            initial_states.data() + static_cast<size_t>(j) * cfg_.history_m,
            static_cast<size_t>(cfg_.history_m)));
        for (int t = 0; t < batch.len; ++t) {
            if (t > 0 && batch.terminated[batch.idx(j, t - 1)]) state = zero_state;
            const Var obs = tape.constant(
                std::span<const double>(batch.obs_at(j, t), static_cast<size_t>(cfg_.obs_dim)));
            const Var emb =
                dense(tape, online_ti, enc1_, tape.relu(dense(tape, online_ti, enc0_, obs)));
            one_hot_into(onehot.data(), cfg_.action_count, batch.prev_actions[batch.idx(j, t)]);
            const Var ae = dense(tape, online_ti, aemb_, tape.constant(onehot));
            const std::array<Var, 2> parts{emb, ae};
            state = gru(tape, online_ti, closed_, tape.concat(parts), state);
            logits->push_back(dense(tape, online_ti, pi_, state));
            values->push_back(dense(tape, online_ti, v_, state));
        }
    }
}

std::vector<double> compute_returns(const RolloutBatch& batch, std::span<const double> rewards,
                                    double gamma) {
    if (!(gamma >= 0.0 && gamma < 1.0)) {
        throw ConfigError("rl.gamma must lie in [0, 1)");
    }
    const int B = batch.traj.envs, T = batch.traj.len;
    if (rewards.size() != static_cast<size_t>(B) * T) {
        throw UsageError("compute_returns: rewards must be B*T");
    }
    std::vector<double> returns(rewards.size(), 0.0);
    for (int j = 0; j < B; ++j) {
        double next = batch.bootstrap_terminated[static_cast<size_t>(j)]
                          ? 0.0
                          : batch.bootstrap_value[static_cast<size_t>(j)];
        for (int t = T - 1; t >= 0; --t) {
            const size_t i = batch.traj.idx(j, t);
            if (t < T - 1 && batch.traj.terminated[i]) next = 0.0;
            next = rewards[i] + gamma * next;
            returns[i] = next;
        }
    }
    return returns;
}

PolicyLossParts policy_loss_on_tape(Tape& tape, int online_ti, const PolicyValueNetwork& net,
                                    const RolloutBatch& batch, std::span<const double> rewards,
                                    const UpdateWeights& weights) {
    const int B = batch.traj.envs, T = batch.traj.len;
    const std::vector<double> returns = compute_returns(batch, rewards, weights.gamma);

    std::vector<Var> logits, values;
    net.unroll(tape, online_ti, batch.traj, batch.initial_state, &logits, &values);

    const double inv_n = 1.0 / static_cast<double>(B * T);
    std::vector<Var> terms;
    std::vector<double> term_weights;
    terms.reserve(3 * logits.size());
    term_weights.reserve(3 * logits.size());

    PolicyLossParts parts;
    for (int j = 0; j < B; ++j) {
        for (int t = 0; t < T; ++t) {
            const size_t i = batch.traj.idx(j, t);
            const double advantage = returns[i] - batch.values[i];

            const Var nll = tape.cross_entropy_logits(logits[i], batch.traj.actions[i]);
            terms.push_back(nll);
            term_weights.push_back(advantage * inv_n);
            parts.policy_loss += tape.scalar(nll) * advantage * inv_n;

            const Var verr = tape.squared_error_to(
                values[i], std::span<const double>(&returns[i], 1));
            terms.push_back(verr);
            term_weights.push_back(weights.value_weight * inv_n);
            parts.value_loss += tape.scalar(verr) * inv_n;

            const Var ent = tape.softmax_entropy(logits[i]);
            terms.push_back(ent);
            term_weights.push_back(-weights.entropy_weight * inv_n);
            parts.entropy += tape.scalar(ent) * inv_n;
        }
    }
    parts.total = tape.accumulate(terms, term_weights);
    return parts;
}

} // namespace curio
