#include "curio/world_model.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "curio/errors.hpp"
#include "curio/nn_kernels.hpp"

namespace curio {

WorldModel::WorldModel(const WorldModelConfig& cfg, ParamTree& online, std::string prefix,
                       std::mt19937_64& init_rng)
    : cfg_(cfg), prefix_(std::move(prefix)) {
    if (cfg_.obs_dim < 1 || cfg_.action_count < 1 || cfg_.embed_n < 1 || cfg_.history_m < 1 ||
        cfg_.horizon_k < 1) {
        throw ConfigError("world model: obs_dim, action_count, N, M, K must all be >= 1");
    }
    if (!(cfg_.target_alpha >= 0.0 && cfg_.target_alpha <= 1.0)) {
        throw ConfigError("world model: target EMA rate must lie in [0, 1]");
    }

    add_dense(online, prefix_ + "/enc/l0", cfg_.enc_hidden, cfg_.obs_dim);
    add_dense(online, prefix_ + "/enc/l1", cfg_.embed_n, cfg_.enc_hidden);
    add_dense(online, prefix_ + "/aemb", cfg_.action_embed, cfg_.action_count);
    add_gru(online, prefix_ + "/closed", cfg_.history_m, cfg_.embed_n + cfg_.action_embed);
    add_gru(online, prefix_ + "/open", cfg_.history_m, cfg_.action_embed);
    add_dense(online, prefix_ + "/pred/l0", cfg_.pred_hidden, cfg_.history_m);
    add_dense(online, prefix_ + "/pred/l1", cfg_.embed_n, cfg_.pred_hidden);

    // Fixed initialization order, independent of entry sort order.
    for (const char* name : {"/enc/l0/w", "/enc/l0/b", "/enc/l1/w", "/enc/l1/b",
                             "/aemb/w", "/aemb/b",
                             "/closed/wz", "/closed/bz", "/closed/wr", "/closed/br",
                             "/closed/wn", "/closed/bn",
                             "/open/wz", "/open/bz", "/open/wr", "/open/br",
                             "/open/wn", "/open/bn",
                             "/pred/l0/w", "/pred/l0/b", "/pred/l1/w", "/pred/l1/b"}) {
        fill_entry_uniform(online.at(prefix_ + name), init_rng);
    }

    enc0_ = dense_ref(online, prefix_ + "/enc/l0");
    enc1_ = dense_ref(online, prefix_ + "/enc/l1");
    aemb_ = dense_ref(online, prefix_ + "/aemb");
    closed_ = gru_ref(online, prefix_ + "/closed");
    open_ = gru_ref(online, prefix_ + "/open");
    pred0_ = dense_ref(online, prefix_ + "/pred/l0");
    pred1_ = dense_ref(online, prefix_ + "/pred/l1");

    for (const char* name : {"/enc/l0/w", "/enc/l0/b", "/enc/l1/w", "/enc/l1/b"}) {
        const auto& src = online.at(prefix_ + name);
        auto& dst = target_.add(src.name, src.shape);
        dst.data = src.data;
    }
    tgt_enc0_ = dense_ref(target_, prefix_ + "/enc/l0");
    tgt_enc1_ = dense_ref(target_, prefix_ + "/enc/l1");
}

void WorldModel::set_target_tree(ParamTree t) {
    target_.require_congruent(t, "world model: loaded target tree");
    target_ = std::move(t);
}

Var WorldModel::encode(Tape& tape, int online_ti, Var obs) const {
    return dense(tape, online_ti, enc1_, tape.relu(dense(tape, online_ti, enc0_, obs)));
}

void WorldModel::target_embed_unit(const double* obs, double* out_unit) const {
    std::vector<double> hidden(static_cast<size_t>(cfg_.enc_hidden));
    std::vector<double> q(static_cast<size_t>(cfg_.embed_n));
    dense_fwd(target_, tgt_enc0_, obs, hidden.data());
    relu_inplace(hidden.data(), cfg_.enc_hidden);
    dense_fwd(target_, tgt_enc1_, hidden.data(), q.data());
    double sq = 0.0;
    for (double v : q) sq += v * v;
    const double denom = std::sqrt(sq) + Tape::kNormEps;
    for (int i = 0; i < cfg_.embed_n; ++i) out_unit[i] = q[static_cast<size_t>(i)] / denom;
}

std::vector<Var> WorldModel::unroll_closed_loop(Tape& tape, int online_ti,
                                                const TrajectoryBatch& batch,
                                                const std::vector<double>* initial_states) const {
    if (batch.obs_dim != cfg_.obs_dim) {
        throw ConfigError("world model: batch obs_dim " + std::to_string(batch.obs_dim) +
                          " does not match encoder input " + std::to_string(cfg_.obs_dim));
    }
    if (initial_states &&
        initial_states->size() != static_cast<size_t>(batch.envs) * cfg_.history_m) {
        throw ConfigError("world model: initial state block must be B x M");
    }
    const std::vector<double> zeros(static_cast<size_t>(cfg_.history_m), 0.0);
    const Var zero_state = tape.constant(zeros);
    std::vector<double> onehot(static_cast<size_t>(cfg_.action_count));

    std::vector<Var> states;
    states.reserve(static_cast<size_t>(batch.envs) * batch.len);
    for (int j = 0; j < batch.envs; ++j) {
        Var state = zero_state;
        if (initial_states) {
            state = tape.constant(std::span<const double>(
                initial_states->data() + static_cast<size_t>(j) * cfg_.history_m,
                static_cast<size_t>(cfg_.history_m)));
        }
        for (int t = 0; t < batch.len; ++t) {
            if (t > 0 && batch.terminated[batch.idx(j, t - 1)]) state = zero_state;
            const Var emb = encode(tape, online_ti,
                                   tape.constant(std::span<const double>(
                                       batch.obs_at(j, t), static_cast<size_t>(cfg_.obs_dim))));
            one_hot_into(onehot.data(), cfg_.action_count, batch.prev_actions[batch.idx(j, t)]);
            const Var ae = dense(tape, online_ti, aemb_, tape.constant(onehot));
            const std::array<Var, 2> parts{emb, ae};
            state = gru(tape, online_ti, closed_, tape.concat(parts), state);
            states.push_back(state);
        }
    }
    return states;
}

std::vector<Var> WorldModel::unroll_open_loop(Tape& tape, int online_ti, Var state,
                                              std::span<const int> actions) const {
    if (actions.empty()) throw UsageError("open-loop unroll: no actions supplied");
    std::vector<double> onehot(static_cast<size_t>(cfg_.action_count));
    std::vector<Var> preds;
    preds.reserve(actions.size());
    for (int a : actions) {
        one_hot_into(onehot.data(), cfg_.action_count, a);
        const Var ae = dense(tape, online_ti, aemb_, tape.constant(onehot));
        state = gru(tape, online_ti, open_, ae, state);
        preds.push_back(dense(tape, online_ti, pred1_, tape.relu(dense(tape, online_ti, pred0_, state))));
    }
    return preds;
}

Var WorldModel::loss_batch(Tape& tape, int online_ti, const TrajectoryBatch& batch,
                           PerTermLosses* terms) const {
    if (batch.len < 2) throw UsageError("world-model loss: segment length must be >= 2");
    const int B = batch.envs, T = batch.len, K = cfg_.horizon_k, N = cfg_.embed_n;

    // Unit target embeddings for every observation, computed once.
    std::vector<double> units(static_cast<size_t>(B) * T * N);
    for (int j = 0; j < B; ++j) {
        for (int t = 0; t < T; ++t) {
            target_embed_unit(batch.obs_at(j, t),
                              units.data() + (static_cast<size_t>(j) * T + t) * N);
        }
    }

    const std::vector<Var> states = unroll_closed_loop(tape, online_ti, batch);

    PerTermLosses local;
    PerTermLosses& tm = terms ? *terms : local;
    tm.resize(B, T, K);

    std::vector<double> onehot(static_cast<size_t>(cfg_.action_count));
    std::vector<std::vector<Var>> groups; // one group of term nodes per valid (j, t)
    for (int j = 0; j < B; ++j) {
        for (int t = 0; t + 1 < T; ++t) {
            const int kt = std::min(K, T - 1 - t);
            Var state = states[static_cast<size_t>(j) * T + t];
            std::vector<Var> group;
            for (int k = 1; k <= kt; ++k) {
                // A term predicting o_{t+k} is dropped once its window
                // [t, t+k) crosses an episode end; later k only widen the
                // window, so stop here.
                if (batch.terminated[batch.idx(j, t + k - 1)]) break;
                one_hot_into(onehot.data(), cfg_.action_count, batch.actions[batch.idx(j, t + k - 1)]);
                const Var ae = dense(tape, online_ti, aemb_, tape.constant(onehot));
                state = gru(tape, online_ti, open_, ae, state);
                const Var pred =
                    dense(tape, online_ti, pred1_, tape.relu(dense(tape, online_ti, pred0_, state)));
                const Var term = tape.cosine_distance_to_unit(
                    pred, std::span<const double>(
                              units.data() + (static_cast<size_t>(j) * T + t + k) * N,
                              static_cast<size_t>(N)));
                tm.value[tm.idx(j, t, k)] = tape.scalar(term);
                tm.valid[tm.idx(j, t, k)] = 1;
                group.push_back(term);
            }
            if (!group.empty()) groups.push_back(std::move(group));
        }
    }

    if (groups.empty()) return tape.constant_scalar(0.0);
    std::vector<Var> flat;
    std::vector<double> weights;
    const double inv_groups = 1.0 / static_cast<double>(groups.size());
    for (const auto& group : groups) {
        const double w = inv_groups / static_cast<double>(group.size());
        for (Var v : group) {
            flat.push_back(v);
            weights.push_back(w);
        }
    }
    return tape.accumulate(flat, weights);
}

void WorldModel::target_step(const ParamTree& online) {
    const double a = cfg_.target_alpha;
    for (int e = 0; e < target_.entry_count(); ++e) {
        auto& dst = target_.entry(e);
        const auto& src = online.at(dst.name);
        for (size_t i = 0; i < dst.data.size(); ++i) {
            dst.data[i] = a * dst.data[i] + (1.0 - a) * src.data[i];
        }
    }
}

UncertaintyMatrix accumulate_uncertainties(const PerTermLosses& terms) {
    UncertaintyMatrix u;
    u.envs = terms.envs;
    u.len = terms.len;
    u.value.assign(static_cast<size_t>(terms.envs) * (terms.len - 1), 0.0);
    for (int j = 0; j < terms.envs; ++j) {
        for (int t = 0; t + 1 < terms.len; ++t) {
            double acc = 0.0;
            const int p_lo = std::max(0, t + 1 - terms.horizon);
            for (int p = p_lo; p <= t; ++p) {
                const int q = t + 1 - p;
                if (terms.valid[terms.idx(j, p, q)]) acc += terms.value[terms.idx(j, p, q)];
            }
            u.value[u.idx(j, t)] = acc;
        }
    }
    return u;
}

} // namespace curio
