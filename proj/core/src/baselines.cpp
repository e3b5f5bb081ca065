#include "curio/baselines.hpp"

#include <array>

#include "curio/errors.hpp"
#include "curio/nn_kernels.hpp"

namespace curio {

RndModel::RndModel(const BaselineConfig& cfg, ParamTree& online, std::string prefix,
                   std::mt19937_64& init_rng)
    : cfg_(cfg), prefix_(std::move(prefix)) {
    if (cfg_.obs_dim < 1 || cfg_.embed_n < 1) {
        throw ConfigError("rnd: obs_dim and embedding size must be >= 1");
    }
    add_dense(online, prefix_ + "/pred/l0", cfg_.enc_hidden, cfg_.obs_dim);
    add_dense(online, prefix_ + "/pred/l1", cfg_.embed_n, cfg_.enc_hidden);
    for (const char* name : {"/pred/l0/w", "/pred/l0/b", "/pred/l1/w", "/pred/l1/b"}) {
        fill_entry_uniform(online.at(prefix_ + name), init_rng);
    }
    pred0_ = dense_ref(online, prefix_ + "/pred/l0");
    pred1_ = dense_ref(online, prefix_ + "/pred/l1");

    add_dense(target_, prefix_ + "/tgt/l0", cfg_.enc_hidden, cfg_.obs_dim);
    add_dense(target_, prefix_ + "/tgt/l1", cfg_.embed_n, cfg_.enc_hidden);
    target_.fill_uniform(init_rng);
    tgt0_ = dense_ref(target_, prefix_ + "/tgt/l0");
    tgt1_ = dense_ref(target_, prefix_ + "/tgt/l1");
}

Var RndModel::compute(Tape& tape, int online_ti, const TrajectoryBatch& batch,
                      std::vector<double>* raw_rewards) const {
    if (batch.len < 2) throw UsageError("rnd: segment length must be >= 2");
    const int B = batch.envs, T = batch.len;

    std::vector<double> hidden(static_cast<size_t>(cfg_.enc_hidden));
    std::vector<double> target(static_cast<size_t>(cfg_.embed_n));
    std::vector<double> per_obs(static_cast<size_t>(B) * T);
    std::vector<Var> terms;
    terms.reserve(per_obs.size());

    for (int j = 0; j < B; ++j) {
        for (int t = 0; t < T; ++t) {
            const Var obs = tape.constant(
                std::span<const double>(batch.obs_at(j, t), static_cast<size_t>(cfg_.obs_dim)));
            const Var pred =
                dense(tape, online_ti, pred1_, tape.relu(dense(tape, online_ti, pred0_, obs)));
            dense_fwd(target_, tgt0_, batch.obs_at(j, t), hidden.data());
            relu_inplace(hidden.data(), cfg_.enc_hidden);
            dense_fwd(target_, tgt1_, hidden.data(), target.data());
            const Var term = tape.squared_error_to(pred, target);
            per_obs[batch.idx(j, t)] = tape.scalar(term);
            terms.push_back(term);
        }
    }

    if (raw_rewards) {
        raw_rewards->assign(static_cast<size_t>(B) * (T - 1), 0.0);
        for (int j = 0; j < B; ++j) {
            for (int t = 0; t + 1 < T; ++t) {
                (*raw_rewards)[static_cast<size_t>(j) * (T - 1) + t] = per_obs[batch.idx(j, t + 1)];
            }
        }
    }

    const std::vector<double> weights(terms.size(), 1.0 / static_cast<double>(terms.size()));
    return tape.accumulate(terms, weights);
}

IcmModel::IcmModel(const BaselineConfig& cfg, ParamTree& online, std::string prefix,
                   std::mt19937_64& init_rng)
    : cfg_(cfg), prefix_(std::move(prefix)) {
    if (cfg_.action_count < 1) {
        throw ConfigError("icm: requires a discrete action space (action_count >= 1)");
    }
    if (cfg_.obs_dim < 1 || cfg_.embed_n < 1) {
        throw ConfigError("icm: obs_dim and embedding size must be >= 1");
    }
    add_dense(online, prefix_ + "/enc/l0", cfg_.enc_hidden, cfg_.obs_dim);
    add_dense(online, prefix_ + "/enc/l1", cfg_.embed_n, cfg_.enc_hidden);
    add_dense(online, prefix_ + "/inv/l0", cfg_.head_hidden, 2 * cfg_.embed_n);
    add_dense(online, prefix_ + "/inv/l1", cfg_.action_count, cfg_.head_hidden);
    add_dense(online, prefix_ + "/fwd/l0", cfg_.head_hidden, cfg_.embed_n + cfg_.action_count);
    add_dense(online, prefix_ + "/fwd/l1", cfg_.embed_n, cfg_.head_hidden);
    for (const char* name : {"/enc/l0/w", "/enc/l0/b", "/enc/l1/w", "/enc/l1/b",
                             "/inv/l0/w", "/inv/l0/b", "/inv/l1/w", "/inv/l1/b",
                             "/fwd/l0/w", "/fwd/l0/b", "/fwd/l1/w", "/fwd/l1/b"}) {
        fill_entry_uniform(online.at(prefix_ + name), init_rng);
    }
    enc0_ = dense_ref(online, prefix_ + "/enc/l0");
    enc1_ = dense_ref(online, prefix_ + "/enc/l1");
    inv0_ = dense_ref(online, prefix_ + "/inv/l0");
    inv1_ = dense_ref(online, prefix_ + "/inv/l1");
    fwd0_ = dense_ref(online, prefix_ + "/fwd/l0");
    fwd1_ = dense_ref(online, prefix_ + "/fwd/l1");
}

Var IcmModel::compute(Tape& tape, int online_ti, const TrajectoryBatch& batch,
                      std::vector<double>* raw_rewards, double* inverse_loss,
                      double* forward_loss) const {
    if (batch.len < 2) throw UsageError("icm: segment length must be >= 2");
    const int B = batch.envs, T = batch.len;
    const size_t n_trans = static_cast<size_t>(B) * (T - 1);

    // Embed every observation once.
    std::vector<Var> embeds(static_cast<size_t>(B) * T);
    for (int j = 0; j < B; ++j) {
        for (int t = 0; t < T; ++t) {
            const Var obs = tape.constant(
                std::span<const double>(batch.obs_at(j, t), static_cast<size_t>(cfg_.obs_dim)));
            embeds[batch.idx(j, t)] =
                dense(tape, online_ti, enc1_, tape.relu(dense(tape, online_ti, enc0_, obs)));
        }
    }

    std::vector<double> onehot(static_cast<size_t>(cfg_.action_count));
    std::vector<Var> inv_terms, fwd_terms;
    inv_terms.reserve(n_trans);
    fwd_terms.reserve(n_trans);
    if (raw_rewards) raw_rewards->assign(n_trans, 0.0);

    for (int j = 0; j < B; ++j) {
        for (int t = 0; t + 1 < T; ++t) {
            const Var e_now = embeds[batch.idx(j, t)];
            const Var e_next = embeds[batch.idx(j, t + 1)];
            const int action = batch.actions[batch.idx(j, t)];

            const std::array<Var, 2> pair{e_now, e_next};
            const Var logits = dense(tape, online_ti, inv1_,
                                     tape.relu(dense(tape, online_ti, inv0_, tape.concat(pair))));
            inv_terms.push_back(tape.cross_entropy_logits(logits, action));

            // The forward model trains alone: both embedding inputs are
            // detached, so its error shapes g only, never the encoder.
            one_hot_into(onehot.data(), cfg_.action_count, action);
            const std::array<Var, 2> fwd_in{tape.stop_gradient(e_now), tape.constant(onehot)};
            const Var pred = dense(tape, online_ti, fwd1_,
                                   tape.relu(dense(tape, online_ti, fwd0_, tape.concat(fwd_in))));
            const Var term = tape.squared_error(pred, tape.stop_gradient(e_next));
            fwd_terms.push_back(term);
            if (raw_rewards) {
                (*raw_rewards)[static_cast<size_t>(j) * (T - 1) + t] = tape.scalar(term);
            }
        }
    }

    const double inv_n = 1.0 / static_cast<double>(n_trans);
    const std::vector<double> mean_w(n_trans, inv_n);
    const Var inv_mean = tape.accumulate(inv_terms, mean_w);
    const Var fwd_mean = tape.accumulate(fwd_terms, mean_w);
    if (inverse_loss) *inverse_loss = tape.scalar(inv_mean);
    if (forward_loss) *forward_loss = tape.scalar(fwd_mean);

    const std::array<Var, 2> parts{inv_mean, fwd_mean};
    const std::array<double, 2> part_w{cfg_.inverse_weight, cfg_.forward_weight};
    return tape.accumulate(parts, part_w);
}

} // namespace curio
