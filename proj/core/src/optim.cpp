#include "curio/optim.hpp"

#include <cmath>

#include "curio/errors.hpp"

namespace curio {

AdamState AdamState::init(const ParamTree& params) {
    AdamState s;
    s.m = ParamTree::zeros_like(params);
    s.v = ParamTree::zeros_like(params);
    return s;
}

void adam_update(ParamTree& params, const ParamTree& grad, AdamState& state, const AdamConfig& cfg) {
    params.require_congruent(grad, "adam_update: params vs grad");
    params.require_congruent(state.m, "adam_update: params vs first-moment state");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (int e = 0; e < params.entry_count(); ++e) {
        auto& p = params.entry(e).data;
        const auto& g = grad.entry(e).data;
        auto& m = state.m.entry(e).data;
        auto& v = state.v.entry(e).data;
        for (size_t i = 0; i < p.size(); ++i) {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
    }
}

void ema_update(ParamTree& target, const ParamTree& online, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw ConfigError("ema_update: alpha must lie in [0, 1]");
    }
    target.require_congruent(online, "ema_update: target vs online");
    for (int e = 0; e < target.entry_count(); ++e) {
        auto& t = target.entry(e).data;
        const auto& o = online.entry(e).data;
        for (size_t i = 0; i < t.size(); ++i) {
            t[i] = alpha * t[i] + (1.0 - alpha) * o[i];
        }
    }
}

} // namespace curio
