#pragma once

#include "curio/param_tree.hpp"

namespace curio {

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    ParamTree m;
    ParamTree v;
    long long step = 0;

    static AdamState init(const ParamTree& params);
};

// One Adam step with bias correction; epsilon sits outside the square root.
void adam_update(ParamTree& params, const ParamTree& grad, AdamState& state, const AdamConfig& cfg);

// target <- alpha * target + (1 - alpha) * online, entry by entry.
void ema_update(ParamTree& target, const ParamTree& online, double alpha);

} // namespace curio
