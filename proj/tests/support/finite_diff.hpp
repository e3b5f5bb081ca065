#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "curio/param_tree.hpp"

namespace curio::test_support {

// Central-difference gradient of f() with respect to every scalar held in
// params. f reads params by reference and returns the loss value.
inline ParamTree finite_diff_grad(ParamTree& params, const std::function<double()>& f,
                                  double eps = 1e-5) {
    ParamTree g = ParamTree::zeros_like(params);
    for (int e = 0; e < params.entry_count(); ++e) {
        auto& data = params.entry(e).data;
        for (size_t i = 0; i < data.size(); ++i) {
            const double saved = data[i];
            data[i] = saved + eps;
            const double fp = f();
            data[i] = saved - eps;
            const double fm = f();
            data[i] = saved;
            g.entry(e).data[i] = (fp - fm) / (2.0 * eps);
        }
    }
    return g;
}

// Largest elementwise deviation between two congruent trees, scaled by
// 1 + max(|a|, |b|) so large and small gradients share one tolerance.
inline double max_relative_gap(const ParamTree& a, const ParamTree& b) {
    double worst = 0.0;
    for (int e = 0; e < a.entry_count(); ++e) {
        const auto& da = a.entry(e).data;
        const auto& db = b.entry(e).data;
        for (size_t i = 0; i < da.size(); ++i) {
            const double gap = std::abs(da[i] - db[i]) / (1.0 + std::max(std::abs(da[i]), std::abs(db[i])));
            worst = std::max(worst, gap);
        }
    }
    return worst;
}

} // namespace curio::test_support
