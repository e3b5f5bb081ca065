#include "curio/reward_norm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "curio/errors.hpp"

namespace curio {

double NormalizerState::mean() const {
    const double bc = 1.0 - std::pow(decay, static_cast<double>(count));
    return ema_mean / bc;
}

double NormalizerState::mean_sq() const {
    const double bc = 1.0 - std::pow(decay, static_cast<double>(count));
    return ema_mean_sq / bc;
}

double NormalizerState::sigma() const {
    const double var = mean_sq() - mean() * mean();
    return std::sqrt(std::max(var, 0.0) + kVarEps);
}

void NormalizerState::update(double batch_mean, double batch_mean_sq) {
    ema_mean = decay * ema_mean + (1.0 - decay) * batch_mean;
    ema_mean_sq = decay * ema_mean_sq + (1.0 - decay) * batch_mean_sq;
    count += 1;
}

std::vector<double> normalize_batch(NormalizerState& state, std::span<const double> raw) {
    if (raw.empty()) throw UsageError("normalize_batch: empty batch");
    double m = 0.0, ms = 0.0;
    for (double v : raw) {
        m += v;
        ms += v * v;
    }
    m /= static_cast<double>(raw.size());
    ms /= static_cast<double>(raw.size());
    state.update(m, ms);
    const double sigma = state.sigma();
    std::vector<double> out(raw.size());
    for (size_t i = 0; i < raw.size(); ++i) out[i] = raw[i] / sigma;
    return out;
}

std::vector<double> prioritize(ClipState& clip, std::span<const double> normalized, bool enabled) {
    if (normalized.empty()) throw UsageError("prioritize: empty batch");
    double m = 0.0, ms = 0.0;
    for (double v : normalized) {
        m += v;
        ms += v * v;
    }
    m /= static_cast<double>(normalized.size());
    ms /= static_cast<double>(normalized.size());
    clip.mean_tracker.update(m, ms);

    std::vector<double> out(normalized.begin(), normalized.end());
    if (enabled) {
        const double threshold = clip.mean_tracker.mean();
        for (double& v : out) v = std::max(v - threshold, 0.0);
    }
    return out;
}

std::vector<double> mix_rewards(std::span<const double> extrinsic, std::span<const double> intrinsic,
                                double lambda, int envs, int len) {
    if (extrinsic.size() != static_cast<size_t>(envs) * len ||
        intrinsic.size() != static_cast<size_t>(envs) * (len - 1)) {
        throw UsageError("mix_rewards: extrinsic must be B*T and intrinsic B*(T-1), got " +
                         std::to_string(extrinsic.size()) + " and " + std::to_string(intrinsic.size()) +
                         " for B=" + std::to_string(envs) + " T=" + std::to_string(len));
    }
    std::vector<double> out(extrinsic.begin(), extrinsic.end());
    for (int j = 0; j < envs; ++j) {
        for (int t = 0; t + 1 < len; ++t) {
            out[static_cast<size_t>(j) * len + t] +=
                lambda * intrinsic[static_cast<size_t>(j) * (len - 1) + t];
        }
    }
    return out;
}

} // namespace curio
