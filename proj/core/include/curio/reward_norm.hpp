#pragma once

// Intrinsic-reward pipeline: raw uncertainties are divided by a running
// standard-deviation estimate (EMA with bias correction, so the very first
// batch is normalized by its own statistics), then optionally clipped at
// the running mean of the normalized values, keeping only above-average
// novelty. Finally the intrinsic stream is mixed into the extrinsic one.

#include <span>
#include <vector>

namespace curio {

struct NormalizerState {
    double ema_mean = 0.0;
    double ema_mean_sq = 0.0;
    long long count = 0; // batches absorbed
    double decay = 0.99;

    static constexpr double kVarEps = 1e-8;

    // Bias-corrected mean; only meaningful once count >= 1.
    double mean() const;
    double mean_sq() const;
    // sqrt(max(var, 0) + 1e-8); never below 1e-4.
    double sigma() const;

    // Absorb one batch given its mean and mean of squares.
    void update(double batch_mean, double batch_mean_sq);
};

// Updates the state from the batch, then divides by the post-update sigma.
// Throws UsageError on an empty batch.
std::vector<double> normalize_batch(NormalizerState& state, std::span<const double> raw);

// Threshold state for prioritization: tracks the running mean of normalized
// rewards. Kept warm even while clipping is disabled so the flag can be
// toggled mid-run without a cold restart.
struct ClipState {
    NormalizerState mean_tracker;
};

std::vector<double> prioritize(ClipState& clip, std::span<const double> normalized, bool enabled);

// r_t = extrinsic_t + lambda * intrinsic_t. The intrinsic stream is one
// shorter per trajectory (the last transition has no uncertainty entry), so
// intrinsic must have exactly envs * (len - 1) entries against the
// extrinsic envs * len; the missing tail contributes zero.
std::vector<double> mix_rewards(std::span<const double> extrinsic, std::span<const double> intrinsic,
                                double lambda, int envs, int len);

} // namespace curio
