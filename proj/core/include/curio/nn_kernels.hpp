#pragma once

#include <algorithm>
#include <cmath>

namespace curio {

// Shared numeric kernels. The tape ops and the plain (tapeless) forward
// passes both call these, so acting-time and training-time evaluations of
// the same network are bit-identical.

inline void affine_fwd(const double* w, const double* b, const double* x,
                       double* out, int out_n, int in_n) {
    for (int i = 0; i < out_n; ++i) {
        double acc = b[i];
        const double* row = w + static_cast<size_t>(i) * in_n;
        for (int j = 0; j < in_n; ++j) acc += row[j] * x[j];
        out[i] = acc;
    }
}

inline double sigmoid_val(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double max_logit(const double* logits, int n) {
    double m = logits[0];
    for (int i = 1; i < n; ++i) m = std::max(m, logits[i]);
    return m;
}

// log softmax(logits)[idx], computed with max-shift for stability.
inline double log_softmax_at(const double* logits, int n, int idx) {
    const double m = max_logit(logits, n);
    double z = 0.0;
    for (int i = 0; i < n; ++i) z += std::exp(logits[i] - m);
    return logits[idx] - m - std::log(z);
}

inline void softmax(const double* logits, int n, double* out) {
    const double m = max_logit(logits, n);
    double z = 0.0;
    for (int i = 0; i < n; ++i) {
        out[i] = std::exp(logits[i] - m);
        z += out[i];
    }
    for (int i = 0; i < n; ++i) out[i] /= z;
}

// Entropy of softmax(logits). Terms with underflowed probability contribute 0.
inline double softmax_entropy_val(const double* logits, int n, double* probs_scratch) {
    softmax(logits, n, probs_scratch);
    double h = 0.0;
    for (int i = 0; i < n; ++i) {
        const double p = probs_scratch[i];
        if (p > 0.0) h -= p * std::log(p);
    }
    return h;
}

// Writes a one-hot vector; idx = -1 encodes "no action" as all zeros.
inline void one_hot_into(double* dst, int n, int idx) {
    for (int i = 0; i < n; ++i) dst[i] = 0.0;
    if (idx >= 0 && idx < n) dst[idx] = 1.0;
}

inline void relu_inplace(double* x, int n) {
    for (int i = 0; i < n; ++i) x[i] = x[i] > 0.0 ? x[i] : 0.0;
}

// Draws an index from a probability vector given u in [0, 1). The final
// bucket absorbs any rounding slack so the result is always in range.
inline int sample_categorical(const double* probs, int n, double u) {
    double cum = 0.0;
    for (int i = 0; i < n - 1; ++i) {
        cum += probs[i];
        if (u < cum) return i;
    }
    return n - 1;
}

} // namespace curio
