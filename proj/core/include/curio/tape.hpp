#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "curio/param_tree.hpp"

namespace curio {

/// Handle to a tape node.
using Var = int32_t;

/// Reverse-mode gradient tape over vector-valued nodes.
///
/// Node values are computed eagerly as the graph is built; backward() then
/// walks the recorded operations in reverse and accumulates one sensitivity
/// per registered parameter entry. Values and adjoints live in chunked
/// arenas, so spans returned by value() stay valid until reset().
///
/// Leaves created through param() are deduplicated: asking for the same
/// (tree, entry) twice returns the same node, so each parameter entry
/// receives exactly one accumulated sensitivity.
class Tape {
public:
    Tape();
    ~Tape();
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Registers a parameter tree as a gradient source. The tree must stay
    /// alive and structurally unchanged while the tape uses it.
    int register_tree(const ParamTree& tree);

    /// Leaf holding a snapshot of a registered tree entry.
    Var param(int tree_idx, std::string_view entry);

    /// Constant leaves (no gradient).
    Var constant(std::span<const double> v);
    Var constant_scalar(double v);

    // ---- differentiable primitives -------------------------------------
    Var affine(Var w, Var b, Var x);               // W·x + b, W is out×in
    Var conv2d(Var w, Var b, Var x, int in_c, int in_h, int in_w, int out_c, int k);
    Var relu(Var x);
    Var tanh(Var x);
    Var sigmoid(Var x);
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);                          // elementwise
    Var one_minus(Var x);                           // 1 - x
    Var scale(Var x, double c);
    Var concat(std::span<const Var> parts);
    Var stop_gradient(Var x);
    Var squared_error(Var a, Var b);                // scalar ‖a-b‖²
    Var squared_error_to(Var a, std::span<const double> target);
    /// Scalar ‖p/(‖p‖+eps) − u‖² against a fixed unit-norm target u.
    Var cosine_distance_to_unit(Var p, std::span<const double> unit_target);
    Var cross_entropy_logits(Var logits, int label); // scalar −log softmax[label]
    Var softmax_entropy(Var logits);                 // scalar
    /// Scalar Σ weights[i]·terms[i]; every term must be scalar.
    Var accumulate(std::span<const Var> terms, std::span<const double> weights);

    // ---- evaluation ----------------------------------------------------
    std::span<const double> value(Var v) const;
    double scalar(Var v) const;                     // requires a length-1 node

    /// Runs reverse accumulation from a scalar loss node.
    void backward(Var loss);

    /// Gradient w.r.t. a registered tree, congruent with it. Entries never
    /// touched by the computation come back zero. Valid after backward().
    ParamTree grad(int tree_idx) const;

    /// Clears all nodes while keeping arena capacity and registered trees.
    void reset();

    int node_count() const;

    /// Epsilon added to norm denominators in cosine_distance_to_unit.
    static constexpr double kNormEps = 1e-12;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace curio
