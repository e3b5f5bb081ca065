#include "curio/tape.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "curio/errors.hpp"
#include "curio/nn_kernels.hpp"

namespace curio {

namespace {

enum class Op : uint8_t {
    kLeaf,
    kConst,
    kAffine,
    kConv2d,
    kRelu,
    kTanh,
    kSigmoid,
    kAdd,
    kSub,
    kMul,
    kOneMinus,
    kScale,
    kConcat,
    kStopGrad,
    kSqErr,
    kSqErrTo,
    kCosineToUnit,
    kCrossEntropy,
    kEntropy,
    kAccum,
};

// Chunked arena with stable addresses; one allocation per node payload.
class Arena {
public:
    static constexpr size_t kBlock = 1 << 16; // doubles per block

    double* alloc(size_t n) {
        if (n > kBlock) {
            big_.push_back(std::make_unique<double[]>(n));
            return big_.back().get();
        }
        if (block_idx_ == 0 || used_ + n > kBlock) {
            if (block_idx_ >= blocks_.size()) {
                blocks_.push_back(std::make_unique<double[]>(kBlock));
            }
            ++block_idx_;
            used_ = 0;
        }
        double* p = blocks_[block_idx_ - 1].get() + used_;
        used_ += n;
        return p;
    }

    void reset() {
        big_.clear();
        block_idx_ = 0;
        used_ = 0;
    }

private:
    std::vector<std::unique_ptr<double[]>> blocks_;
    std::vector<std::unique_ptr<double[]>> big_;
    size_t block_idx_ = 0; // 1-based index of the block currently filling
    size_t used_ = 0;
};

} // namespace

struct Tape::Impl {
    struct Node {
        Op op;
        int len;
        Var a = -1, b = -1, c = -1; // parents; for kCrossEntropy, b is the label
        int aux = -1;               // index into aux_ints
        int caux = -1;              // index into caux
        double x = 0.0;             // scale factor
        double* val = nullptr;
        double* adj = nullptr;
    };

    struct LeafBind {
        int tree;
        int entry;
        Var var;
    };

    std::vector<Node> nodes;
    std::vector<int> aux_ints;
    std::vector<double> caux;
    std::vector<const ParamTree*> trees;
    std::vector<LeafBind> binds;
    Arena values;
    Arena adjoints;
    std::vector<double> scratch; // softmax probabilities in backward

    Node& node(Var v) { return nodes[static_cast<size_t>(v)]; }
    const Node& node(Var v) const { return nodes[static_cast<size_t>(v)]; }

    Var push(Op op, int len) {
        Node n;
        n.op = op;
        n.len = len;
        n.val = values.alloc(static_cast<size_t>(len));
        n.adj = adjoints.alloc(static_cast<size_t>(len));
        nodes.push_back(n);
        return static_cast<Var>(nodes.size() - 1);
    }

    // Human-readable node description for shape errors.
    std::string describe(Var v) const {
        const Node& n = node(v);
        if (n.op == Op::kLeaf) {
            for (const LeafBind& lb : binds) {
                if (lb.var == v) return "entry '" + trees[static_cast<size_t>(lb.tree)]->entry(lb.entry).name + "'";
            }
        }
        return "node #" + std::to_string(v);
    }

    void require_same_len(Var a, Var b, const char* what) const {
        if (node(a).len != node(b).len) {
            throw ConfigError(std::string(what) + ": length mismatch between " + describe(a) + " (" +
                              std::to_string(node(a).len) + ") and " + describe(b) + " (" +
                              std::to_string(node(b).len) + ")");
        }
    }
};

Tape::Tape() : impl_(std::make_unique<Impl>()) {}
Tape::~Tape() = default;

int Tape::register_tree(const ParamTree& tree) {
    impl_->trees.push_back(&tree);
    return static_cast<int>(impl_->trees.size() - 1);
}

Var Tape::param(int tree_idx, std::string_view entry) {
    if (tree_idx < 0 || tree_idx >= static_cast<int>(impl_->trees.size())) {
        throw ConfigError("Tape::param: unregistered tree index " + std::to_string(tree_idx));
    }
    const ParamTree& tree = *impl_->trees[static_cast<size_t>(tree_idx)];
    const int ei = tree.index_of(entry);
    if (ei < 0) throw ConfigError("Tape::param: no entry '" + std::string(entry) + "'");
    for (const Impl::LeafBind& lb : impl_->binds) {
        if (lb.tree == tree_idx && lb.entry == ei) return lb.var;
    }
    const auto& e = tree.entry(ei);
    const Var v = impl_->push(Op::kLeaf, e.numel());
    std::memcpy(impl_->node(v).val, e.data.data(), e.data.size() * sizeof(double));
    impl_->binds.push_back({tree_idx, ei, v});
    return v;
}

Var Tape::constant(std::span<const double> v) {
    const Var r = impl_->push(Op::kConst, static_cast<int>(v.size()));
    std::memcpy(impl_->node(r).val, v.data(), v.size() * sizeof(double));
    return r;
}

Var Tape::constant_scalar(double v) { return constant(std::span<const double>(&v, 1)); }

Var Tape::affine(Var w, Var b, Var x) {
    auto& im = *impl_;
    const int out_n = im.node(b).len;
    const int in_n = im.node(x).len;
    if (im.node(w).len != out_n * in_n) {
        throw ConfigError("affine: weight " + im.describe(w) + " has " + std::to_string(im.node(w).len) +
                          " values, expected " + std::to_string(out_n) + "x" + std::to_string(in_n) +
                          " for bias " + im.describe(b) + " and input " + im.describe(x));
    }
    const Var r = im.push(Op::kAffine, out_n);
    auto& n = im.node(r);
    n.a = w;
    n.b = b;
    n.c = x;
    affine_fwd(im.node(w).val, im.node(b).val, im.node(x).val, n.val, out_n, in_n);
    return r;
}

Var Tape::conv2d(Var w, Var b, Var x, int in_c, int in_h, int in_w, int out_c, int k) {
    auto& im = *impl_;
    if (im.node(x).len != in_c * in_h * in_w) {
        throw ConfigError("conv2d: input " + im.describe(x) + " has " + std::to_string(im.node(x).len) +
                          " values, expected " + std::to_string(in_c * in_h * in_w));
    }
    if (im.node(w).len != out_c * in_c * k * k) {
        throw ConfigError("conv2d: kernel " + im.describe(w) + " has " + std::to_string(im.node(w).len) +
                          " values, expected " + std::to_string(out_c * in_c * k * k));
    }
    if (im.node(b).len != out_c) {
        throw ConfigError("conv2d: bias " + im.describe(b) + " has " + std::to_string(im.node(b).len) +
                          " values, expected " + std::to_string(out_c));
    }
    const int oh = in_h - k + 1;
    const int ow = in_w - k + 1;
    if (oh <= 0 || ow <= 0) {
        throw ConfigError("conv2d: kernel size " + std::to_string(k) + " exceeds input " +
                          std::to_string(in_h) + "x" + std::to_string(in_w));
    }
    const Var r = im.push(Op::kConv2d, out_c * oh * ow);
    auto& n = im.node(r);
    n.a = w;
    n.b = b;
    n.c = x;
    n.aux = static_cast<int>(im.aux_ints.size());
    im.aux_ints.insert(im.aux_ints.end(), {in_c, in_h, in_w, out_c, k});
    const double* wv = im.node(w).val;
    const double* bv = im.node(b).val;
    const double* xv = im.node(x).val;
    for (int oc = 0; oc < out_c; ++oc) {
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                double acc = bv[oc];
                for (int ic = 0; ic < in_c; ++ic) {
                    for (int ky = 0; ky < k; ++ky) {
                        const double* xrow = xv + (static_cast<size_t>(ic) * in_h + oy + ky) * in_w + ox;
                        const double* wrow = wv + ((static_cast<size_t>(oc) * in_c + ic) * k + ky) * k;
                        for (int kx = 0; kx < k; ++kx) acc += wrow[kx] * xrow[kx];
                    }
                }
                n.val[(static_cast<size_t>(oc) * oh + oy) * ow + ox] = acc;
            }
        }
    }
    return r;
}

Var Tape::relu(Var x) {
    auto& im = *impl_;
    const Var r = im.push(Op::kRelu, im.node(x).len);
    auto& n = im.node(r);
    n.a = x;
    const double* xv = im.node(x).val;
    for (int i = 0; i < n.len; ++i) n.val[i] = xv[i] > 0.0 ? xv[i] : 0.0;
    return r;
}

Var Tape::tanh(Var x) {
    auto& im = *impl_;
    const Var r = im.push(Op::kTanh, im.node(x).len);
    auto& n = im.node(r);
    n.a = x;
    const double* xv = im.node(x).val;
    for (int i = 0; i < n.len; ++i) n.val[i] = std::tanh(xv[i]);
    return r;
}

Var Tape::sigmoid(Var x) {
    auto& im = *impl_;
    const Var r = im.push(Op::kSigmoid, im.node(x).len);
    auto& n = im.node(r);
    n.a = x;
    const double* xv = im.node(x).val;
    for (int i = 0; i < n.len; ++i) n.val[i] = sigmoid_val(xv[i]);
    return r;
}

Var Tape::add(Var a, Var b) {
    auto& im = *impl_;
    im.require_same_len(a, b, "add");
    const Var r = im.push(Op::kAdd, im.node(a).len);
    auto& n = im.node(r);
    n.a = a;
    n.b = b;
    const double* av = im.node(a).val;
    const double* bv = im.node(b).val;
    for (int i = 0; i < n.len; ++i) n.val[i] = av[i] + bv[i];
    return r;
}

Var Tape::sub(Var a, Var b) {
    auto& im = *impl_;
    im.require_same_len(a, b, "sub");
    const Var r = im.push(Op::kSub, im.node(a).len);
    auto& n = im.node(r);
    n.a = a;
    n.b = b;
    const double* av = im.node(a).val;
    const double* bv = im.node(b).val;
    for (int i = 0; i < n.len; ++i) n.val[i] = av[i] - bv[i];
    return r;
}

Var Tape::mul(Var a, Var b) {
    auto& im = *impl_;
    im.require_same_len(a, b, "mul");
    const Var r = im.push(Op::kMul, im.node(a).len);
    auto& n = im.node(r);
    n.a = a;
    n.b = b;
    const double* av = im.node(a).val;
    const double* bv = im.node(b).val;
    for (int i = 0; i < n.len; ++i) n.val[i] = av[i] * bv[i];
    return r;
}

Var Tape::one_minus(Var x) {
    auto& im = *impl_;
    const Var r = im.push(Op::kOneMinus, im.node(x).len);
    auto& n = im.node(r);
    n.a = x;
    const double* xv = im.node(x).val;
    for (int i = 0; i < n.len; ++i) n.val[i] = 1.0 - xv[i];
    return r;
}

Var Tape::scale(Var x, double c) {
    auto& im = *impl_;
    const Var r = im.push(Op::kScale, im.node(x).len);
    auto& n = im.node(r);
    n.a = x;
    n.x = c;
    const double* xv = im.node(x).val;
    for (int i = 0; i < n.len; ++i) n.val[i] = c * xv[i];
    return r;
}

Var Tape::concat(std::span<const Var> parts) {
    auto& im = *impl_;
    if (parts.empty()) throw UsageError("concat: no parts");
    int total = 0;
    for (Var p : parts) total += im.node(p).len;
    const Var r = im.push(Op::kConcat, total);
    auto& n = im.node(r);
    n.aux = static_cast<int>(im.aux_ints.size());
    im.aux_ints.push_back(static_cast<int>(parts.size()));
    for (Var p : parts) im.aux_ints.push_back(p);
    int off = 0;
    for (Var p : parts) {
        std::memcpy(n.val + off, im.node(p).val, static_cast<size_t>(im.node(p).len) * sizeof(double));
        off += im.node(p).len;
    }
    return r;
}

Var Tape::stop_gradient(Var x) {
    auto& im = *impl_;
    const Var r = im.push(Op::kStopGrad, im.node(x).len);
    auto& n = im.node(r);
    n.a = x;
    std::memcpy(n.val, im.node(x).val, static_cast<size_t>(n.len) * sizeof(double));
    return r;
}

Var Tape::squared_error(Var a, Var b) {
    auto& im = *impl_;
    im.require_same_len(a, b, "squared_error");
    const Var r = im.push(Op::kSqErr, 1);
    auto& n = im.node(r);
    n.a = a;
    n.b = b;
    const double* av = im.node(a).val;
    const double* bv = im.node(b).val;
    double acc = 0.0;
    for (int i = 0; i < im.node(a).len; ++i) {
        const double d = av[i] - bv[i];
        acc += d * d;
    }
    n.val[0] = acc;
    return r;
}

Var Tape::squared_error_to(Var a, std::span<const double> target) {
    auto& im = *impl_;
    if (im.node(a).len != static_cast<int>(target.size())) {
        throw ConfigError("squared_error_to: target length " + std::to_string(target.size()) +
                          " does not match " + im.describe(a));
    }
    const Var r = im.push(Op::kSqErrTo, 1);
    auto& n = im.node(r);
    n.a = a;
    n.caux = static_cast<int>(im.caux.size());
    im.caux.insert(im.caux.end(), target.begin(), target.end());
    const double* av = im.node(a).val;
    const double* tv = im.caux.data() + n.caux;
    double acc = 0.0;
    for (int i = 0; i < im.node(a).len; ++i) {
        const double d = av[i] - tv[i];
        acc += d * d;
    }
    n.val[0] = acc;
    return r;
}

Var Tape::cosine_distance_to_unit(Var p, std::span<const double> unit_target) {
    auto& im = *impl_;
    if (im.node(p).len != static_cast<int>(unit_target.size())) {
        throw ConfigError("cosine_distance_to_unit: target length " + std::to_string(unit_target.size()) +
                          " does not match " + im.describe(p));
    }
    const Var r = im.push(Op::kCosineToUnit, 1);
    auto& n = im.node(r);
    n.a = p;
    n.caux = static_cast<int>(im.caux.size());
    im.caux.insert(im.caux.end(), unit_target.begin(), unit_target.end());
    const double* pv = im.node(p).val;
    const double* tv = im.caux.data() + n.caux;
    const int len = im.node(p).len;
    double sq = 0.0;
    for (int i = 0; i < len; ++i) sq += pv[i] * pv[i];
    const double norm = std::sqrt(sq);
    double acc = 0.0;
    for (int i = 0; i < len; ++i) {
        const double d = pv[i] / (norm + kNormEps) - tv[i];
        acc += d * d;
    }
    n.val[0] = acc;
    return r;
}

Var Tape::cross_entropy_logits(Var logits, int label) {
    auto& im = *impl_;
    const int len = im.node(logits).len;
    if (label < 0 || label >= len) {
        throw UsageError("cross_entropy_logits: label " + std::to_string(label) + " out of range [0," +
                         std::to_string(len) + ")");
    }
    const Var r = im.push(Op::kCrossEntropy, 1);
    auto& n = im.node(r);
    n.a = logits;
    n.b = label;
    n.val[0] = -log_softmax_at(im.node(logits).val, len, label);
    return r;
}

Var Tape::softmax_entropy(Var logits) {
    auto& im = *impl_;
    const int len = im.node(logits).len;
    const Var r = im.push(Op::kEntropy, 1);
    auto& n = im.node(r);
    n.a = logits;
    im.scratch.resize(static_cast<size_t>(len));
    n.val[0] = softmax_entropy_val(im.node(logits).val, len, im.scratch.data());
    return r;
}

Var Tape::accumulate(std::span<const Var> terms, std::span<const double> weights) {
    auto& im = *impl_;
    if (terms.size() != weights.size()) {
        throw UsageError("accumulate: " + std::to_string(terms.size()) + " terms vs " +
                         std::to_string(weights.size()) + " weights");
    }
    for (Var t : terms) {
        if (im.node(t).len != 1) {
            throw UsageError("accumulate: term " + im.describe(t) + " is not a scalar");
        }
    }
    const Var r = im.push(Op::kAccum, 1);
    auto& n = im.node(r);
    n.aux = static_cast<int>(im.aux_ints.size());
    im.aux_ints.push_back(static_cast<int>(terms.size()));
    for (Var t : terms) im.aux_ints.push_back(t);
    n.caux = static_cast<int>(im.caux.size());
    im.caux.insert(im.caux.end(), weights.begin(), weights.end());
    double acc = 0.0;
    for (size_t i = 0; i < terms.size(); ++i) acc += weights[i] * im.node(terms[i]).val[0];
    n.val[0] = acc;
    return r;
}

std::span<const double> Tape::value(Var v) const {
    const auto& n = impl_->node(v);
    return {n.val, static_cast<size_t>(n.len)};
}

double Tape::scalar(Var v) const {
    const auto& n = impl_->node(v);
    if (n.len != 1) throw UsageError("Tape::scalar: node has length " + std::to_string(n.len));
    return n.val[0];
}

void Tape::backward(Var loss) {
    auto& im = *impl_;
    if (loss < 0 || loss >= static_cast<Var>(im.nodes.size())) {
        throw UsageError("backward: invalid loss node");
    }
    if (im.node(loss).len != 1) {
        throw UsageError("backward: loss is not a scalar (length " +
                         std::to_string(im.node(loss).len) + ")");
    }
    for (auto& n : im.nodes) std::memset(n.adj, 0, static_cast<size_t>(n.len) * sizeof(double));
    im.node(loss).adj[0] = 1.0;

    for (Var v = static_cast<Var>(im.nodes.size()) - 1; v >= 0; --v) {
        const auto& n = im.node(v);
        switch (n.op) {
            case Op::kLeaf:
            case Op::kConst:
            case Op::kStopGrad:
                break;
            case Op::kAffine: {
                const int out_n = n.len;
                const int in_n = im.node(n.c).len;
                const double* wv = im.node(n.a).val;
                const double* xv = im.node(n.c).val;
                double* gw = im.node(n.a).adj;
                double* gb = im.node(n.b).adj;
                double* gx = im.node(n.c).adj;
                for (int i = 0; i < out_n; ++i) {
                    const double g = n.adj[i];
                    if (g == 0.0) continue;
                    gb[i] += g;
                    const double* wrow = wv + static_cast<size_t>(i) * in_n;
                    double* gwrow = gw + static_cast<size_t>(i) * in_n;
                    for (int j = 0; j < in_n; ++j) {
                        gwrow[j] += g * xv[j];
                        gx[j] += g * wrow[j];
                    }
                }
                break;
            }
            case Op::kConv2d: {
                const int* d = im.aux_ints.data() + n.aux;
                const int in_c = d[0], in_h = d[1], in_w = d[2], out_c = d[3], k = d[4];
                const int oh = in_h - k + 1;
                const int ow = in_w - k + 1;
                const double* wv = im.node(n.a).val;
                const double* xv = im.node(n.c).val;
                double* gw = im.node(n.a).adj;
                double* gb = im.node(n.b).adj;
                double* gx = im.node(n.c).adj;
                for (int oc = 0; oc < out_c; ++oc) {
                    for (int oy = 0; oy < oh; ++oy) {
                        for (int ox = 0; ox < ow; ++ox) {
                            const double g = n.adj[(static_cast<size_t>(oc) * oh + oy) * ow + ox];
                            if (g == 0.0) continue;
                            gb[oc] += g;
                            for (int ic = 0; ic < in_c; ++ic) {
                                for (int ky = 0; ky < k; ++ky) {
                                    const size_t xoff = (static_cast<size_t>(ic) * in_h + oy + ky) * in_w + ox;
                                    const size_t woff = ((static_cast<size_t>(oc) * in_c + ic) * k + ky) * k;
                                    for (int kx = 0; kx < k; ++kx) {
                                        gw[woff + kx] += g * xv[xoff + kx];
                                        gx[xoff + kx] += g * wv[woff + kx];
                                    }
                                }
                            }
                        }
                    }
                }
                break;
            }
            case Op::kRelu: {
                const double* xv = im.node(n.a).val;
                double* gx = im.node(n.a).adj;
                for (int i = 0; i < n.len; ++i) {
                    if (xv[i] > 0.0) gx[i] += n.adj[i];
                }
                break;
            }
            case Op::kTanh: {
                double* gx = im.node(n.a).adj;
                for (int i = 0; i < n.len; ++i) gx[i] += n.adj[i] * (1.0 - n.val[i] * n.val[i]);
                break;
            }
            case Op::kSigmoid: {
                double* gx = im.node(n.a).adj;
                for (int i = 0; i < n.len; ++i) gx[i] += n.adj[i] * n.val[i] * (1.0 - n.val[i]);
                break;
            }
            case Op::kAdd: {
                double* ga = im.node(n.a).adj;
                double* gb = im.node(n.b).adj;
                for (int i = 0; i < n.len; ++i) {
                    ga[i] += n.adj[i];
                    gb[i] += n.adj[i];
                }
                break;
            }
            case Op::kSub: {
                double* ga = im.node(n.a).adj;
                double* gb = im.node(n.b).adj;
                for (int i = 0; i < n.len; ++i) {
                    ga[i] += n.adj[i];
                    gb[i] -= n.adj[i];
                }
                break;
            }
            case Op::kMul: {
                const double* av = im.node(n.a).val;
                const double* bv = im.node(n.b).val;
                double* ga = im.node(n.a).adj;
                double* gb = im.node(n.b).adj;
                for (int i = 0; i < n.len; ++i) {
                    ga[i] += n.adj[i] * bv[i];
                    gb[i] += n.adj[i] * av[i];
                }
                break;
            }
            case Op::kOneMinus: {
                double* ga = im.node(n.a).adj;
                for (int i = 0; i < n.len; ++i) ga[i] -= n.adj[i];
                break;
            }
            case Op::kScale: {
                double* ga = im.node(n.a).adj;
                for (int i = 0; i < n.len; ++i) ga[i] += n.adj[i] * n.x;
                break;
            }
            case Op::kConcat: {
                const int* d = im.aux_ints.data() + n.aux;
                const int parts = d[0];
                int off = 0;
                for (int p = 0; p < parts; ++p) {
                    auto& pn = im.node(d[1 + p]);
                    for (int i = 0; i < pn.len; ++i) pn.adj[i] += n.adj[off + i];
                    off += pn.len;
                }
                break;
            }
            case Op::kSqErr: {
                const double g = n.adj[0];
                if (g == 0.0) break;
                const double* av = im.node(n.a).val;
                const double* bv = im.node(n.b).val;
                double* ga = im.node(n.a).adj;
                double* gb = im.node(n.b).adj;
                for (int i = 0; i < im.node(n.a).len; ++i) {
                    const double d2 = 2.0 * g * (av[i] - bv[i]);
                    ga[i] += d2;
                    gb[i] -= d2;
                }
                break;
            }
            case Op::kSqErrTo: {
                const double g = n.adj[0];
                if (g == 0.0) break;
                const double* av = im.node(n.a).val;
                const double* tv = im.caux.data() + n.caux;
                double* ga = im.node(n.a).adj;
                for (int i = 0; i < im.node(n.a).len; ++i) ga[i] += 2.0 * g * (av[i] - tv[i]);
                break;
            }
            case Op::kCosineToUnit: {
                const double g = n.adj[0];
                if (g == 0.0) break;
                const double* pv = im.node(n.a).val;
                const double* tv = im.caux.data() + n.caux;
                double* gp = im.node(n.a).adj;
                const int len = im.node(n.a).len;
                double sq = 0.0;
                for (int i = 0; i < len; ++i) sq += pv[i] * pv[i];
                const double norm = std::sqrt(sq);
                const double denom = norm + kNormEps;
                double pdotgu = 0.0;
                for (int i = 0; i < len; ++i) {
                    pdotgu += pv[i] * 2.0 * (pv[i] / denom - tv[i]);
                }
                // d/dp of ‖p/(‖p‖+eps) − t‖²; the radial term vanishes as p→0.
                const double radial = norm > 0.0 ? pdotgu / (norm * denom * denom) : 0.0;
                for (int i = 0; i < len; ++i) {
                    const double gu = 2.0 * (pv[i] / denom - tv[i]);
                    gp[i] += g * (gu / denom - radial * pv[i]);
                }
                break;
            }
            case Op::kCrossEntropy: {
                const double g = n.adj[0];
                if (g == 0.0) break;
                const int len = im.node(n.a).len;
                im.scratch.resize(static_cast<size_t>(len));
                softmax(im.node(n.a).val, len, im.scratch.data());
                double* ga = im.node(n.a).adj;
                for (int i = 0; i < len; ++i) {
                    ga[i] += g * (im.scratch[i] - (i == n.b ? 1.0 : 0.0));
                }
                break;
            }
            case Op::kEntropy: {
                const double g = n.adj[0];
                if (g == 0.0) break;
                const int len = im.node(n.a).len;
                im.scratch.resize(static_cast<size_t>(len));
                softmax(im.node(n.a).val, len, im.scratch.data());
                const double h = n.val[0];
                double* ga = im.node(n.a).adj;
                for (int i = 0; i < len; ++i) {
                    const double p = im.scratch[i];
                    if (p > 0.0) ga[i] += g * (-p * (std::log(p) + h));
                }
                break;
            }
            case Op::kAccum: {
                const double g = n.adj[0];
                if (g == 0.0) break;
                const int* d = im.aux_ints.data() + n.aux;
                const int count = d[0];
                const double* wv = im.caux.data() + n.caux;
                for (int i = 0; i < count; ++i) {
                    im.node(d[1 + i]).adj[0] += g * wv[i];
                }
                break;
            }
        }
    }
}

ParamTree Tape::grad(int tree_idx) const {
    auto& im = *impl_;
    if (tree_idx < 0 || tree_idx >= static_cast<int>(im.trees.size())) {
        throw ConfigError("Tape::grad: unregistered tree index " + std::to_string(tree_idx));
    }
    ParamTree g = ParamTree::zeros_like(*im.trees[static_cast<size_t>(tree_idx)]);
    for (const Impl::LeafBind& lb : im.binds) {
        if (lb.tree != tree_idx) continue;
        auto& e = g.entry(lb.entry);
        const auto& n = im.node(lb.var);
        std::memcpy(e.data.data(), n.adj, e.data.size() * sizeof(double));
    }
    return g;
}

void Tape::reset() {
    auto& im = *impl_;
    im.nodes.clear();
    im.aux_ints.clear();
    im.caux.clear();
    im.binds.clear();
    im.values.reset();
    im.adjoints.reset();
}

int Tape::node_count() const { return static_cast<int>(impl_->nodes.size()); }

} // namespace curio
