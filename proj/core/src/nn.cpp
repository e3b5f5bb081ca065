#include "curio/nn.hpp"

#include <array>
#include <cmath>
#include <cstring>

#include "curio/errors.hpp"
#include "curio/nn_kernels.hpp"

namespace curio {

void add_dense(ParamTree& t, const std::string& prefix, int out_n, int in_n) {
    t.add(prefix + "/w", {out_n, in_n});
    t.add(prefix + "/b", {out_n});
}

void add_gru(ParamTree& t, const std::string& prefix, int hidden_n, int input_n) {
    const int cat_n = input_n + hidden_n;
    t.add(prefix + "/wz", {hidden_n, cat_n});
    t.add(prefix + "/bz", {hidden_n});
    t.add(prefix + "/wr", {hidden_n, cat_n});
    t.add(prefix + "/br", {hidden_n});
    t.add(prefix + "/wn", {hidden_n, cat_n});
    t.add(prefix + "/bn", {hidden_n});
}

namespace {

int must_find(const ParamTree& t, const std::string& name) {
    const int i = t.index_of(name);
    if (i < 0) throw ConfigError("missing parameter entry '" + name + "'");
    return i;
}

// Entries are stored sorted by name, so adding entries to a tree shifts the
// indices of everything after the insertion point. A ref's cached index is
// therefore only a hint: use it when the name still matches, fall back to a
// lookup otherwise. This also lets refs built against one tree address any
// congruent tree (e.g. the target copy), where positions may differ.
const ParamTree::Entry& resolve(const ParamTree& t, int hint, const std::string& name) {
    if (hint >= 0 && hint < t.entry_count() && t.entry(hint).name == name) return t.entry(hint);
    return t.at(name);
}

} // namespace

DenseRef dense_ref(const ParamTree& t, const std::string& prefix) {
    DenseRef d;
    d.w = prefix + "/w";
    d.b = prefix + "/b";
    d.w_idx = must_find(t, d.w);
    d.b_idx = must_find(t, d.b);
    const auto& we = t.entry(d.w_idx);
    const auto& be = t.entry(d.b_idx);
    if (we.shape.size() != 2 || be.shape.size() != 1 || we.shape[0] != be.shape[0]) {
        throw ConfigError("dense layer '" + prefix + "' has inconsistent shapes");
    }
    d.out_n = we.shape[0];
    d.in_n = we.shape[1];
    return d;
}

GruRef gru_ref(const ParamTree& t, const std::string& prefix) {
    GruRef g;
    g.wz = prefix + "/wz";
    g.bz = prefix + "/bz";
    g.wr = prefix + "/wr";
    g.br = prefix + "/br";
    g.wn = prefix + "/wn";
    g.bn = prefix + "/bn";
    g.wz_idx = must_find(t, g.wz);
    g.bz_idx = must_find(t, g.bz);
    g.wr_idx = must_find(t, g.wr);
    g.br_idx = must_find(t, g.br);
    g.wn_idx = must_find(t, g.wn);
    g.bn_idx = must_find(t, g.bn);
    const auto& wze = t.entry(g.wz_idx);
    if (wze.shape.size() != 2) throw ConfigError("gru layer '" + prefix + "' has malformed weights");
    g.hidden_n = wze.shape[0];
    g.input_n = wze.shape[1] - g.hidden_n;
    if (g.input_n <= 0) throw ConfigError("gru layer '" + prefix + "' has malformed weights");
    for (int wi : {g.wz_idx, g.wr_idx, g.wn_idx}) {
        const auto& e = t.entry(wi);
        if (e.shape.size() != 2 || e.shape[0] != g.hidden_n || e.shape[1] != g.input_n + g.hidden_n) {
            throw ConfigError("gru layer '" + prefix + "' has inconsistent weight shapes");
        }
    }
    for (int bi : {g.bz_idx, g.br_idx, g.bn_idx}) {
        const auto& e = t.entry(bi);
        if (e.shape.size() != 1 || e.shape[0] != g.hidden_n) {
            throw ConfigError("gru layer '" + prefix + "' has inconsistent bias shapes");
        }
    }
    return g;
}

void dense_fwd(const ParamTree& t, const DenseRef& d, const double* x, double* out) {
    affine_fwd(resolve(t, d.w_idx, d.w).data.data(), resolve(t, d.b_idx, d.b).data.data(), x, out,
               d.out_n, d.in_n);
}

void gru_fwd(const ParamTree& t, const GruRef& g, const double* x, const double* h, double* h_next,
             std::vector<double>& scratch) {
    const int hn = g.hidden_n;
    const int in = g.input_n;
    const int cat_n = in + hn;
    scratch.resize(static_cast<size_t>(cat_n + 3 * hn));
    double* cat = scratch.data();
    double* z = cat + cat_n;
    double* r = z + hn;
    double* cand = r + hn;

    std::memcpy(cat, x, static_cast<size_t>(in) * sizeof(double));
    std::memcpy(cat + in, h, static_cast<size_t>(hn) * sizeof(double));
    affine_fwd(resolve(t, g.wz_idx, g.wz).data.data(), resolve(t, g.bz_idx, g.bz).data.data(), cat,
               z, hn, cat_n);
    for (int i = 0; i < hn; ++i) z[i] = sigmoid_val(z[i]);
    affine_fwd(resolve(t, g.wr_idx, g.wr).data.data(), resolve(t, g.br_idx, g.br).data.data(), cat,
               r, hn, cat_n);
    for (int i = 0; i < hn; ++i) r[i] = sigmoid_val(r[i]);
    for (int i = 0; i < hn; ++i) cat[in + i] = r[i] * h[i];
    affine_fwd(resolve(t, g.wn_idx, g.wn).data.data(), resolve(t, g.bn_idx, g.bn).data.data(), cat,
               cand, hn, cat_n);
    for (int i = 0; i < hn; ++i) cand[i] = std::tanh(cand[i]);
    // Mirrors the tape graph: (1 - z) * h computed first, z * n second.
    for (int i = 0; i < hn; ++i) {
        const double keep = (1.0 - z[i]) * h[i];
        const double take = z[i] * cand[i];
        h_next[i] = keep + take;
    }
}

Var dense(Tape& tape, int tree, const DenseRef& d, Var x) {
    return tape.affine(tape.param(tree, d.w), tape.param(tree, d.b), x);
}

Var gru(Tape& tape, int tree, const GruRef& g, Var x, Var h) {
    const std::array<Var, 2> xh{x, h};
    const Var cat = tape.concat(xh);
    const Var z = tape.sigmoid(tape.affine(tape.param(tree, g.wz), tape.param(tree, g.bz), cat));
    const Var r = tape.sigmoid(tape.affine(tape.param(tree, g.wr), tape.param(tree, g.br), cat));
    const Var rh = tape.mul(r, h);
    const std::array<Var, 2> xrh{x, rh};
    const Var cat2 = tape.concat(xrh);
    const Var cand = tape.tanh(tape.affine(tape.param(tree, g.wn), tape.param(tree, g.bn), cat2));
    return tape.add(tape.mul(tape.one_minus(z), h), tape.mul(z, cand));
}

} // namespace curio
