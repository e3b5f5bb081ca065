#pragma once

// Dense and GRU layers expressed two ways over the same parameter entries:
// as tape subgraphs for training and as plain forwards for acting. Both
// paths call the identical kernels in the identical order, so an action
// sampled during collection is reproduced bit for bit when the same inputs
// flow through the tape.

#include <string>
#include <vector>

#include "curio/param_tree.hpp"
#include "curio/tape.hpp"

namespace curio {

struct DenseRef {
    std::string w, b;
    int w_idx = -1, b_idx = -1;
    int out_n = 0, in_n = 0;
};

struct GruRef {
    std::string wz, bz, wr, br, wn, bn;
    int wz_idx = -1, bz_idx = -1, wr_idx = -1, br_idx = -1, wn_idx = -1, bn_idx = -1;
    int hidden_n = 0, input_n = 0;
};

// Allocate entries "<prefix>/w" {out,in} and "<prefix>/b" {out}.
void add_dense(ParamTree& t, const std::string& prefix, int out_n, int in_n);

// Allocate the three gate pairs "<prefix>/wz".."<prefix>/bn". Each weight is
// {hidden, input+hidden}; the candidate gate sees the reset-scaled state.
void add_gru(ParamTree& t, const std::string& prefix, int hidden_n, int input_n);

// Resolve prefixes against a tree, validating shapes. Entry indices are
// positional, so a ref resolved on one tree applies to any congruent tree.
DenseRef dense_ref(const ParamTree& t, const std::string& prefix);
GruRef gru_ref(const ParamTree& t, const std::string& prefix);

// Plain forwards. gru_fwd reads h and writes h_next; they may not alias.
void dense_fwd(const ParamTree& t, const DenseRef& d, const double* x, double* out);
void gru_fwd(const ParamTree& t, const GruRef& g, const double* x, const double* h, double* h_next,
             std::vector<double>& scratch);

// Tape builders producing the same arithmetic as the plain forwards.
Var dense(Tape& tape, int tree, const DenseRef& d, Var x);
Var gru(Tape& tape, int tree, const GruRef& g, Var x, Var h);

} // namespace curio
