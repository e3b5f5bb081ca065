#pragma once

#include <iosfwd>
#include <string>

#include "curio/param_tree.hpp"

namespace curio {

// Flat binary checkpoint format for parameter trees:
//   magic "CURIOCK1", u32 version,
//   u64 entry count, then per entry:
//   u32 name length, name bytes, u32 rank, u64 dims[rank], f64 values.
// All integers and floats little-endian.

void save_checkpoint(const ParamTree& tree, std::ostream& out);
void save_checkpoint(const ParamTree& tree, const std::string& path);

ParamTree load_checkpoint(std::istream& in);
ParamTree load_checkpoint(const std::string& path);

} // namespace curio
