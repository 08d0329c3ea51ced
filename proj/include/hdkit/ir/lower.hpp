#pragma once

#include "hdkit/ir/ir.hpp"

namespace hdkit::ir {

// Expand one primitive node into the equivalent two-deep loop nest: a
// ParallelLoop over the output elements whose body is a single LeafCompute
// (reducing ops carry the inner reduction as a reduce expression; an attached
// perforation spec is baked into its bounds and scaling). Scalar-result
// reductions lower to a standalone leaf. Supported for all reducing and
// element-wise ops; structural ops (transpose, indexing, arg extrema) are
// not loop-expandable and throw.
Program lower_primitive_to_loops(const Program& p, const std::string& node_id);

bool is_loop_expandable(const Node& n);

}  // namespace hdkit::ir
