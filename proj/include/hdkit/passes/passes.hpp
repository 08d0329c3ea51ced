#pragma once

#include <set>

#include "hdkit/ir/ir.hpp"

namespace hdkit::passes {

// Automatic binarization. Seeds a worklist with every sign node, propagates
// taint over the def-use graph (through stage and loop bodies): element-wise
// ops taint their inputs and output, reducing ops taint only their output by
// default, or inputs too when binarize_reduce is set. Tainted ops are then
// rewritten to binarized variants: sign emits binarized_ty, the similarity
// reductions (hamming_distance, cossim) take both tensor operands in
// binarized_ty, matmul/l2norm operands retarget to reduce_ty only under
// binarize_reduce, and scalar reduction results (counts, similarities,
// products) keep their accumulator precision. External inputs feeding a
// retargeted operand change their declared representation; callers provide
// packed/cast tensors (allocation shrinkage happens at that boundary).
struct BinarizeConfig {
  ElementType binarized_ty = ElementType::Bin1;
  bool binarize_reduce = false;
  // representation for reduce-op operands under binarize_reduce
  // (e.g. i32 feature casts); defaults to binarized_ty
  std::optional<ElementType> reduce_ty;

  ElementType effective_reduce_ty() const { return reduce_ty.value_or(binarized_ty); }
};

// Taint fixpoint result; node ids and value keys are path-qualified
// ("stage0/sign0", "in:classes", "stage0/in:query").
struct TaintState {
  std::set<std::string> tainted_ops;
  std::set<std::string> tainted_values;
};

// Returns the rewritten, validated program. Throws (leaving the input
// untouched) when a tainted op has no variant at the target width, naming
// the node.
ir::Program binarize(const ir::Program& p, const BinarizeConfig& cfg,
                     TaintState* taint_out = nullptr);

// Attach a perforation spec to a reducing node. `node_path` may descend into
// stage/loop bodies with '/' (e.g. "inference_loop0/hamming_distance0").
// Returns a new validated program.
ir::Program attach_perforation(const ir::Program& p, const std::string& node_path,
                               PerforationSpec spec);

// Reduction-axis length of the node at `node_path` (for resolving symbolic
// perforation extents like D/2 against the right axis).
std::int64_t reduction_length_of(const ir::Program& p, const std::string& node_path);

}  // namespace hdkit::passes
