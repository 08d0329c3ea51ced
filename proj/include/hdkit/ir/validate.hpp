#pragma once

#include <vector>

#include "hdkit/ir/ir.hpp"

namespace hdkit::ir {

// Where a node input port gets its value from.
struct InputSource {
  bool external = false;
  std::string input_name;  // when external
  PortRef src;             // when internal (src.port is always 0)
  ValueType type;
};

// Number of input ports a node exposes (includes optional dynamic-index
// ports on get/set_matrix_row).
int node_arity(const Node& n);

// Resolve every input port of `n` inside `p`. Validation guarantees each
// port has exactly one source.
std::vector<InputSource> resolve_inputs(const Program& p, const Node& n);

// Output type of a node given its input types. Throws on illegal input
// combinations (the core of shape/type checking).
ValueType infer_output_type(const Node& n, const std::vector<ValueType>& in);

// Full structural check: DAG-ness, port coverage, shape/type consistency on
// every edge, perforation legality, stage-body signature conformance,
// leaf-expression well-formedness. Recurses into loop and stage bodies.
// On success marks the program (and bodies) executable.
void validate(Program& p);

// Recompute every edge/binding-derived type annotation from node outputs in
// topological order. Used by passes after retargeting representations.
void refresh_types(Program& p);

// Deterministic topological order (Kahn, lexicographic node-id tiebreak).
// Requires a validated program.
std::vector<std::string> schedule(const Program& p);

}  // namespace hdkit::ir
