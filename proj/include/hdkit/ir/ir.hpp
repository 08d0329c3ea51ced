#pragma once

// Freestanding dataflow IR for HDC programs: primitive nodes mirroring the
// hypervector op set, generic parallel loops over a scalar-expression leaf,
// and coarse stage loops (encoding/training/inference over a dataset) that
// accelerator backends can execute natively. A Program is a DAG; edges carry
// logical tensor transfers annotated with shape and element type.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hdkit/perforation.hpp"
#include "hdkit/tensor.hpp"

namespace hdkit::ir {

enum class OpTag : std::uint8_t {
  Create, Random, Gaussian,
  WrapShift, Sign, SignFlip, Abs, CosineEw, TypeCast,
  Add, Sub, Mul, Div,
  L2Norm, GetElement, ArgMin, ArgMax,
  SetMatrixRow, GetMatrixRow, Transpose,
  CosSim, Hamming, MatMul,
};

std::string_view op_name(OpTag op);
OpTag op_from_name(std::string_view name);

// Reducing ops are the legal red_perf targets.
bool is_reducing(OpTag op);
// Element-wise ops propagate binarization taint into both inputs and output.
bool is_elementwise(OpTag op);
int op_arity(OpTag op);

enum class NodeKind : std::uint8_t { Primitive, ParallelLoop, StageLoop, LeafCompute };
enum class StageTag : std::uint8_t { Encoding, Training, Inference };
enum class SimilarityTag : std::uint8_t { Cosine, Hamming };

std::string_view stage_name(StageTag s);

// Shape + element type of a value on an edge or binding.
struct ValueType {
  enum class Rank : std::uint8_t { Scalar, Vector, Matrix };
  Rank rank = Rank::Scalar;
  ElementType elem = ElementType::F64;
  std::int64_t rows = 0;  // Matrix only
  std::int64_t dim = 0;   // Vector/Matrix

  static ValueType scalar(ElementType e) { return {Rank::Scalar, e, 0, 0}; }
  static ValueType vector(ElementType e, std::int64_t d) { return {Rank::Vector, e, 0, d}; }
  static ValueType matrix(ElementType e, std::int64_t r, std::int64_t d) {
    return {Rank::Matrix, e, r, d};
  }

  std::int64_t element_count() const {
    switch (rank) {
      case Rank::Scalar: return 1;
      case Rank::Vector: return dim;
      case Rank::Matrix: return rows * dim;
    }
    return 0;
  }

  std::string str() const;
  bool operator==(const ValueType&) const = default;
};

ValueType value_type_from_string(std::string_view shape, std::string_view elem);

struct PortRef {
  std::string node;
  int port = 0;
  bool operator==(const PortRef&) const = default;
  auto operator<=>(const PortRef&) const = default;
};

struct Edge {
  PortRef src;
  PortRef dst;
  ValueType type;
  bool operator==(const Edge&) const = default;
};

// Scalar expression body of a LeafCompute node. Evaluation promotes through
// {int64, double}: loads from integer/Bin1 tensors yield int64, floats yield
// double, comparisons yield int64 0/1, Reduce sums its body over the
// reduction index in ascending order.
struct Expr {
  enum class Kind : std::uint8_t {
    ConstInt, ConstFloat,
    LoopIdx,  // the parallel-loop instance index
    RedIdx,   // the enclosing Reduce index
    Load,     // input port `port`, indexed by 0 (scalar), 1 (vector) or 2 (matrix) args
    Neg, Abs, Cos, Sqrt, SignOf,
    Add, Sub, Mul, Div, Mod,
    Eq, Ne, Lt,
    SignNe,   // 1 when the operands' signs differ (zero counts as +1)
    Select,   // args: cond, then, else
    Reduce,   // sum of args[0] for red = lo, lo+stride, ... < hi
  };

  Kind kind = Kind::ConstInt;
  std::int64_t ival = 0;
  double fval = 0.0;
  int port = 0;
  std::int64_t lo = 0, hi = 0, stride = 1;
  std::vector<Expr> args;

  static Expr cint(std::int64_t v) { Expr e; e.kind = Kind::ConstInt; e.ival = v; return e; }
  static Expr cfloat(double v) { Expr e; e.kind = Kind::ConstFloat; e.fval = v; return e; }
  static Expr loop_idx() { Expr e; e.kind = Kind::LoopIdx; return e; }
  static Expr red_idx() { Expr e; e.kind = Kind::RedIdx; return e; }
  static Expr load(int port, std::vector<Expr> idx = {}) {
    Expr e; e.kind = Kind::Load; e.port = port; e.args = std::move(idx); return e;
  }
  static Expr unary(Kind k, Expr a) { Expr e; e.kind = k; e.args = {std::move(a)}; return e; }
  static Expr binary(Kind k, Expr a, Expr b) {
    Expr e; e.kind = k; e.args = {std::move(a), std::move(b)}; return e;
  }
  static Expr select(Expr c, Expr t, Expr f) {
    Expr e; e.kind = Kind::Select; e.args = {std::move(c), std::move(t), std::move(f)};
    return e;
  }
  static Expr reduce(std::int64_t lo, std::int64_t hi, std::int64_t stride, Expr body) {
    Expr e; e.kind = Kind::Reduce; e.lo = lo; e.hi = hi; e.stride = stride;
    e.args = {std::move(body)};
    return e;
  }

  bool operator==(const Expr&) const = default;
};

struct Program;

// Algorithm the stage body implements, declared by the builder. The
// accelerator backend trusts these tags to decide native execution instead
// of pattern-matching the body.
struct StageAlgo {
  SimilarityTag similarity = SimilarityTag::Hamming;
  bool random_projection = true;
  bool operator==(const StageAlgo&) const = default;
};

struct Node {
  std::string id;
  NodeKind kind = NodeKind::Primitive;

  // Primitive
  OpTag op = OpTag::Create;
  std::vector<std::int64_t> iparams;  // shift / row / col / shape params
  double fparam = 0.0;                // const fill value for create
  ElementType ty_param = ElementType::F64;  // create elem / type_cast target
  // Binarization retarget: a sign node with this set emits the packed (or
  // narrowed) representation instead of its input's element type.
  std::optional<ElementType> out_elem_override;

  // ParallelLoop
  std::int64_t trip = 0;

  // StageLoop
  StageTag stage = StageTag::Inference;
  StageAlgo algo;
  std::int64_t epochs = 0;  // retrain passes after the one-shot pass

  // ParallelLoop / StageLoop body
  std::unique_ptr<Program> body;

  // LeafCompute
  Expr expr;

  // ParallelLoop / LeafCompute declared output
  ValueType out_type;

  std::optional<PerforationSpec> perforation;
  std::optional<std::string> target_hint;

  Node() = default;
  Node(const Node& other);
  Node& operator=(const Node& other);
  Node(Node&&) = default;
  Node& operator=(Node&&) = default;

  bool operator==(const Node& other) const;
};

struct InputBinding {
  std::string name;
  ValueType type;
  std::vector<PortRef> dsts;
  bool operator==(const InputBinding&) const = default;
};

struct OutputBinding {
  std::string name;
  PortRef src;
  bool operator==(const OutputBinding&) const = default;
};

struct Program {
  std::vector<Node> nodes;
  std::vector<Edge> edges;
  std::vector<InputBinding> inputs;
  std::vector<OutputBinding> outputs;
  std::map<std::string, std::string> attributes;

  // Set by validate(); cleared by any structural mutation helper.
  bool validated = false;

  const Node* find_node(std::string_view id) const;
  Node* find_node(std::string_view id);
  const Node& node_or_throw(std::string_view id) const;
  Node& node_or_throw(std::string_view id);

  const InputBinding* find_input(std::string_view name) const;
  InputBinding* find_input(std::string_view name);
  const OutputBinding* find_output(std::string_view name) const;

  std::uint64_t seed() const;

  bool operator==(const Program& other) const;
};

// Structural deep equality including bodies (used by round-trip tests).
bool structurally_equal(const Program& a, const Program& b);

}  // namespace hdkit::ir
