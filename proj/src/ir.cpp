#include "hdkit/ir/ir.hpp"

#include <array>
#include <charconv>

namespace hdkit::ir {

namespace {

struct OpInfo {
  OpTag tag;
  std::string_view name;
  int arity;
  bool reducing;
  bool elementwise;
};

constexpr std::array<OpInfo, 23> kOps{{
    {OpTag::Create, "create", 0, false, false},
    {OpTag::Random, "random", 0, false, false},
    {OpTag::Gaussian, "gaussian", 0, false, false},
    {OpTag::WrapShift, "wrap_shift", 1, false, true},
    {OpTag::Sign, "sign", 1, false, true},
    {OpTag::SignFlip, "sign_flip", 1, false, true},
    {OpTag::Abs, "absolute_value", 1, false, true},
    {OpTag::CosineEw, "cosine", 1, false, true},
    {OpTag::TypeCast, "type_cast", 1, false, true},
    {OpTag::Add, "add", 2, false, true},
    {OpTag::Sub, "sub", 2, false, true},
    {OpTag::Mul, "mul", 2, false, true},
    {OpTag::Div, "div", 2, false, true},
    {OpTag::L2Norm, "l2norm", 1, true, false},
    {OpTag::GetElement, "get_element", 1, false, false},
    {OpTag::ArgMin, "arg_min", 1, false, false},
    {OpTag::ArgMax, "arg_max", 1, false, false},
    {OpTag::SetMatrixRow, "set_matrix_row", 2, false, false},  // +1 dynamic index port
    {OpTag::GetMatrixRow, "get_matrix_row", 1, false, false},  // +1 dynamic index port
    {OpTag::Transpose, "matrix_transpose", 1, false, false},
    {OpTag::CosSim, "cossim", 2, true, false},
    {OpTag::Hamming, "hamming_distance", 2, true, false},
    {OpTag::MatMul, "matmul", 2, true, false},
}};

const OpInfo& info(OpTag op) { return kOps[static_cast<std::size_t>(op)]; }

}  // namespace

std::string_view op_name(OpTag op) { return info(op).name; }

OpTag op_from_name(std::string_view name) {
  for (const auto& o : kOps)
    if (o.name == name) return o.tag;
  throw Error("unknown op tag '" + std::string(name) + "'");
}

bool is_reducing(OpTag op) { return info(op).reducing; }
bool is_elementwise(OpTag op) { return info(op).elementwise; }
int op_arity(OpTag op) { return info(op).arity; }

std::string_view stage_name(StageTag s) {
  switch (s) {
    case StageTag::Encoding: return "encoding";
    case StageTag::Training: return "training";
    case StageTag::Inference: return "inference";
  }
  return "?";
}

std::string ValueType::str() const {
  switch (rank) {
    case Rank::Scalar: return std::string("scalar ") + std::string(to_string(elem));
    case Rank::Vector:
      return "vec:" + std::to_string(dim) + " " + std::string(to_string(elem));
    case Rank::Matrix:
      return "mat:" + std::to_string(rows) + "x" + std::to_string(dim) + " " +
             std::string(to_string(elem));
  }
  return "?";
}

ValueType value_type_from_string(std::string_view shape, std::string_view elem) {
  ElementType e = element_type_from_string(elem);
  if (shape == "scalar") return ValueType::scalar(e);
  auto parse_i64 = [](std::string_view s) {
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
      throw Error("bad shape number '" + std::string(s) + "'");
    return v;
  };
  if (shape.starts_with("vec:")) return ValueType::vector(e, parse_i64(shape.substr(4)));
  if (shape.starts_with("mat:")) {
    std::string_view body = shape.substr(4);
    std::size_t x = body.find('x');
    if (x == std::string_view::npos) throw Error("bad matrix shape '" + std::string(shape) + "'");
    return ValueType::matrix(e, parse_i64(body.substr(0, x)), parse_i64(body.substr(x + 1)));
  }
  throw Error("bad shape '" + std::string(shape) + "'");
}

Node::Node(const Node& other)
    : id(other.id),
      kind(other.kind),
      op(other.op),
      iparams(other.iparams),
      fparam(other.fparam),
      ty_param(other.ty_param),
      out_elem_override(other.out_elem_override),
      trip(other.trip),
      stage(other.stage),
      algo(other.algo),
      epochs(other.epochs),
      body(other.body ? std::make_unique<Program>(*other.body) : nullptr),
      expr(other.expr),
      out_type(other.out_type),
      perforation(other.perforation),
      target_hint(other.target_hint) {}

Node& Node::operator=(const Node& other) {
  if (this == &other) return *this;
  Node copy(other);
  *this = std::move(copy);
  return *this;
}

bool Node::operator==(const Node& other) const {
  bool bodies_equal = (body == nullptr && other.body == nullptr) ||
                      (body != nullptr && other.body != nullptr && *body == *other.body);
  return id == other.id && kind == other.kind && op == other.op &&
         iparams == other.iparams && fparam == other.fparam &&
         ty_param == other.ty_param && out_elem_override == other.out_elem_override &&
         trip == other.trip && stage == other.stage &&
         algo == other.algo && epochs == other.epochs && bodies_equal &&
         expr == other.expr && out_type == other.out_type &&
         perforation == other.perforation && target_hint == other.target_hint;
}

const Node* Program::find_node(std::string_view id) const {
  for (const Node& n : nodes)
    if (n.id == id) return &n;
  return nullptr;
}

Node* Program::find_node(std::string_view id) {
  for (Node& n : nodes)
    if (n.id == id) return &n;
  return nullptr;
}

const Node& Program::node_or_throw(std::string_view id) const {
  const Node* n = find_node(id);
  if (n == nullptr) throw Error("no node named '" + std::string(id) + "'");
  return *n;
}

Node& Program::node_or_throw(std::string_view id) {
  Node* n = find_node(id);
  if (n == nullptr) throw Error("no node named '" + std::string(id) + "'");
  return *n;
}

const InputBinding* Program::find_input(std::string_view name) const {
  for (const auto& b : inputs)
    if (b.name == name) return &b;
  return nullptr;
}

InputBinding* Program::find_input(std::string_view name) {
  for (auto& b : inputs)
    if (b.name == name) return &b;
  return nullptr;
}

const OutputBinding* Program::find_output(std::string_view name) const {
  for (const auto& b : outputs)
    if (b.name == name) return &b;
  return nullptr;
}

std::uint64_t Program::seed() const {
  auto it = attributes.find("seed");
  if (it == attributes.end()) return 0;
  return static_cast<std::uint64_t>(std::stoull(it->second));
}

bool Program::operator==(const Program& other) const {
  return nodes == other.nodes && edges == other.edges && inputs == other.inputs &&
         outputs == other.outputs && attributes == other.attributes;
}

bool structurally_equal(const Program& a, const Program& b) { return a == b; }

}  // namespace hdkit::ir
