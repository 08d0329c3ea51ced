#include "hdkit/ir/builder.hpp"

namespace hdkit::ir {

Builder::Builder(std::uint64_t seed) {
  prog_.attributes["seed"] = std::to_string(seed);
}

std::string Builder::fresh(std::string_view base) {
  int n = counters_[std::string(base)]++;
  return std::string(base) + std::to_string(n);
}

std::string Builder::input(const std::string& name, ValueType type) {
  if (types_.count(name) != 0) throw Error("handle '" + name + "' already defined");
  prog_.inputs.push_back(InputBinding{name, type, {}});
  types_[name] = type;
  return name;
}

const ValueType& Builder::type_of(const std::string& handle) const {
  auto it = types_.find(handle);
  if (it == types_.end()) throw Error("unknown value handle '" + handle + "'");
  return it->second;
}

void Builder::connect(const std::string& operand, const std::string& node, int port) {
  if (prog_.find_input(operand) != nullptr) {
    prog_.find_input(operand)->dsts.push_back(PortRef{node, port});
    return;
  }
  if (prog_.find_node(operand) == nullptr)
    throw Error("unknown value handle '" + operand + "'");
  prog_.edges.push_back(Edge{{operand, 0}, {node, port}, type_of(operand)});
}

std::string Builder::push(Node n, const std::vector<std::string>& operands) {
  if (spent_) throw Error("builder already built");
  std::vector<ValueType> in;
  in.reserve(operands.size());
  for (const std::string& h : operands) in.push_back(type_of(h));
  ValueType out = infer_output_type(n, in);  // arity misuse fails here
  std::string id = n.id;
  for (std::size_t i = 0; i < operands.size(); ++i)
    connect(operands[i], id, static_cast<int>(i));
  types_[id] = out;
  prog_.nodes.push_back(std::move(n));
  return id;
}

namespace {
Node make(std::string id, OpTag op) {
  Node n;
  n.id = std::move(id);
  n.kind = NodeKind::Primitive;
  n.op = op;
  return n;
}
}  // namespace

std::string Builder::create_hypervector(std::int64_t dim, ElementType elem, double fill) {
  Node n = make(fresh("create"), OpTag::Create);
  n.iparams = {dim};
  n.ty_param = elem;
  n.fparam = fill;
  return push(std::move(n), {});
}

std::string Builder::create_hypermatrix(std::int64_t rows, std::int64_t dim,
                                        ElementType elem, double fill) {
  Node n = make(fresh("create"), OpTag::Create);
  n.iparams = {rows, dim};
  n.ty_param = elem;
  n.fparam = fill;
  return push(std::move(n), {});
}

std::string Builder::random_hypervector(std::int64_t dim, ElementType elem) {
  Node n = make(fresh("random"), OpTag::Random);
  n.iparams = {dim};
  n.ty_param = elem;
  return push(std::move(n), {});
}

std::string Builder::random_hypermatrix(std::int64_t rows, std::int64_t dim,
                                        ElementType elem) {
  Node n = make(fresh("random"), OpTag::Random);
  n.iparams = {rows, dim};
  n.ty_param = elem;
  return push(std::move(n), {});
}

std::string Builder::gaussian_hypervector(std::int64_t dim, ElementType elem) {
  Node n = make(fresh("gaussian"), OpTag::Gaussian);
  n.iparams = {dim};
  n.ty_param = elem;
  return push(std::move(n), {});
}

std::string Builder::gaussian_hypermatrix(std::int64_t rows, std::int64_t dim,
                                          ElementType elem) {
  Node n = make(fresh("gaussian"), OpTag::Gaussian);
  n.iparams = {rows, dim};
  n.ty_param = elem;
  return push(std::move(n), {});
}

std::string Builder::wrap_shift(const std::string& v, std::int64_t shift) {
  Node n = make(fresh("wrap_shift"), OpTag::WrapShift);
  n.iparams = {shift};
  return push(std::move(n), {v});
}

std::string Builder::sign(const std::string& x) {
  return push(make(fresh("sign"), OpTag::Sign), {x});
}
std::string Builder::sign_flip(const std::string& x) {
  return push(make(fresh("sign_flip"), OpTag::SignFlip), {x});
}
std::string Builder::absolute_value(const std::string& x) {
  return push(make(fresh("absolute_value"), OpTag::Abs), {x});
}
std::string Builder::cosine(const std::string& x) {
  return push(make(fresh("cosine"), OpTag::CosineEw), {x});
}
std::string Builder::add(const std::string& a, const std::string& b) {
  return push(make(fresh("add"), OpTag::Add), {a, b});
}
std::string Builder::sub(const std::string& a, const std::string& b) {
  return push(make(fresh("sub"), OpTag::Sub), {a, b});
}
std::string Builder::mul(const std::string& a, const std::string& b) {
  return push(make(fresh("mul"), OpTag::Mul), {a, b});
}
std::string Builder::div(const std::string& a, const std::string& b) {
  return push(make(fresh("div"), OpTag::Div), {a, b});
}
std::string Builder::l2norm(const std::string& x) {
  return push(make(fresh("l2norm"), OpTag::L2Norm), {x});
}

std::string Builder::get_element(const std::string& x, std::int64_t row, std::int64_t col) {
  Node n = make(fresh("get_element"), OpTag::GetElement);
  if (type_of(x).rank == ValueType::Rank::Matrix)
    n.iparams = {row, col};
  else
    n.iparams = {row};
  return push(std::move(n), {x});
}

std::string Builder::type_cast(const std::string& x, ElementType to) {
  Node n = make(fresh("type_cast"), OpTag::TypeCast);
  n.ty_param = to;
  return push(std::move(n), {x});
}

std::string Builder::arg_min(const std::string& x) {
  return push(make(fresh("arg_min"), OpTag::ArgMin), {x});
}
std::string Builder::arg_max(const std::string& x) {
  return push(make(fresh("arg_max"), OpTag::ArgMax), {x});
}
std::string Builder::matrix_transpose(const std::string& m) {
  return push(make(fresh("matrix_transpose"), OpTag::Transpose), {m});
}

std::string Builder::get_matrix_row(const std::string& m, std::int64_t row) {
  Node n = make(fresh("get_matrix_row"), OpTag::GetMatrixRow);
  n.iparams = {row};
  return push(std::move(n), {m});
}

std::string Builder::get_matrix_row(const std::string& m, const std::string& row_idx) {
  Node n = make(fresh("get_matrix_row"), OpTag::GetMatrixRow);
  n.iparams = {-1};
  return push(std::move(n), {m, row_idx});
}

std::string Builder::set_matrix_row(const std::string& m, const std::string& v,
                                    std::int64_t row) {
  Node n = make(fresh("set_matrix_row"), OpTag::SetMatrixRow);
  n.iparams = {row};
  return push(std::move(n), {m, v});
}

std::string Builder::set_matrix_row(const std::string& m, const std::string& v,
                                    const std::string& row_idx) {
  Node n = make(fresh("set_matrix_row"), OpTag::SetMatrixRow);
  n.iparams = {-1};
  return push(std::move(n), {m, v, row_idx});
}

std::string Builder::cossim(const std::string& a, const std::string& b) {
  return push(make(fresh("cossim"), OpTag::CosSim), {a, b});
}
std::string Builder::hamming_distance(const std::string& a, const std::string& b) {
  return push(make(fresh("hamming_distance"), OpTag::Hamming), {a, b});
}
std::string Builder::matmul(const std::string& a, const std::string& b) {
  return push(make(fresh("matmul"), OpTag::MatMul), {a, b});
}

void Builder::red_perf(const std::string& result, std::int64_t begin, std::int64_t end,
                       std::int64_t stride) {
  Node& n = prog_.node_or_throw(result);
  if (n.kind != NodeKind::Primitive || !is_reducing(n.op))
    throw Error("red_perf target '" + result + "' is not a reducing primitive");
  n.perforation = PerforationSpec{begin, end, stride};
}

std::string Builder::encoding_loop(Program body, const std::string& queries,
                                   const std::string& projection, StageAlgo algo) {
  Node n;
  n.id = fresh("encoding_loop");
  n.kind = NodeKind::StageLoop;
  n.stage = StageTag::Encoding;
  n.algo = algo;
  n.body = std::make_unique<Program>(std::move(body));
  return push(std::move(n), {queries, projection});
}

std::string Builder::inference_loop(Program body, const std::string& queries,
                                    const std::string& classes,
                                    const std::string& projection, StageAlgo algo) {
  Node n;
  n.id = fresh("inference_loop");
  n.kind = NodeKind::StageLoop;
  n.stage = StageTag::Inference;
  n.algo = algo;
  n.body = std::make_unique<Program>(std::move(body));
  return push(std::move(n), {queries, classes, projection});
}

std::string Builder::training_loop(Program body, const std::string& queries,
                                   const std::string& labels, const std::string& classes,
                                   const std::string& projection, std::int64_t epochs,
                                   StageAlgo algo) {
  Node n;
  n.id = fresh("training_loop");
  n.kind = NodeKind::StageLoop;
  n.stage = StageTag::Training;
  n.algo = algo;
  n.epochs = epochs;
  n.body = std::make_unique<Program>(std::move(body));
  return push(std::move(n), {queries, labels, classes, projection});
}

std::string Builder::parallel_loop(Program body, std::int64_t trip, ValueType out,
                                   const std::vector<std::string>& operands) {
  Node n;
  n.id = fresh("loop");
  n.kind = NodeKind::ParallelLoop;
  n.trip = trip;
  n.out_type = out;
  n.body = std::make_unique<Program>(std::move(body));
  return push(std::move(n), operands);
}

std::string Builder::leaf(Expr expr, ValueType out, const std::vector<std::string>& operands) {
  Node n;
  n.id = fresh("leaf");
  n.kind = NodeKind::LeafCompute;
  n.expr = std::move(expr);
  n.out_type = out;
  return push(std::move(n), operands);
}

void Builder::output(const std::string& name, const std::string& value) {
  if (prog_.find_node(value) == nullptr)
    throw Error("output '" + name + "' must reference a node, got '" + value + "'");
  prog_.outputs.push_back(OutputBinding{name, PortRef{value, 0}});
}

void Builder::attr(const std::string& key, const std::string& value) {
  prog_.attributes[key] = value;
}

Program Builder::build() {
  if (spent_) throw Error("builder already built");
  spent_ = true;
  Program p = std::move(prog_);
  validate(p);
  return p;
}

}  // namespace hdkit::ir
