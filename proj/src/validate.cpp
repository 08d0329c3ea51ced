#include "hdkit/ir/validate.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace hdkit::ir {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw Error(msg); }

std::string port_str(const PortRef& p) { return p.node + ":" + std::to_string(p.port); }

bool uses_dynamic_index(const Node& n) {
  return !n.iparams.empty() && n.iparams[0] < 0;
}

int leaf_arity(const Expr& e) {
  int max_port = -1;
  if (e.kind == Expr::Kind::Load) max_port = e.port;
  for (const Expr& a : e.args) max_port = std::max(max_port, leaf_arity(a) - 1);
  return max_port + 1;
}

void check_expr(const Node& n, const Expr& e, const std::vector<ValueType>& in,
                bool inside_reduce) {
  using K = Expr::Kind;
  switch (e.kind) {
    case K::RedIdx:
      if (!inside_reduce)
        fail("node " + n.id + ": red index used outside a reduce");
      break;
    case K::Load: {
      if (e.port < 0 || e.port >= static_cast<int>(in.size()))
        fail("node " + n.id + ": load from unbound port " + std::to_string(e.port));
      const ValueType& t = in[static_cast<std::size_t>(e.port)];
      std::size_t want = t.rank == ValueType::Rank::Scalar   ? 0
                         : t.rank == ValueType::Rank::Vector ? 1
                                                             : 2;
      if (e.args.size() != want)
        fail("node " + n.id + ": load expects " + std::to_string(want) +
             " indices for " + t.str());
      break;
    }
    case K::Reduce:
      if (inside_reduce) fail("node " + n.id + ": nested reduce not supported");
      if (e.lo < 0 || e.lo >= e.hi || e.stride < 1)
        fail("node " + n.id + ": bad reduce bounds");
      break;
    default:
      break;
  }
  for (const Expr& a : e.args)
    check_expr(n, a, in, inside_reduce || e.kind == K::Reduce);
}

ValueType shape_from_params(const Node& n) {
  if (n.iparams.size() == 1) return ValueType::vector(n.ty_param, n.iparams[0]);
  if (n.iparams.size() == 2)
    return ValueType::matrix(n.ty_param, n.iparams[0], n.iparams[1]);
  fail("node " + n.id + ": constructor needs dim or rows,dim params");
}

void require_same_elem(const Node& n, const ValueType& a, const ValueType& b) {
  if (a.elem != b.elem)
    fail("node " + n.id + ": element type mismatch (" + a.str() + " vs " + b.str() +
         "); use type_cast first");
}

ValueType infer_primitive(const Node& n, const std::vector<ValueType>& in) {
  auto arg = [&](std::size_t i) -> const ValueType& {
    if (i >= in.size()) fail("node " + n.id + ": missing input " + std::to_string(i));
    return in[i];
  };
  auto is_vec = [](const ValueType& t) { return t.rank == ValueType::Rank::Vector; };
  auto is_mat = [](const ValueType& t) { return t.rank == ValueType::Rank::Matrix; };
  auto is_scal = [](const ValueType& t) { return t.rank == ValueType::Rank::Scalar; };

  switch (n.op) {
    case OpTag::Create:
    case OpTag::Random:
    case OpTag::Gaussian: {
      ValueType t = shape_from_params(n);
      if (t.dim <= 0 || (t.rank == ValueType::Rank::Matrix && t.rows <= 0))
        fail("node " + n.id + ": non-positive shape");
      return t;
    }
    case OpTag::WrapShift: {
      const ValueType& a = arg(0);
      if (!is_vec(a)) fail("node " + n.id + ": wrap_shift expects a hypervector");
      return a;
    }
    case OpTag::Sign: {
      ValueType t = arg(0);
      if (is_scal(t)) fail("node " + n.id + ": sign expects a tensor");
      t.elem = n.out_elem_override.value_or(t.elem);
      return t;
    }
    case OpTag::SignFlip: {
      ValueType t = arg(0);
      if (is_scal(t)) fail("node " + n.id + ": sign_flip expects a tensor");
      return t;
    }
    case OpTag::Abs: {
      ValueType t = arg(0);
      if (t.elem == ElementType::Bin1)
        fail("node " + n.id + ": absolute_value has no binarized variant");
      return t;
    }
    case OpTag::CosineEw: {
      ValueType t = arg(0);
      if (!is_float(t.elem))
        fail("node " + n.id + ": cosine requires a floating element type");
      return t;
    }
    case OpTag::TypeCast: {
      ValueType t = arg(0);
      t.elem = n.ty_param;
      return t;
    }
    case OpTag::Add:
    case OpTag::Sub:
    case OpTag::Mul:
    case OpTag::Div: {
      const ValueType& a = arg(0);
      const ValueType& b = arg(1);
      if (a != b)
        fail("node " + n.id + ": operand mismatch (" + a.str() + " vs " + b.str() + ")");
      if (a.elem == ElementType::Bin1 && n.op != OpTag::Mul)
        fail("node " + n.id + ": only mul has a binarized variant");
      return a;
    }
    case OpTag::L2Norm: {
      const ValueType& a = arg(0);
      if (is_vec(a)) return ValueType::scalar(ElementType::F64);
      if (is_mat(a)) return ValueType::vector(ElementType::F64, a.rows);
      fail("node " + n.id + ": l2norm expects a tensor");
    }
    case OpTag::GetElement: {
      const ValueType& a = arg(0);
      if (is_vec(a)) {
        if (n.iparams.size() != 1 || n.iparams[0] < 0 || n.iparams[0] >= a.dim)
          fail("node " + n.id + ": index out of range");
      } else if (is_mat(a)) {
        if (n.iparams.size() != 2 || n.iparams[0] < 0 || n.iparams[0] >= a.rows ||
            n.iparams[1] < 0 || n.iparams[1] >= a.dim)
          fail("node " + n.id + ": index out of range");
      } else {
        fail("node " + n.id + ": get_element expects a tensor");
      }
      return ValueType::scalar(a.elem);
    }
    case OpTag::ArgMin:
    case OpTag::ArgMax: {
      const ValueType& a = arg(0);
      if (is_vec(a)) return ValueType::scalar(ElementType::I64);
      if (is_mat(a)) return ValueType::vector(ElementType::I64, a.rows);
      fail("node " + n.id + ": arg_min/arg_max expects a tensor");
    }
    case OpTag::SetMatrixRow: {
      const ValueType& m = arg(0);
      const ValueType& v = arg(1);
      if (!is_mat(m) || !is_vec(v))
        fail("node " + n.id + ": set_matrix_row expects (matrix, vector)");
      if (v.dim != m.dim) fail("node " + n.id + ": row length mismatch");
      require_same_elem(n, m, v);
      if (uses_dynamic_index(n)) {
        const ValueType& idx = arg(2);
        if (!is_scal(idx) || is_float(idx.elem))
          fail("node " + n.id + ": dynamic row index must be an integer scalar");
      } else if (n.iparams.empty() || n.iparams[0] >= m.rows) {
        fail("node " + n.id + ": row index out of range");
      }
      return m;
    }
    case OpTag::GetMatrixRow: {
      const ValueType& m = arg(0);
      if (!is_mat(m)) fail("node " + n.id + ": get_matrix_row expects a matrix");
      if (uses_dynamic_index(n)) {
        const ValueType& idx = arg(1);
        if (!is_scal(idx) || is_float(idx.elem))
          fail("node " + n.id + ": dynamic row index must be an integer scalar");
      } else if (n.iparams.empty() || n.iparams[0] >= m.rows) {
        fail("node " + n.id + ": row index out of range");
      }
      return ValueType::vector(m.elem, m.dim);
    }
    case OpTag::Transpose: {
      const ValueType& m = arg(0);
      if (!is_mat(m)) fail("node " + n.id + ": matrix_transpose expects a matrix");
      return ValueType::matrix(m.elem, m.dim, m.rows);
    }
    case OpTag::CosSim:
    case OpTag::Hamming: {
      const ValueType& a = arg(0);
      const ValueType& b = arg(1);
      require_same_elem(n, a, b);
      if (a.dim != b.dim)
        fail("node " + n.id + ": dim mismatch (" + a.str() + " vs " + b.str() + ")");
      ElementType out =
          n.op == OpTag::Hamming ? ElementType::I64 : ElementType::F64;
      if (is_vec(a) && is_vec(b)) return ValueType::scalar(out);
      if (is_vec(a) && is_mat(b)) return ValueType::vector(out, b.rows);
      if (is_mat(a) && is_mat(b)) return ValueType::matrix(out, a.rows, b.rows);
      fail("node " + n.id + ": unsupported operand ranks");
    }
    case OpTag::MatMul: {
      const ValueType& a = arg(0);
      const ValueType& b = arg(1);
      require_same_elem(n, a, b);
      if (b.rank != ValueType::Rank::Matrix)
        fail("node " + n.id + ": matmul rhs must be a hypermatrix");
      std::int64_t inner = is_vec(a) ? a.dim : a.dim;
      if (!is_vec(a) && !is_mat(a))
        fail("node " + n.id + ": matmul lhs must be a tensor");
      if (inner != b.rows)
        fail("node " + n.id + ": inner dimension mismatch (" + a.str() + " x " +
             b.str() + ")");
      ElementType out = a.elem == ElementType::Bin1 ? ElementType::I64 : a.elem;
      if (is_vec(a)) return ValueType::vector(out, b.dim);
      return ValueType::matrix(out, a.rows, b.dim);
    }
  }
  fail("node " + n.id + ": unhandled op");
}

std::int64_t reduction_length(const Node& n, const std::vector<ValueType>& in) {
  switch (n.op) {
    case OpTag::Hamming:
    case OpTag::CosSim:
    case OpTag::L2Norm:
    case OpTag::MatMul:
      return in.at(0).dim;
    default:
      fail("node " + n.id + ": perforation on non-reducing op '" +
           std::string(op_name(n.op)) + "'");
  }
}

struct StagePortSpec {
  std::vector<std::string> body_inputs;
  std::string body_output;
};

const StagePortSpec& stage_spec(StageTag s) {
  static const StagePortSpec encoding{{"sample", "projection"}, "encoded"};
  static const StagePortSpec inference{{"query", "classes", "projection"}, "label"};
  static const StagePortSpec training{
      {"query", "label", "classes", "projection", "epoch"}, "classes"};
  switch (s) {
    case StageTag::Encoding: return encoding;
    case StageTag::Inference: return inference;
    case StageTag::Training: return training;
  }
  fail("bad stage tag");
}

// Expected body-input types given the stage node's input types.
std::vector<ValueType> stage_body_input_types(const Node& n,
                                              const std::vector<ValueType>& in) {
  auto mat = [&](std::size_t i, const char* what) {
    const ValueType& t = in.at(i);
    if (t.rank != ValueType::Rank::Matrix)
      fail("node " + n.id + ": stage input " + what + " must be a hypermatrix");
    return t;
  };
  switch (n.stage) {
    case StageTag::Encoding: {
      ValueType queries = mat(0, "queries");
      ValueType proj = mat(1, "projection");
      return {ValueType::vector(queries.elem, queries.dim), proj};
    }
    case StageTag::Inference: {
      ValueType queries = mat(0, "queries");
      ValueType classes = mat(1, "classes");
      ValueType proj = mat(2, "projection");
      return {ValueType::vector(queries.elem, queries.dim), classes, proj};
    }
    case StageTag::Training: {
      ValueType queries = mat(0, "queries");
      const ValueType& labels = in.at(1);
      if (labels.rank != ValueType::Rank::Vector || is_float(labels.elem))
        fail("node " + n.id + ": labels must be an integer vector");
      if (labels.dim != queries.rows)
        fail("node " + n.id + ": one label per query row required");
      ValueType classes = mat(2, "classes");
      ValueType proj = mat(3, "projection");
      return {ValueType::vector(queries.elem, queries.dim),
              ValueType::scalar(labels.elem), classes, proj,
              ValueType::scalar(ElementType::I64)};
    }
  }
  fail("bad stage tag");
}

ValueType infer_stage_output(const Node& n, const std::vector<ValueType>& in,
                             const ValueType& body_out) {
  switch (n.stage) {
    case StageTag::Encoding: {
      if (body_out.rank != ValueType::Rank::Vector)
        fail("node " + n.id + ": encoding body must produce a hypervector");
      return ValueType::matrix(body_out.elem, in.at(0).rows, body_out.dim);
    }
    case StageTag::Inference: {
      if (body_out.rank != ValueType::Rank::Scalar || is_float(body_out.elem))
        fail("node " + n.id + ": inference body must produce an integer label");
      return ValueType::vector(ElementType::I64, in.at(0).rows);
    }
    case StageTag::Training: {
      if (body_out != in.at(2))
        fail("node " + n.id + ": training body must return the classes matrix type");
      return in.at(2);
    }
  }
  fail("bad stage tag");
}

}  // namespace

int node_arity(const Node& n) {
  switch (n.kind) {
    case NodeKind::Primitive:
      if (n.op == OpTag::SetMatrixRow) return uses_dynamic_index(n) ? 3 : 2;
      if (n.op == OpTag::GetMatrixRow) return uses_dynamic_index(n) ? 2 : 1;
      return op_arity(n.op);
    case NodeKind::ParallelLoop:
      return n.body ? static_cast<int>(n.body->inputs.size()) : 0;
    case NodeKind::StageLoop:
      switch (n.stage) {
        case StageTag::Encoding: return 2;
        case StageTag::Inference: return 3;
        case StageTag::Training: return 4;
      }
      return 0;
    case NodeKind::LeafCompute:
      return leaf_arity(n.expr);
  }
  return 0;
}

std::vector<InputSource> resolve_inputs(const Program& p, const Node& n) {
  std::vector<InputSource> srcs(static_cast<std::size_t>(node_arity(n)));
  std::vector<bool> seen(srcs.size(), false);
  auto claim = [&](int port, InputSource s) {
    if (port < 0 || port >= static_cast<int>(srcs.size()))
      fail("node " + n.id + ": port " + std::to_string(port) + " does not exist");
    if (seen[static_cast<std::size_t>(port)])
      fail("node " + n.id + ": port " + std::to_string(port) + " bound twice");
    seen[static_cast<std::size_t>(port)] = true;
    srcs[static_cast<std::size_t>(port)] = std::move(s);
  };
  for (const Edge& e : p.edges)
    if (e.dst.node == n.id)
      claim(e.dst.port, InputSource{false, "", e.src, e.type});
  for (const InputBinding& b : p.inputs)
    for (const PortRef& d : b.dsts)
      if (d.node == n.id) claim(d.port, InputSource{true, b.name, {}, b.type});
  for (std::size_t i = 0; i < seen.size(); ++i)
    if (!seen[i])
      fail("node " + n.id + ": input port " + std::to_string(i) +
           " has no incoming edge or binding");
  return srcs;
}

ValueType infer_output_type(const Node& n, const std::vector<ValueType>& in) {
  switch (n.kind) {
    case NodeKind::Primitive:
      return infer_primitive(n, in);
    case NodeKind::ParallelLoop: {
      if (!n.body) fail("node " + n.id + ": parallel loop without a body");
      if (n.out_type.rank == ValueType::Rank::Scalar || n.trip <= 0)
        fail("node " + n.id + ": parallel loop needs a tensor out type and trip > 0");
      if (n.trip != n.out_type.element_count())
        fail("node " + n.id + ": trip count must equal output element count");
      return n.out_type;
    }
    case NodeKind::StageLoop: {
      if (!n.body) fail("node " + n.id + ": stage loop without a body");
      const StagePortSpec& spec = stage_spec(n.stage);
      const OutputBinding* out = n.body->find_output(spec.body_output);
      if (out == nullptr)
        fail("node " + n.id + ": stage body must bind output '" + spec.body_output + "'");
      const Node* src = n.body->find_node(out->src.node);
      if (src == nullptr) fail("node " + n.id + ": dangling body output");
      std::vector<ValueType> body_in;
      for (const auto& b : n.body->inputs) body_in.push_back(b.type);
      // body output type: recompute via the body's own inference
      std::vector<ValueType> src_in;
      for (const InputSource& s : resolve_inputs(*n.body, *src)) src_in.push_back(s.type);
      ValueType body_out = infer_output_type(*src, src_in);
      return infer_stage_output(n, in, body_out);
    }
    case NodeKind::LeafCompute: {
      if (n.out_type.rank != ValueType::Rank::Scalar)
        fail("node " + n.id + ": leaf output must be scalar");
      return n.out_type;
    }
  }
  fail("node " + n.id + ": bad node kind");
}

namespace {

void validate_impl(Program& p, int depth);

void validate_node_local(Node& n, const std::vector<ValueType>& in, int depth) {
  if (n.kind == NodeKind::LeafCompute) check_expr(n, n.expr, in, false);

  if (n.perforation.has_value()) {
    if (n.kind != NodeKind::Primitive || !is_reducing(n.op))
      fail("node " + n.id + ": perforation may only annotate reducing primitives");
    n.perforation->validate(reduction_length(n, in));
  }

  if (n.kind == NodeKind::ParallelLoop) {
    for (const Node& c : n.body->nodes)
      if (c.body != nullptr)
        fail("node " + n.id + ": parallel loop bodies must not nest further subgraphs");
    validate_impl(*n.body, depth + 1);
    if (n.body->inputs.size() != in.size())
      fail("node " + n.id + ": body input count mismatch");
    for (std::size_t i = 0; i < in.size(); ++i) {
      const InputBinding& b = n.body->inputs[i];
      if (b.name != "in" + std::to_string(i))
        fail("node " + n.id + ": loop body inputs must be named in0..inN in order");
      if (b.type != in[i])
        fail("node " + n.id + ": body input " + b.name + " expects " + b.type.str() +
             " but port carries " + in[i].str());
    }
    const OutputBinding* out = n.body->find_output("out");
    if (out == nullptr) fail("node " + n.id + ": loop body must bind output 'out'");
  }

  if (n.kind == NodeKind::StageLoop) {
    if (depth != 0) fail("node " + n.id + ": stage loops may appear only at top level");
    validate_impl(*n.body, depth + 1);
    const StagePortSpec& spec = stage_spec(n.stage);
    std::vector<ValueType> want = stage_body_input_types(n, in);
    if (n.body->inputs.size() != spec.body_inputs.size())
      fail("node " + n.id + ": stage body must bind exactly " +
           std::to_string(spec.body_inputs.size()) + " inputs");
    for (std::size_t i = 0; i < spec.body_inputs.size(); ++i) {
      const InputBinding* b = n.body->find_input(spec.body_inputs[i]);
      if (b == nullptr)
        fail("node " + n.id + ": stage body missing input '" + spec.body_inputs[i] + "'");
      if (b->type != want[i])
        fail("node " + n.id + ": stage body input '" + spec.body_inputs[i] +
             "' expects " + want[i].str() + " but signature requires " + b->type.str());
    }
    if (n.stage == StageTag::Training && n.epochs < 0)
      fail("node " + n.id + ": negative epochs");
  }
}

std::vector<std::string> topo_order(const Program& p) {
  std::map<std::string, int> indegree;
  std::map<std::string, std::set<std::string>> succs;
  for (const Node& n : p.nodes) indegree[n.id];  // ensure present
  for (const Edge& e : p.edges)
    if (succs[e.src.node].insert(e.dst.node).second) ++indegree[e.dst.node];

  std::set<std::string> ready;
  for (const auto& [id, deg] : indegree)
    if (deg == 0) ready.insert(id);

  std::vector<std::string> order;
  while (!ready.empty()) {
    std::string id = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(id);
    for (const std::string& s : succs[id])
      if (--indegree[s] == 0) ready.insert(s);
  }
  if (order.size() != p.nodes.size())
    fail("cycle detected: program is not a DAG");
  return order;
}

void validate_impl(Program& p, int depth) {
  // unique ids and names
  std::set<std::string> ids;
  for (const Node& n : p.nodes)
    if (!ids.insert(n.id).second) fail("duplicate node id '" + n.id + "'");
  std::set<std::string> names;
  for (const auto& b : p.inputs) {
    if (!names.insert(b.name).second) fail("duplicate input binding '" + b.name + "'");
    if (b.dsts.empty()) fail("input '" + b.name + "' is bound to no port");
  }
  names.clear();
  for (const auto& b : p.outputs)
    if (!names.insert(b.name).second) fail("duplicate output binding '" + b.name + "'");

  // edge sanity
  for (const Edge& e : p.edges) {
    if (p.find_node(e.src.node) == nullptr)
      fail("edge " + port_str(e.src) + " -> " + port_str(e.dst) + ": unknown source node");
    if (p.find_node(e.dst.node) == nullptr)
      fail("edge " + port_str(e.src) + " -> " + port_str(e.dst) + ": unknown target node");
    if (e.src.node == e.dst.node)
      fail("edge " + port_str(e.src) + " -> " + port_str(e.dst) + ": self-loop");
    if (e.src.port != 0)
      fail("edge " + port_str(e.src) + ": nodes have a single output port 0");
  }
  for (const auto& b : p.inputs)
    for (const PortRef& d : b.dsts)
      if (p.find_node(d.node) == nullptr)
        fail("input '" + b.name + "' targets unknown node " + d.node);
  for (const auto& b : p.outputs)
    if (p.find_node(b.src.node) == nullptr)
      fail("output '" + b.name + "' reads unknown node " + b.src.node);

  std::vector<std::string> order = topo_order(p);

  // type inference in topological order; edges must agree with producers
  std::map<std::string, ValueType> out_types;
  for (const std::string& id : order) {
    Node& n = p.node_or_throw(id);
    std::vector<InputSource> srcs = resolve_inputs(p, n);
    std::vector<ValueType> in;
    in.reserve(srcs.size());
    std::string from;
    for (std::size_t port = 0; port < srcs.size(); ++port) {
      const InputSource& s = srcs[port];
      if (!s.external) {
        auto it = out_types.find(s.src.node);
        if (it == out_types.end()) fail("internal error: topological order broken");
        if (it->second != s.type)
          fail("edge " + port_str(s.src) + " -> " + id + ":" + std::to_string(port) +
               ": producer " + s.src.node + " yields " + it->second.str() +
               " but edge declares " + s.type.str());
        from += (from.empty() ? "" : ", ") + s.src.node;
      } else {
        from += (from.empty() ? "" : ", ") + ("input '" + s.input_name + "'");
      }
      in.push_back(s.type);
    }
    validate_node_local(n, in, depth);
    try {
      out_types[id] = infer_output_type(n, in);
    } catch (const Error& e) {
      if (from.empty()) throw;
      throw Error(std::string(e.what()) + " (operands from: " + from + ")");
    }
  }

  for (const auto& b : p.outputs) {
    if (b.src.port != 0) fail("output '" + b.name + "': nodes expose port 0 only");
    (void)out_types.at(b.src.node);
  }

  p.validated = true;
}

}  // namespace

void validate(Program& p) {
  p.validated = false;
  validate_impl(p, 0);
}

void refresh_types(Program& p) {
  std::vector<std::string> order = topo_order(p);
  std::map<std::string, ValueType> out_types;
  for (const std::string& id : order) {
    Node& n = p.node_or_throw(id);
    if (n.body) refresh_types(*n.body);
    // bindings keep their declared types; edges take the producer's type
    std::vector<ValueType> in(static_cast<std::size_t>(node_arity(n)));
    for (Edge& e : p.edges)
      if (e.dst.node == id) {
        e.type = out_types.at(e.src.node);
        in[static_cast<std::size_t>(e.dst.port)] = e.type;
      }
    for (const InputBinding& b : p.inputs)
      for (const PortRef& d : b.dsts)
        if (d.node == id) in[static_cast<std::size_t>(d.port)] = b.type;
    out_types[id] = infer_output_type(n, in);
  }
  p.validated = false;
}

std::vector<std::string> schedule(const Program& p) {
  if (!p.validated) throw Error("schedule requires a validated program");
  return topo_order(p);
}

}  // namespace hdkit::ir
