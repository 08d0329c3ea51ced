#include "hdkit/passes/passes.hpp"

#include <deque>
#include <map>

#include "hdkit/ir/validate.hpp"

namespace hdkit::passes {

namespace ir = hdkit::ir;
using ir::Node;
using ir::NodeKind;
using ir::OpTag;
using ir::Program;
using ir::StageTag;

namespace {

struct OpRef {
  Program* prog = nullptr;
  Node* node = nullptr;
  std::string path;  // path-qualified node id
};

// Flattened def-use view across stage/loop bodies. Values are identified by
// path-qualified keys and merged with union-find where a body binding and an
// outer port carry the same logical tensor.
struct FlatGraph {
  std::map<std::string, std::string> parent;
  std::map<std::string, OpRef> producer;                  // by representative? no: by raw key
  std::map<std::string, std::vector<OpRef>> consumers;    // by raw key
  std::map<std::string, std::vector<std::string>> members;  // rep -> raw keys
  std::vector<OpRef> all_ops;
  // raw input-binding keys -> (program, binding index)
  std::map<std::string, std::pair<Program*, std::size_t>> bindings;

  std::string find(const std::string& k) {
    auto it = parent.find(k);
    if (it == parent.end() || it->second == k) return k;
    std::string root = find(it->second);
    it->second = root;
    return root;
  }

  void unite(const std::string& a, const std::string& b) {
    std::string ra = find(a), rb = find(b);
    if (ra != rb) parent[ra] = rb;
  }

  void touch(const std::string& k) {
    if (parent.find(k) == parent.end()) parent[k] = k;
  }
};

std::string value_key(const std::string& path, const ir::InputSource& s) {
  if (s.external) return path + "in:" + s.input_name;
  return path + s.src.node;
}

void build_flat(FlatGraph& g, Program& p, const std::string& path) {
  for (std::size_t bi = 0; bi < p.inputs.size(); ++bi) {
    std::string k = path + "in:" + p.inputs[bi].name;
    g.touch(k);
    g.bindings[k] = {&p, bi};
  }
  for (Node& n : p.nodes) {
    OpRef ref{&p, &n, path + n.id};
    g.all_ops.push_back(ref);
    std::string out_key = path + n.id;
    g.touch(out_key);
    g.producer[out_key] = ref;
    std::vector<ir::InputSource> srcs = ir::resolve_inputs(p, n);
    for (const ir::InputSource& s : srcs) {
      std::string k = value_key(path, s);
      g.touch(k);
      g.consumers[k].push_back(ref);
    }
    if (n.body) {
      std::string body_path = path + n.id + "/";
      build_flat(g, *n.body, body_path);
      // unite body bindings with the outer values they carry
      auto unite_in = [&](const std::string& name, std::size_t port) {
        g.unite(body_path + "in:" + name, value_key(path, srcs.at(port)));
      };
      if (n.kind == NodeKind::StageLoop) {
        switch (n.stage) {
          case StageTag::Encoding:
            unite_in("sample", 0);
            unite_in("projection", 1);
            g.unite(body_path + n.body->find_output("encoded")->src.node, out_key);
            break;
          case StageTag::Inference:
            unite_in("query", 0);
            unite_in("classes", 1);
            unite_in("projection", 2);
            g.unite(body_path + n.body->find_output("label")->src.node, out_key);
            break;
          case StageTag::Training:
            unite_in("query", 0);
            unite_in("label", 1);
            unite_in("classes", 2);
            unite_in("projection", 3);
            // the classes state loops through every iteration: input, body
            // output, and stage output share one representation
            g.unite(body_path + n.body->find_output("classes")->src.node,
                    body_path + "in:classes");
            g.unite(body_path + "in:classes", out_key);
            break;
        }
      } else if (n.kind == NodeKind::ParallelLoop) {
        for (std::size_t i = 0; i < n.body->inputs.size(); ++i)
          unite_in(n.body->inputs[i].name, i);
        g.unite(body_path + n.body->find_output("out")->src.node, out_key);
      }
    }
  }
}

bool is_reduce_op(const Node& n) {
  return n.kind == NodeKind::Primitive && ir::is_reducing(n.op);
}

bool is_sign_node(const Node& n) {
  return n.kind == NodeKind::Primitive && n.op == OpTag::Sign;
}

}  // namespace

Program binarize(const Program& p, const BinarizeConfig& cfg, TaintState* taint_out) {
  if (!p.validated) throw Error("binarize requires a validated program");
  Program q(p);

  FlatGraph g;
  build_flat(g, q, "");

  // --- taint fixpoint (worklist seeded with every sign node) -----------------
  std::set<std::string> tainted_ops;
  std::set<std::string> tainted_values;  // representatives
  std::deque<OpRef> worklist;
  std::set<std::string> enqueued;
  for (const OpRef& op : g.all_ops)
    if (is_sign_node(*op.node)) {
      worklist.push_back(op);
      enqueued.insert(op.path);
    }

  auto values_of = [&](const OpRef& op, bool inputs, bool output) {
    std::vector<std::string> keys;
    std::string path = op.path.substr(0, op.path.rfind(op.node->id));
    if (inputs) {
      for (const ir::InputSource& s : ir::resolve_inputs(*op.prog, *op.node))
        keys.push_back(g.find(value_key(path, s)));
    }
    if (output) keys.push_back(g.find(op.path));
    return keys;
  };

  while (!worklist.empty()) {
    OpRef op = worklist.front();
    worklist.pop_front();
    tainted_ops.insert(op.path);

    bool taint_inputs = !is_reduce_op(*op.node) || cfg.binarize_reduce;
    for (const std::string& rep : values_of(op, taint_inputs, true)) {
      if (!tainted_values.insert(rep).second) continue;
      // enqueue every op touching any member of this value class
      for (const auto& [raw, root] : g.parent) {
        if (g.find(raw) != rep) continue;
        auto pit = g.producer.find(raw);
        if (pit != g.producer.end() && enqueued.insert(pit->second.path).second)
          worklist.push_back(pit->second);
        auto cit = g.consumers.find(raw);
        if (cit != g.consumers.end())
          for (const OpRef& c : cit->second)
            if (enqueued.insert(c.path).second) worklist.push_back(c);
      }
    }
  }

  if (taint_out != nullptr) {
    taint_out->tainted_ops = tainted_ops;
    taint_out->tainted_values.clear();
    for (const auto& [raw, root] : g.parent)
      if (tainted_values.count(g.find(raw)) != 0) taint_out->tainted_values.insert(raw);
  }

  // --- representation assignment ---------------------------------------------
  // rep element type per value class, from the rewrite rules
  std::map<std::string, ElementType> new_rep;
  std::deque<std::string> rep_work;

  auto assign = [&](const std::string& raw, ElementType ty) {
    std::string rep = g.find(raw);
    auto it = new_rep.find(rep);
    if (it != new_rep.end()) {
      if (it->second != ty)
        throw Error("binarize: conflicting representation targets for value '" + raw + "'");
      return;
    }
    new_rep[rep] = ty;
    rep_work.push_back(rep);
  };

  for (const OpRef& op : g.all_ops) {
    if (tainted_ops.count(op.path) == 0) continue;
    const Node& n = *op.node;
    if (n.kind != NodeKind::Primitive) {
      if (n.kind == NodeKind::LeafCompute || n.kind == NodeKind::ParallelLoop)
        throw Error("binarize: node " + op.path +
                    " is a lowered loop; binarize before lowering");
      continue;  // stage loops are containers, their bodies carry the ops
    }
    std::string path = op.path.substr(0, op.path.rfind(n.id));
    std::vector<ir::InputSource> srcs = ir::resolve_inputs(*op.prog, n);
    if (n.op == OpTag::Sign) {
      assign(op.path, cfg.binarized_ty);
    } else if (n.op == OpTag::Hamming || n.op == OpTag::CosSim) {
      // packed similarity kernel: both tensor operands take the binarized
      // representation (Hamming compares signs, so this is exact; cossim is
      // exact on sign-saturated data)
      for (int port = 0; port < 2; ++port)
        assign(value_key(path, srcs.at(static_cast<std::size_t>(port))), cfg.binarized_ty);
    } else if ((n.op == OpTag::MatMul || n.op == OpTag::L2Norm) && cfg.binarize_reduce) {
      for (const ir::InputSource& s : srcs)
        assign(value_key(path, s), cfg.effective_reduce_ty());
    }
  }

  // --- backward closure: producers must be able to emit the new rep ----------
  std::set<std::string> closed;
  while (!rep_work.empty()) {
    std::string rep = rep_work.front();
    rep_work.pop_front();
    if (!closed.insert(rep).second) continue;
    ElementType ty = new_rep.at(rep);
    for (const auto& [raw, root] : g.parent) {
      if (g.find(raw) != rep) continue;
      auto pit = g.producer.find(raw);
      if (pit == g.producer.end()) continue;
      Node& pn = *pit->second.node;
      std::string ppath = pit->second.path.substr(0, pit->second.path.rfind(pn.id));
      if (pn.kind != NodeKind::Primitive) continue;  // stage/loop outputs follow bodies
      switch (pn.op) {
        case OpTag::Sign:
          pn.out_elem_override = ty;  // sign absorbs the conversion
          break;
        case OpTag::Create:
        case OpTag::Random:
        case OpTag::Gaussian:
          pn.ty_param = ty;
          break;
        case OpTag::TypeCast:
          pn.ty_param = ty;
          break;
        case OpTag::SignFlip:
        case OpTag::Mul:
        case OpTag::WrapShift:
        case OpTag::Add:
        case OpTag::Sub:
        case OpTag::Div:
        case OpTag::Abs:
        case OpTag::CosineEw:
        case OpTag::GetMatrixRow:
        case OpTag::SetMatrixRow:
        case OpTag::Transpose: {
          // representation flows through; retarget the tensor operands
          std::vector<ir::InputSource> psrcs = ir::resolve_inputs(*pit->second.prog, pn);
          for (const ir::InputSource& s : psrcs) {
            if (s.type.rank == ir::ValueType::Rank::Scalar) continue;
            assign(value_key(ppath, s), ty);
          }
          break;
        }
        default:
          throw Error("binarize: node " + pit->second.path + " ('" +
                      std::string(ir::op_name(pn.op)) +
                      "') cannot produce a " + std::string(to_string(ty)) + " tensor");
      }
    }
  }

  // --- apply to bindings, check width rule ------------------------------------
  for (const auto& [raw, binding] : g.bindings) {
    std::string rep = g.find(raw);
    auto it = new_rep.find(rep);
    if (it == new_rep.end()) continue;
    ir::InputBinding& b = binding.first->inputs[binding.second];
    if (bit_width(it->second) > bit_width(b.type.elem))
      throw Error("binarize: input '" + b.name + "' would widen from " +
                  std::string(to_string(b.type.elem)) + " to " +
                  std::string(to_string(it->second)));
    b.type.elem = it->second;
  }

  // re-infer every edge/stage type, then make sure the result is executable
  try {
    ir::refresh_types(q);
    ir::validate(q);
  } catch (const Error& e) {
    throw Error(std::string("binarize: rewrite produced an invalid program (") + e.what() +
                "); a tainted op likely has no binarized variant");
  }
  return q;
}

namespace {

Node& descend(Program& p, const std::string& path) {
  std::size_t slash = path.find('/');
  if (slash == std::string::npos) return p.node_or_throw(path);
  Node& n = p.node_or_throw(path.substr(0, slash));
  if (!n.body) throw Error("node '" + path.substr(0, slash) + "' has no body to descend into");
  return descend(*n.body, path.substr(slash + 1));
}

const Node& descend_const(const Program& p, const std::string& path) {
  return descend(const_cast<Program&>(p), path);
}

}  // namespace

std::int64_t reduction_length_of(const Program& p, const std::string& node_path) {
  const Node& n = descend_const(p, node_path);
  if (n.kind != NodeKind::Primitive || !ir::is_reducing(n.op))
    throw Error("node '" + node_path + "' is not a reducing primitive");
  // reduction axis = dim of input 0 for hamming/cossim/l2norm/matmul alike;
  // find the enclosing program to resolve input types
  std::size_t slash = node_path.rfind('/');
  const Program* owner = &p;
  if (slash != std::string::npos) {
    const Node& host = descend_const(p, node_path.substr(0, slash));
    owner = host.body.get();
  }
  std::vector<ir::InputSource> srcs = ir::resolve_inputs(*owner, n);
  return srcs.at(0).type.dim;
}

Program attach_perforation(const Program& p, const std::string& node_path,
                           PerforationSpec spec) {
  if (!p.validated) throw Error("attach_perforation requires a validated program");
  Program q(p);
  Node& n = descend(q, node_path);
  if (n.kind != NodeKind::Primitive || !ir::is_reducing(n.op))
    throw Error("perforation target '" + node_path + "' is not a reducing primitive");
  n.perforation = spec;
  ir::validate(q);  // range legality against the reduction length
  return q;
}

}  // namespace hdkit::passes
