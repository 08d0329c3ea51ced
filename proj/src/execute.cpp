#include "hdkit/backend/execute.hpp"

#include <chrono>
#include <sstream>

#include "hdkit/ir/validate.hpp"
#include "hdkit/ops.hpp"
#include "hdkit/par.hpp"

namespace hdkit::backend {

namespace ir = hdkit::ir;
using ir::NodeKind;
using ir::OpTag;
using ir::StageTag;
using ir::ValueType;

BackendTag backend_from_string(std::string_view s) {
  if (s == "interp") return BackendTag::Interp;
  if (s == "cpu") return BackendTag::CpuParallel;
  if (s == "accel-sim") return BackendTag::AccelSim;
  throw Error("unknown backend '" + std::string(s) + "' (interp, cpu, accel-sim)");
}

std::string_view to_string(BackendTag t) {
  switch (t) {
    case BackendTag::Interp: return "interp";
    case BackendTag::CpuParallel: return "cpu";
    case BackendTag::AccelSim: return "accel-sim";
  }
  return "?";
}

namespace {

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

// --- leaf expression evaluation ----------------------------------------------

using LeafVal = std::variant<std::int64_t, double>;

double as_f(const LeafVal& v) {
  return std::holds_alternative<double>(v) ? std::get<double>(v)
                                           : static_cast<double>(std::get<std::int64_t>(v));
}
std::int64_t as_i(const LeafVal& v) {
  return std::holds_alternative<std::int64_t>(v)
             ? std::get<std::int64_t>(v)
             : saturate_cast<std::int64_t>(std::get<double>(v));
}
bool both_int(const LeafVal& a, const LeafVal& b) {
  return std::holds_alternative<std::int64_t>(a) && std::holds_alternative<std::int64_t>(b);
}

struct LeafCtx {
  const std::vector<const Value*>& in;
  std::int64_t loop_idx = 0;
  std::int64_t red_idx = 0;
};

LeafVal eval_expr(const ir::Expr& e, LeafCtx& ctx) {
  using K = ir::Expr::Kind;
  switch (e.kind) {
    case K::ConstInt: return e.ival;
    case K::ConstFloat: return e.fval;
    case K::LoopIdx: return ctx.loop_idx;
    case K::RedIdx: return ctx.red_idx;
    case K::Load: {
      const Value& v = *ctx.in.at(static_cast<std::size_t>(e.port));
      if (v.is_scalar()) {
        const Scalar& s = v.scalar();
        if (s.holds_int()) return s.as_int();
        return s.as_double();
      }
      if (v.is_vector()) {
        std::int64_t i = as_i(eval_expr(e.args[0], ctx));
        if (i < 0 || i >= v.vector().dim()) throw Error("leaf load index out of range");
        if (is_float(v.vector().elem())) return v.vector().get_as_double(i);
        return v.vector().get_as_int(i);
      }
      std::int64_t r = as_i(eval_expr(e.args[0], ctx));
      std::int64_t c = as_i(eval_expr(e.args[1], ctx));
      if (r < 0 || r >= v.matrix().rows() || c < 0 || c >= v.matrix().dim())
        throw Error("leaf load index out of range");
      if (is_float(v.matrix().elem())) return v.matrix().get_as_double(r, c);
      return v.matrix().get_as_int(r, c);
    }
    case K::Neg: {
      LeafVal a = eval_expr(e.args[0], ctx);
      if (std::holds_alternative<std::int64_t>(a)) return -std::get<std::int64_t>(a);
      return -std::get<double>(a);
    }
    case K::Abs: {
      LeafVal a = eval_expr(e.args[0], ctx);
      if (std::holds_alternative<std::int64_t>(a)) return std::abs(std::get<std::int64_t>(a));
      return std::abs(std::get<double>(a));
    }
    case K::Cos: return std::cos(as_f(eval_expr(e.args[0], ctx)));
    case K::Sqrt: return std::sqrt(as_f(eval_expr(e.args[0], ctx)));
    case K::SignOf: {
      LeafVal a = eval_expr(e.args[0], ctx);
      bool plus = std::holds_alternative<std::int64_t>(a)
                      ? std::get<std::int64_t>(a) >= 0
                      : std::get<double>(a) >= 0.0;
      if (std::holds_alternative<std::int64_t>(a)) return static_cast<std::int64_t>(plus ? 1 : -1);
      return plus ? 1.0 : -1.0;
    }
    case K::Add: case K::Sub: case K::Mul: case K::Div: case K::Mod: {
      LeafVal a = eval_expr(e.args[0], ctx);
      LeafVal b = eval_expr(e.args[1], ctx);
      if (both_int(a, b)) {
        std::int64_t x = std::get<std::int64_t>(a), y = std::get<std::int64_t>(b);
        switch (e.kind) {
          case K::Add: return x + y;
          case K::Sub: return x - y;
          case K::Mul: return x * y;
          case K::Div:
            if (y == 0) throw Error("leaf integer division by zero");
            return x / y;
          case K::Mod:
            if (y == 0) throw Error("leaf integer modulo by zero");
            return x % y;
          default: break;
        }
      }
      double x = as_f(a), y = as_f(b);
      switch (e.kind) {
        case K::Add: return x + y;
        case K::Sub: return x - y;
        case K::Mul: return x * y;
        case K::Div: return x / y;  // IEEE
        case K::Mod: throw Error("leaf mod requires integer operands");
        default: break;
      }
      return 0.0;
    }
    case K::Eq: case K::Ne: case K::Lt: {
      LeafVal a = eval_expr(e.args[0], ctx);
      LeafVal b = eval_expr(e.args[1], ctx);
      bool res;
      if (both_int(a, b)) {
        std::int64_t x = std::get<std::int64_t>(a), y = std::get<std::int64_t>(b);
        res = e.kind == K::Eq ? x == y : e.kind == K::Ne ? x != y : x < y;
      } else {
        double x = as_f(a), y = as_f(b);
        res = e.kind == K::Eq ? x == y : e.kind == K::Ne ? x != y : x < y;
      }
      return static_cast<std::int64_t>(res ? 1 : 0);
    }
    case K::SignNe: {
      LeafVal a = eval_expr(e.args[0], ctx);
      LeafVal b = eval_expr(e.args[1], ctx);
      auto plus = [](const LeafVal& v) {
        return std::holds_alternative<std::int64_t>(v) ? std::get<std::int64_t>(v) >= 0
                                                       : std::get<double>(v) >= 0.0;
      };
      return static_cast<std::int64_t>(plus(a) != plus(b) ? 1 : 0);
    }
    case K::Select: {
      LeafVal c = eval_expr(e.args[0], ctx);
      bool cond = std::holds_alternative<std::int64_t>(c) ? std::get<std::int64_t>(c) != 0
                                                          : std::get<double>(c) != 0.0;
      return eval_expr(e.args[cond ? 1 : 2], ctx);
    }
    case K::Reduce: {
      bool first = true;
      LeafVal acc = std::int64_t{0};
      for (std::int64_t r = e.lo; r < e.hi; r += e.stride) {
        ctx.red_idx = r;
        LeafVal t = eval_expr(e.args[0], ctx);
        if (first) {
          acc = t;
          first = false;
        } else if (both_int(acc, t)) {
          acc = std::get<std::int64_t>(acc) + std::get<std::int64_t>(t);
        } else {
          acc = as_f(acc) + as_f(t);
        }
      }
      return acc;
    }
  }
  throw Error("bad leaf expression");
}

void store_leaf(Hypervector& out, std::int64_t i, const LeafVal& v) {
  if (std::holds_alternative<std::int64_t>(v))
    out.set_from_int(i, std::get<std::int64_t>(v));
  else
    out.set_from_double(i, std::get<double>(v));
}

void store_leaf(Hypermatrix& out, std::int64_t r, std::int64_t c, const LeafVal& v) {
  if (std::holds_alternative<std::int64_t>(v))
    out.set_from_int(r, c, std::get<std::int64_t>(v));
  else
    out.set_from_double(r, c, std::get<double>(v));
}

Scalar scalar_of(const LeafVal& v, ElementType elem) {
  if (std::holds_alternative<std::int64_t>(v)) return Scalar::of_int(as_i(v), elem);
  if (is_float(elem)) return Scalar::of_double(std::get<double>(v), elem);
  return Scalar::of_int(as_i(v), elem);
}

// --- engine --------------------------------------------------------------------

class Engine {
 public:
  Engine(BackendTag backend, std::uint64_t seed, const AccelProfile* profile)
      : backend_(backend), seed_(seed) {
    if (backend_ == BackendTag::AccelSim)
      device_.emplace(profile != nullptr ? *profile : AccelProfile{});
  }

  std::map<std::string, Value> run_program(const ir::Program& p,
                                           const std::map<std::string, Value>& inputs,
                                           std::int64_t loop_idx = 0);

  std::optional<AccelDevice> device_;
  std::vector<BufferMove> moves_;
  bool used_accel_ = false;

 private:
  Value exec_node(const ir::Program& p, const ir::Node& n,
                  const std::vector<const Value*>& in, std::int64_t loop_idx);
  Value exec_primitive(const ir::Node& n, const std::vector<const Value*>& in);
  Value exec_parallel_loop(const ir::Node& n, const std::vector<const Value*>& in);
  Value exec_stage_host(const ir::Node& n, const std::vector<const Value*>& in);
  Value exec_stage_accel(const ir::Node& n, const std::vector<const Value*>& in);

  bool parallel() const { return backend_ == BackendTag::CpuParallel; }

  BackendTag backend_;
  std::uint64_t seed_;
};

std::map<std::string, Value> Engine::run_program(const ir::Program& p,
                                                 const std::map<std::string, Value>& inputs,
                                                 std::int64_t loop_idx) {
  for (const auto& b : p.inputs) {
    auto it = inputs.find(b.name);
    if (it == inputs.end()) throw Error("missing input binding '" + b.name + "'");
    ValueType got = it->second.type();
    if (got != b.type)
      throw Error("input '" + b.name + "' expects " + b.type.str() + " but got " + got.str());
  }

  std::map<std::string, Value> env;
  for (const std::string& id : ir::schedule(p)) {
    const ir::Node& n = p.node_or_throw(id);
    std::vector<ir::InputSource> srcs = ir::resolve_inputs(p, n);
    std::vector<const Value*> in;
    in.reserve(srcs.size());
    for (const ir::InputSource& s : srcs) {
      if (s.external)
        in.push_back(&inputs.at(s.input_name));
      else
        in.push_back(&env.at(s.src.node));
    }
    env[id] = exec_node(p, n, in, loop_idx);
  }

  std::map<std::string, Value> out;
  for (const auto& b : p.outputs) out[b.name] = env.at(b.src.node);
  return out;
}

Value Engine::exec_node(const ir::Program& p, const ir::Node& n,
                        const std::vector<const Value*>& in, std::int64_t loop_idx) {
  (void)p;
  switch (n.kind) {
    case NodeKind::Primitive:
      return exec_primitive(n, in);
    case NodeKind::ParallelLoop:
      return exec_parallel_loop(n, in);
    case NodeKind::StageLoop: {
      bool host_hint = n.target_hint.has_value() && *n.target_hint == "host";
      if (backend_ == BackendTag::AccelSim && !host_hint) {
        bool native = n.algo.random_projection &&
                      (n.stage == StageTag::Encoding ||
                       n.algo.similarity == ir::SimilarityTag::Hamming);
        if (native) return exec_stage_accel(n, in);
      }
      return exec_stage_host(n, in);
    }
    case NodeKind::LeafCompute: {
      LeafCtx ctx{in, loop_idx, 0};
      return Value(scalar_of(eval_expr(n.expr, ctx), n.out_type.elem));
    }
  }
  throw Error("bad node kind");
}

Value Engine::exec_primitive(const ir::Node& n, const std::vector<const Value*>& in) {
  bool cpu = parallel();
  auto perf = n.perforation;
  auto vec = [&](std::size_t i) -> const Hypervector& { return in.at(i)->vector(); };
  auto mat = [&](std::size_t i) -> const Hypermatrix& { return in.at(i)->matrix(); };

  switch (n.op) {
    case OpTag::Create: {
      double fill = n.fparam;
      if (n.iparams.size() == 2) {
        if (fill == 0.0) return Value(ops::create_matrix(n.iparams[0], n.iparams[1], n.ty_param));
        return Value(ops::create_matrix(n.iparams[0], n.iparams[1], n.ty_param,
                                        [fill](std::int64_t, std::int64_t) { return fill; }));
      }
      if (fill == 0.0) return Value(ops::create(n.iparams.at(0), n.ty_param));
      return Value(ops::create(n.iparams.at(0), n.ty_param, [fill](std::int64_t) { return fill; }));
    }
    case OpTag::Random:
    case OpTag::Gaussian: {
      std::uint64_t node_seed = CounterRng::mix(seed_ ^ fnv1a64(n.id));
      bool gauss = n.op == OpTag::Gaussian;
      if (n.iparams.size() == 2) {
        return Value(gauss ? ops::gaussian_hm(n.iparams[0], n.iparams[1], n.ty_param, node_seed)
                           : ops::random_hm(n.iparams[0], n.iparams[1], n.ty_param, node_seed));
      }
      return Value(gauss ? ops::gaussian_hv(n.iparams.at(0), n.ty_param, node_seed)
                         : ops::random_hv(n.iparams.at(0), n.ty_param, node_seed));
    }
    case OpTag::WrapShift:
      return Value(ops::wrap_shift(vec(0), n.iparams.at(0)));
    case OpTag::Sign: {
      ElementType target = n.out_elem_override.value_or(
          in.at(0)->is_vector() ? vec(0).elem() : mat(0).elem());
      if (in.at(0)->is_vector()) {
        if (target == ElementType::Bin1) return Value(ops::sign_packed(vec(0)));
        Hypervector s = ops::sign(vec(0));
        return Value(target == s.elem() ? std::move(s) : ops::type_cast(s, target));
      }
      if (target == ElementType::Bin1)
        return Value(cpu ? par::sign_packed(mat(0)) : ops::sign_packed(mat(0)));
      Hypermatrix s = cpu ? par::sign(mat(0)) : ops::sign(mat(0));
      if (target == s.elem()) return Value(std::move(s));
      return Value(cpu ? par::type_cast(s, target) : ops::type_cast(s, target));
    }
    case OpTag::SignFlip:
      if (in.at(0)->is_vector()) return Value(ops::sign_flip(vec(0)));
      return Value(ops::sign_flip(mat(0)));
    case OpTag::Abs:
      if (in.at(0)->is_vector()) return Value(ops::absolute_value(vec(0)));
      return Value(ops::absolute_value(mat(0)));
    case OpTag::CosineEw:
      if (in.at(0)->is_vector()) return Value(ops::cosine(vec(0)));
      return Value(ops::cosine(mat(0)));
    case OpTag::TypeCast:
      if (in.at(0)->is_vector()) return Value(ops::type_cast(vec(0), n.ty_param));
      return Value(cpu ? par::type_cast(mat(0), n.ty_param) : ops::type_cast(mat(0), n.ty_param));
    case OpTag::Add:
    case OpTag::Sub:
    case OpTag::Mul:
    case OpTag::Div: {
      ops::EwOp op = n.op == OpTag::Add   ? ops::EwOp::Add
                     : n.op == OpTag::Sub ? ops::EwOp::Sub
                     : n.op == OpTag::Mul ? ops::EwOp::Mul
                                          : ops::EwOp::Div;
      if (in.at(0)->is_vector()) return Value(ops::ewise(op, vec(0), vec(1)));
      return Value(cpu ? par::ewise(op, mat(0), mat(1)) : ops::ewise(op, mat(0), mat(1)));
    }
    case OpTag::L2Norm:
      if (in.at(0)->is_vector())
        return Value(Scalar::of_double(ops::l2norm(vec(0), perf)));
      return Value(cpu ? par::l2norm_rows(mat(0), perf) : ops::l2norm_rows(mat(0), perf));
    case OpTag::GetElement:
      if (in.at(0)->is_vector()) return Value(ops::get_element(vec(0), n.iparams.at(0)));
      return Value(ops::get_element(mat(0), n.iparams.at(0), n.iparams.at(1)));
    case OpTag::ArgMin:
      if (in.at(0)->is_vector()) return Value(Scalar::of_int(ops::arg_min(vec(0))));
      return Value(ops::arg_min_rows(mat(0)));
    case OpTag::ArgMax:
      if (in.at(0)->is_vector()) return Value(Scalar::of_int(ops::arg_max(vec(0))));
      return Value(ops::arg_max_rows(mat(0)));
    case OpTag::SetMatrixRow: {
      std::int64_t row = n.iparams.at(0) >= 0 ? n.iparams.at(0) : in.at(2)->scalar().as_int();
      Hypermatrix m = mat(0);
      ops::set_matrix_row(m, vec(1), row);  // the one mutating core op, on our copy
      return Value(std::move(m));
    }
    case OpTag::GetMatrixRow: {
      std::int64_t row = n.iparams.at(0) >= 0 ? n.iparams.at(0) : in.at(1)->scalar().as_int();
      return Value(ops::get_matrix_row(mat(0), row));
    }
    case OpTag::Transpose:
      return Value(ops::matrix_transpose(mat(0)));
    case OpTag::CosSim: {
      if (in.at(0)->is_vector() && in.at(1)->is_vector())
        return Value(Scalar::of_double(ops::cossim(vec(0), vec(1), perf)));
      if (in.at(0)->is_vector())
        return Value(cpu ? par::cossim_vm(vec(0), mat(1), perf)
                         : ops::cossim_vm(vec(0), mat(1), perf));
      return Value(cpu ? par::cossim_mm(mat(0), mat(1), perf)
                       : ops::cossim_mm(mat(0), mat(1), perf));
    }
    case OpTag::Hamming: {
      if (in.at(0)->is_vector() && in.at(1)->is_vector())
        return Value(Scalar::of_int(ops::hamming(vec(0), vec(1), perf)));
      if (in.at(0)->is_vector())
        return Value(cpu ? par::hamming_vm(vec(0), mat(1), perf)
                         : ops::hamming_vm(vec(0), mat(1), perf));
      return Value(cpu ? par::hamming_mm(mat(0), mat(1), perf)
                       : ops::hamming_mm(mat(0), mat(1), perf));
    }
    case OpTag::MatMul: {
      if (in.at(0)->is_vector())
        return Value(cpu ? par::matmul_vm(vec(0), mat(1), perf)
                         : ops::matmul_vm(vec(0), mat(1), perf));
      return Value(cpu ? par::matmul_mm(mat(0), mat(1), perf)
                       : ops::matmul_mm(mat(0), mat(1), perf));
    }
  }
  throw Error("bad primitive op");
}

Value Engine::exec_parallel_loop(const ir::Node& n, const std::vector<const Value*>& in) {
  const ir::Program& body = *n.body;
  bool single_leaf = body.nodes.size() == 1 && body.nodes[0].kind == NodeKind::LeafCompute;

  Value out = n.out_type.rank == ValueType::Rank::Vector
                  ? Value(Hypervector(n.out_type.elem, n.out_type.dim))
                  : Value(Hypermatrix(n.out_type.elem, n.out_type.rows, n.out_type.dim));

  auto store = [&](std::int64_t i, const LeafVal& v) {
    if (out.is_vector())
      store_leaf(out.vector(), i, v);
    else
      store_leaf(out.matrix(), i / n.out_type.dim, i % n.out_type.dim, v);
  };

  auto run_instance = [&](std::int64_t i) -> LeafVal {
    if (single_leaf) {
      LeafCtx ctx{in, i, 0};
      return eval_expr(body.nodes[0].expr, ctx);
    }
    std::map<std::string, Value> body_inputs;
    for (std::size_t k = 0; k < body.inputs.size(); ++k)
      body_inputs[body.inputs[k].name] = *in.at(k);
    std::map<std::string, Value> res = run_program(body, body_inputs, i);
    const Scalar& s = res.at("out").scalar();
    if (s.holds_int()) return s.as_int();
    return s.as_double();
  };

  // Packed (Bin1) outputs share words between adjacent instances, so they
  // are assembled serially; everything else parallelizes over instances.
  if (parallel() && n.out_type.elem != ElementType::Bin1) {
    par::parallel_for(n.trip, [&](std::int64_t i) { store(i, run_instance(i)); });
  } else {
    for (std::int64_t i = 0; i < n.trip; ++i) store(i, run_instance(i));
  }
  return out;
}

Value Engine::exec_stage_host(const ir::Node& n, const std::vector<const Value*>& in) {
  const ir::Program& body = *n.body;
  switch (n.stage) {
    case StageTag::Encoding: {
      const Hypermatrix& queries = in.at(0)->matrix();
      const Value& projection = *in.at(1);
      // probe the first row to size the output
      std::map<std::string, Value> first{{"sample", Value(queries.row_copy(0))},
                                         {"projection", projection}};
      Hypervector enc0 = run_program(body, first).at("encoded").vector();
      Hypermatrix out(enc0.elem(), queries.rows(), enc0.dim());
      out.set_row(0, enc0);
      auto encode_row = [&](std::int64_t r) {
        std::map<std::string, Value> env{{"sample", Value(queries.row_copy(r))},
                                         {"projection", projection}};
        out.set_row(r, run_program(body, env).at("encoded").vector());
      };
      if (parallel() && out.elem() != ElementType::Bin1) {
        par::parallel_for(queries.rows() - 1, [&](std::int64_t i) { encode_row(i + 1); });
      } else {
        for (std::int64_t r = 1; r < queries.rows(); ++r) encode_row(r);
      }
      return Value(std::move(out));
    }
    case StageTag::Inference: {
      const Hypermatrix& queries = in.at(0)->matrix();
      const Value& classes = *in.at(1);
      const Value& projection = *in.at(2);
      Hypervector labels(ElementType::I64, queries.rows());
      auto infer_row = [&](std::int64_t r) {
        std::map<std::string, Value> env{{"query", Value(queries.row_copy(r))},
                                         {"classes", classes},
                                         {"projection", projection}};
        labels.set_from_int(r, run_program(body, env).at("label").scalar().as_int());
      };
      if (parallel()) {
        par::parallel_for(queries.rows(), infer_row);
      } else {
        for (std::int64_t r = 0; r < queries.rows(); ++r) infer_row(r);
      }
      return Value(std::move(labels));
    }
    case StageTag::Training: {
      const Hypermatrix& queries = in.at(0)->matrix();
      const Hypervector& labels = in.at(1)->vector();
      Value classes = *in.at(2);
      const Value& projection = *in.at(3);
      for (std::int64_t epoch = 0; epoch <= n.epochs; ++epoch) {
        for (std::int64_t r = 0; r < queries.rows(); ++r) {
          std::map<std::string, Value> env;
          env.emplace("query", Value(queries.row_copy(r)));
          env.emplace("label", Value(Scalar::of_int(labels.get_as_int(r), labels.elem())));
          env.emplace("classes", std::move(classes));
          env.emplace("projection", projection);
          env.emplace("epoch", Value(Scalar::of_int(epoch)));
          std::map<std::string, Value> res = run_program(body, env);
          classes = std::move(res.at("classes"));
        }
      }
      return classes;
    }
  }
  throw Error("bad stage tag");
}

Value Engine::exec_stage_accel(const ir::Node& n, const std::vector<const Value*>& in) {
  used_accel_ = true;
  AccelDevice& dev = *device_;
  const Hypermatrix& queries = in.at(0)->matrix();
  std::int64_t samples = queries.rows();
  std::int64_t query_bytes = queries.dim() * (bit_width(queries.elem()) / 8);

  auto log_move = [&](const std::string& buffer, const char* dir, std::int64_t count,
                      std::int64_t bytes) {
    moves_.push_back(BufferMove{n.id, buffer, dir, count, bytes});
  };

  // The projection input is F x D; the device holds the encoder as D x F.
  auto write_encoder_from = [&](const Value& projection, std::int64_t dim,
                                std::int64_t classes) {
    const Hypermatrix& proj = projection.matrix();
    dev.configure(dim, classes);
    Hypermatrix enc = ops::matrix_transpose(proj);
    dev.write_encoder(enc);
    log_move("encoder", "h2d", 1, enc.rows() * enc.dim() * (bit_width(enc.elem()) / 8));
  };

  switch (n.stage) {
    case StageTag::Encoding: {
      const Hypermatrix& proj = in.at(1)->matrix();
      dev.configure(proj.dim(), 1);
      Hypermatrix enc = ops::matrix_transpose(proj);
      dev.write_encoder(enc);
      log_move("encoder", "h2d", 1, enc.rows() * enc.dim() * (bit_width(enc.elem()) / 8));
      // body output element type decides the host-side representation
      std::map<std::string, Value> first{{"sample", Value(queries.row_copy(0))},
                                         {"projection", *in.at(1)}};
      ElementType out_elem = run_program(*n.body, first).at("encoded").vector().elem();
      Hypermatrix out(out_elem, samples, proj.dim());
      for (std::int64_t r = 0; r < samples; ++r) {
        dev.charge_transfer(query_bytes);
        Hypervector enc_r = dev.encode(queries.row_copy(r));
        std::int64_t enc_bytes = (proj.dim() + 7) / 8;
        dev.charge_transfer(enc_bytes);
        out.set_row(r, out_elem == ElementType::Bin1 ? enc_r : ops::type_cast(enc_r, out_elem));
      }
      log_move("queries", "h2d", samples, samples * query_bytes);
      log_move("encoded", "d2h", samples, samples * ((proj.dim() + 7) / 8));
      return Value(std::move(out));
    }
    case StageTag::Inference: {
      const Hypermatrix& classes = in.at(1)->matrix();
      write_encoder_from(*in.at(2), classes.dim(), classes.rows());
      dev.write_classes(classes);
      std::int64_t class_bytes = classes.is_packed()
                                     ? classes.rows() * classes.words_per_row() * 8
                                     : classes.rows() * classes.dim() * (bit_width(classes.elem()) / 8);
      log_move("classes", "h2d", 1, class_bytes);
      Hypervector labels(ElementType::I64, samples);
      for (std::int64_t r = 0; r < samples; ++r) {
        dev.charge_transfer(query_bytes);
        labels.set_from_int(r, dev.infer_one(queries.row_copy(r)));
        dev.charge_transfer(8);
      }
      log_move("queries", "h2d", samples, samples * query_bytes);
      log_move("labels", "d2h", samples, samples * 8);
      return Value(std::move(labels));
    }
    case StageTag::Training: {
      const Hypervector& labels = in.at(1)->vector();
      const Hypermatrix& classes = in.at(2)->matrix();
      write_encoder_from(*in.at(3), classes.dim(), classes.rows());
      dev.write_classes(classes);
      std::int64_t class_bytes = classes.rows() * classes.dim() * (bit_width(classes.elem()) / 8);
      log_move("classes", "h2d", 1, class_bytes);
      for (std::int64_t epoch = 0; epoch <= n.epochs; ++epoch) {
        for (std::int64_t r = 0; r < samples; ++r) {
          dev.charge_transfer(query_bytes + 8);
          if (epoch == 0)
            dev.train_one(queries.row_copy(r), labels.get_as_int(r));
          else
            dev.retrain_one(queries.row_copy(r), labels.get_as_int(r));
        }
      }
      std::int64_t passes = 1 + n.epochs;
      log_move("queries", "h2d", samples * passes, samples * passes * (query_bytes + 8));
      Hypermatrix trained = dev.read_classes();
      log_move("classes", "d2h", 1, class_bytes);
      return Value(std::move(trained));
    }
  }
  throw Error("bad stage tag");
}

}  // namespace

MovementPlan hoist_data_movement(const ir::Program& p) {
  MovementPlan plan;
  for (const ir::Node& n : p.nodes) {
    if (n.kind != NodeKind::StageLoop) continue;
    std::vector<ir::InputSource> srcs = ir::resolve_inputs(p, n);
    std::int64_t samples = srcs.at(0).type.rows;
    std::int64_t fbytes = srcs.at(0).type.dim * (bit_width(srcs.at(0).type.elem) / 8);
    auto bytes_of = [](const ValueType& t) {
      if (t.elem == ElementType::Bin1) return t.rows * ((t.dim + 63) / 64) * 8;
      return t.rows * t.dim * (bit_width(t.elem) / 8);
    };
    switch (n.stage) {
      case StageTag::Encoding:
        plan.moves.push_back({n.id, "encoder", "h2d", 1, bytes_of(srcs.at(1).type)});
        plan.moves.push_back({n.id, "queries", "h2d", samples, samples * fbytes});
        plan.moves.push_back({n.id, "encoded", "d2h", samples, samples * ((srcs.at(1).type.dim + 7) / 8)});
        break;
      case StageTag::Inference:
        plan.moves.push_back({n.id, "encoder", "h2d", 1, bytes_of(srcs.at(2).type)});
        plan.moves.push_back({n.id, "classes", "h2d", 1, bytes_of(srcs.at(1).type)});
        plan.moves.push_back({n.id, "queries", "h2d", samples, samples * fbytes});
        plan.moves.push_back({n.id, "labels", "d2h", samples, samples * 8});
        break;
      case StageTag::Training: {
        std::int64_t passes = 1 + n.epochs;
        plan.moves.push_back({n.id, "encoder", "h2d", 1, bytes_of(srcs.at(3).type)});
        plan.moves.push_back({n.id, "classes", "h2d", 1, bytes_of(srcs.at(2).type)});
        plan.moves.push_back(
            {n.id, "queries", "h2d", samples * passes, samples * passes * (fbytes + 8)});
        plan.moves.push_back({n.id, "classes", "d2h", 1, bytes_of(srcs.at(2).type)});
        break;
      }
    }
  }
  return plan;
}

MovementPlan naive_data_movement(const ir::Program& p) {
  MovementPlan plan;
  for (const ir::Node& n : p.nodes) {
    if (n.kind != NodeKind::StageLoop) continue;
    std::vector<ir::InputSource> srcs = ir::resolve_inputs(p, n);
    std::int64_t samples = srcs.at(0).type.rows;
    std::int64_t fbytes = srcs.at(0).type.dim * (bit_width(srcs.at(0).type.elem) / 8);
    auto bytes_of = [](const ValueType& t) {
      if (t.elem == ElementType::Bin1) return t.rows * ((t.dim + 63) / 64) * 8;
      return t.rows * t.dim * (bit_width(t.elem) / 8);
    };
    switch (n.stage) {
      case StageTag::Encoding:
        plan.moves.push_back({n.id, "encoder", "h2d", samples, samples * bytes_of(srcs.at(1).type)});
        plan.moves.push_back({n.id, "queries", "h2d", samples, samples * fbytes});
        plan.moves.push_back({n.id, "encoded", "d2h", samples, samples * ((srcs.at(1).type.dim + 7) / 8)});
        break;
      case StageTag::Inference:
        plan.moves.push_back({n.id, "encoder", "h2d", samples, samples * bytes_of(srcs.at(2).type)});
        plan.moves.push_back({n.id, "classes", "h2d", samples, samples * bytes_of(srcs.at(1).type)});
        plan.moves.push_back({n.id, "queries", "h2d", samples, samples * fbytes});
        plan.moves.push_back({n.id, "labels", "d2h", samples, samples * 8});
        break;
      case StageTag::Training: {
        std::int64_t passes = 1 + n.epochs;
        std::int64_t cb = bytes_of(srcs.at(2).type);
        plan.moves.push_back(
            {n.id, "encoder", "h2d", samples * passes, samples * passes * bytes_of(srcs.at(3).type)});
        plan.moves.push_back({n.id, "classes", "h2d", samples * passes, samples * passes * cb});
        plan.moves.push_back(
            {n.id, "queries", "h2d", samples * passes, samples * passes * (fbytes + 8)});
        plan.moves.push_back({n.id, "classes", "d2h", samples * passes, samples * passes * cb});
        break;
      }
    }
  }
  return plan;
}

std::int64_t MovementPlan::total_bytes() const {
  std::int64_t total = 0;
  for (const BufferMove& m : moves) total += m.bytes;
  return total;
}

std::string ExecReport::to_kv_text() const {
  std::ostringstream os;
  os << "wall_seconds=" << wall_seconds << '\n';
  for (const auto& [name, v] : outputs) {
    os << "output." << name << ".type=" << v.type().str() << '\n';
    if (v.is_scalar()) {
      const Scalar& s = v.scalar();
      if (s.holds_int())
        os << "output." << name << ".value=" << s.as_int() << '\n';
      else
        os << "output." << name << ".value=" << s.as_double() << '\n';
    } else if (v.type().element_count() <= 64) {
      os << "output." << name << ".values=";
      std::int64_t count = v.type().element_count();
      for (std::int64_t i = 0; i < count; ++i) {
        if (i != 0) os << ',';
        if (v.is_vector()) {
          if (is_float(v.vector().elem()))
            os << v.vector().get_as_double(i);
          else
            os << v.vector().get_as_int(i);
        } else {
          std::int64_t r = i / v.matrix().dim(), c = i % v.matrix().dim();
          if (is_float(v.matrix().elem()))
            os << v.matrix().get_as_double(r, c);
          else
            os << v.matrix().get_as_int(r, c);
        }
      }
      os << '\n';
    }
  }
  if (accel) {
    os << "accel.cycles=" << accel->cycles << '\n';
    os << "accel.bytes_moved=" << accel->bytes_moved << '\n';
    os << "accel.elements_processed=" << accel->elements_processed << '\n';
  }
  for (const BufferMove& m : moved_buffers)
    os << "move." << m.stage << '.' << m.buffer << '.' << m.direction << "=" << m.count
       << ":" << m.bytes << '\n';
  return os.str();
}

ExecReport execute(const ir::Program& p, const std::map<std::string, Value>& inputs,
                   BackendTag backend, std::uint64_t seed, const AccelProfile* profile) {
  if (!p.validated) throw Error("execute requires a validated program");
  Engine engine(backend, seed, profile);
  auto t0 = std::chrono::steady_clock::now();
  ExecReport report;
  report.outputs = engine.run_program(p, inputs);
  auto t1 = std::chrono::steady_clock::now();
  report.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
  if (engine.used_accel_ && engine.device_) report.accel = engine.device_->counters();
  report.moved_buffers = std::move(engine.moves_);
  return report;
}

}  // namespace hdkit::backend
