#include "hdkit/ir/lower.hpp"

#include "hdkit/ir/validate.hpp"

namespace hdkit::ir {

namespace {

using K = Expr::Kind;

Expr load_elem(int port, const ValueType& t, Expr idx0, Expr idx1 = {}) {
  switch (t.rank) {
    case ValueType::Rank::Scalar: return Expr::load(port);
    case ValueType::Rank::Vector: return Expr::load(port, {std::move(idx0)});
    case ValueType::Rank::Matrix: return Expr::load(port, {std::move(idx0), std::move(idx1)});
  }
  throw Error("bad rank");
}

PerforationSpec effective_perf(const Node& n, std::int64_t red_len) {
  PerforationSpec s = n.perforation.value_or(PerforationSpec{0, red_len, 1});
  s.validate(red_len);
  return s;
}

// Scale a reduce by full/visited in the accumulator domain, matching the
// reference kernels: integers multiply-then-truncate, floats
// multiply-then-divide. Skipped when the spec covers the whole axis.
Expr scaled(Expr sum, const PerforationSpec& s, std::int64_t full, bool integer) {
  if (s.covers_all(full)) return sum;
  if (integer)
    return Expr::binary(K::Div, Expr::binary(K::Mul, std::move(sum), Expr::cint(full)),
                        Expr::cint(s.visited()));
  return Expr::binary(K::Div,
                      Expr::binary(K::Mul, std::move(sum), Expr::cfloat(static_cast<double>(full))),
                      Expr::cfloat(static_cast<double>(s.visited())));
}

struct Lowered {
  Expr expr;
  ValueType out;     // of the whole op
  std::int64_t trip; // 0 => standalone leaf (scalar result)
};

Lowered build_leaf(const Node& n, const std::vector<ValueType>& in, const ValueType& out) {
  Expr i = Expr::loop_idx();
  Expr r = Expr::red_idx();

  switch (n.op) {
    // --- element-wise over the flat output index -----------------------------
    case OpTag::Add:
    case OpTag::Sub:
    case OpTag::Mul:
    case OpTag::Div: {
      K k = n.op == OpTag::Add   ? K::Add
            : n.op == OpTag::Sub ? K::Sub
            : n.op == OpTag::Mul ? K::Mul
                                 : K::Div;
      Expr a, b;
      if (out.rank == ValueType::Rank::Vector) {
        a = load_elem(0, in[0], i);
        b = load_elem(1, in[1], i);
      } else {
        Expr row = Expr::binary(K::Div, i, Expr::cint(out.dim));
        Expr col = Expr::binary(K::Mod, i, Expr::cint(out.dim));
        a = load_elem(0, in[0], row, col);
        b = load_elem(1, in[1], Expr(row), Expr(col));
      }
      return {Expr::binary(k, std::move(a), std::move(b)), out, out.element_count()};
    }
    case OpTag::Sign:
    case OpTag::SignFlip:
    case OpTag::Abs:
    case OpTag::CosineEw:
    case OpTag::TypeCast: {
      Expr x;
      if (out.rank == ValueType::Rank::Vector) {
        x = load_elem(0, in[0], i);
      } else {
        Expr row = Expr::binary(K::Div, i, Expr::cint(out.dim));
        Expr col = Expr::binary(K::Mod, i, Expr::cint(out.dim));
        x = load_elem(0, in[0], std::move(row), std::move(col));
      }
      switch (n.op) {
        case OpTag::Sign: x = Expr::unary(K::SignOf, std::move(x)); break;
        case OpTag::SignFlip: x = Expr::unary(K::Neg, std::move(x)); break;
        case OpTag::Abs: x = Expr::unary(K::Abs, std::move(x)); break;
        case OpTag::CosineEw: x = Expr::unary(K::Cos, std::move(x)); break;
        case OpTag::TypeCast: break;  // the store to the out element type casts
        default: break;
      }
      return {std::move(x), out, out.element_count()};
    }
    case OpTag::WrapShift: {
      std::int64_t d = in[0].dim;
      std::int64_t s = ((n.iparams.at(0) % d) + d) % d;
      Expr idx = Expr::binary(K::Mod, Expr::binary(K::Add, i, Expr::cint(d - s)), Expr::cint(d));
      return {load_elem(0, in[0], std::move(idx)), out, d};
    }

    // --- reductions -----------------------------------------------------------
    case OpTag::Hamming: {
      std::int64_t d = in[0].dim;
      PerforationSpec s = effective_perf(n, d);
      bool vm = in[0].rank == ValueType::Rank::Vector && in[1].rank == ValueType::Rank::Matrix;
      bool vv = in[1].rank == ValueType::Rank::Vector;
      bool mm = in[0].rank == ValueType::Rank::Matrix;
      Expr a, b;
      if (vv) {
        a = load_elem(0, in[0], r);
        b = load_elem(1, in[1], r);
      } else if (vm) {
        a = load_elem(0, in[0], r);
        b = load_elem(1, in[1], i, r);
      } else {
        // all-pairs: out is a.rows x b.rows
        Expr row = Expr::binary(K::Div, i, Expr::cint(out.dim));
        Expr col = Expr::binary(K::Mod, i, Expr::cint(out.dim));
        a = load_elem(0, in[0], std::move(row), Expr(r));
        b = load_elem(1, in[1], std::move(col), Expr(r));
      }
      Expr red = Expr::reduce(s.begin, s.end, s.stride,
                              Expr::binary(K::SignNe, std::move(a), std::move(b)));
      if (vv) return {std::move(red), out, 0};
      return {std::move(red), out, mm ? out.element_count() : out.dim};
    }
    case OpTag::CosSim: {
      std::int64_t d = in[0].dim;
      PerforationSpec s = effective_perf(n, d);
      bool vv = in[1].rank == ValueType::Rank::Vector;
      bool mm = in[0].rank == ValueType::Rank::Matrix;
      auto mk = [&](int port, const ValueType& t, bool lhs) {
        if (t.rank == ValueType::Rank::Vector) return load_elem(port, t, r);
        Expr outer = lhs ? Expr::binary(K::Div, i, Expr::cint(out.dim))
                         : Expr::binary(K::Mod, i, Expr::cint(out.dim));
        if (!mm && !vv) outer = i;  // vec x mat: outer index is the row of b
        return load_elem(port, t, std::move(outer), Expr(r));
      };
      Expr dot = Expr::reduce(s.begin, s.end, s.stride,
                              Expr::binary(K::Mul, mk(0, in[0], true), mk(1, in[1], false)));
      Expr na = Expr::reduce(s.begin, s.end, s.stride,
                             Expr::binary(K::Mul, mk(0, in[0], true), mk(0, in[0], true)));
      Expr nb = Expr::reduce(s.begin, s.end, s.stride,
                             Expr::binary(K::Mul, mk(1, in[1], false), mk(1, in[1], false)));
      // promote counts to float before the norm product so Bin1/int inputs
      // follow the f64 accumulation contract
      auto to_f = [](Expr e) { return Expr::binary(K::Mul, std::move(e), Expr::cfloat(1.0)); };
      Expr zero_norm = Expr::binary(K::Eq, Expr::binary(K::Mul, to_f(na), to_f(nb)),
                                    Expr::cfloat(0.0));
      Expr val = Expr::binary(
          K::Div, to_f(dot),
          Expr::binary(K::Mul, Expr::unary(K::Sqrt, to_f(na)), Expr::unary(K::Sqrt, to_f(nb))));
      Expr res = Expr::select(std::move(zero_norm), Expr::cfloat(0.0), std::move(val));
      if (vv) return {std::move(res), out, 0};
      return {std::move(res), out, out.element_count()};
    }
    case OpTag::MatMul: {
      std::int64_t d = in[0].dim;
      PerforationSpec s = effective_perf(n, d);
      bool vm = in[0].rank == ValueType::Rank::Vector;
      Expr a, b;
      if (vm) {
        a = load_elem(0, in[0], r);
        b = load_elem(1, in[1], r, i);
      } else {
        Expr row = Expr::binary(K::Div, i, Expr::cint(out.dim));
        Expr col = Expr::binary(K::Mod, i, Expr::cint(out.dim));
        a = load_elem(0, in[0], std::move(row), Expr(r));
        b = load_elem(1, in[1], Expr(r), std::move(col));
      }
      Expr red = Expr::reduce(s.begin, s.end, s.stride,
                              Expr::binary(K::Mul, std::move(a), std::move(b)));
      bool integer = !is_float(in[0].elem);
      return {scaled(std::move(red), s, d, integer), out, out.element_count()};
    }
    case OpTag::L2Norm: {
      std::int64_t d = in[0].dim;
      PerforationSpec s = effective_perf(n, d);
      bool vec_in = in[0].rank == ValueType::Rank::Vector;
      Expr x = vec_in ? load_elem(0, in[0], r) : load_elem(0, in[0], i, r);
      Expr sq = Expr::binary(K::Mul, Expr(x), Expr(x));
      Expr red = Expr::reduce(s.begin, s.end, s.stride, std::move(sq));
      Expr asf = Expr::binary(K::Mul, std::move(red), Expr::cfloat(1.0));
      Expr res = Expr::unary(K::Sqrt, scaled(std::move(asf), s, d, false));
      if (vec_in) return {std::move(res), out, 0};
      return {std::move(res), out, out.dim};
    }
    default:
      throw Error("node " + n.id + ": op '" + std::string(op_name(n.op)) +
                  "' has no loop-nest expansion");
  }
}

}  // namespace

bool is_loop_expandable(const Node& n) {
  if (n.kind != NodeKind::Primitive) return false;
  switch (n.op) {
    case OpTag::Add: case OpTag::Sub: case OpTag::Mul: case OpTag::Div:
    case OpTag::Sign: case OpTag::SignFlip: case OpTag::Abs: case OpTag::CosineEw:
    case OpTag::TypeCast: case OpTag::WrapShift:
    case OpTag::Hamming: case OpTag::CosSim: case OpTag::MatMul: case OpTag::L2Norm:
      return true;
    default:
      return false;
  }
}

Program lower_primitive_to_loops(const Program& p, const std::string& node_id) {
  if (!p.validated) throw Error("lower_primitive_to_loops requires a validated program");
  Program q(p);
  Node& n = q.node_or_throw(node_id);
  if (!is_loop_expandable(n))
    throw Error("node " + node_id + " is not loop-expandable");

  std::vector<InputSource> srcs = resolve_inputs(q, n);
  std::vector<ValueType> in;
  for (const InputSource& s : srcs) in.push_back(s.type);
  ValueType out = infer_output_type(n, in);

  Lowered low = build_leaf(n, in, out);

  Node leaf;
  leaf.id = node_id + "_leaf";
  leaf.kind = NodeKind::LeafCompute;
  leaf.expr = std::move(low.expr);
  leaf.out_type = ValueType::scalar(out.elem);

  Node repl;
  if (low.trip == 0) {
    // scalar result: a standalone leaf replaces the node
    repl = std::move(leaf);
    repl.id = node_id;
  } else {
    Program body;
    for (std::size_t k = 0; k < in.size(); ++k) {
      body.inputs.push_back(
          InputBinding{"in" + std::to_string(k), in[k], {PortRef{leaf.id, static_cast<int>(k)}}});
    }
    body.outputs.push_back(OutputBinding{"out", PortRef{leaf.id, 0}});
    body.nodes.push_back(std::move(leaf));
    repl.id = node_id;
    repl.kind = NodeKind::ParallelLoop;
    repl.trip = low.trip;
    repl.out_type = out;
    repl.body = std::make_unique<Program>(std::move(body));
  }
  repl.target_hint = n.target_hint;
  n = std::move(repl);

  validate(q);
  return q;
}

}  // namespace hdkit::ir
