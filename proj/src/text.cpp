#include "hdkit/ir/text.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace hdkit::ir {

namespace {

// --- writing -----------------------------------------------------------------

std::string shape_token(const ValueType& t) {
  switch (t.rank) {
    case ValueType::Rank::Scalar: return "scalar";
    case ValueType::Rank::Vector: return "vec:" + std::to_string(t.dim);
    case ValueType::Rank::Matrix:
      return "mat:" + std::to_string(t.rows) + "x" + std::to_string(t.dim);
  }
  return "?";
}

std::string type_token(const ValueType& t) {
  return shape_token(t) + ":" + std::string(to_string(t.elem));
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const char* expr_op_name(Expr::Kind k) {
  using K = Expr::Kind;
  switch (k) {
    case K::LoopIdx: return "i";
    case K::RedIdx: return "r";
    case K::Load: return "load";
    case K::Neg: return "neg";
    case K::Abs: return "abs";
    case K::Cos: return "cos";
    case K::Sqrt: return "sqrt";
    case K::SignOf: return "signof";
    case K::Add: return "add";
    case K::Sub: return "sub";
    case K::Mul: return "mul";
    case K::Div: return "div";
    case K::Mod: return "mod";
    case K::Eq: return "eq";
    case K::Ne: return "ne";
    case K::Lt: return "lt";
    case K::SignNe: return "signne";
    case K::Select: return "select";
    case K::Reduce: return "reduce";
    default: return nullptr;
  }
}

void write_expr(std::string& out, const Expr& e) {
  using K = Expr::Kind;
  if (e.kind == K::ConstInt) {
    out += std::to_string(e.ival);
    return;
  }
  if (e.kind == K::ConstFloat) {
    std::string s = fmt_double(e.fval);
    if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
        s.find("inf") == std::string::npos && s.find("nan") == std::string::npos)
      s += ".0";
    out += s;
    return;
  }
  out += '(';
  out += expr_op_name(e.kind);
  if (e.kind == K::Load) out += ' ' + std::to_string(e.port);
  if (e.kind == K::Reduce)
    out += ' ' + std::to_string(e.lo) + ' ' + std::to_string(e.hi) + ' ' +
           std::to_string(e.stride);
  for (const Expr& a : e.args) {
    out += ' ';
    write_expr(out, a);
  }
  out += ')';
}

void write_program(std::ostringstream& os, const Program& p, int depth) {
  std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
  for (const auto& [k, v] : p.attributes) os << pad << "attr " << k << ' ' << v << '\n';
  for (const Node& n : p.nodes) {
    os << pad << "node " << n.id << ' ';
    switch (n.kind) {
      case NodeKind::Primitive: {
        os << "primitive " << op_name(n.op);
        switch (n.op) {
          case OpTag::Create:
          case OpTag::Random:
          case OpTag::Gaussian:
            if (n.iparams.size() == 2) os << " rows=" << n.iparams[0] << " dim=" << n.iparams[1];
            else os << " dim=" << n.iparams.at(0);
            os << " elem=" << to_string(n.ty_param);
            if (n.op == OpTag::Create && n.fparam != 0.0) os << " fill=" << fmt_double(n.fparam);
            break;
          case OpTag::WrapShift: os << " shift=" << n.iparams.at(0); break;
          case OpTag::GetElement:
            os << " row=" << n.iparams.at(0);
            if (n.iparams.size() > 1) os << " col=" << n.iparams[1];
            break;
          case OpTag::TypeCast: os << " to=" << to_string(n.ty_param); break;
          case OpTag::GetMatrixRow:
          case OpTag::SetMatrixRow: os << " row=" << n.iparams.at(0); break;
          case OpTag::Sign:
            if (n.out_elem_override) os << " out=" << to_string(*n.out_elem_override);
            break;
          default: break;
        }
        break;
      }
      case NodeKind::ParallelLoop:
        os << "parallel_loop trip=" << n.trip << " out=" << type_token(n.out_type);
        break;
      case NodeKind::StageLoop:
        os << "stage_loop " << stage_name(n.stage)
           << " sim=" << (n.algo.similarity == SimilarityTag::Hamming ? "hamming" : "cosine")
           << " randproj=" << (n.algo.random_projection ? 1 : 0);
        if (n.stage == StageTag::Training) os << " epochs=" << n.epochs;
        break;
      case NodeKind::LeafCompute: {
        std::string e;
        write_expr(e, n.expr);
        os << "leaf out=" << type_token(n.out_type) << " expr=" << e;
        break;
      }
    }
    if (n.target_hint) os << " hint=" << *n.target_hint;
    if (n.body) {
      os << " {\n";
      write_program(os, *n.body, depth + 1);
      os << pad << "}\n";
    } else {
      os << '\n';
    }
  }
  for (const Edge& e : p.edges)
    os << pad << "edge " << e.src.node << ':' << e.src.port << " -> " << e.dst.node << ':'
       << e.dst.port << ' ' << shape_token(e.type) << ' ' << to_string(e.type.elem) << '\n';
  for (const Node& n : p.nodes)
    if (n.perforation)
      os << pad << "perf " << n.id << ' ' << n.perforation->begin << ' '
         << n.perforation->end << ' ' << n.perforation->stride << '\n';
  for (const auto& b : p.inputs)
    for (const PortRef& d : b.dsts)
      os << pad << "bind in " << b.name << ' ' << shape_token(b.type) << ' '
         << to_string(b.type.elem) << " -> " << d.node << ':' << d.port << '\n';
  for (const auto& b : p.outputs)
    os << pad << "bind out " << b.name << " <- " << b.src.node << ':' << b.src.port << '\n';
}

// --- reading -----------------------------------------------------------------

struct Cursor {
  std::vector<std::pair<int, std::string>> lines;  // (line number, stripped text)
  std::size_t pos = 0;

  bool done() const { return pos >= lines.size(); }
  int line_no() const { return done() ? -1 : lines[pos].first; }
  const std::string& peek() const { return lines[pos].second; }
  std::string next() { return lines[pos++].second; }
};

[[noreturn]] void parse_fail(int line, const std::string& msg) {
  throw Error("parse error at line " + std::to_string(line) + ": " + msg);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

std::int64_t parse_i64(const std::string& s, int line) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    parse_fail(line, "expected integer, got '" + s + "'");
  return v;
}

ValueType parse_type_token(const std::string& tok, int line) {
  std::size_t c1 = tok.find(':');
  if (c1 == std::string::npos) parse_fail(line, "bad type token '" + tok + "'");
  std::string kind = tok.substr(0, c1);
  try {
    if (kind == "scalar")
      return ValueType::scalar(element_type_from_string(tok.substr(c1 + 1)));
    std::size_t c2 = tok.find(':', c1 + 1);
    if (c2 == std::string::npos) parse_fail(line, "bad type token '" + tok + "'");
    std::string shape = tok.substr(c1 + 1, c2 - c1 - 1);
    ElementType elem = element_type_from_string(tok.substr(c2 + 1));
    if (kind == "vec") return ValueType::vector(elem, parse_i64(shape, line));
    if (kind == "mat") {
      std::size_t x = shape.find('x');
      if (x == std::string::npos) parse_fail(line, "bad matrix shape '" + shape + "'");
      return ValueType::matrix(elem, parse_i64(shape.substr(0, x), line),
                               parse_i64(shape.substr(x + 1), line));
    }
  } catch (const Error& e) {
    parse_fail(line, e.what());
  }
  parse_fail(line, "bad type token '" + tok + "'");
}

PortRef parse_port(const std::string& tok, int line) {
  std::size_t c = tok.rfind(':');
  if (c == std::string::npos) parse_fail(line, "expected node:port, got '" + tok + "'");
  return PortRef{tok.substr(0, c), static_cast<int>(parse_i64(tok.substr(c + 1), line))};
}

// key=value map from tokens[from..); expr= handled by caller.
std::map<std::string, std::string> parse_kv(const std::vector<std::string>& toks,
                                            std::size_t from, int line) {
  std::map<std::string, std::string> kv;
  for (std::size_t i = from; i < toks.size(); ++i) {
    if (toks[i] == "{") continue;
    std::size_t eq = toks[i].find('=');
    if (eq == std::string::npos) parse_fail(line, "expected key=value, got '" + toks[i] + "'");
    kv[toks[i].substr(0, eq)] = toks[i].substr(eq + 1);
  }
  return kv;
}

struct ExprParser {
  const std::string& s;
  std::size_t i = 0;
  int line;

  void skip_ws() { while (i < s.size() && s[i] == ' ') ++i; }

  std::string word() {
    skip_ws();
    std::size_t b = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '(' && s[i] != ')') ++i;
    return s.substr(b, i - b);
  }

  Expr parse() {
    skip_ws();
    if (i >= s.size()) parse_fail(line, "unexpected end of expression");
    if (s[i] != '(') {
      std::string w = word();
      if (w.empty()) parse_fail(line, "empty expression token");
      if (w.find('.') != std::string::npos || w.find('e') != std::string::npos ||
          w.find("inf") != std::string::npos || w.find("nan") != std::string::npos)
        return Expr::cfloat(std::stod(w));
      return Expr::cint(parse_i64(w, line));
    }
    ++i;  // (
    std::string op = word();
    Expr e;
    using K = Expr::Kind;
    auto args_until_close = [&](std::size_t min_args, std::size_t max_args) {
      std::vector<Expr> args;
      skip_ws();
      while (i < s.size() && s[i] != ')') {
        args.push_back(parse());
        skip_ws();
      }
      if (i >= s.size()) parse_fail(line, "unbalanced parentheses in expression");
      ++i;  // )
      if (args.size() < min_args || args.size() > max_args)
        parse_fail(line, "wrong argument count for '" + op + "'");
      return args;
    };
    if (op == "i") { e.kind = K::LoopIdx; args_until_close(0, 0); return e; }
    if (op == "r") { e.kind = K::RedIdx; args_until_close(0, 0); return e; }
    if (op == "load") {
      e.kind = K::Load;
      e.port = static_cast<int>(parse_i64(word(), line));
      e.args = args_until_close(0, 2);
      return e;
    }
    if (op == "reduce") {
      e.kind = K::Reduce;
      e.lo = parse_i64(word(), line);
      e.hi = parse_i64(word(), line);
      e.stride = parse_i64(word(), line);
      e.args = args_until_close(1, 1);
      return e;
    }
    static const std::map<std::string, std::pair<Expr::Kind, std::pair<int, int>>> unops{
        {"neg", {K::Neg, {1, 1}}},   {"abs", {K::Abs, {1, 1}}},
        {"cos", {K::Cos, {1, 1}}},   {"sqrt", {K::Sqrt, {1, 1}}},
        {"signof", {K::SignOf, {1, 1}}},
        {"add", {K::Add, {2, 2}}},   {"sub", {K::Sub, {2, 2}}},
        {"mul", {K::Mul, {2, 2}}},   {"div", {K::Div, {2, 2}}},
        {"mod", {K::Mod, {2, 2}}},   {"eq", {K::Eq, {2, 2}}},
        {"ne", {K::Ne, {2, 2}}},     {"lt", {K::Lt, {2, 2}}},
        {"signne", {K::SignNe, {2, 2}}}, {"select", {K::Select, {3, 3}}},
    };
    auto it = unops.find(op);
    if (it == unops.end()) parse_fail(line, "unknown expression op '" + op + "'");
    e.kind = it->second.first;
    e.args = args_until_close(static_cast<std::size_t>(it->second.second.first),
                              static_cast<std::size_t>(it->second.second.second));
    return e;
  }
};

Program parse_program(Cursor& cur, int depth);

Node parse_node(Cursor& cur, const std::string& text, int line, int depth) {
  std::vector<std::string> toks = split_ws(text);
  if (toks.size() < 3) parse_fail(line, "node line needs: node <id> <kind> ...");
  Node n;
  n.id = toks[1];
  const std::string& kind = toks[2];
  bool opens_body = text.find('{') != std::string::npos;

  if (kind == "primitive") {
    if (toks.size() < 4) parse_fail(line, "primitive node needs an op name");
    n.kind = NodeKind::Primitive;
    try {
      n.op = op_from_name(toks[3]);
    } catch (const Error& e) {
      parse_fail(line, e.what());
    }
    auto kv = parse_kv(toks, 4, line);
    try {
      if (kv.count("rows")) n.iparams.push_back(parse_i64(kv["rows"], line));
      if (kv.count("dim")) n.iparams.push_back(parse_i64(kv["dim"], line));
      if (kv.count("shift")) n.iparams.push_back(parse_i64(kv["shift"], line));
      if (kv.count("row")) n.iparams.push_back(parse_i64(kv["row"], line));
      if (kv.count("col")) n.iparams.push_back(parse_i64(kv["col"], line));
      if (kv.count("elem")) n.ty_param = element_type_from_string(kv["elem"]);
      if (kv.count("to")) n.ty_param = element_type_from_string(kv["to"]);
      if (kv.count("fill")) n.fparam = std::stod(kv["fill"]);
      if (kv.count("out")) n.out_elem_override = element_type_from_string(kv["out"]);
      if (kv.count("hint")) n.target_hint = kv["hint"];
    } catch (const Error& e) {
      parse_fail(line, e.what());
    }
    if (opens_body) parse_fail(line, "primitive nodes have no body");
    return n;
  }

  if (kind == "parallel_loop") {
    n.kind = NodeKind::ParallelLoop;
    auto kv = parse_kv(toks, 3, line);
    if (!kv.count("trip") || !kv.count("out"))
      parse_fail(line, "parallel_loop needs trip= and out=");
    n.trip = parse_i64(kv["trip"], line);
    n.out_type = parse_type_token(kv["out"], line);
    if (kv.count("hint")) n.target_hint = kv["hint"];
    if (!opens_body) parse_fail(line, "parallel_loop needs a { body }");
    n.body = std::make_unique<Program>(parse_program(cur, depth + 1));
    return n;
  }

  if (kind == "stage_loop") {
    if (toks.size() < 4) parse_fail(line, "stage_loop needs a stage tag");
    n.kind = NodeKind::StageLoop;
    if (toks[3] == "encoding") n.stage = StageTag::Encoding;
    else if (toks[3] == "training") n.stage = StageTag::Training;
    else if (toks[3] == "inference") n.stage = StageTag::Inference;
    else parse_fail(line, "unknown stage tag '" + toks[3] + "'");
    auto kv = parse_kv(toks, 4, line);
    if (kv.count("sim")) {
      if (kv["sim"] == "hamming") n.algo.similarity = SimilarityTag::Hamming;
      else if (kv["sim"] == "cosine") n.algo.similarity = SimilarityTag::Cosine;
      else parse_fail(line, "unknown similarity '" + kv["sim"] + "'");
    }
    if (kv.count("randproj")) n.algo.random_projection = kv["randproj"] != "0";
    if (kv.count("epochs")) n.epochs = parse_i64(kv["epochs"], line);
    if (kv.count("hint")) n.target_hint = kv["hint"];
    if (!opens_body) parse_fail(line, "stage_loop needs a { body }");
    n.body = std::make_unique<Program>(parse_program(cur, depth + 1));
    return n;
  }

  if (kind == "leaf") {
    n.kind = NodeKind::LeafCompute;
    std::size_t ep = text.find("expr=");
    if (ep == std::string::npos) parse_fail(line, "leaf needs expr=");
    std::string expr_text = text.substr(ep + 5);
    ExprParser parser{expr_text, 0, line};
    n.expr = parser.parse();
    // out= precedes expr=
    auto kv = parse_kv(split_ws(text.substr(0, ep)), 3, line);
    if (!kv.count("out")) parse_fail(line, "leaf needs out=");
    n.out_type = parse_type_token(kv["out"], line);
    if (kv.count("hint")) n.target_hint = kv["hint"];
    if (opens_body) parse_fail(line, "leaf nodes have no body");
    return n;
  }

  parse_fail(line, "unknown node kind '" + kind + "'");
}

Program parse_program(Cursor& cur, int depth) {
  Program p;
  while (!cur.done()) {
    int line = cur.line_no();
    std::string text = cur.next();
    std::vector<std::string> toks = split_ws(text);
    if (toks.empty()) continue;
    const std::string& head = toks[0];
    if (head == "}") {
      if (depth == 0) parse_fail(line, "unmatched '}'");
      return p;
    }
    if (head == "attr") {
      if (toks.size() < 3) parse_fail(line, "attr needs key and value");
      p.attributes[toks[1]] = toks[2];
    } else if (head == "node") {
      p.nodes.push_back(parse_node(cur, text, line, depth));
    } else if (head == "edge") {
      // edge src:port -> dst:port <type>
      if (toks.size() != 6 || toks[2] != "->") parse_fail(line, "bad edge line");
      Edge e;
      e.src = parse_port(toks[1], line);
      e.dst = parse_port(toks[3], line);
      e.type = parse_type_token(toks[4] + ":" + toks[5], line);
      p.edges.push_back(e);
    } else if (head == "perf") {
      if (toks.size() != 5) parse_fail(line, "perf needs: perf <node> <begin> <end> <stride>");
      bool found = false;
      for (Node& n : p.nodes)
        if (n.id == toks[1]) {
          n.perforation = PerforationSpec{parse_i64(toks[2], line), parse_i64(toks[3], line),
                                          parse_i64(toks[4], line)};
          found = true;
        }
      if (!found) parse_fail(line, "perf names unknown node '" + toks[1] + "'");
    } else if (head == "bind") {
      if (toks.size() >= 2 && toks[1] == "in") {
        if (toks.size() != 7 || toks[5] != "->") parse_fail(line, "bad bind in line");
        ValueType t = parse_type_token(toks[3] + ":" + toks[4], line);
        PortRef dst = parse_port(toks[6], line);
        InputBinding* b = p.find_input(toks[2]);
        if (b == nullptr) {
          p.inputs.push_back(InputBinding{toks[2], t, {dst}});
        } else {
          if (b->type != t) parse_fail(line, "input '" + toks[2] + "' rebound with a different type");
          b->dsts.push_back(dst);
        }
      } else if (toks.size() >= 2 && toks[1] == "out") {
        if (toks.size() != 5 || toks[3] != "<-") parse_fail(line, "bad bind out line");
        p.outputs.push_back(OutputBinding{toks[2], parse_port(toks[4], line)});
      } else {
        parse_fail(line, "bind needs 'in' or 'out'");
      }
    } else {
      parse_fail(line, "unknown declaration '" + head + "'");
    }
  }
  if (depth != 0) parse_fail(-1, "missing '}' before end of input");
  return p;
}

}  // namespace

std::string to_text(const Program& p) {
  std::ostringstream os;
  write_program(os, p, 0);
  return os.str();
}

Program from_text(const std::string& text) {
  Cursor cur;
  int line_no = 0;
  std::istringstream is(text);
  std::string raw;
  while (std::getline(is, raw)) {
    ++line_no;
    std::size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    // strip
    std::size_t b = raw.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    std::size_t e = raw.find_last_not_of(" \t\r");
    cur.lines.emplace_back(line_no, raw.substr(b, e - b + 1));
  }
  return parse_program(cur, 0);
}

void save_program(const std::string& path, const Program& p) {
  std::ofstream f(path);
  if (!f) throw Error("cannot open '" + path + "' for writing");
  f << to_text(p);
  if (!f) throw Error("write failed: " + path);
}

Program load_program(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return from_text(ss.str());
}

std::string expr_to_text(const Expr& e) {
  std::string s;
  write_expr(s, e);
  return s;
}

Expr expr_from_text(const std::string& text) {
  ExprParser p{text, 0, 0};
  return p.parse();
}

}  // namespace hdkit::ir
