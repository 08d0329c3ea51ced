#include <doctest.h>

#include "hdkit/backend/execute.hpp"
#include "hdkit/ir/builder.hpp"
#include "hdkit/ir/lower.hpp"
#include "hdkit/ir/text.hpp"
#include "hdkit/ops.hpp"

using namespace hdkit;
using namespace hdkit::ir;
using backend::BackendTag;
using backend::Value;

namespace {

// The random-projection inference pipeline: matmul -> sign -> hamming ->
// arg_min, with query/projection/classes as external inputs.
Program listing1_program(std::int64_t f, std::int64_t d, std::int64_t k) {
  Builder b(7);
  std::string q = b.input("query", ValueType::vector(ElementType::F32, f));
  std::string proj = b.input("projection", ValueType::matrix(ElementType::F32, f, d));
  std::string classes = b.input("classes", ValueType::matrix(ElementType::F32, k, d));
  std::string enc = b.matmul(q, proj);
  std::string s = b.sign(enc);
  std::string dist = b.hamming_distance(s, classes);
  std::string label = b.arg_min(dist);
  b.output("label", label);
  return b.build();
}

std::map<std::string, Value> listing1_inputs(std::int64_t f, std::int64_t d, std::int64_t k,
                                             std::uint64_t seed) {
  std::map<std::string, Value> in;
  in.emplace("query", Value(ops::gaussian_hv(f, ElementType::F32, seed)));
  in.emplace("projection", Value(ops::gaussian_hm(f, d, ElementType::F32, seed + 1)));
  in.emplace("classes", Value(ops::random_hm(k, d, ElementType::F32, seed + 2)));
  return in;
}

}  // namespace

TEST_CASE("builder assembles the 4-primitive inference pipeline") {
  Program p = listing1_program(16, 128, 5);
  CHECK(p.validated);
  CHECK(p.nodes.size() == 4);
  CHECK(p.inputs.size() == 3);
  auto order = schedule(p);
  REQUIRE(order.size() == 4);
  CHECK(order[0] == "matmul0");
  CHECK(order[1] == "sign0");
  CHECK(order[2] == "hamming_distance0");
  CHECK(order[3] == "arg_min0");
}

TEST_CASE("empty program validates") {
  Program p;
  validate(p);
  CHECK(p.validated);
  CHECK(schedule(p).empty());
}

TEST_CASE("validate rejects shape mismatches naming both nodes") {
  Builder b;
  std::string q = b.input("q", ValueType::vector(ElementType::F32, 2048));
  std::string m = b.input("m", ValueType::matrix(ElementType::F32, 1024, 4));
  CHECK_THROWS_WITH_AS(b.matmul(q, m),
                       doctest::Contains("inner dimension mismatch"), Error);
}

TEST_CASE("validate rejects cycles") {
  Program p;
  Node a, c;
  a.id = "a";
  a.kind = NodeKind::Primitive;
  a.op = OpTag::SignFlip;
  c.id = "b";
  c.kind = NodeKind::Primitive;
  c.op = OpTag::SignFlip;
  p.nodes.push_back(a);
  p.nodes.push_back(c);
  ValueType t = ValueType::vector(ElementType::F32, 4);
  p.edges.push_back(Edge{{"a", 0}, {"b", 0}, t});
  p.edges.push_back(Edge{{"b", 0}, {"a", 0}, t});
  CHECK_THROWS_WITH_AS(validate(p), doctest::Contains("cycle"), Error);
}

TEST_CASE("perforation is rejected on non-reducing nodes") {
  Builder b;
  std::string x = b.input("x", ValueType::vector(ElementType::F32, 8));
  std::string y = b.add(x, x);
  Program p = [&] {
    b.output("y", y);
    return b.build();
  }();
  p.node_or_throw("add0").perforation = PerforationSpec{0, 8, 1};
  CHECK_THROWS_WITH_AS(validate(p), doctest::Contains("reducing"), Error);
}

TEST_CASE("red_perf on a reducing node validates and out-of-range specs fail") {
  Builder b;
  std::string a = b.input("a", ValueType::vector(ElementType::F32, 64));
  std::string m = b.input("m", ValueType::matrix(ElementType::F32, 3, 64));
  std::string h = b.hamming_distance(a, m);
  b.red_perf(h, 0, 32, 2);
  b.output("d", h);
  Program p = b.build();
  CHECK(p.validated);

  p.node_or_throw("hamming_distance0").perforation = PerforationSpec{0, 65, 1};
  CHECK_THROWS_AS(validate(p), Error);
}

TEST_CASE("schedule is deterministic across runs (diamond tiebreak)") {
  auto build = [] {
    Builder b;
    std::string x = b.input("x", ValueType::vector(ElementType::F32, 8));
    std::string l = b.sign(x);
    std::string r = b.sign_flip(x);
    std::string j = b.add(l, r);
    b.output("y", j);
    return b.build();
  };
  Program p = build();
  auto first = schedule(p);
  for (int i = 0; i < 100; ++i) CHECK(schedule(p) == first);
  CHECK(first == std::vector<std::string>{"sign0", "sign_flip0", "add0"});
}

TEST_CASE("interp executes the inference pipeline like the raw kernels") {
  const std::int64_t f = 24, d = 256, k = 6;
  Program p = listing1_program(f, d, k);
  auto in = listing1_inputs(f, d, k, 99);

  backend::ExecReport rep = backend::execute(p, in, BackendTag::Interp, 7);
  // independent path through the reference kernels
  Hypervector enc = ops::matmul_vm(in.at("query").vector(), in.at("projection").matrix());
  Hypervector dist = ops::hamming_vm(ops::sign(enc), in.at("classes").matrix());
  CHECK(rep.outputs.at("label").scalar().as_int() == ops::arg_min(dist));
}

TEST_CASE("text round-trip: structural equality") {
  Program p = listing1_program(8, 64, 3);
  std::string text = to_text(p);
  Program q = from_text(text);
  validate(q);
  CHECK(structurally_equal(p, q));
  // a second round trip is byte-identical
  CHECK(to_text(q) == text);
}

TEST_CASE("text parser reports unknown ops with the offending token") {
  CHECK_THROWS_WITH_AS(from_text("node h primitive hamming_distanec\n"),
                       doctest::Contains("hamming_distanec"), Error);
  CHECK_THROWS_WITH_AS(from_text("node h primitive hamming_distanec\n"),
                       doctest::Contains("line 1"), Error);
  CHECK_THROWS_WITH_AS(from_text("nonsense 1 2\n"), doctest::Contains("line 1"), Error);
}

TEST_CASE("text round-trip preserves perforation specs") {
  Builder b;
  std::string a = b.input("a", ValueType::vector(ElementType::F32, 64));
  std::string m = b.input("m", ValueType::matrix(ElementType::F32, 3, 64));
  std::string h = b.hamming_distance(a, m);
  b.red_perf(h, 4, 60, 3);
  b.output("d", h);
  Program p = b.build();
  Program q = from_text(to_text(p));
  CHECK(q.node_or_throw(h).perforation == PerforationSpec{4, 60, 3});
  validate(q);
  CHECK(structurally_equal(p, q));
}

namespace {

// Random DAG generator for the serialize/deserialize property: element-wise
// and reducing ops wired over a pool of vector values.
Program random_program(std::uint64_t seed) {
  CounterRng rng(seed, 77);
  Builder b(seed);
  const std::int64_t d = 16 + static_cast<std::int64_t>(rng.bits(0) % 48);
  std::vector<std::string> pool;
  pool.push_back(b.input("x0", ValueType::vector(ElementType::F32, d)));
  pool.push_back(b.input("x1", ValueType::vector(ElementType::F32, d)));
  std::string classes = b.input("classes", ValueType::matrix(ElementType::F32, 4, d));
  pool.push_back(b.add(pool[0], pool[1]));  // both inputs always consumed
  std::uint64_t ctr = 1;
  int n_ops = 3 + static_cast<int>(rng.bits(ctr++) % 8);
  for (int i = 0; i < n_ops; ++i) {
    // the last op always consumes `classes` so no input is left unbound
    std::uint64_t pick = i == n_ops - 1 ? 4 : rng.bits(ctr++) % 6;
    const std::string& a = pool[rng.bits(ctr++) % pool.size()];
    const std::string& c = pool[rng.bits(ctr++) % pool.size()];
    switch (pick) {
      case 0: pool.push_back(b.add(a, c)); break;
      case 1: pool.push_back(b.mul(a, c)); break;
      case 2: pool.push_back(b.sign(a)); break;
      case 3: pool.push_back(b.wrap_shift(a, static_cast<std::int64_t>(rng.bits(ctr++) % d))); break;
      case 4: {
        std::string h = b.hamming_distance(a, classes);
        if (rng.bits(ctr++) % 2 == 0) {
          std::int64_t begin = static_cast<std::int64_t>(rng.bits(ctr++) % (d / 2));
          b.red_perf(h, begin, d, 1 + static_cast<std::int64_t>(rng.bits(ctr++) % 3));
        }
        pool.push_back(b.arg_min(h));
        b.output("o" + std::to_string(i), pool.back());
        pool.pop_back();
        continue;
      }
      case 5: pool.push_back(b.sign_flip(a)); break;
    }
  }
  b.output("last", pool.back());
  return b.build();
}

}  // namespace

TEST_CASE("serialize/deserialize identity on 100 random programs") {
  for (std::uint64_t s = 0; s < 100; ++s) {
    Program p = random_program(s);
    Program q = from_text(to_text(p));
    validate(q);
    CHECK(structurally_equal(p, q));
  }
}

TEST_CASE("lowered hamming matches the primitive node (interp oracle)") {
  const std::int64_t f = 10, d = 2048, k = 26;
  Program p = listing1_program(f, d, k);
  Program low = lower_primitive_to_loops(p, "hamming_distance0");
  const Node& loop = low.node_or_throw("hamming_distance0");
  CHECK(loop.kind == NodeKind::ParallelLoop);
  CHECK(loop.trip == k);

  auto in = listing1_inputs(f, d, k, 4);
  auto r1 = backend::execute(p, in, BackendTag::Interp, 3);
  auto r2 = backend::execute(low, in, BackendTag::Interp, 3);
  CHECK(r1.outputs.at("label") == r2.outputs.at("label"));
}

TEST_CASE("lowering equivalence across ops and backends") {
  const std::int64_t f = 12, d = 96, k = 5;
  Builder b;
  std::string q = b.input("query", ValueType::vector(ElementType::F32, f));
  std::string proj = b.input("projection", ValueType::matrix(ElementType::F32, f, d));
  std::string classes = b.input("classes", ValueType::matrix(ElementType::F32, k, d));
  std::string enc = b.matmul(q, proj);
  std::string s = b.sign(enc);
  std::string sims = b.cossim(s, classes);
  std::string dist = b.hamming_distance(s, classes);
  std::string nrm = b.l2norm(enc);
  std::string nrm_rows = b.l2norm(classes);
  std::string summed = b.add(s, s);
  std::string shifted = b.wrap_shift(enc, 5);
  b.output("sims", sims);
  b.output("dist", dist);
  b.output("nrm", nrm);
  b.output("nrm_rows", nrm_rows);
  b.output("summed", summed);
  b.output("shifted", shifted);
  b.output("enc", enc);
  Program p = b.build();

  auto in = listing1_inputs(f, d, k, 31);
  auto base = backend::execute(p, in, BackendTag::Interp, 1);

  for (const char* node : {"matmul0", "sign0", "cossim0", "hamming_distance0", "l2norm0",
                           "l2norm1", "add0", "wrap_shift0"}) {
    Program low = lower_primitive_to_loops(p, node);
    for (BackendTag tag : {BackendTag::Interp, BackendTag::CpuParallel}) {
      auto got = backend::execute(low, in, tag, 1);
      for (const char* out : {"sims", "dist", "nrm", "nrm_rows", "summed", "shifted", "enc"}) {
        INFO("node=", node, " out=", out);
        CHECK(got.outputs.at(out) == base.outputs.at(out));
      }
    }
  }
}

TEST_CASE("lowered perforated ops keep the spec baked into bounds") {
  const std::int64_t f = 12, d = 96, k = 5;
  Builder b;
  std::string q = b.input("query", ValueType::vector(ElementType::F32, f));
  std::string proj = b.input("projection", ValueType::matrix(ElementType::F32, f, d));
  std::string classes = b.input("classes", ValueType::matrix(ElementType::F32, k, d));
  std::string enc = b.matmul(q, proj);
  b.red_perf(enc, 0, f, 2);
  std::string s = b.sign(enc);
  std::string dist = b.hamming_distance(s, classes);
  b.red_perf(dist, 0, d / 2, 1);
  b.output("dist", dist);
  Program p = b.build();

  auto in = listing1_inputs(f, d, k, 77);
  auto base = backend::execute(p, in, BackendTag::Interp, 1);
  Program low1 = lower_primitive_to_loops(p, "matmul0");
  Program low2 = lower_primitive_to_loops(low1, "hamming_distance0");
  auto got = backend::execute(low2, in, BackendTag::Interp, 1);
  CHECK(got.outputs.at("dist") == base.outputs.at("dist"));
}

TEST_CASE("lowering rejects non-expandable nodes") {
  Program p = listing1_program(8, 32, 3);
  CHECK_THROWS_WITH_AS(lower_primitive_to_loops(p, "arg_min0"),
                       doctest::Contains("not loop-expandable"), Error);
}

TEST_CASE("execute rejects missing or mistyped bindings") {
  Program p = listing1_program(8, 32, 3);
  auto in = listing1_inputs(8, 32, 3, 5);
  in.erase("classes");
  CHECK_THROWS_WITH_AS(backend::execute(p, in, BackendTag::Interp, 1),
                       doctest::Contains("classes"), Error);
  auto in2 = listing1_inputs(8, 32, 3, 5);
  in2.insert_or_assign("classes", Value(ops::random_hm(3, 64, ElementType::F32, 1)));
  CHECK_THROWS_AS(backend::execute(p, in2, BackendTag::Interp, 1), Error);
}

TEST_CASE("random constructors inside programs are backend- and run-deterministic") {
  Builder b(11);
  std::string g = b.gaussian_hypermatrix(6, 40, ElementType::F32);
  std::string r = b.random_hypervector(40, ElementType::I32);
  b.output("g", g);
  b.output("r", r);
  Program p = b.build();
  auto a1 = backend::execute(p, {}, BackendTag::Interp, 123);
  auto a2 = backend::execute(p, {}, BackendTag::CpuParallel, 123);
  auto a3 = backend::execute(p, {}, BackendTag::Interp, 124);
  CHECK(a1.outputs.at("g") == a2.outputs.at("g"));
  CHECK(a1.outputs.at("r") == a2.outputs.at("r"));
  CHECK_FALSE(a1.outputs.at("g") == a3.outputs.at("g"));
}
