#include "hdkit/apps/classifier.hpp"

#include <fstream>

#include "hdkit/ir/builder.hpp"
#include "hdkit/ops.hpp"
#include "hdkit/serialize.hpp"

namespace hdkit::apps {

namespace ir = hdkit::ir;
using backend::BackendTag;
using backend::Value;
using ir::Builder;
using ir::Expr;
using ir::Program;
using ir::SimilarityTag;
using ir::ValueType;

Program make_encode_body(std::int64_t f, std::int64_t d, ElementType feat_elem) {
  Builder b;
  std::string sample = b.input("sample", ValueType::vector(feat_elem, f));
  std::string proj = b.input("projection", ValueType::matrix(feat_elem, f, d));
  std::string enc = b.sign(b.matmul(sample, proj));
  b.output("encoded", enc);
  return b.build();
}

Program make_infer_body(std::int64_t f, std::int64_t d, std::int64_t k, SimilarityTag sim,
                        ElementType feat_elem, ElementType class_elem) {
  Builder b;
  std::string query = b.input("query", ValueType::vector(feat_elem, f));
  std::string classes = b.input("classes", ValueType::matrix(class_elem, k, d));
  std::string proj = b.input("projection", ValueType::matrix(feat_elem, f, d));
  std::string enc = b.sign(b.matmul(query, proj));
  std::string label;
  if (sim == SimilarityTag::Hamming) {
    label = b.arg_min(b.hamming_distance(enc, classes));
  } else {
    label = b.arg_max(b.cossim(enc, classes));
  }
  b.output("label", label);
  return b.build();
}

Program make_train_body(std::int64_t f, std::int64_t d, std::int64_t k, SimilarityTag sim) {
  Builder b;
  std::string query = b.input("query", ValueType::vector(ElementType::F32, f));
  std::string label = b.input("label", ValueType::scalar(ElementType::I64));
  std::string classes = b.input("classes", ValueType::matrix(ElementType::F32, k, d));
  std::string proj = b.input("projection", ValueType::matrix(ElementType::F32, f, d));
  std::string epoch = b.input("epoch", ValueType::scalar(ElementType::I64));

  std::string enc = b.sign(b.matmul(query, proj));
  std::string pred = sim == SimilarityTag::Hamming
                         ? b.arg_min(b.hamming_distance(enc, classes))
                         : b.arg_max(b.cossim(enc, classes));

  // one-shot pass (epoch 0) always adds to the true class; refinement passes
  // add/subtract only on a misprediction
  using K = Expr::Kind;
  Expr miss = Expr::binary(K::Ne, Expr::load(1), Expr::load(2));
  Expr add_gate = Expr::select(Expr::binary(K::Eq, Expr::load(0), Expr::cint(0)),
                               Expr::cint(1), Expr(miss));
  Expr sub_gate = Expr::select(Expr::binary(K::Eq, Expr::load(0), Expr::cint(0)),
                               Expr::cint(0), Expr(miss));
  std::string ga = b.leaf(add_gate, ValueType::scalar(ElementType::I64), {epoch, pred, label});
  std::string gs = b.leaf(sub_gate, ValueType::scalar(ElementType::I64), {epoch, pred, label});

  // row' = row +- gate * enc, built as a parallel loop over D
  auto update_row = [&](const std::string& row, const std::string& gate,
                        const std::string& encoded, bool subtract) {
    ir::Program body;
    Expr term = Expr::binary(K::Mul, Expr::load(1), Expr::load(2, {Expr::loop_idx()}));
    Expr upd = Expr::binary(subtract ? K::Sub : K::Add, Expr::load(0, {Expr::loop_idx()}),
                            std::move(term));
    ir::Node leaf;
    leaf.id = "upd";
    leaf.kind = ir::NodeKind::LeafCompute;
    leaf.expr = std::move(upd);
    leaf.out_type = ValueType::scalar(ElementType::F32);
    body.inputs.push_back(ir::InputBinding{"in0", ValueType::vector(ElementType::F32, d),
                                           {ir::PortRef{"upd", 0}}});
    body.inputs.push_back(ir::InputBinding{"in1", ValueType::scalar(ElementType::I64),
                                           {ir::PortRef{"upd", 1}}});
    body.inputs.push_back(ir::InputBinding{"in2", ValueType::vector(ElementType::F32, d),
                                           {ir::PortRef{"upd", 2}}});
    body.outputs.push_back(ir::OutputBinding{"out", ir::PortRef{"upd", 0}});
    body.nodes.push_back(std::move(leaf));
    return b.parallel_loop(std::move(body), d, ValueType::vector(ElementType::F32, d),
                           {row, gate, encoded});
  };

  std::string row_true = b.get_matrix_row(classes, label);
  std::string new_true = update_row(row_true, ga, enc, false);
  std::string c1 = b.set_matrix_row(classes, new_true, label);
  // read the predicted row from the already-updated matrix so a correct
  // prediction (pred == label) keeps the one-shot update intact
  std::string row_pred = b.get_matrix_row(c1, pred);
  std::string new_pred = update_row(row_pred, gs, enc, true);
  std::string c2 = b.set_matrix_row(c1, new_pred, pred);
  b.output("classes", c2);
  return b.build();
}

namespace {

ir::StageAlgo algo_of(SimilarityTag sim) {
  ir::StageAlgo a;
  a.similarity = sim;
  a.random_projection = true;
  return a;
}

}  // namespace

Program make_inference_program(std::int64_t n, std::int64_t f, std::int64_t d,
                               std::int64_t k, SimilarityTag sim) {
  Builder b;
  std::string queries = b.input("queries", ValueType::matrix(ElementType::F32, n, f));
  std::string classes = b.input("classes", ValueType::matrix(ElementType::F32, k, d));
  std::string proj = b.input("projection", ValueType::matrix(ElementType::F32, f, d));
  std::string labels =
      b.inference_loop(make_infer_body(f, d, k, sim), queries, classes, proj, algo_of(sim));
  b.output("labels", labels);
  return b.build();
}

Program make_training_program(std::int64_t n, std::int64_t f, std::int64_t d,
                              std::int64_t k, SimilarityTag sim, std::int64_t epochs) {
  Builder b;
  std::string queries = b.input("queries", ValueType::matrix(ElementType::F32, n, f));
  std::string labels = b.input("labels", ValueType::vector(ElementType::I64, n));
  std::string classes = b.input("classes", ValueType::matrix(ElementType::F32, k, d));
  std::string proj = b.input("projection", ValueType::matrix(ElementType::F32, f, d));
  std::string trained = b.training_loop(make_train_body(f, d, k, sim), queries, labels,
                                        classes, proj, epochs, algo_of(sim));
  b.output("classes", trained);
  return b.build();
}

Program make_encoding_program(std::int64_t n, std::int64_t f, std::int64_t d) {
  Builder b;
  std::string queries = b.input("queries", ValueType::matrix(ElementType::F32, n, f));
  std::string proj = b.input("projection", ValueType::matrix(ElementType::F32, f, d));
  std::string enc = b.encoding_loop(make_encode_body(f, d), queries, proj, algo_of(SimilarityTag::Hamming));
  b.output("encoded", enc);
  return b.build();
}

namespace {

const ir::Node& single_stage(const Program& p) {
  for (const ir::Node& n : p.nodes)
    if (n.kind == ir::NodeKind::StageLoop) return n;
  throw Error("program has no stage loop");
}

}  // namespace

std::string inference_encode_node(const Program& p) {
  const ir::Node& s = single_stage(p);
  for (const ir::Node& n : s.body->nodes)
    if (n.kind == ir::NodeKind::Primitive && n.op == ir::OpTag::MatMul)
      return s.id + "/" + n.id;
  throw Error("no encoding matmul in stage body");
}

std::string inference_similarity_node(const Program& p) {
  const ir::Node& s = single_stage(p);
  for (const ir::Node& n : s.body->nodes)
    if (n.kind == ir::NodeKind::Primitive &&
        (n.op == ir::OpTag::Hamming || n.op == ir::OpTag::CosSim))
      return s.id + "/" + n.id;
  throw Error("no similarity node in stage body");
}

ClassifierModel train_classifier(const Dataset& ds, const TrainOptions& opt) {
  if (!ds.labeled()) throw Error("training requires a labeled dataset");
  if (opt.dim < 1) throw Error("dim must be positive");
  std::int64_t f = ds.feature_count();
  std::int64_t k = ds.class_count;
  std::uint64_t enc_seed = CounterRng::mix(opt.seed ^ 0x454e43u);  // encoder stream

  ClassifierModel model;
  model.encoder = ops::gaussian_hm(opt.dim, f, ElementType::F32, enc_seed);
  model.similarity = opt.similarity;

  Program prog = make_training_program(ds.samples(), f, opt.dim, k, opt.similarity, opt.epochs);
  std::map<std::string, Value> in;
  in.emplace("queries", Value(ds.features));
  Hypervector labels(ElementType::I64, ds.samples());
  for (std::int64_t i = 0; i < ds.samples(); ++i) labels.set_from_int(i, ds.labels[static_cast<std::size_t>(i)]);
  in.emplace("labels", Value(std::move(labels)));
  in.emplace("classes", Value(Hypermatrix(ElementType::F32, k, opt.dim)));
  in.emplace("projection", Value(ops::matrix_transpose(model.encoder)));

  backend::ExecReport rep = backend::execute(prog, in, opt.backend, opt.seed, opt.profile);
  model.classes = rep.outputs.at("classes").matrix();
  return model;
}

Value adapt_to_binding(const ir::ValueType& want, Value v) {
  if (v.is_matrix() && v.matrix().elem() != want.elem)
    return Value(ops::type_cast(v.matrix(), want.elem));
  if (v.is_vector() && v.vector().elem() != want.elem)
    return Value(ops::type_cast(v.vector(), want.elem));
  return v;
}

InferResult run_inference_program(const Program& prog, const ClassifierModel& model,
                                  const Dataset& ds, BackendTag backend,
                                  const backend::AccelProfile* profile) {
  if (ds.feature_count() != model.feature_count())
    throw Error("dataset has " + std::to_string(ds.feature_count()) +
                " features but the model encodes " + std::to_string(model.feature_count()));
  std::map<std::string, Value> in;
  in.emplace("queries", adapt_to_binding(prog.find_input("queries")->type, Value(ds.features)));
  in.emplace("classes", adapt_to_binding(prog.find_input("classes")->type, Value(model.classes)));
  in.emplace("projection", adapt_to_binding(prog.find_input("projection")->type,
                                            Value(ops::matrix_transpose(model.encoder))));

  InferResult res;
  res.report = backend::execute(prog, in, backend, 0, profile);
  const Hypervector& labels = res.report.outputs.at("labels").vector();
  res.labels.resize(static_cast<std::size_t>(labels.dim()));
  for (std::int64_t i = 0; i < labels.dim(); ++i)
    res.labels[static_cast<std::size_t>(i)] = labels.get_as_int(i);
  if (ds.labeled()) res.accuracy = accuracy_of(res.labels, ds.labels);
  return res;
}

InferResult infer_classifier(const ClassifierModel& model, const Dataset& ds,
                             BackendTag backend, const backend::AccelProfile* profile) {
  Program prog = make_inference_program(ds.samples(), model.feature_count(), model.dim(),
                                        model.class_count(), model.similarity);
  if (model.binarized) {
    // a binarized model carries packed classes; retarget the program the same
    // way the binarization pass would
    ir::InputBinding* cb = prog.find_input("classes");
    cb->type.elem = ElementType::Bin1;
    ir::Node& stage = prog.node_or_throw(single_stage(prog).id);
    stage.body->find_input("classes")->type.elem = ElementType::Bin1;
    for (ir::Node& n : stage.body->nodes)
      if (n.op == ir::OpTag::Sign) n.out_elem_override = ElementType::Bin1;
    ir::refresh_types(prog);
    ir::validate(prog);
  }
  return run_inference_program(prog, model, ds, backend, profile);
}

double accuracy_of(const std::vector<std::int64_t>& predicted,
                   const std::vector<std::int64_t>& truth) {
  if (predicted.size() != truth.size() || truth.empty())
    throw Error("accuracy: label vectors must match and be nonempty");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) correct += predicted[i] == truth[i];
  return static_cast<double>(correct) / static_cast<double>(truth.size());
}

void save_model(const std::string& path, const ClassifierModel& model) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open '" + path + "' for writing");
  std::uint8_t sim = model.similarity == SimilarityTag::Hamming ? 1 : 0;
  std::uint8_t profile = model.binarized ? 1 : 0;
  f.put(static_cast<char>(sim));
  f.put(static_cast<char>(profile));
  io::write_hypermatrix(f, model.encoder);
  io::write_hypermatrix(f, model.classes);
  if (!f) throw Error("write failed: " + path);
}

ClassifierModel load_model(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open '" + path + "'");
  int sim = f.get();
  int profile = f.get();
  if (sim < 0 || profile < 0 || sim > 1 || profile > 1)
    throw Error("bad model header in '" + path + "'");
  ClassifierModel m;
  m.similarity = sim == 1 ? SimilarityTag::Hamming : SimilarityTag::Cosine;
  m.binarized = profile == 1;
  m.encoder = io::read_hypermatrix(f);
  m.classes = io::read_hypermatrix(f);
  if (m.binarized && m.classes.elem() != ElementType::Bin1)
    throw Error("binarized model profile requires Bin1 classes");
  return m;
}

}  // namespace hdkit::apps
