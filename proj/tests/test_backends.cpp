#include <doctest.h>

#include "hdkit/apps/classifier.hpp"
#include "hdkit/ir/validate.hpp"
#include "hdkit/ops.hpp"
#include "hdkit/par.hpp"

using namespace hdkit;
using namespace hdkit::backend;
using apps::Dataset;

namespace {

Dataset blobs(std::int64_t n_per_class, std::int64_t k, std::int64_t f, double spread,
              std::uint64_t seed) {
  CounterRng rng(seed, 991);
  std::vector<std::vector<double>> rows;
  std::vector<std::int64_t> labels;
  std::uint64_t ctr = 0;
  for (std::int64_t c = 0; c < k; ++c) {
    std::vector<double> mean(static_cast<std::size_t>(f));
    for (auto& x : mean) x = rng.gaussian(ctr++) * 2.0;
    for (std::int64_t i = 0; i < n_per_class; ++i) {
      std::vector<double> row(static_cast<std::size_t>(f));
      for (std::int64_t j = 0; j < f; ++j)
        row[static_cast<std::size_t>(j)] = mean[static_cast<std::size_t>(j)] + spread * rng.gaussian(ctr++);
      rows.push_back(std::move(row));
      labels.push_back(c);
    }
  }
  return apps::dataset_from_rows(rows, labels);
}

AccelProfile profile_with(bool early_exit) {
  AccelProfile p;
  p.early_exit = early_exit;
  return p;
}

}  // namespace

TEST_CASE("device class memory round-trips and counters charge the link") {
  AccelDevice dev(profile_with(false));
  dev.configure(128, 4);
  CHECK_THROWS_WITH_AS(dev.read_classes(), doctest::Contains("before write"), Error);

  Hypermatrix classes = ops::gaussian_hm(4, 128, ElementType::F32, 3);
  Hypermatrix encoder = ops::gaussian_hm(128, 16, ElementType::F32, 4);
  dev.write_encoder(encoder);
  std::int64_t after_encoder = dev.counters().bytes_moved;
  CHECK(after_encoder == 128 * 16 * 4);
  dev.write_classes(classes);
  CHECK(dev.counters().bytes_moved - after_encoder == 4 * 128 * 4);
  CHECK(dev.read_classes() == classes);

  CHECK_THROWS_WITH_AS(dev.write_classes(ops::gaussian_hm(4, 64, ElementType::F32, 5)),
                       doctest::Contains("does not match"), Error);
}

TEST_CASE("device capacity limits are enforced at configure time") {
  AccelDevice dev(profile_with(false));
  dev.configure(10240, 26);  // the paper-scale shape fits the default profile
  CHECK_THROWS_WITH_AS(dev.configure(1 << 20, 4), doctest::Contains("capacity"), Error);
  CHECK_THROWS_WITH_AS(dev.configure(128, 100000), doctest::Contains("capacity"), Error);
}

TEST_CASE("train_one then infer_one returns the trained label") {
  AccelDevice dev(profile_with(false));
  dev.configure(256, 3);
  dev.write_encoder(ops::gaussian_hm(256, 12, ElementType::F32, 7));
  dev.write_classes(Hypermatrix(ElementType::F32, 3, 256));
  Hypervector sample = ops::gaussian_hv(12, ElementType::F32, 8);
  dev.train_one(sample, 1);
  CHECK(dev.infer_one(sample) == 1);
  CHECK_THROWS_WITH_AS(dev.train_one(sample, 9), doctest::Contains("label"), Error);
}

TEST_CASE("early exit never changes the predicted label") {
  const std::int64_t f = 16, d = 512, k = 8, queries = 300;
  Hypermatrix encoder = ops::gaussian_hm(d, f, ElementType::F32, 11);
  Hypermatrix classes = ops::gaussian_hm(k, d, ElementType::F32, 12);

  AccelDevice full(profile_with(false));
  AccelDevice pruned(profile_with(true));
  for (AccelDevice* dev : {&full, &pruned}) {
    dev->configure(d, k);
    dev->write_encoder(encoder);
    dev->write_classes(classes);
  }
  for (std::int64_t q = 0; q < queries; ++q) {
    Hypervector query = ops::gaussian_hv(f, ElementType::F32, 100 + static_cast<std::uint64_t>(q));
    CHECK(full.infer_one(query) == pruned.infer_one(query));
  }

  // adversarial near-ties: duplicated class rows differing in the last word
  Hypermatrix tie_classes(ElementType::F32, 3, d);
  Hypervector base = ops::sign(ops::gaussian_hv(d, ElementType::F64, 55));
  Hypervector tweaked = ops::wrap_shift(base, 1);
  for (std::int64_t c = 0; c < 3; ++c)
    tie_classes.set_row(c, ops::type_cast(c == 2 ? tweaked : base, ElementType::F32));
  AccelDevice tie_full(profile_with(false));
  AccelDevice tie_pruned(profile_with(true));
  for (AccelDevice* dev : {&tie_full, &tie_pruned}) {
    dev->configure(d, 3);
    dev->write_encoder(encoder);
    dev->write_classes(tie_classes);
  }
  for (std::int64_t q = 0; q < 100; ++q) {
    Hypervector query = ops::gaussian_hv(f, ElementType::F32, 900 + static_cast<std::uint64_t>(q));
    std::int64_t a = tie_full.infer_one(query);
    std::int64_t b = tie_pruned.infer_one(query);
    CHECK(a == b);
    // ties between rows 0 and 1 must pick 0 (lowest index)
    CHECK(a != 1);
  }
}

TEST_CASE("early exit processes strictly fewer elements on separable data") {
  Dataset ds = blobs(12, 4, 16, 0.3, 33);
  const std::int64_t d = 1024;
  Hypermatrix encoder = ops::gaussian_hm(d, 16, ElementType::F32, 3);
  // well-separated class vectors: encodings of the blob means
  AccelDevice full(profile_with(false));
  AccelDevice pruned(profile_with(true));
  for (AccelDevice* dev : {&full, &pruned}) {
    dev->configure(d, 4);
    dev->write_encoder(encoder);
    dev->write_classes(Hypermatrix(ElementType::F32, 4, d));
    for (std::int64_t i = 0; i < ds.samples(); ++i)
      dev->train_one(ds.features.row_copy(i), ds.labels[static_cast<std::size_t>(i)]);
  }
  std::int64_t full_base = full.counters().elements_processed;
  std::int64_t pruned_base = pruned.counters().elements_processed;
  for (std::int64_t i = 0; i < ds.samples(); ++i) {
    CHECK(full.infer_one(ds.features.row_copy(i)) == pruned.infer_one(ds.features.row_copy(i)));
  }
  std::int64_t encode_cost = ds.samples() * d * 16;
  std::int64_t full_search = full.counters().elements_processed - full_base - encode_cost;
  std::int64_t pruned_search = pruned.counters().elements_processed - pruned_base - encode_cost;
  CHECK(full_search == ds.samples() * 4 * d);
  CHECK(pruned_search < full_search);
  CHECK(pruned_search > 0);
}

TEST_CASE("hoisted movement plan: training moves each resident buffer once") {
  ir::Program p = apps::make_training_program(100, 16, 256, 4, ir::SimilarityTag::Hamming, 3);
  MovementPlan plan = hoist_data_movement(p);
  std::int64_t encoder_writes = 0, class_writes = 0, class_reads = 0;
  for (const BufferMove& m : plan.moves) {
    if (m.buffer == "encoder" && m.direction == "h2d") encoder_writes += m.count;
    if (m.buffer == "classes" && m.direction == "h2d") class_writes += m.count;
    if (m.buffer == "classes" && m.direction == "d2h") class_reads += m.count;
  }
  CHECK(encoder_writes == 1);
  CHECK(class_writes == 1);
  CHECK(class_reads == 1);

  // naive-vs-hoisted ratio grows like N for training
  MovementPlan naive = naive_data_movement(p);
  double ratio = static_cast<double>(naive.total_bytes()) /
                 static_cast<double>(plan.total_bytes());
  CHECK(ratio > 50.0);
}

TEST_CASE("hoisted movement plan: inference moves queries per sample, rest once") {
  ir::Program p = apps::make_inference_program(64, 16, 256, 4, ir::SimilarityTag::Hamming);
  MovementPlan plan = hoist_data_movement(p);
  std::map<std::string, std::int64_t> counts;
  for (const BufferMove& m : plan.moves) counts[m.buffer + ":" + m.direction] += m.count;
  CHECK(counts["encoder:h2d"] == 1);
  CHECK(counts["classes:h2d"] == 1);
  CHECK(counts["queries:h2d"] == 64);
  CHECK(counts["labels:d2h"] == 64);
  CHECK(hoist_data_movement(apps::make_encoding_program(8, 4, 32)).moves.size() == 3);
  // programs without stage loops produce an empty plan
  ir::Program empty;
  ir::validate(empty);
  CHECK(hoist_data_movement(empty).moves.empty());
}

TEST_CASE("AccelSim classification equals Interp end to end (hamming profile)") {
  Dataset train = blobs(25, 5, 20, 0.8, 41);
  Dataset test = blobs(10, 5, 20, 0.8, 42);

  apps::TrainOptions opt;
  opt.dim = 512;
  opt.similarity = ir::SimilarityTag::Hamming;
  opt.seed = 5;
  opt.backend = BackendTag::Interp;
  apps::ClassifierModel by_interp = apps::train_classifier(train, opt);
  opt.backend = BackendTag::AccelSim;
  apps::ClassifierModel by_accel = apps::train_classifier(train, opt);
  CHECK(by_interp.classes == by_accel.classes);

  auto host = apps::infer_classifier(by_interp, test, BackendTag::Interp);
  auto accel = apps::infer_classifier(by_interp, test, BackendTag::AccelSim);
  CHECK(host.labels == accel.labels);
  CHECK(accel.report.accel.has_value());
  CHECK(accel.report.accel->elements_processed <= 512 * 5 * test.samples() + 512 * 20 * test.samples());

  // retraining epochs stay device-resident and still match the host path
  opt.epochs = 3;
  opt.backend = BackendTag::Interp;
  apps::ClassifierModel refined_host = apps::train_classifier(train, opt);
  opt.backend = BackendTag::AccelSim;
  apps::ClassifierModel refined_accel = apps::train_classifier(train, opt);
  CHECK(refined_host.classes == refined_accel.classes);
}

TEST_CASE("AccelSim falls back to the host path for cosine stages") {
  Dataset train = blobs(10, 3, 12, 0.5, 51);
  apps::TrainOptions opt;
  opt.dim = 128;
  opt.similarity = ir::SimilarityTag::Cosine;
  opt.seed = 2;
  opt.backend = BackendTag::AccelSim;
  apps::ClassifierModel m = apps::train_classifier(train, opt);
  auto res = apps::infer_classifier(m, train, BackendTag::AccelSim);
  // cosine has no native stage: the whole run stays on host and no
  // accelerator counters are reported
  CHECK_FALSE(res.report.accel.has_value());
  opt.backend = BackendTag::Interp;
  apps::ClassifierModel host = apps::train_classifier(train, opt);
  CHECK(m.classes == host.classes);
}

TEST_CASE("report bytes_moved equals the executor's move log") {
  Dataset test = blobs(14, 4, 16, 0.5, 61);
  apps::TrainOptions opt;
  opt.dim = 256;
  opt.similarity = ir::SimilarityTag::Hamming;
  opt.seed = 1;
  apps::ClassifierModel m = apps::train_classifier(test, opt);
  auto res = apps::infer_classifier(m, test, BackendTag::AccelSim);
  REQUIRE(res.report.accel.has_value());
  std::int64_t logged = 0;
  for (const BufferMove& mv : res.report.moved_buffers) logged += mv.bytes;
  CHECK(logged == res.report.accel->bytes_moved);
}

TEST_CASE("CpuParallel reports are identical across thread counts 1, 2, 8") {
  Dataset test = blobs(12, 3, 14, 0.6, 71);
  apps::TrainOptions opt;
  opt.dim = 192;
  opt.similarity = ir::SimilarityTag::Cosine;
  opt.seed = 3;
  apps::ClassifierModel m = apps::train_classifier(test, opt);

  auto interp = apps::infer_classifier(m, test, BackendTag::Interp);
  for (int threads : {1, 2, 8}) {
    hdkit::par::set_threads(threads);
    auto res = apps::infer_classifier(m, test, BackendTag::CpuParallel);
    CHECK(res.labels == interp.labels);
  }
  hdkit::par::set_threads(0);
}

TEST_CASE("device profile files parse and reject unknown keys") {
  AccelProfile p = AccelProfile::from_text(
      "# reram-style\n"
      "dim_max=16384\nclasses_max=64\ncycles_encode_per_elem=0.25\n"
      "cycles_infer_per_elem=0.125\ncycles_train_per_elem=0.25\n"
      "host_link_cost=1\nearly_exit=1\n",
      "reram");
  CHECK(p.early_exit);
  CHECK(p.cycles_infer_per_elem == 0.125);
  CHECK_THROWS_WITH_AS(AccelProfile::from_text("bogus_key=1\n", "x"),
                       doctest::Contains("unknown key"), Error);
}
