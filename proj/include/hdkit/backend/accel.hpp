#pragma once

// Functional model of the coarse-grained HDC accelerator: a device holding an
// encoder matrix and class memory behind a narrow host interface (configure,
// data movement, one-sample train, one-sample infer), plus a parameterized
// timing model that charges cycles per processed element and per transferred
// word. Inference is random-projection encode + Hamming search with optional
// progressive early exit that never changes the returned label.

#include <cstdint>
#include <string>
#include <vector>

#include "hdkit/tensor.hpp"

namespace hdkit::backend {

struct AccelProfile {
  std::string name = "digital";
  std::int64_t dim_max = 16384;
  std::int64_t classes_max = 128;
  double cycles_encode_per_elem = 1.0;
  double cycles_infer_per_elem = 1.0;
  double cycles_train_per_elem = 1.0;
  double host_link_cost = 1.0;  // cycles per 64-bit word moved
  bool early_exit = false;

  // key=value text, '#' comments; unknown keys rejected.
  static AccelProfile from_file(const std::string& path);
  static AccelProfile from_text(const std::string& text, const std::string& name);
};

struct AccelCounters {
  double cycles = 0.0;
  std::int64_t bytes_moved = 0;
  std::int64_t elements_processed = 0;
};

class AccelDevice {
 public:
  explicit AccelDevice(AccelProfile profile) : profile_(std::move(profile)) {}

  void configure(std::int64_t dim, std::int64_t classes);
  void write_encoder(const Hypermatrix& dxf);
  void write_classes(const Hypermatrix& kxd);
  Hypermatrix read_classes();

  // sign(encoder x features): the device's one supported encoding.
  Hypervector encode(const Hypervector& features);
  // One-shot update: class_mem[label] += encode(features).
  void train_one(const Hypervector& features, std::int64_t label);
  // One perceptron refinement step on-device: predict, and on a miss add the
  // encoding to the true class and subtract it from the predicted one.
  std::int64_t retrain_one(const Hypervector& features, std::int64_t label);
  // Nearest class row by Hamming distance, lowest index on ties.
  std::int64_t infer_one(const Hypervector& features);

  const AccelCounters& counters() const { return counters_; }
  const AccelProfile& profile() const { return profile_; }
  bool configured() const { return dim_ > 0; }
  std::int64_t dim() const { return dim_; }
  std::int64_t classes() const { return classes_; }

  // Host-link charge for a transfer of `bytes`; exposed so the executor can
  // charge per-sample query/label movement decided by the movement plan.
  void charge_transfer(std::int64_t bytes);

 private:
  Hypervector encode_signs(const Hypervector& features);
  void repack_classes();

  AccelProfile profile_;
  AccelCounters counters_;
  std::int64_t dim_ = 0;
  std::int64_t classes_ = 0;
  Hypermatrix encoder_;       // dim x features, as written by the host
  Hypermatrix class_mem_;     // classes x dim
  Hypermatrix class_signs_;   // Bin1 view of class_mem for the Hamming pipeline
  bool encoder_set_ = false;
  bool classes_set_ = false;
  bool signs_dirty_ = false;
};

}  // namespace hdkit::backend
