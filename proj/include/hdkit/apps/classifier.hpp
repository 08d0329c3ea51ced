#pragma once

#include "hdkit/apps/dataset.hpp"
#include "hdkit/backend/execute.hpp"

namespace hdkit::apps {

struct ClassifierModel {
  Hypermatrix encoder;  // D x F, gaussian random projection
  Hypermatrix classes;  // K x D; f32 sums, or Bin1 under the binarized profile
  ir::SimilarityTag similarity = ir::SimilarityTag::Cosine;
  bool binarized = false;

  std::int64_t dim() const { return encoder.rows(); }
  std::int64_t feature_count() const { return encoder.dim(); }
  std::int64_t class_count() const { return classes.rows(); }
};

// Stage body programs (the "implementation functions" host backends run).
ir::Program make_encode_body(std::int64_t f, std::int64_t d,
                             ElementType feat_elem = ElementType::F32);
ir::Program make_infer_body(std::int64_t f, std::int64_t d, std::int64_t k,
                            ir::SimilarityTag sim,
                            ElementType feat_elem = ElementType::F32,
                            ElementType class_elem = ElementType::F32);
ir::Program make_train_body(std::int64_t f, std::int64_t d, std::int64_t k,
                            ir::SimilarityTag sim);

// Whole single-stage programs. Inputs: queries/labels/classes/projection as
// the stage signature requires; the projection input is the F x D transpose
// of the model encoder.
ir::Program make_inference_program(std::int64_t n, std::int64_t f, std::int64_t d,
                                   std::int64_t k, ir::SimilarityTag sim);
ir::Program make_training_program(std::int64_t n, std::int64_t f, std::int64_t d,
                                  std::int64_t k, ir::SimilarityTag sim,
                                  std::int64_t epochs);
ir::Program make_encoding_program(std::int64_t n, std::int64_t f, std::int64_t d);

// Canonical perforation targets inside the single-stage inference program.
std::string inference_encode_node(const ir::Program& p);
std::string inference_similarity_node(const ir::Program& p);

struct TrainOptions {
  std::int64_t dim = 10240;
  ir::SimilarityTag similarity = ir::SimilarityTag::Cosine;
  std::int64_t epochs = 0;  // perceptron refinement passes after the one-shot pass
  std::uint64_t seed = 0;
  backend::BackendTag backend = backend::BackendTag::Interp;
  const backend::AccelProfile* profile = nullptr;
};

ClassifierModel train_classifier(const Dataset& ds, const TrainOptions& opt);

struct InferResult {
  std::vector<std::int64_t> labels;
  double accuracy = -1.0;  // when the dataset is labeled
  backend::ExecReport report;
};

InferResult infer_classifier(const ClassifierModel& model, const Dataset& ds,
                             backend::BackendTag backend,
                             const backend::AccelProfile* profile = nullptr);

// Run a (possibly pass-transformed) inference program against a model and
// dataset, casting each input to the representation the program's bindings
// declare (packed classes for binarized programs, integer feature casts, ...).
InferResult run_inference_program(const ir::Program& prog, const ClassifierModel& model,
                                  const Dataset& ds, backend::BackendTag backend,
                                  const backend::AccelProfile* profile = nullptr);

// Cast `v` to the element type a binding declares (sign-packing for Bin1).
backend::Value adapt_to_binding(const ir::ValueType& want, backend::Value v);

void save_model(const std::string& path, const ClassifierModel& model);
ClassifierModel load_model(const std::string& path);

double accuracy_of(const std::vector<std::int64_t>& predicted,
                   const std::vector<std::int64_t>& truth);

}  // namespace hdkit::apps
