#pragma once

#include "hdkit/apps/classifier.hpp"

namespace hdkit::apps {

struct ClusterState {
  Hypermatrix centers;  // K x D, Bin1
  std::vector<std::int64_t> assignments;
  std::int64_t iterations = 0;
  // total within-cluster Hamming distance, recorded after every assignment
  // step; non-increasing by construction (majority-vote centers minimize it)
  std::vector<std::int64_t> objective_history;
};

struct ClusterOptions {
  std::int64_t k = 2;
  std::int64_t dim = 2048;
  std::int64_t max_iters = 32;
  std::uint64_t seed = 0;
  backend::BackendTag backend = backend::BackendTag::Interp;
  const backend::AccelProfile* profile = nullptr;
};

// K-means over random-projection encodings: encode once, seed centers from K
// distinct encoded samples, then alternate Hamming-nearest assignment (an
// inference_loop stage, accelerator-mappable) with host-side majority-vote
// center updates. Stops when assignments stabilize or at max_iters. Empty
// clusters reseed from the sample farthest from its center.
ClusterState cluster(const Dataset& ds, const ClusterOptions& opt);

}  // namespace hdkit::apps
