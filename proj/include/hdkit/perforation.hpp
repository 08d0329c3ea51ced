#pragma once

#include <cstdint>
#include <string>

#include "hdkit/element_type.hpp"

namespace hdkit {

// Reduction-sampling directive: visit indices begin, begin+stride, ... < end
// of a reducing op's reduction axis. Attached to hamming_distance, cossim,
// matmul, or l2norm nodes. Hamming/cossim results are NOT rescaled (only
// relative magnitudes matter there); matmul/l2norm accumulators are scaled by
// the exact rational full/visited before the final cast.
struct PerforationSpec {
  std::int64_t begin = 0;
  std::int64_t end = 0;  // exclusive
  std::int64_t stride = 1;

  std::int64_t visited() const { return (end - begin + stride - 1) / stride; }

  bool covers_all(std::int64_t reduction_len) const {
    return begin == 0 && end == reduction_len && stride == 1;
  }

  void validate(std::int64_t reduction_len) const {
    if (begin < 0 || begin >= end || end > reduction_len || stride < 1)
      throw Error("perforation spec (" + std::to_string(begin) + "," +
                  std::to_string(end) + "," + std::to_string(stride) +
                  ") out of range for reduction length " +
                  std::to_string(reduction_len));
  }

  bool operator==(const PerforationSpec&) const = default;
};

}  // namespace hdkit
