#pragma once

#include <bit>
#include <cstdint>
#include <vector>

#include "hdkit/element_type.hpp"

namespace hdkit {

// Sign-packed payload of a Bin1 tensor row: bit i (word i/64, bit i%64,
// LSB first) is 1 for +1 and 0 for -1. Padding bits past dim-1 stay zero;
// every mutator below maintains that invariant.
class PackedBits {
 public:
  PackedBits() = default;
  explicit PackedBits(std::int64_t dim)
      : dim_(dim), words_(static_cast<std::size_t>(word_count(dim)), 0) {
    if (dim <= 0) throw Error("PackedBits: dim must be positive");
  }

  static std::int64_t word_count(std::int64_t dim) { return (dim + 63) / 64; }

  std::int64_t dim() const { return dim_; }
  std::int64_t words() const { return static_cast<std::int64_t>(words_.size()); }

  std::uint64_t word(std::int64_t w) const { return words_[static_cast<std::size_t>(w)]; }
  std::uint64_t* data() { return words_.data(); }
  const std::uint64_t* data() const { return words_.data(); }

  bool get(std::int64_t i) const {
    return (words_[static_cast<std::size_t>(i >> 6)] >> (i & 63)) & 1u;
  }

  // +1 when the bit is set, -1 otherwise.
  int sign_at(std::int64_t i) const { return get(i) ? 1 : -1; }

  void set(std::int64_t i, bool plus_one) {
    std::uint64_t& w = words_[static_cast<std::size_t>(i >> 6)];
    std::uint64_t m = std::uint64_t{1} << (i & 63);
    if (plus_one)
      w |= m;
    else
      w &= ~m;
  }

  // Last-word mask with ones at valid bit positions (all-ones if dim % 64 == 0).
  std::uint64_t tail_mask() const {
    int rem = static_cast<int>(dim_ & 63);
    return rem == 0 ? ~std::uint64_t{0} : ((std::uint64_t{1} << rem) - 1);
  }

  void clear_padding() {
    if (!words_.empty()) words_.back() &= tail_mask();
  }

  // Number of positions where the signs differ; padding is excluded because
  // both operands keep it zeroed.
  std::int64_t hamming(const PackedBits& other) const {
    std::int64_t mismatches = 0;
    for (std::size_t w = 0; w < words_.size(); ++w)
      mismatches += std::popcount(words_[w] ^ other.words_[w]);
    return mismatches;
  }

  // Hamming restricted to the positions selected by `mask` (same dim).
  std::int64_t hamming_masked(const PackedBits& other, const PackedBits& mask) const {
    std::int64_t mismatches = 0;
    for (std::size_t w = 0; w < words_.size(); ++w)
      mismatches += std::popcount((words_[w] ^ other.words_[w]) & mask.words_[w]);
    return mismatches;
  }

  std::int64_t popcount() const {
    std::int64_t n = 0;
    for (std::uint64_t w : words_) n += std::popcount(w);
    return n;
  }

  bool operator==(const PackedBits& other) const = default;

  // Mask with ones at begin, begin+stride, ... < end. Used by perforated
  // packed kernels; the full-range stride-1 spec yields the all-ones mask.
  static PackedBits perforation_mask(std::int64_t dim, std::int64_t begin,
                                     std::int64_t end, std::int64_t stride) {
    PackedBits m(dim);
    if (stride == 1) {
      for (std::int64_t i = begin; i < end; ++i) m.set(i, true);
    } else {
      for (std::int64_t i = begin; i < end; i += stride) m.set(i, true);
    }
    return m;
  }

 private:
  std::int64_t dim_ = 0;
  std::vector<std::uint64_t> words_;
};

}  // namespace hdkit
