#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace qdag {

// Plain bitvector with constant-time rank: an absolute sample every 512 bits
// plus in-block popcounts over at most eight words.
class RankBitVector {
 public:
  static constexpr std::size_t kBlockBits = 512;
  static constexpr std::size_t kWordsPerBlock = kBlockBits / 64;

  RankBitVector() = default;
  explicit RankBitVector(std::size_t size) : size_(size), words_((size + 63) / 64, 0) {}

  std::size_t size() const { return size_; }

  bool get(std::size_t pos) const { return (words_[pos >> 6] >> (pos & 63)) & 1u; }
  void set(std::size_t pos) { words_[pos >> 6] |= std::uint64_t{1} << (pos & 63); }

  // Appends `count` bits taken from the low end of `bits` (count <= 64).
  void append(std::uint64_t bits, unsigned count);

  // Must be called after the last mutation and before rank().
  void build_rank();

  // Number of 1-bits in [0, pos).
  std::size_t rank1(std::size_t pos) const {
    const std::size_t word = pos >> 6;
    std::size_t r = samples_[pos / kBlockBits];
    for (std::size_t w = (pos / kBlockBits) * kWordsPerBlock; w < word; ++w) {
      r += static_cast<std::size_t>(std::popcount(words_[w]));
    }
    if (const unsigned rem = pos & 63; rem != 0) {
      r += static_cast<std::size_t>(
          std::popcount(words_[word] & ((std::uint64_t{1} << rem) - 1)));
    }
    return r;
  }

  std::size_t count_ones() const { return rank1(size_); }

  const std::vector<std::uint64_t>& words() const { return words_; }

 private:
  std::size_t size_ = 0;
  std::vector<std::uint64_t> words_;
  std::vector<std::size_t> samples_{0};
};

}  // namespace qdag
