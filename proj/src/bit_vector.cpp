#include "qdag/bit_vector.hpp"

namespace qdag {

void RankBitVector::append(std::uint64_t bits, unsigned count) {
  if (count == 0) return;
  if (count < 64) bits &= (std::uint64_t{1} << count) - 1;
  const unsigned offset = size_ & 63;
  if (offset == 0) {
    words_.push_back(bits);
  } else {
    words_.back() |= bits << offset;
    if (offset + count > 64) words_.push_back(bits >> (64 - offset));
  }
  size_ += count;
}

void RankBitVector::build_rank() {
  samples_.assign(size_ / kBlockBits + 1, 0);
  std::size_t running = 0;
  for (std::size_t w = 0; w < words_.size(); ++w) {
    if (w % kWordsPerBlock == 0) samples_[w / kWordsPerBlock] = running;
    running += static_cast<std::size_t>(std::popcount(words_[w]));
  }
  // A trailing sample may sit exactly at size_ without a word behind it.
  if (words_.size() % kWordsPerBlock == 0 && words_.size() / kWordsPerBlock < samples_.size()) {
    samples_[words_.size() / kWordsPerBlock] = running;
  }
}

}  // namespace qdag
