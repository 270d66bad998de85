#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace ivbounds {

/// Fixed-length 0/1 vector stored as 64-bit words.
class BinaryVector {
 public:
  BinaryVector() = default;
  explicit BinaryVector(std::size_t size) : size_(size), words_((size + 63) / 64, 0) {}

  std::size_t size() const { return size_; }

  void set(std::size_t i) { words_[i >> 6] |= std::uint64_t{1} << (i & 63); }
  void reset(std::size_t i) { words_[i >> 6] &= ~(std::uint64_t{1} << (i & 63)); }
  bool test(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1U; }

  std::size_t count() const {
    std::size_t c = 0;
    for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
  }

  bool is_subset_of(const BinaryVector& other) const {
    for (std::size_t i = 0; i < words_.size(); ++i) {
      if ((words_[i] & ~other.words_[i]) != 0) return false;
    }
    return true;
  }

  /// Indices of the set entries, ascending.
  std::vector<std::size_t> support() const {
    std::vector<std::size_t> out;
    out.reserve(count());
    for (std::size_t w = 0; w < words_.size(); ++w) {
      std::uint64_t bits = words_[w];
      while (bits != 0) {
        out.push_back(w * 64 + static_cast<std::size_t>(std::countr_zero(bits)));
        bits &= bits - 1;
      }
    }
    return out;
  }

  template <typename T>
  std::vector<T> dense() const {
    std::vector<T> out(size_, T(0));
    for (std::size_t i : support()) out[i] = T(1);
    return out;
  }

  const std::vector<std::uint64_t>& words() const { return words_; }

  friend bool operator==(const BinaryVector&, const BinaryVector&) = default;

 private:
  std::size_t size_ = 0;
  std::vector<std::uint64_t> words_;
};

}  // namespace ivbounds
