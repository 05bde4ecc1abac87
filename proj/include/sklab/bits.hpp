#pragma once

#include <algorithm>
#include <bit>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "sklab/errors.hpp"

namespace sklab {

// Fixed-length vector over GF(2).
//
// Position 0 is the leftmost symbol. Integer conversions are big-endian:
// position 0 is the most significant bit, so the numeric order of
// to_uint() agrees with the lexicographic order of to_string().
class BitVector {
 public:
  BitVector() = default;
  explicit BitVector(std::size_t n) : size_(n), words_((n + 63) / 64, 0) {}

  static BitVector from_string(std::string_view text) {
    BitVector v(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
      if (text[i] == '1') {
        v.set(i, true);
      } else if (text[i] != '0') {
        detail::fail("bit string may only contain '0' and '1': \"" + std::string(text) + "\"");
      }
    }
    return v;
  }

  static BitVector from_uint(std::uint64_t value, std::size_t n) {
    detail::require(n <= 64, "from_uint supports at most 64 bits");
    detail::require(n == 64 || (value >> n) == 0, "value does not fit in " + std::to_string(n) + " bits");
    BitVector v(n);
    for (std::size_t i = 0; i < n; ++i) v.set(i, (value >> (n - 1 - i)) & 1U);
    return v;
  }

  [[nodiscard]] std::size_t size() const noexcept { return size_; }
  [[nodiscard]] bool empty() const noexcept { return size_ == 0; }

  [[nodiscard]] bool operator[](std::size_t i) const noexcept { return (words_[i / 64] >> (i % 64)) & 1U; }

  [[nodiscard]] bool at(std::size_t i) const {
    detail::require(i < size_, "bit index out of range");
    return (*this)[i];
  }

  void set(std::size_t i, bool value) {
    const std::uint64_t mask = std::uint64_t{1} << (i % 64);
    if (value) {
      words_[i / 64] |= mask;
    } else {
      words_[i / 64] &= ~mask;
    }
  }

  void flip(std::size_t i) { words_[i / 64] ^= std::uint64_t{1} << (i % 64); }

  [[nodiscard]] std::size_t weight() const noexcept {
    std::size_t w = 0;
    for (auto word : words_) w += static_cast<std::size_t>(std::popcount(word));
    return w;
  }

  [[nodiscard]] bool is_zero() const noexcept {
    return std::all_of(words_.begin(), words_.end(), [](std::uint64_t w) { return w == 0; });
  }

  BitVector& operator^=(const BitVector& other) {
    check_same_size(other);
    for (std::size_t k = 0; k < words_.size(); ++k) words_[k] ^= other.words_[k];
    return *this;
  }

  friend BitVector operator^(BitVector lhs, const BitVector& rhs) {
    lhs ^= rhs;
    return lhs;
  }

  /// Inner product over GF(2).
  [[nodiscard]] bool dot(const BitVector& other) const {
    check_same_size(other);
    std::uint64_t acc = 0;
    for (std::size_t k = 0; k < words_.size(); ++k) acc ^= words_[k] & other.words_[k];
    return std::popcount(acc) & 1;
  }

  [[nodiscard]] std::uint64_t to_uint() const {
    detail::require(size_ <= 64, "to_uint supports at most 64 bits");
    std::uint64_t value = 0;
    for (std::size_t i = 0; i < size_; ++i) value = (value << 1) | static_cast<std::uint64_t>((*this)[i]);
    return value;
  }

  [[nodiscard]] std::string to_string() const {
    std::string out(size_, '0');
    for (std::size_t i = 0; i < size_; ++i) {
      if ((*this)[i]) out[i] = '1';
    }
    return out;
  }

  friend bool operator==(const BitVector&, const BitVector&) = default;

  // Lexicographic on the symbol sequence; shorter vectors order first.
  friend std::strong_ordering operator<=>(const BitVector& a, const BitVector& b) {
    if (a.size_ != b.size_) return a.size_ <=> b.size_;
    for (std::size_t i = 0; i < a.size_; ++i) {
      if (a[i] != b[i]) return a[i] ? std::strong_ordering::greater : std::strong_ordering::less;
    }
    return std::strong_ordering::equal;
  }

 private:
  void check_same_size(const BitVector& other) const {
    if (other.size_ != size_) {
      detail::fail("bit vector length mismatch: " + std::to_string(size_) + " vs " + std::to_string(other.size_));
    }
  }

  std::size_t size_ = 0;
  std::vector<std::uint64_t> words_;
};

// Dense binary matrix stored as rows.
class BitMatrix {
 public:
  BitMatrix() = default;
  BitMatrix(std::size_t rows, std::size_t cols) : cols_(cols), rows_(rows, BitVector(cols)) {}

  static BitMatrix from_rows(const std::vector<std::string>& rows) {
    detail::require(!rows.empty(), "matrix needs at least one row");
    BitMatrix m(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      detail::require(rows[r].size() == m.cols_, "ragged matrix rows");
      m.rows_[r] = BitVector::from_string(rows[r]);
    }
    return m;
  }

  [[nodiscard]] std::size_t rows() const noexcept { return rows_.size(); }
  [[nodiscard]] std::size_t cols() const noexcept { return cols_; }

  [[nodiscard]] const BitVector& row(std::size_t r) const { return rows_.at(r); }
  BitVector& row(std::size_t r) { return rows_.at(r); }

  [[nodiscard]] bool operator()(std::size_t r, std::size_t c) const { return rows_[r][c]; }
  void set(std::size_t r, std::size_t c, bool v) { rows_[r].set(c, v); }

  /// Matrix-vector product M * x^T.
  [[nodiscard]] BitVector multiply(const BitVector& x) const {
    detail::require(x.size() == cols_, "matrix-vector length mismatch: expected " + std::to_string(cols_) +
                                           ", got " + std::to_string(x.size()));
    BitVector out(rows_.size());
    for (std::size_t r = 0; r < rows_.size(); ++r) out.set(r, rows_[r].dot(x));
    return out;
  }

  [[nodiscard]] std::size_t rank() const {
    BitMatrix work = *this;
    return work.reduce_row_echelon().size();
  }

  /// In-place Gauss-Jordan elimination. Returns the pivot column of each
  /// leading row; rows past the rank end up zero.
  std::vector<std::size_t> reduce_row_echelon() {
    std::vector<std::size_t> pivots;
    std::size_t r = 0;
    for (std::size_t c = 0; c < cols_ && r < rows_.size(); ++c) {
      std::size_t sel = r;
      while (sel < rows_.size() && !rows_[sel][c]) ++sel;
      if (sel == rows_.size()) continue;
      std::swap(rows_[r], rows_[sel]);
      for (std::size_t k = 0; k < rows_.size(); ++k) {
        if (k != r && rows_[k][c]) rows_[k] ^= rows_[r];
      }
      pivots.push_back(c);
      ++r;
    }
    return pivots;
  }

  [[nodiscard]] std::string to_string() const {
    std::string out;
    for (const auto& r : rows_) {
      out += r.to_string();
      out += '\n';
    }
    return out;
  }

  friend bool operator==(const BitMatrix&, const BitMatrix&) = default;

 private:
  std::size_t cols_ = 0;
  std::vector<BitVector> rows_;
};

}  // namespace sklab
