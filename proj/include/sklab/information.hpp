#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "sklab/errors.hpp"

namespace sklab {

/// Probabilities must sum to one within this tolerance.
inline constexpr double kNormalizationTolerance = 1e-12;

/// h_b(p) in bits, with 0 log 0 = 0.
inline double binary_entropy(double p) {
  detail::require(p >= 0.0 && p <= 1.0, "binary_entropy needs p in [0, 1], got " + std::to_string(p));
  if (p == 0.0 || p == 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

namespace detail {

inline void check_probabilities(const std::vector<double>& probs) {
  double total = 0.0;
  for (double p : probs) {
    require(p >= 0.0 && std::isfinite(p), "probabilities must be finite and non-negative");
    total += p;
  }
  if (std::fabs(total - 1.0) > kNormalizationTolerance) {
    fail("distribution is not normalized: total mass " + std::to_string(total));
  }
}

inline double plogp_sum(const std::vector<double>& probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log2(p);
  }
  return h;
}

}  // namespace detail

// Distribution over outcomes labelled 0..size-1.
class Distribution {
 public:
  explicit Distribution(std::vector<double> probs) : probs_(std::move(probs)) {
    detail::require(!probs_.empty(), "distribution needs at least one outcome");
    detail::check_probabilities(probs_);
  }

  static Distribution uniform(std::size_t count) {
    detail::require(count > 0, "uniform distribution needs at least one outcome");
    return Distribution(std::vector<double>(count, 1.0 / static_cast<double>(count)));
  }

  [[nodiscard]] std::size_t size() const noexcept { return probs_.size(); }
  [[nodiscard]] double operator[](std::size_t i) const { return probs_.at(i); }
  [[nodiscard]] const std::vector<double>& probabilities() const noexcept { return probs_; }

 private:
  std::vector<double> probs_;
};

// Joint distribution of a pair (A, B); row index is the A label.
class JointDistribution {
 public:
  JointDistribution(std::size_t rows, std::size_t cols, std::vector<double> probs)
      : rows_(rows), cols_(cols), probs_(std::move(probs)) {
    detail::require(rows_ > 0 && cols_ > 0, "joint distribution needs a non-empty outcome grid");
    detail::require(probs_.size() == rows_ * cols_, "joint distribution size does not match its shape");
    detail::check_probabilities(probs_);
  }

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
  [[nodiscard]] double operator()(std::size_t a, std::size_t b) const { return probs_[a * cols_ + b]; }
  [[nodiscard]] const std::vector<double>& probabilities() const noexcept { return probs_; }

  [[nodiscard]] Distribution first() const {
    std::vector<double> m(rows_, 0.0);
    for (std::size_t a = 0; a < rows_; ++a) {
      for (std::size_t b = 0; b < cols_; ++b) m[a] += (*this)(a, b);
    }
    return Distribution(std::move(m));
  }

  [[nodiscard]] Distribution second() const {
    std::vector<double> m(cols_, 0.0);
    for (std::size_t a = 0; a < rows_; ++a) {
      for (std::size_t b = 0; b < cols_; ++b) m[b] += (*this)(a, b);
    }
    return Distribution(std::move(m));
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> probs_;
};

/// Shannon entropy in bits.
inline double entropy(const Distribution& dist) { return detail::plogp_sum(dist.probabilities()); }

inline double joint_entropy(const JointDistribution& joint) { return detail::plogp_sum(joint.probabilities()); }

/// I(A ^ B) = H(A) + H(B) - H(A, B), accumulated term-wise as
/// sum p(a,b) log p(a,b) / (p(a) p(b)) to avoid cancellation near zero.
/// Rounding can push the raw sum a few ulps below zero; the result is
/// floored at 0.
inline double mutual_information(const JointDistribution& joint) {
  const auto pa = joint.first().probabilities();
  const auto pb = joint.second().probabilities();
  double info = 0.0;
  for (std::size_t a = 0; a < joint.rows(); ++a) {
    for (std::size_t b = 0; b < joint.cols(); ++b) {
      const double p = joint(a, b);
      if (p > 0.0) info += p * std::log2(p / (pa[a] * pb[b]));
    }
  }
  return info > 0.0 ? info : 0.0;
}

}  // namespace sklab
