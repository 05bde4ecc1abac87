#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "sklab/bits.hpp"
#include "sklab/errors.hpp"
#include "sklab/information.hpp"
#include "sklab/rng.hpp"

namespace sklab {

namespace detail {

inline void check_open_half(double p, const char* name) {
  require(p > 0.0 && p < 0.5, std::string(name) + " must lie in (0, 1/2), got " + std::to_string(p));
}

inline void check_open_unit(double q, const char* name) {
  require(q > 0.0 && q < 1.0, std::string(name) + " must lie in (0, 1), got " + std::to_string(q));
}

}  // namespace detail

/// Two terminals joined by a BSC(p) with uniform inputs.
class Model1Params {
 public:
  explicit Model1Params(double p) : p_(p) { detail::check_open_half(p, "p"); }
  [[nodiscard]] double p() const noexcept { return p_; }
  friend bool operator==(const Model1Params&, const Model1Params&) = default;

 private:
  double p_;
};

/// Two terminals; X2 ~ Bernoulli(q), X1 = X2 xor Bernoulli(p). q = 1/2 is Model 1.
class Model2Params {
 public:
  Model2Params(double p, double q) : p_(p), q_(q) {
    detail::check_open_half(p, "p");
    detail::check_open_unit(q, "q");
  }
  [[nodiscard]] double p() const noexcept { return p_; }
  [[nodiscard]] double q() const noexcept { return q_; }
  friend bool operator==(const Model2Params&, const Model2Params&) = default;

 private:
  double p_;
  double q_;
};

/// Markov chain X1 - X2 - ... - Xd of BSC links with uniform X1.
class Model3Params {
 public:
  explicit Model3Params(std::vector<double> link_probs) : links_(std::move(link_probs)) {
    detail::require(!links_.empty(), "model 3 needs at least two terminals (one link)");
    for (double p : links_) detail::check_open_half(p, "link probability");
  }
  [[nodiscard]] std::size_t terminals() const noexcept { return links_.size() + 1; }
  [[nodiscard]] const std::vector<double>& link_probs() const noexcept { return links_; }
  /// p_i for the 1-based link i joining terminals i and i+1.
  [[nodiscard]] double link(std::size_t i) const { return links_.at(i - 1); }
  friend bool operator==(const Model3Params&, const Model3Params&) = default;

 private:
  std::vector<double> links_;
};

/// Helper model: X3 uniform, X2 = X3 xor Bernoulli(q), X1 = X2 xor X3 xor Bernoulli(p).
class Model4Params {
 public:
  Model4Params(double p, double q) : p_(p), q_(q) {
    detail::check_open_half(p, "p");
    detail::check_open_unit(q, "q");
  }
  [[nodiscard]] double p() const noexcept { return p_; }
  [[nodiscard]] double q() const noexcept { return q_; }
  friend bool operator==(const Model4Params&, const Model4Params&) = default;

 private:
  double p_;
  double q_;
};

using SourceModel = std::variant<Model1Params, Model2Params, Model3Params, Model4Params>;

inline std::size_t terminal_count(const SourceModel& model) {
  return std::visit(
      [](const auto& m) -> std::size_t {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Model3Params>) {
          return m.terminals();
        } else if constexpr (std::is_same_v<T, Model4Params>) {
          return 3;
        } else {
          return 2;
        }
      },
      model);
}

inline std::string model_name(const SourceModel& model) {
  static constexpr std::array<const char*, 4> kNames{"model1", "model2", "model3", "model4"};
  return kNames[model.index()];
}

// Per-terminal observations of one block.
struct SequenceTuple {
  std::vector<BitVector> terminals;

  [[nodiscard]] std::size_t length() const { return terminals.empty() ? 0 : terminals.front().size(); }
  [[nodiscard]] std::size_t count() const noexcept { return terminals.size(); }
  /// 1-based access, matching terminal numbering.
  [[nodiscard]] const BitVector& terminal(std::size_t id) const { return terminals.at(id - 1); }

  friend bool operator==(const SequenceTuple&, const SequenceTuple&) = default;
};

namespace detail {

inline BitVector bernoulli_vector(std::size_t n, double p, Rng& rng) {
  BitVector v(n);
  for (std::size_t i = 0; i < n; ++i) v.set(i, rng.bernoulli(p));
  return v;
}

inline BitVector uniform_vector(std::size_t n, Rng& rng) {
  BitVector v(n);
  for (std::size_t i = 0; i < n; ++i) v.set(i, rng.bit());
  return v;
}

}  // namespace detail

/// Draws n i.i.d. symbols of the model. Draw order is fixed per model so
/// seeded streams are reproducible:
///   model 1: X2 uniform, V ~ B(p), X1 = X2 ^ V
///   model 2: X2 ~ B(q), V ~ B(p), X1 = X2 ^ V
///   model 3: X1 uniform, then V_i ~ B(p_i), X_{i+1} = X_i ^ V_i
///   model 4: X3 uniform, W ~ B(q), X2 = X3 ^ W, V ~ B(p), X1 = X2 ^ X3 ^ V
inline SequenceTuple sample(const SourceModel& model, std::size_t n, Rng& rng) {
  detail::require(n >= 1, "block length must be at least 1");
  using detail::bernoulli_vector;
  using detail::uniform_vector;
  SequenceTuple out;
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Model1Params> || std::is_same_v<T, Model2Params>) {
          BitVector x2;
          if constexpr (std::is_same_v<T, Model1Params>) {
            x2 = uniform_vector(n, rng);
          } else {
            x2 = bernoulli_vector(n, m.q(), rng);
          }
          const BitVector v = bernoulli_vector(n, m.p(), rng);
          out.terminals = {x2 ^ v, x2};
        } else if constexpr (std::is_same_v<T, Model3Params>) {
          out.terminals.push_back(uniform_vector(n, rng));
          for (double p : m.link_probs()) out.terminals.push_back(out.terminals.back() ^ bernoulli_vector(n, p, rng));
        } else {
          const BitVector x3 = uniform_vector(n, rng);
          const BitVector x2 = x3 ^ bernoulli_vector(n, m.q(), rng);
          const BitVector v = bernoulli_vector(n, m.p(), rng);
          out.terminals = {x2 ^ x3 ^ v, x2, x3};
        }
      },
      model);
  return out;
}

/// Single-letter pmf P(x_1, ..., x_d) of the model.
inline double symbol_pmf(const SourceModel& model, const std::vector<int>& symbols) {
  detail::require(symbols.size() == terminal_count(model), "symbol count does not match the model");
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Model1Params>) {
          const double p = m.p();
          return symbols[0] == symbols[1] ? 0.5 * (1.0 - p) : 0.5 * p;
        } else if constexpr (std::is_same_v<T, Model2Params>) {
          const double p = m.p();
          const double q = m.q();
          const std::array<double, 4> table{(1 - p) * (1 - q), p * q, p * (1 - q), q * (1 - p)};
          return table[static_cast<std::size_t>(symbols[0] * 2 + symbols[1])];
        } else if constexpr (std::is_same_v<T, Model3Params>) {
          double prob = 0.5;
          for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
            const double p = m.link_probs()[i];
            prob *= symbols[i] == symbols[i + 1] ? 1.0 - p : p;
          }
          return prob;
        } else {
          const double p = m.p();
          const double q = m.q();
          // Index x1 x2 x3 as a 3-bit number.
          const std::array<double, 8> table{(1 - p) * (1 - q) / 2, p * q / 2,           p * q / 2,
                                            (1 - p) * (1 - q) / 2, p * (1 - q) / 2,     q * (1 - p) / 2,
                                            q * (1 - p) / 2,       p * (1 - q) / 2};
          return table[static_cast<std::size_t>(symbols[0] * 4 + symbols[1] * 2 + symbols[2])];
        }
      },
      model);
}

/// Product-form probability of a block.
inline double joint_pmf(const SourceModel& model, const SequenceTuple& tuple) {
  const std::size_t d = terminal_count(model);
  detail::require(tuple.count() == d, "tuple has " + std::to_string(tuple.count()) + " terminals, model needs " +
                                          std::to_string(d));
  const std::size_t n = tuple.length();
  for (const auto& t : tuple.terminals) detail::require(t.size() == n, "tuple sequences differ in length");
  double prob = 1.0;
  std::vector<int> symbols(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < d; ++t) symbols[t] = tuple.terminals[t][i] ? 1 : 0;
    prob *= symbol_pmf(model, symbols);
  }
  return prob;
}

/// 1-based index of the noisiest link, smallest index on ties.
inline std::size_t worst_link(const Model3Params& params) {
  std::size_t best = 1;
  for (std::size_t i = 2; i <= params.link_probs().size(); ++i) {
    if (params.link(i) > params.link(best)) best = i;
  }
  return best;
}

/// Closed-form SK/PK capacity in bits per symbol.
inline double capacity(const SourceModel& model) {
  return std::visit(
      [](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Model1Params>) {
          return 1.0 - binary_entropy(m.p());
        } else if constexpr (std::is_same_v<T, Model3Params>) {
          return 1.0 - binary_entropy(m.link(worst_link(m)));
        } else {
          const double p = m.p();
          const double q = m.q();
          return binary_entropy(p + q - 2 * p * q) - binary_entropy(p);
        }
      },
      model);
}

// --- typicality --------------------------------------------------------------

/// Absorbs rounding when a log-probability lands exactly on a typicality boundary.
inline constexpr double kTypicalitySlack = 1e-12;

/// 2x2 pmf of a pair of binary rvs (X, Y); entry (x, y).
struct BinaryJointPmf {
  std::array<std::array<double, 2>, 2> p{};

  [[nodiscard]] double x_one() const noexcept { return p[1][0] + p[1][1]; }
  [[nodiscard]] double y_one() const noexcept { return p[0][1] + p[1][1]; }
  [[nodiscard]] double joint_entropy() const {
    double h = 0.0;
    for (const auto& row : p) {
      for (double v : row) {
        if (v > 0.0) h -= v * std::log2(v);
      }
    }
    return h;
  }
};

/// Pmf of (X1, X3) under model 4, marginalized from the three-variable table.
inline BinaryJointPmf model4_x1_x3_pmf(const Model4Params& params) {
  const SourceModel model = params;
  BinaryJointPmf out;
  for (int x1 = 0; x1 < 2; ++x1) {
    for (int x2 = 0; x2 < 2; ++x2) {
      for (int x3 = 0; x3 < 2; ++x3) out.p[x1][x3] += symbol_pmf(model, {x1, x2, x3});
    }
  }
  return out;
}

namespace detail {

inline double weight_log_prob(std::size_t n, std::size_t w, double alpha) {
  double lp = 0.0;
  if (w > 0) lp += static_cast<double>(w) * std::log2(alpha);
  if (w < n) lp += static_cast<double>(n - w) * std::log2(1.0 - alpha);
  return lp;
}

inline bool within(double normalized_neg_log_prob, double entropy, double xi) {
  return std::fabs(normalized_neg_log_prob - entropy) <= xi + kTypicalitySlack;
}

}  // namespace detail

/// Membership of a weight-w, length-n sequence in T_{X,xi} for X ~ Bernoulli(alpha).
inline bool is_typical_weight(std::size_t n, std::size_t w, double alpha, double xi) {
  detail::require(alpha > 0.0 && alpha < 1.0, "symbol probability must lie in (0, 1)");
  detail::require(xi >= 0.0, "typicality constant must be non-negative");
  detail::require(n >= 1 && w <= n, "weight out of range");
  const double rate = -detail::weight_log_prob(n, w, alpha) / static_cast<double>(n);
  return detail::within(rate, binary_entropy(alpha), xi);
}

inline bool is_typical(const BitVector& x, double alpha, double xi) {
  return is_typical_weight(x.size(), x.weight(), alpha, xi);
}

/// Counts of ones of x on the zero positions and on the one positions of y.
struct JointType {
  std::size_t ones_where_y0 = 0;
  std::size_t ones_where_y1 = 0;
  friend auto operator<=>(const JointType&, const JointType&) = default;
};

inline JointType joint_type(const BitVector& x, const BitVector& y) {
  detail::require(x.size() == y.size(), "joint type needs equal lengths");
  const std::size_t both = (x.weight() + y.weight() - (x ^ y).weight()) / 2;
  return {x.weight() - both, both};
}

/// x in T_{X|Y,xi}(y): x and y marginally typical and the pair jointly typical.
/// Everything depends on (w(x), w(y), joint type) only.
inline bool is_cond_typical(std::size_t n, std::size_t y_weight, JointType type, const BinaryJointPmf& pmf,
                            double xi) {
  const std::size_t x_weight = type.ones_where_y0 + type.ones_where_y1;
  if (!is_typical_weight(n, y_weight, pmf.y_one(), xi)) return false;
  if (!is_typical_weight(n, x_weight, pmf.x_one(), xi)) return false;
  const std::array<std::array<std::size_t, 2>, 2> counts{
      {{n - y_weight - type.ones_where_y0, y_weight - type.ones_where_y1}, {type.ones_where_y0, type.ones_where_y1}}};
  double lp = 0.0;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      if (counts[a][b] == 0) continue;
      if (pmf.p[a][b] <= 0.0) return false;
      lp += static_cast<double>(counts[a][b]) * std::log2(pmf.p[a][b]);
    }
  }
  return detail::within(-lp / static_cast<double>(n), pmf.joint_entropy(), xi);
}

inline bool is_cond_typical(const BitVector& x, const BitVector& y, const BinaryJointPmf& pmf, double xi) {
  detail::require(x.size() == y.size(), "conditional typicality needs equal lengths");
  return is_cond_typical(x.size(), y.weight(), joint_type(x, y), pmf, xi);
}

inline bool is_cond_typical(const BitVector& x, const BitVector& y, const Model4Params& model, double xi) {
  return is_cond_typical(x, y, model4_x1_x3_pmf(model), xi);
}

}  // namespace sklab
