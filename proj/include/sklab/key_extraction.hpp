#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sklab/bits.hpp"
#include "sklab/errors.hpp"
#include "sklab/linear_code.hpp"
#include "sklab/rng.hpp"
#include "sklab/source_models.hpp"

namespace sklab {

/// Regular-subset tables enumerate all 2^n sequences.
inline constexpr std::size_t kMaxTableLength = 20;
inline constexpr std::size_t kMaxTableDimension = 16;

struct KeyRange {
  std::uint64_t size = 0;       // M
  double exponent = 0.0;        // n * (info_rate - eps_prime)
  double nominal_rate = 0.0;    // log2(M) / n
  bool clamped = false;         // floor(2^exponent) < 2, raised to 2
};

/// M = floor(2^{n (info_rate - eps_prime)}), at least 2.
inline KeyRange key_range(std::size_t n, double info_rate, double eps_prime) {
  detail::require(n >= 1, "block length must be at least 1");
  const double exponent = static_cast<double>(n) * (info_rate - eps_prime);
  if (!(exponent > 0.0)) {
    detail::fail("n = " + std::to_string(n) + ", eps_prime = " + std::to_string(eps_prime) +
                 " yields no key: n * (I - eps_prime) = " + std::to_string(exponent) + " <= 0");
  }
  detail::require(exponent < 63.0, "key range exponent too large");
  // 2^e is computed inexactly; the relative nudge keeps exact powers of two
  // from flooring one below.
  auto size = static_cast<std::uint64_t>(std::floor(std::exp2(exponent) * (1.0 + 1e-12)));
  KeyRange out;
  out.exponent = exponent;
  out.clamped = size < 2;
  out.size = out.clamped ? 2 : size;
  out.nominal_rate = std::log2(static_cast<double>(out.size)) / static_cast<double>(n);
  return out;
}

enum class KeyProvenance { indexed, fallback };

struct KeyValue {
  std::uint64_t value = 0;
  KeyProvenance provenance = KeyProvenance::indexed;
  friend bool operator==(const KeyValue&, const KeyValue&) = default;
};

/// Standard-array column of x; range 2^{n-m}.
inline KeyValue extract_key_standard_array(const LinearCode& code, const BitVector& x) {
  return {code.standard_array_index(x).column, KeyProvenance::indexed};
}

/// Where a sequence sits in a regular-subset table.
struct SubsetSlot {
  std::uint64_t coset = 0;
  std::size_t subset = 0;  // j within the coset
  std::uint64_t index = 0; // k within the subset, the key value
  friend bool operator==(const SubsetSlot&, const SubsetSlot&) = default;
};

// Partition of typical sequences into equal-type blocks of exactly M
// sequences, per coset. Immutable once built.
class RegularSubsetTable {
 public:
  using Word = LinearCode::Word;

  [[nodiscard]] std::size_t length() const noexcept { return n_; }
  [[nodiscard]] const KeyRange& key_range() const noexcept { return range_; }
  [[nodiscard]] std::uint64_t key_count() const noexcept { return range_.size; }
  [[nodiscard]] const std::optional<BitVector>& context() const noexcept { return context_; }
  /// False when the conditioning sequence is atypical; the table is then empty.
  [[nodiscard]] bool context_typical() const noexcept { return context_typical_; }

  [[nodiscard]] std::uint64_t coset_count() const noexcept { return per_coset_.size(); }
  /// N_i.
  [[nodiscard]] std::size_t subset_count(std::uint64_t coset) const { return per_coset_.at(coset).size(); }
  /// Members of subset j of coset i, in key order.
  [[nodiscard]] const std::vector<Word>& subset(std::uint64_t coset, std::size_t j) const {
    return per_coset_.at(coset).at(j).members;
  }
  /// Type label shared by the members of a subset (weight, or packed joint type).
  [[nodiscard]] std::uint64_t subset_type(std::uint64_t coset, std::size_t j) const {
    return per_coset_.at(coset).at(j).type;
  }
  /// Number of typical sequences in coset i (|A_i|).
  [[nodiscard]] std::uint64_t typical_count(std::uint64_t coset) const { return typical_counts_.at(coset); }
  [[nodiscard]] std::uint64_t assigned_count() const noexcept { return assigned_; }

  [[nodiscard]] std::optional<SubsetSlot> lookup_word(Word x) const {
    const auto& e = slots_[x];
    if (e.subset == kUnassigned) return std::nullopt;
    return SubsetSlot{e.coset, e.subset, e.index};
  }

  [[nodiscard]] std::optional<SubsetSlot> lookup(const BitVector& x) const {
    detail::require(x.size() == n_, "sequence length does not match the table");
    return lookup_word(x.to_uint());
  }

  /// Generic builder: typical(x) selects A, type_of(x) groups it.
  template <class TypicalFn, class TypeFn>
  static RegularSubsetTable build(const LinearCode& code, KeyRange range, TypicalFn typical, TypeFn type_of,
                                  std::optional<BitVector> context = std::nullopt, bool context_typical = true) {
    check_caps(code);
    RegularSubsetTable t;
    t.n_ = code.length();
    t.range_ = range;
    t.context_ = std::move(context);
    t.context_typical_ = context_typical;
    t.per_coset_.assign(code.coset_count(), {});
    t.typical_counts_.assign(code.coset_count(), 0);
    const Word total = Word{1} << t.n_;
    t.slots_.assign(total, Slot{});
    if (!context_typical) return t;

    // Ascending x is lexicographic order, so each group is already sorted.
    std::map<std::pair<Word, std::uint64_t>, std::vector<Word>> groups;
    for (Word x = 0; x < total; ++x) {
      if (!typical(x)) continue;
      const Word s = code.syndrome_word(x);
      ++t.typical_counts_[s];
      groups[{s, type_of(x)}].push_back(x);
    }
    const std::uint64_t m = range.size;
    for (auto& [key, members] : groups) {
      const auto [coset, type] = key;
      auto& subsets = t.per_coset_[coset];
      for (std::size_t start = 0; start + m <= members.size(); start += m) {
        Subset sub{type, std::vector<Word>(members.begin() + static_cast<std::ptrdiff_t>(start),
                                           members.begin() + static_cast<std::ptrdiff_t>(start + m))};
        const auto j = subsets.size();
        for (std::uint64_t k = 0; k < m; ++k) t.slots_[sub.members[k]] = Slot{coset, static_cast<std::uint32_t>(j), k};
        t.assigned_ += m;
        subsets.push_back(std::move(sub));
      }
    }
    return t;
  }

  static void check_caps(const LinearCode& code) {
    if (code.length() > kMaxTableLength || code.dimension() > kMaxTableDimension) {
      throw FeasibilityError("regular-subset tables enumerate every sequence; caps are n <= " +
                             std::to_string(kMaxTableLength) + " and n-m <= " + std::to_string(kMaxTableDimension) +
                             " (code has n=" + std::to_string(code.length()) +
                             ", n-m=" + std::to_string(code.dimension()) + ")");
    }
  }

 private:
  static constexpr std::uint32_t kUnassigned = std::numeric_limits<std::uint32_t>::max();

  struct Slot {
    std::uint64_t coset = 0;
    std::uint32_t subset = kUnassigned;
    std::uint64_t index = 0;
  };

  struct Subset {
    std::uint64_t type = 0;
    std::vector<Word> members;
  };

  std::size_t n_ = 0;
  KeyRange range_;
  std::optional<BitVector> context_;
  bool context_typical_ = true;
  std::vector<std::vector<Subset>> per_coset_;
  std::vector<std::uint64_t> typical_counts_;
  std::vector<Slot> slots_;
  std::uint64_t assigned_ = 0;
};

/// Key range for model 2/4 tables: M = floor(2^{n (I - eps')}).
inline KeyRange regular_key_range(const LinearCode& code, const SourceModel& model, double eps_prime) {
  return key_range(code.length(), capacity(model), eps_prime);
}

/// Model 2: typical sequences of X1 ~ Bernoulli(p + q - 2pq), grouped by
/// weight. At q = 1/2 every sequence is equally likely, so each coset forms
/// a single group.
inline RegularSubsetTable build_regular_subsets(const LinearCode& code, const Model2Params& model, double xi,
                                                double eps_prime) {
  RegularSubsetTable::check_caps(code);
  const std::size_t n = code.length();
  const double alpha = model.p() + model.q() - 2 * model.p() * model.q();
  const bool uniform = model.q() == 0.5;
  std::vector<bool> typical_weight(n + 1);
  for (std::size_t w = 0; w <= n; ++w) typical_weight[w] = is_typical_weight(n, w, alpha, xi);
  return RegularSubsetTable::build(
      code, regular_key_range(code, model, eps_prime),
      [&](LinearCode::Word x) { return typical_weight[static_cast<std::size_t>(std::popcount(x))]; },
      [uniform](LinearCode::Word x) { return uniform ? std::uint64_t{0} : static_cast<std::uint64_t>(std::popcount(x)); });
}

/// Model 4: sequences in T_{X1|X3}(x3), grouped by joint type with x3.
inline RegularSubsetTable build_regular_subsets(const LinearCode& code, const Model4Params& model, double xi,
                                                double eps_prime, const BitVector& x3) {
  RegularSubsetTable::check_caps(code);
  const std::size_t n = code.length();
  detail::require(x3.size() == n, "conditioning sequence length does not match the code");
  const auto pmf = model4_x1_x3_pmf(model);
  const auto range = regular_key_range(code, model, eps_prime);
  const std::size_t y_weight = x3.weight();
  if (!is_typical_weight(n, y_weight, pmf.y_one(), xi)) {
    return RegularSubsetTable::build(
        code, range, [](LinearCode::Word) { return false; }, [](LinearCode::Word) { return std::uint64_t{0}; }, x3,
        false);
  }
  const LinearCode::Word y = x3.to_uint();
  // typical[a][b]: a ones off y's support, b ones on it.
  std::vector<std::vector<bool>> typical(n - y_weight + 1, std::vector<bool>(y_weight + 1));
  for (std::size_t a = 0; a <= n - y_weight; ++a) {
    for (std::size_t b = 0; b <= y_weight; ++b) typical[a][b] = is_cond_typical(n, y_weight, {a, b}, pmf, xi);
  }
  auto split = [y](LinearCode::Word x) {
    return std::pair<std::size_t, std::size_t>(static_cast<std::size_t>(std::popcount(x & ~y)),
                                               static_cast<std::size_t>(std::popcount(x & y)));
  };
  return RegularSubsetTable::build(
      code, range,
      [&](LinearCode::Word x) {
        const auto [a, b] = split(x);
        return static_cast<bool>(typical[a][b]);
      },
      [&](LinearCode::Word x) {
        const auto [a, b] = split(x);
        return static_cast<std::uint64_t>(a) << 32 | b;
      },
      x3, true);
}

/// Index k of x in its regular subset; otherwise a uniform draw from the
/// terminal's own generator.
inline KeyValue extract_key_regular(const RegularSubsetTable& table, const BitVector& x, Rng& local_rng) {
  if (auto slot = table.lookup(x)) return {slot->index, KeyProvenance::indexed};
  return {local_rng.below(table.key_count()), KeyProvenance::fallback};
}

}  // namespace sklab
