#pragma once

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "sklab/errors.hpp"
#include "sklab/information.hpp"
#include "sklab/key_extraction.hpp"
#include "sklab/linear_code.hpp"
#include "sklab/parallel.hpp"
#include "sklab/protocol.hpp"
#include "sklab/source_models.hpp"

namespace sklab {

// Enumeration caps for the exact path.
inline constexpr std::size_t kMaxExactPairLength = 10;        // models 1, 2: 2^{2n} terms
inline constexpr std::size_t kMaxExactChainBits = 24;         // model 3: 2^{dn} terms
inline constexpr std::size_t kMaxExactChainNoiseBits = 20;    // model 3: (d-1) n
inline constexpr std::size_t kMaxExactHelperLength = 8;       // model 4: 2^{3n} terms
inline constexpr std::uint64_t kMaxJointCells = std::uint64_t{1} << 24;

/// Fixed partition of every enumeration; independent of the worker count.
inline constexpr std::size_t kExactChunks = 16;

/// Tolerance for identities that hold exactly up to floating-point accumulation.
inline constexpr double kExactTolerance = 1e-12;

/// Exact joint law of the keys and the transcript for one configuration.
struct ExactOutcome {
  std::size_t key_holders = 0;
  std::uint64_t key_range = 0;
  std::uint64_t transcript_values = 0;
  std::size_t reference_terminal = 1;
  /// Per key holder, P(K = k, F = f) at index f * key_range + k.
  std::vector<std::vector<double>> key_transcript;
  double prob_keys_agree = 0.0;
  double prob_mismatch = 0.0;
  double prob_reconstruction_error = 0.0;
  /// Per key holder, probability of a fallback key.
  std::vector<double> prob_fallback;
  /// Mass on {all estimates correct, no fallback, keys differ}; zero by construction.
  double prob_agreement_violation = 0.0;
  double total_mass = 0.0;

  /// Joint law of (K_t, F) for the 1-based key holder t; rows are keys.
  [[nodiscard]] JointDistribution key_transcript_joint(std::size_t holder) const {
    const auto& kt = key_transcript.at(holder - 1);
    std::vector<double> probs(kt.size());
    for (std::uint64_t f = 0; f < transcript_values; ++f) {
      for (std::uint64_t k = 0; k < key_range; ++k) probs[k * transcript_values + f] = kt[f * key_range + k];
    }
    return {static_cast<std::size_t>(key_range), static_cast<std::size_t>(transcript_values), std::move(probs)};
  }

  [[nodiscard]] double leakage_bits(std::size_t holder) const { return mutual_information(key_transcript_joint(holder)); }
  [[nodiscard]] double key_entropy_bits(std::size_t holder) const { return entropy(key_transcript_joint(holder).first()); }
};

namespace detail {

inline constexpr std::uint64_t kFallbackKey = ~std::uint64_t{0};

class ExactAccumulator {
 public:
  ExactAccumulator(std::size_t holders, std::uint64_t keys, std::uint64_t transcripts)
      : holders_(holders),
        keys_(keys),
        transcripts_(transcripts),
        kt_(holders, std::vector<long double>(keys * transcripts, 0.0L)),
        fb_(holders, std::vector<long double>(transcripts, 0.0L)),
        fallback_(holders, 0.0L) {}

  /// One realization of weight w. keys[h] is kFallbackKey for a fallback draw.
  void add(long double w, std::uint64_t f, std::span<const std::uint64_t> keys, bool estimates_correct) {
    mass_ += w;
    std::size_t fallbacks = 0;
    bool have = false;
    bool conflict = false;
    std::uint64_t first = 0;
    for (std::size_t h = 0; h < holders_; ++h) {
      if (keys[h] == kFallbackKey) {
        fb_[h][f] += w;
        fallback_[h] += w;
        ++fallbacks;
        continue;
      }
      kt_[h][f * keys_ + keys[h]] += w;
      if (!have) {
        have = true;
        first = keys[h];
      } else if (first != keys[h]) {
        conflict = true;
      }
    }
    // Fallback keys are independent uniform draws on [0, M).
    long double p_equal = 1.0L;
    if (conflict) {
      p_equal = 0.0L;
    } else if (fallbacks > 0) {
      const auto inv = 1.0L / static_cast<long double>(keys_);
      const std::size_t free_draws = have ? fallbacks : fallbacks - 1;
      for (std::size_t r = 0; r < free_draws; ++r) p_equal *= inv;
    }
    agree_ += w * p_equal;
    mismatch_ += w * (1.0L - p_equal);
    if (!estimates_correct) recon_error_ += w;
    if (estimates_correct && fallbacks == 0 && conflict) violation_ += w;
  }

  void merge(const ExactAccumulator& o) {
    for (std::size_t h = 0; h < holders_; ++h) {
      for (std::size_t i = 0; i < kt_[h].size(); ++i) kt_[h][i] += o.kt_[h][i];
      for (std::size_t i = 0; i < fb_[h].size(); ++i) fb_[h][i] += o.fb_[h][i];
      fallback_[h] += o.fallback_[h];
    }
    mass_ += o.mass_;
    agree_ += o.agree_;
    mismatch_ += o.mismatch_;
    recon_error_ += o.recon_error_;
    violation_ += o.violation_;
  }

  [[nodiscard]] ExactOutcome finish(std::size_t reference_terminal) const {
    ExactOutcome out;
    out.key_holders = holders_;
    out.key_range = keys_;
    out.transcript_values = transcripts_;
    out.reference_terminal = reference_terminal;
    const auto inv = 1.0L / static_cast<long double>(keys_);
    for (std::size_t h = 0; h < holders_; ++h) {
      std::vector<double> cells(kt_[h].size());
      for (std::uint64_t f = 0; f < transcripts_; ++f) {
        const long double spread = fb_[h][f] * inv;
        for (std::uint64_t k = 0; k < keys_; ++k) {
          cells[f * keys_ + k] = static_cast<double>(kt_[h][f * keys_ + k] + spread);
        }
      }
      out.key_transcript.push_back(std::move(cells));
      out.prob_fallback.push_back(static_cast<double>(fallback_[h]));
    }
    out.prob_keys_agree = static_cast<double>(agree_);
    out.prob_mismatch = static_cast<double>(mismatch_);
    out.prob_reconstruction_error = static_cast<double>(recon_error_);
    out.prob_agreement_violation = static_cast<double>(violation_);
    out.total_mass = static_cast<double>(mass_);
    return out;
  }

 private:
  std::size_t holders_;
  std::uint64_t keys_;
  std::uint64_t transcripts_;
  std::vector<std::vector<long double>> kt_;
  std::vector<std::vector<long double>> fb_;
  std::vector<long double> fallback_;
  long double mass_ = 0.0L;
  long double agree_ = 0.0L;
  long double mismatch_ = 0.0L;
  long double recon_error_ = 0.0L;
  long double violation_ = 0.0L;
};

/// weights[w] = p^w (1-p)^{n-w}.
inline std::vector<long double> bernoulli_weights(std::size_t n, double p) {
  std::vector<long double> out(n + 1);
  for (std::size_t w = 0; w <= n; ++w) {
    out[w] = std::pow(static_cast<long double>(p), static_cast<long double>(w)) *
             std::pow(1.0L - static_cast<long double>(p), static_cast<long double>(n - w));
  }
  return out;
}

inline std::size_t popcount(std::uint64_t x) { return static_cast<std::size_t>(std::popcount(x)); }

/// Splits [0, total) into kExactChunks contiguous ranges and reduces the
/// per-chunk accumulators in chunk order.
template <class Body>
ExactOutcome enumerate_exact(std::uint64_t outer_total, std::size_t holders, std::uint64_t keys,
                             std::uint64_t transcripts, std::size_t reference_terminal, std::size_t workers,
                             Body body) {
  if (keys * transcripts > kMaxJointCells) {
    throw FeasibilityError("exact key/transcript table would need " + std::to_string(keys * transcripts) +
                           " cells; cap is " + std::to_string(kMaxJointCells));
  }
  const std::size_t chunks = static_cast<std::size_t>(std::min<std::uint64_t>(kExactChunks, outer_total));
  std::vector<std::optional<ExactAccumulator>> parts(chunks);
  for_each_chunk(chunks, workers, [&](std::size_t c) {
    const std::uint64_t begin = outer_total * c / chunks;
    const std::uint64_t end = outer_total * (c + 1) / chunks;
    ExactAccumulator acc(holders, keys, transcripts);
    for (std::uint64_t outer = begin; outer < end; ++outer) body(outer, acc);
    parts[c].emplace(std::move(acc));
  });
  ExactAccumulator total(holders, keys, transcripts);
  for (const auto& part : parts) total.merge(*part);
  return total.finish(reference_terminal);
}

}  // namespace detail

/// Names the violated cap when the exact path is infeasible for (model, code).
inline std::optional<std::string> exact_infeasibility(const SourceModel& model, const LinearCode& code) {
  const std::size_t n = code.length();
  auto over = [](const std::string& what) { return std::optional<std::string>(what); };
  switch (model.index()) {
    case 0:
    case 1:
      if (n > kMaxExactPairLength) {
        return over("exact mode for " + model_name(model) + " enumerates 2^{2n} terms; cap is n <= " +
                    std::to_string(kMaxExactPairLength) + " (n = " + std::to_string(n) + ")");
      }
      break;
    case 2: {
      const std::size_t d = terminal_count(model);
      if (d * n > kMaxExactChainBits || (d - 1) * n > kMaxExactChainNoiseBits) {
        return over("exact mode for model3 enumerates 2^{dn} terms; caps are d*n <= " +
                    std::to_string(kMaxExactChainBits) + " and (d-1)*n <= " +
                    std::to_string(kMaxExactChainNoiseBits) + " (d = " + std::to_string(d) +
                    ", n = " + std::to_string(n) + ")");
      }
      break;
    }
    default:
      if (n > kMaxExactHelperLength) {
        return over("exact mode for model4 enumerates 2^{3n} terms; cap is n <= " +
                    std::to_string(kMaxExactHelperLength) + " (n = " + std::to_string(n) + ")");
      }
  }
  return std::nullopt;
}

/// Exhaustive law of (K_1, ..., K_d, F). Fallback keys enter analytically as
/// independent uniform draws. The transcript label is the concatenation of
/// all syndromes (model 3: terminal 1 most significant), prefixed by x3 for
/// model 4.
inline ExactOutcome exact_outcome_distribution(const SourceModel& model, const LinearCode& code,
                                               const ExtractionConfig& cfg = {}, std::size_t workers = 1) {
  if (auto why = exact_infeasibility(model, code)) throw FeasibilityError(*why + "; use the empirical path");
  using Word = LinearCode::Word;
  const std::size_t n = code.length();
  const std::size_t m = code.parity_checks();
  const Word space = Word{1} << n;
  const long double uniform = std::ldexp(1.0L, -static_cast<int>(n));

  return std::visit(
      [&](const auto& params) -> ExactOutcome {
        using T = std::decay_t<decltype(params)>;
        if constexpr (std::is_same_v<T, Model1Params>) {
          // X1 uniform, X2 = X1 ^ V.
          const auto noise = detail::bernoulli_weights(n, params.p());
          return detail::enumerate_exact(space, 2, code.codeword_count(), code.coset_count(), 1, workers,
                                         [&](Word x1, detail::ExactAccumulator& acc) {
                                           const Word s1 = code.syndrome_word(x1);
                                           const Word k1 = code.index_word(x1).column;
                                           for (Word v = 0; v < space; ++v) {
                                             const Word est = detail::reconstruct_word(code, s1, x1 ^ v);
                                             const std::uint64_t keys[2] = {k1, code.index_word(est).column};
                                             acc.add(uniform * noise[detail::popcount(v)], s1, keys, est == x1);
                                           }
                                         });
        } else if constexpr (std::is_same_v<T, Model2Params>) {
          validate_extraction(params, cfg);
          const auto table = build_regular_subsets(code, params, cfg.xi, cfg.eps_prime);
          const auto source = detail::bernoulli_weights(n, params.q());
          const auto noise = detail::bernoulli_weights(n, params.p());
          auto key_of = [&](Word x) {
            const auto slot = table.lookup_word(x);
            return slot ? slot->index : detail::kFallbackKey;
          };
          return detail::enumerate_exact(space, 2, table.key_count(), code.coset_count(), 1, workers,
                                         [&](Word x2, detail::ExactAccumulator& acc) {
                                           const long double px2 = source[detail::popcount(x2)];
                                           for (Word v = 0; v < space; ++v) {
                                             const Word x1 = x2 ^ v;
                                             const Word s1 = code.syndrome_word(x1);
                                             const Word est = detail::reconstruct_word(code, s1, x2);
                                             const std::uint64_t keys[2] = {key_of(x1), key_of(est)};
                                             acc.add(px2 * noise[detail::popcount(v)], s1, keys, est == x1);
                                           }
                                         });
        } else if constexpr (std::is_same_v<T, Model3Params>) {
          const std::size_t d = params.terminals();
          const std::size_t anchor = worst_link(params);
          std::vector<std::vector<long double>> link_weights;
          for (double p : params.link_probs()) link_weights.push_back(detail::bernoulli_weights(n, p));
          const Word noise_space = Word{1} << ((d - 1) * n);
          const std::uint64_t transcripts = std::uint64_t{1} << ((d - 1) * m);
          return detail::enumerate_exact(
              space, d, code.codeword_count(), transcripts, anchor, workers,
              [&](Word x1, detail::ExactAccumulator& acc) {
                std::vector<Word> xs(d);
                std::vector<Word> syndromes(d - 1);
                std::vector<std::uint64_t> keys(d);
                for (Word noise = 0; noise < noise_space; ++noise) {
                  long double w = uniform;
                  xs[0] = x1;
                  for (std::size_t l = 0; l + 1 < d; ++l) {
                    const Word v = (noise >> (n * (d - 2 - l))) & (space - 1);
                    w *= link_weights[l][detail::popcount(v)];
                    xs[l + 1] = xs[l] ^ v;
                  }
                  std::uint64_t f = 0;
                  for (std::size_t l = 0; l + 1 < d; ++l) {
                    syndromes[l] = code.syndrome_word(xs[l]);
                    f = (f << m) | syndromes[l];
                  }
                  bool correct = true;
                  for (std::size_t i = 1; i <= d; ++i) {
                    const Word est = detail::chain_estimate_word(code, syndromes, xs[i - 1], i, anchor);
                    correct = correct && est == xs[anchor - 1];
                    keys[i - 1] = code.index_word(est).column;
                  }
                  acc.add(w, f, keys, correct);
                }
              });
        } else {
          // X3 uniform, W ~ B(q), V ~ B(p); X2 = X3 ^ W, X1 = W ^ V.
          validate_extraction(params, cfg);
          const auto range = regular_key_range(code, params, cfg.eps_prime);
          const auto helper = detail::bernoulli_weights(n, params.q());
          const auto noise = detail::bernoulli_weights(n, params.p());
          return detail::enumerate_exact(
              space, 2, range.size, std::uint64_t{1} << (n + m), 1, workers,
              [&](Word x3, detail::ExactAccumulator& acc) {
                const auto table =
                    build_regular_subsets(code, params, cfg.xi, cfg.eps_prime, BitVector::from_uint(x3, n));
                auto key_of = [&](Word x) {
                  const auto slot = table.lookup_word(x);
                  return slot ? slot->index : detail::kFallbackKey;
                };
                for (Word w = 0; w < space; ++w) {
                  const Word x2 = x3 ^ w;
                  const long double pw = uniform * helper[detail::popcount(w)];
                  for (Word v = 0; v < space; ++v) {
                    const Word x1 = w ^ v;
                    const Word s1 = code.syndrome_word(x1);
                    const Word est = detail::reconstruct_word(code, s1, x2 ^ x3);
                    const std::uint64_t keys[2] = {key_of(x1), key_of(est)};
                    acc.add(pw * noise[detail::popcount(v)], (x3 << m) | s1, keys, est == x1);
                  }
                }
              });
        }
      },
      model);
}

// --- criteria ------------------------------------------------------------------

struct CriteriaReport {
  std::string model;
  std::string code;
  std::size_t n = 0;
  std::size_t m = 0;
  std::uint64_t key_range = 0;
  std::size_t key_terminal = 1;
  double log_key_range_bits = 0.0;
  double nominal_rate = 0.0;
  double capacity_bits_per_symbol = 0.0;
  double eps = 0.0;

  // Exact path.
  std::optional<double> mismatch_exact;
  std::optional<double> reconstruction_error_exact;
  std::optional<double> leakage_bits;
  std::optional<double> key_entropy_bits;
  std::optional<double> fallback_prob_exact;
  std::optional<double> rate_bits_per_symbol;
  std::optional<double> capacity_gap;

  // Empirical path.
  std::optional<std::uint64_t> trials;
  std::optional<double> mismatch_empirical;
  std::optional<double> mismatch_halfwidth;
  std::optional<double> reconstruction_error_empirical;
  std::optional<double> fallback_freq;
  std::optional<double> key_entropy_plugin_bits;
  std::optional<double> chi_square;
  std::optional<double> chi_square_critical;

  // Rate guarantees: models 1/3 check H/n > C - eps when m <= n (h_b(p) + eps);
  // models 2/4 compare H/n with I - eps'.
  std::optional<bool> rate_clause_applicable;
  std::optional<double> rate_target;
  std::optional<double> rate_floor_discrepancy;

  std::vector<std::string> flags;
  std::vector<std::pair<std::string, bool>> checks;

  [[nodiscard]] bool all_checks_pass() const {
    for (const auto& [name, ok] : checks) {
      if (!ok) return false;
    }
    return true;
  }

  [[nodiscard]] std::optional<bool> check(const std::string& name) const {
    for (const auto& [key, ok] : checks) {
      if (key == name) return ok;
    }
    return std::nullopt;
  }

  void add_flag(const std::string& flag) {
    for (const auto& f : flags) {
      if (f == flag) return;
    }
    flags.push_back(flag);
  }
};

namespace detail {

inline double link_crossover(const SourceModel& model) {
  if (const auto* m1 = std::get_if<Model1Params>(&model)) return m1->p();
  if (const auto* m3 = std::get_if<Model3Params>(&model)) return m3->link(worst_link(*m3));
  return 0.0;
}

inline CriteriaReport report_skeleton(const SourceModel& model, const LinearCode& code, std::uint64_t key_range,
                                      std::size_t key_terminal, bool clamped, const ExtractionConfig& cfg) {
  CriteriaReport r;
  r.model = model_name(model);
  r.code = code.name();
  r.n = code.length();
  r.m = code.parity_checks();
  r.key_range = key_range;
  r.key_terminal = key_terminal;
  r.log_key_range_bits = std::log2(static_cast<double>(key_range));
  r.nominal_rate = r.log_key_range_bits / static_cast<double>(r.n);
  r.capacity_bits_per_symbol = capacity(model);
  r.eps = cfg.eps;
  if (clamped) r.add_flag("key_range_clamped");
  const bool standard_array = std::holds_alternative<Model1Params>(model) || std::holds_alternative<Model3Params>(model);
  if (standard_array) {
    const double h = binary_entropy(link_crossover(model));
    r.rate_clause_applicable = static_cast<double>(r.m) <= static_cast<double>(r.n) * (h + cfg.eps);
  } else {
    r.rate_target = r.capacity_bits_per_symbol - cfg.eps_prime;
  }
  return r;
}

inline void set_check(CriteriaReport& r, const std::string& name, bool ok) {
  for (auto& [key, value] : r.checks) {
    if (key == name) {
      value = ok;
      return;
    }
  }
  r.checks.emplace_back(name, ok);
}

inline void add_rate_checks(CriteriaReport& r, double rate) {
  if (r.rate_clause_applicable) {
    if (*r.rate_clause_applicable) set_check(r, "rate_clause", rate > r.capacity_bits_per_symbol - r.eps);
  } else if (r.rate_target) {
    r.rate_floor_discrepancy = *r.rate_target - rate;
    // floor(2^e) >= 2^{e-1}, so the shortfall is below 1/n unless the range was clamped upward.
    const bool clamped = std::find(r.flags.begin(), r.flags.end(), "key_range_clamped") != r.flags.end();
    if (!clamped) {
      set_check(r, "rate_within_floor",
                *r.rate_floor_discrepancy >= -kExactTolerance &&
                    *r.rate_floor_discrepancy <= 1.0 / static_cast<double>(r.n) + kExactTolerance);
    }
  }
}

}  // namespace detail

/// Key range and the flag for a configuration, without enumerating anything.
inline std::pair<std::uint64_t, bool> configured_key_range(const SourceModel& model, const LinearCode& code,
                                                           const ExtractionConfig& cfg) {
  if (std::holds_alternative<Model2Params>(model) || std::holds_alternative<Model4Params>(model)) {
    const auto range = regular_key_range(code, model, cfg.eps_prime);
    return {range.size, range.clamped};
  }
  return {code.codeword_count(), false};
}

inline std::size_t key_terminal(const SourceModel& model) {
  if (const auto* m3 = std::get_if<Model3Params>(&model)) return worst_link(*m3);
  return 1;
}

inline CriteriaReport empty_report(const SourceModel& model, const LinearCode& code, const ExtractionConfig& cfg) {
  const auto [range, clamped] = configured_key_range(model, code, cfg);
  return detail::report_skeleton(model, code, range, key_terminal(model), clamped, cfg);
}

/// Fills the exact-path fields and checks from an enumerated outcome.
inline void apply_exact(CriteriaReport& r, const SourceModel& model, const LinearCode& code,
                        const ExactOutcome& exact) {
  const std::size_t ref = exact.reference_terminal;
  r.mismatch_exact = exact.prob_mismatch;
  r.reconstruction_error_exact = exact.prob_reconstruction_error;
  r.leakage_bits = exact.leakage_bits(ref);
  r.key_entropy_bits = exact.key_entropy_bits(ref);
  r.rate_bits_per_symbol = *r.key_entropy_bits / static_cast<double>(r.n);
  r.capacity_gap = r.capacity_bits_per_symbol - *r.rate_bits_per_symbol;
  if (std::holds_alternative<Model2Params>(model) || std::holds_alternative<Model4Params>(model)) {
    r.fallback_prob_exact = exact.prob_fallback.at(0);
  }
  detail::set_check(r, "normalized", std::fabs(exact.total_mass - 1.0) <= kExactTolerance);
  detail::set_check(r, "leakage_zero", *r.leakage_bits <= kExactTolerance);
  detail::set_check(r, "key_uniform", std::fabs(*r.key_entropy_bits - r.log_key_range_bits) <= kExactTolerance);
  detail::set_check(r, "agreement_given_correct_decoding", exact.prob_agreement_violation <= kExactTolerance);
  if (const auto* m1 = std::get_if<Model1Params>(&model); m1 && code.length() <= kMaxEnumerationLength) {
    detail::set_check(r, "mismatch_equals_decoding_error",
                      std::fabs(exact.prob_mismatch - exact_bsc_error_prob(code, m1->p())) <= kExactTolerance);
  }
  detail::add_rate_checks(r, *r.rate_bits_per_symbol);
  r.add_flag("leakage_exact_only");
}

/// Exact criteria for (model, code). Throws FeasibilityError past the caps.
inline CriteriaReport verify_criteria(const SourceModel& model, const LinearCode& code, const ExtractionConfig& cfg,
                                      std::size_t workers = 1) {
  auto report = empty_report(model, code, cfg);
  apply_exact(report, model, code, exact_outcome_distribution(model, code, cfg, workers));
  return report;
}

// --- empirical path ------------------------------------------------------------

/// Key histograms are kept up to this many key values.
inline constexpr std::uint64_t kMaxHistogramKeys = std::uint64_t{1} << 20;

// Streaming counts over protocol outcomes. Integer-valued, so merge order
// never changes the result.
class EmpiricalAccumulator {
 public:
  explicit EmpiricalAccumulator(std::uint64_t key_range)
      : key_range_(key_range), histogram_(key_range <= kMaxHistogramKeys ? key_range : 0, 0) {}

  void add(const ProtocolOutcome& outcome) {
    ++trials_;
    if (!outcome.keys_agree()) ++mismatches_;
    if (!outcome.reconstructions_correct()) ++reconstruction_errors_;
    const auto& key = outcome.keys.at(outcome.reference_terminal - 1);
    if (key && key->provenance == KeyProvenance::fallback) ++fallbacks_;
    if (key && !histogram_.empty()) ++histogram_.at(key->value);
  }

  void merge(const EmpiricalAccumulator& o) {
    detail::require(o.key_range_ == key_range_, "cannot merge batches with different key ranges");
    trials_ += o.trials_;
    mismatches_ += o.mismatches_;
    reconstruction_errors_ += o.reconstruction_errors_;
    fallbacks_ += o.fallbacks_;
    for (std::size_t i = 0; i < histogram_.size(); ++i) histogram_[i] += o.histogram_[i];
  }

  [[nodiscard]] std::uint64_t key_range() const noexcept { return key_range_; }
  [[nodiscard]] std::uint64_t trials() const noexcept { return trials_; }
  [[nodiscard]] std::uint64_t mismatches() const noexcept { return mismatches_; }
  [[nodiscard]] std::uint64_t reconstruction_errors() const noexcept { return reconstruction_errors_; }
  [[nodiscard]] std::uint64_t fallbacks() const noexcept { return fallbacks_; }
  [[nodiscard]] const std::vector<std::uint64_t>& histogram() const noexcept { return histogram_; }

 private:
  std::uint64_t key_range_;
  std::uint64_t trials_ = 0;
  std::uint64_t mismatches_ = 0;
  std::uint64_t reconstruction_errors_ = 0;
  std::uint64_t fallbacks_ = 0;
  std::vector<std::uint64_t> histogram_;
};

/// Pearson statistic of a histogram against the uniform law.
inline double chi_square_uniform(const std::vector<std::uint64_t>& histogram) {
  std::uint64_t total = 0;
  for (auto c : histogram) total += c;
  const double expected = static_cast<double>(total) / static_cast<double>(histogram.size());
  double stat = 0.0;
  for (auto c : histogram) {
    const double diff = static_cast<double>(c) - expected;
    stat += diff * diff / expected;
  }
  return stat;
}

/// Upper 1 - alpha quantile of chi-square with the given degrees of freedom.
inline double chi_square_critical(std::size_t dof, double confidence = 0.99) {
  return boost::math::quantile(boost::math::chi_squared(static_cast<double>(dof)), confidence);
}

/// Fills the empirical fields of a report.
inline void apply_empirical(CriteriaReport& r, const EmpiricalAccumulator& batch) {
  detail::require(batch.trials() >= 1, "empirical estimates need at least one trial");
  const double total = static_cast<double>(batch.trials());
  const double f = static_cast<double>(batch.mismatches()) / total;
  r.trials = batch.trials();
  r.mismatch_empirical = f;
  r.mismatch_halfwidth = 1.96 * std::sqrt(f * (1.0 - f) / total);
  r.reconstruction_error_empirical = static_cast<double>(batch.reconstruction_errors()) / total;
  if (r.rate_target || batch.fallbacks() > 0) {
    r.fallback_freq = static_cast<double>(batch.fallbacks()) / total;
  }
  const auto& hist = batch.histogram();
  if (!hist.empty()) {
    double h = 0.0;
    for (auto c : hist) {
      if (c == 0) continue;
      const double p = static_cast<double>(c) / total;
      h -= p * std::log2(p);
    }
    r.key_entropy_plugin_bits = h;
    r.add_flag("plugin_entropy_biased");
    if (hist.size() >= 2) {
      r.chi_square = chi_square_uniform(hist);
      r.chi_square_critical = chi_square_critical(hist.size() - 1);
      detail::set_check(r, "uniformity_not_rejected", *r.chi_square <= *r.chi_square_critical);
    }
  } else {
    r.add_flag("histogram_skipped");
  }
  if (r.mismatch_exact) {
    const double p = *r.mismatch_exact;
    const double sigma = std::sqrt(p * (1.0 - p) / total);
    detail::set_check(r, "empirical_matches_exact", std::fabs(f - p) <= 4.0 * sigma + kExactTolerance);
  }
  r.add_flag("leakage_exact_only");
}

/// Counts-only summary of an in-memory batch.
inline CriteriaReport empirical_estimates(std::span<const ProtocolOutcome> batch) {
  detail::require(!batch.empty(), "empirical estimates need at least one trial");
  EmpiricalAccumulator acc(batch.front().key_range);
  for (const auto& o : batch) acc.add(o);
  CriteriaReport r;
  r.key_range = acc.key_range();
  r.key_terminal = batch.front().reference_terminal;
  r.n = batch.front().sources.length();
  r.log_key_range_bits = std::log2(static_cast<double>(r.key_range));
  r.nominal_rate = r.log_key_range_bits / static_cast<double>(r.n);
  apply_empirical(r, acc);
  return r;
}

/// Trials handled per work unit in run_trials.
inline constexpr std::uint64_t kTrialChunk = 4096;

/// Runs n_trials independent protocol instances; trial t is seeded with
/// derive_seed(master_seed, t), so the result does not depend on `workers`.
inline EmpiricalAccumulator run_trials(const AnyProtocol& protocol, std::uint64_t n_trials, std::uint64_t master_seed,
                                       std::size_t workers = 1) {
  const std::uint64_t range = key_range(protocol);
  const std::size_t chunks = static_cast<std::size_t>((n_trials + kTrialChunk - 1) / kTrialChunk);
  std::vector<std::optional<EmpiricalAccumulator>> parts(chunks);
  for_each_chunk(chunks, workers, [&](std::size_t c) {
    EmpiricalAccumulator acc(range);
    const std::uint64_t end = std::min<std::uint64_t>(n_trials, (c + 1) * kTrialChunk);
    for (std::uint64_t t = c * kTrialChunk; t < end; ++t) acc.add(run_trial(protocol, derive_seed(master_seed, t)));
    parts[c].emplace(std::move(acc));
  });
  EmpiricalAccumulator total(range);
  for (const auto& part : parts) total.merge(*part);
  return total;
}

}  // namespace sklab
