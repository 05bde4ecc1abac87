#pragma once

// The ten acceptance criteria as runnable checks. Shared by the acceptance
// test binary and `sklab verify`.

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "sklab/experiment.hpp"
#include "sklab/key_extraction.hpp"
#include "sklab/linear_code.hpp"
#include "sklab/oracle.hpp"
#include "sklab/protocol.hpp"
#include "sklab/source_models.hpp"
#include "sklab/testing/oracles.hpp"

namespace sklab::acceptance {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
  double budget_seconds = 0.0;
};

inline std::ostream& operator<<(std::ostream& out, const CriterionResult& r) {
  return out << (r.passed ? "PASS" : "FAIL") << "  criterion " << r.id << "  " << r.name << "  (" << std::fixed
             << std::setprecision(2) << r.seconds << " s of " << r.budget_seconds << " s)  " << r.detail
             << std::defaultfloat;
}

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Collects named sub-checks; the criterion passes when all of them do.
class Checklist {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
  }
  void note(const std::string& text) { notes_.push_back(text); }
  [[nodiscard]] bool ok() const { return failures_.empty(); }
  [[nodiscard]] std::string summary() const {
    std::string out;
    for (const auto& f : failures_) out += (out.empty() ? "" : "; ") + ("failed: " + f);
    for (const auto& n : notes_) out += (out.empty() ? "" : "; ") + n;
    return out;
  }

 private:
  std::vector<std::string> failures_;
  std::vector<std::string> notes_;
};

inline std::string num(double v, int digits = 6) {
  std::ostringstream out;
  out << std::setprecision(digits) << v;
  return out.str();
}

inline CriterionResult evaluate(int id, std::string name, double budget, const std::function<void(Checklist&)>& body) {
  CriterionResult r{id, std::move(name), false, {}, 0.0, budget};
  Checklist list;
  const auto start = Clock::now();
  try {
    body(list);
  } catch (const std::exception& e) {
    list.expect(false, std::string("exception: ") + e.what());
  }
  r.seconds = seconds_since(start);
  list.expect(r.seconds < budget, "runtime " + num(r.seconds, 3) + " s over budget");
  r.passed = list.ok();
  r.detail = list.summary();
  return r;
}

inline bool close(double a, double b) { return std::fabs(a - b) <= kExactTolerance; }

}  // namespace detail

/// 1. Model 1 exact secrecy: I(K1 ^ F) = 0 for hamming(3), repetition(3), p in {0.05, 0.11}.
inline CriterionResult exact_secrecy_model1(std::size_t workers) {
  return detail::evaluate(1, "exact secrecy, model 1", 40.0, [&](detail::Checklist& c) {
    for (const char* spec : {"hamming(3)", "repetition(3)"}) {
      const auto code = make_code(spec);
      for (double p : {0.05, 0.11}) {
        const auto start = detail::Clock::now();
        const auto r = verify_criteria(Model1Params(p), code, {}, workers);
        const double t = detail::seconds_since(start);
        const std::string tag = std::string(spec) + " p=" + detail::num(p);
        c.expect(*r.leakage_bits <= kExactTolerance, tag + " leakage " + detail::num(*r.leakage_bits));
        c.expect(t < 10.0, tag + " took " + detail::num(t) + " s");
        c.note(tag + " I=" + detail::num(*r.leakage_bits, 3));
      }
    }
  });
}

/// 2. H(K1) = log |K1| in every model, n <= 10 (models 1-3) and n <= 8 (model 4).
inline CriterionResult exact_uniformity(std::size_t workers) {
  return detail::evaluate(2, "exact uniformity, all models", 60.0, [&](detail::Checklist& c) {
    struct Case {
      std::string code;
      SourceModel model;
      ExtractionConfig cfg;
    };
    const std::vector<Case> cases = {
        {"hamming(3)", Model1Params(0.05), {}},
        {"repetition(5)", Model1Params(0.1), {}},
        {"random_linear(10,5,7)", Model1Params(0.11), {}},
        {"random_linear(10,5,7)", Model2Params(0.1, 0.3), {0.15, 0.25, 0.01}},
        {"hamming(3)", Model2Params(0.05, 0.2), {0.1, 0.2, 0.01}},
        {"random_linear(9,4,2)", Model2Params(0.05, 0.5), {0.05, 0.2, 0.01}},
        {"hamming(3)", Model3Params({0.03, 0.05}), {}},
        {"random_linear(10,5,7)", Model3Params({0.08}), {}},
        {"random_linear(6,3,4)", Model3Params({0.02, 0.06, 0.04}), {}},
        {"random_linear(8,4,3)", Model4Params(0.05, 0.2), {0.15, 0.35, 0.01}},
        {"hamming(3)", Model4Params(0.02, 0.1), {0.1, 0.25, 0.01}},
    };
    for (const auto& k : cases) {
      const auto code = make_code(k.code);
      const auto r = verify_criteria(k.model, code, k.cfg, workers);
      const std::string tag = r.model + " " + k.code;
      c.expect(std::fabs(*r.key_entropy_bits - r.log_key_range_bits) <= kExactTolerance,
               tag + " H=" + detail::num(*r.key_entropy_bits, 15) + " vs log M=" + detail::num(r.log_key_range_bits, 15));
    }
    c.note(std::to_string(cases.size()) + " configurations");
  });
}

/// Catalog members with n <= 10. The random family is infinite; a fixed
/// spread of shapes and seeds stands in for it.
inline std::vector<std::string> small_catalog() {
  return {"hamming(2)",           "hamming(3)",           "repetition(3)",        "repetition(5)",
          "repetition(7)",        "repetition(9)",        "random_linear(6,3,1)", "random_linear(8,4,3)",
          "random_linear(9,3,5)", "random_linear(10,5,7)", "random_linear(10,6,2)", "random_linear(10,2,9)"};
}

/// 3. Model 1 mismatch equals the code's exact BSC error probability.
inline CriterionResult mismatch_identity(std::size_t workers) {
  return detail::evaluate(3, "mismatch identity, model 1", 60.0, [&](detail::Checklist& c) {
    for (const auto& spec : small_catalog()) {
      const auto code = make_code(spec);
      for (double p : {0.01, 0.05, 0.1}) {
        const auto exact = exact_outcome_distribution(Model1Params(p), code, {}, workers);
        const double pe = exact_bsc_error_prob(code, p);
        c.expect(detail::close(exact.prob_mismatch, pe),
                 spec + " p=" + detail::num(p) + " mismatch " + detail::num(exact.prob_mismatch, 15) + " vs " +
                     detail::num(pe, 15));
      }
    }
    const auto h3 = make_code("hamming(3)");
    const double pe = exact_outcome_distribution(Model1Params(0.05), h3, {}, workers).prob_mismatch;
    c.expect(detail::close(pe, testing::hamming_error_closed_form(7, 0.05)), "hamming(3) closed form");
    c.note("hamming(3) p=0.05 mismatch=" + detail::num(pe, 7));
  });
}

/// 4. Monte-Carlo mismatch within 4 sigma of exact, key histogram uniform at 99%.
inline CriterionResult monte_carlo_consistency(std::size_t workers) {
  return detail::evaluate(4, "Monte-Carlo consistency", 30.0, [&](detail::Checklist& c) {
    const auto code = make_code("hamming(3)");
    const SourceModel model = Model1Params(0.05);
    constexpr std::uint64_t kTrials = 100000;
    auto r = empty_report(model, code, {});
    apply_exact(r, model, code, exact_outcome_distribution(model, code, {}, workers));
    apply_empirical(r, run_trials(make_protocol(code, model, {}), kTrials, 20240611, workers));
    const double p = *r.mismatch_exact;
    const double sigma = std::sqrt(p * (1 - p) / static_cast<double>(kTrials));
    c.expect(std::fabs(*r.mismatch_empirical - p) <= 4 * sigma,
             "empirical " + detail::num(*r.mismatch_empirical) + " vs exact " + detail::num(p));
    c.expect(*r.chi_square < *r.chi_square_critical,
             "chi-square " + detail::num(*r.chi_square) + " >= " + detail::num(*r.chi_square_critical));
    c.note("freq=" + detail::num(*r.mismatch_empirical) + " exact=" + detail::num(p) + " 4sigma=" +
           detail::num(4 * sigma, 3) + " chi2=" + detail::num(*r.chi_square, 4) + "/" +
           detail::num(*r.chi_square_critical, 4));
  });
}

/// 5. Model 1 rate clause for codes with h(p) <= m/n < h(p) + eps, and the
/// reported gap equals the code's rate gap to capacity.
inline CriterionResult rate_bound(std::size_t workers) {
  return detail::evaluate(5, "rate bound, model 1", 10.0, [&](detail::Checklist& c) {
    struct Case {
      std::string code;
      double p;
    };
    // For each p the catalog code whose m/n sits in [h(p), h(p) + 0.01).
    const std::vector<Case> cases = {{"hamming(3)", 0.086}, {"repetition(3)", 0.172}, {"random_linear(10,5,7)", 0.11}};
    const ExtractionConfig cfg{};
    for (const auto& k : cases) {
      const auto code = make_code(k.code);
      const double ratio = static_cast<double>(code.parity_checks()) / static_cast<double>(code.length());
      const double h = binary_entropy(k.p);
      const std::string tag = k.code + " p=" + detail::num(k.p);
      c.expect(ratio >= h && ratio < h + cfg.eps, tag + " is not a valid catalog choice");
      const auto r = verify_criteria(Model1Params(k.p), code, cfg, workers);
      c.expect(r.check("rate_clause").value_or(false), tag + " rate clause");
      const double code_gap = (1.0 - h) - code.rate();
      c.expect(detail::close(*r.capacity_gap, code_gap), tag + " gap " + detail::num(*r.capacity_gap, 15));
      c.note(tag + " gap=" + detail::num(*r.capacity_gap, 5));
    }
  });
}

/// 6. Model 2 table audit, exact secrecy and the q = 1/2 reduction.
inline CriterionResult model2_structure(std::size_t workers) {
  return detail::evaluate(6, "model 2 structure", 60.0, [&](detail::Checklist& c) {
    struct AuditCase {
      std::string code;
      double p, q, xi, eps_prime;
    };
    const std::vector<AuditCase> audits = {
        {"random_linear(12,6,11)", 0.1, 0.3, 0.1, 0.2},  {"random_linear(12,4,5)", 0.05, 0.2, 0.15, 0.3},
        {"random_linear(11,5,3)", 0.1, 0.5, 0.05, 0.15}, {"random_linear(10,5,7)", 0.1, 0.3, 0.15, 0.25},
        {"hamming(3)", 0.05, 0.2, 0.1, 0.2},             {"repetition(5)", 0.1, 0.4, 0.2, 0.25},
    };
    std::size_t subsets = 0;
    for (const auto& a : audits) {
      const auto code = make_code(a.code);
      const Model2Params params(a.p, a.q);
      const double alpha = a.p + a.q - 2 * a.p * a.q;
      const auto table = build_regular_subsets(code, params, a.xi, a.eps_prime);
      const auto issues = testing::audit_regular_subsets(
          table, code, [&](const BitVector& x) { return testing::brute_typical(x, alpha, a.xi); },
          [&](const BitVector& x) { return testing::product_prob(x, alpha); });
      const std::string tag = a.code + " q=" + detail::num(a.q);
      c.expect(issues.empty(), tag + " audit: " + (issues.empty() ? "" : issues.front()));
      if (a.q == 0.5) {
        const std::uint64_t per = code.codeword_count() / table.key_count();
        for (std::uint64_t i = 0; i < table.coset_count(); ++i) {
          c.expect(table.subset_count(i) == per, tag + " coset " + std::to_string(i) + " N_i");
        }
      }
      for (std::uint64_t i = 0; i < table.coset_count(); ++i) subsets += table.subset_count(i);
      if (code.length() <= kMaxExactPairLength) {
        const auto r = verify_criteria(params, code, {a.xi, a.eps_prime, 0.01}, workers);
        c.expect(*r.leakage_bits <= kExactTolerance, tag + " leakage " + detail::num(*r.leakage_bits));
      }
    }
    c.note(std::to_string(subsets) + " subsets audited");

    // With q = 1/2 and M = 2^{n-m} each coset is one subset and the key is a
    // within-coset rank, so agreement behaves exactly as in model 1.
    for (double p : {0.01, 0.05}) {
      const auto code = make_code("hamming(3)");
      const ExtractionConfig cfg{0.05, capacity(Model1Params(p)) - code.rate(), 0.01};
      const auto m1 = verify_criteria(Model1Params(p), code, cfg, workers);
      const auto m2 = verify_criteria(Model2Params(p, 0.5), code, cfg, workers);
      const std::string tag = "q=1/2 p=" + detail::num(p);
      c.expect(m2.key_range == m1.key_range, tag + " key range " + std::to_string(m2.key_range));
      c.expect(detail::close(*m2.mismatch_exact, *m1.mismatch_exact), tag + " mismatch");
      c.expect(detail::close(*m2.reconstruction_error_exact, *m1.reconstruction_error_exact), tag + " decoding error");
      c.expect(detail::close(*m2.key_entropy_bits, *m1.key_entropy_bits), tag + " key entropy");
      c.expect(*m2.fallback_prob_exact <= kExactTolerance, tag + " fallback");
      c.expect(*m2.leakage_bits <= kExactTolerance, tag + " leakage");
    }
  });
}

/// 7. Model 3 chain law and the d = 2 reduction.
inline CriterionResult model3_chain(std::size_t workers) {
  return detail::evaluate(7, "model 3 chain law", 30.0, [&](detail::Checklist& c) {
    const auto code = make_code("hamming(3)");
    const Model3Params params({0.03, 0.05});
    const auto exact = exact_outcome_distribution(params, code, {}, workers);
    const double direct = 1.0 - exact.prob_reconstruction_error;
    const double product = testing::link_product_success(code, {0.03, 0.05});
    c.expect(detail::close(direct, product),
             "direct " + detail::num(direct, 15) + " vs product " + detail::num(product, 15));
    c.expect(exact.prob_keys_agree >= product - kExactTolerance, "Pr(K1=K2=K3) below product");
    c.note("Pr(all correct)=" + detail::num(direct, 8) + " Pr(keys agree)=" + detail::num(exact.prob_keys_agree, 8));

    // d = 2 against model 1: identical exact laws and identical runs.
    for (double p : {0.05, 0.11}) {
      const auto e1 = exact_outcome_distribution(Model1Params(p), code, {}, workers);
      const auto e3 = exact_outcome_distribution(Model3Params({p}), code, {}, workers);
      const std::string tag = "d=2 p=" + detail::num(p);
      c.expect(e1.key_transcript == e3.key_transcript, tag + " key/transcript law differs");
      c.expect(e1.prob_mismatch == e3.prob_mismatch && e1.prob_keys_agree == e3.prob_keys_agree &&
                   e1.prob_reconstruction_error == e3.prob_reconstruction_error,
               tag + " agreement statistics differ");
    }
    const Model1Protocol p1(code, Model1Params(0.05));
    const Model3Protocol p3(code, Model3Params({0.05}));
    const std::size_t n = code.length();
    bool same = true;
    for (std::uint64_t a = 0; a < (std::uint64_t{1} << n) && same; ++a) {
      for (std::uint64_t b = 0; b < (std::uint64_t{1} << n) && same; ++b) {
        SequenceTuple t{{BitVector::from_uint(a, n), BitVector::from_uint(b, n)}};
        const auto o1 = p1.run(t);
        const auto o3 = p3.run(t);
        same = o1.transcript == o3.transcript && o1.keys == o3.keys && o1.reconstructions == o3.reconstructions;
      }
    }
    c.expect(same, "d=2 run differs from model 1 on some realization");
  });
}

/// 8. Model 4 privacy against (X3, F) and the conditional-typicality tables.
inline CriterionResult model4_privacy(std::size_t workers) {
  return detail::evaluate(8, "model 4 privacy", 60.0, [&](detail::Checklist& c) {
    struct LeakCase {
      std::string code;
      double p, q, xi, eps_prime;
    };
    for (const auto& k : std::vector<LeakCase>{{"random_linear(8,4,3)", 0.05, 0.2, 0.15, 0.35},
                                               {"hamming(3)", 0.02, 0.1, 0.1, 0.25},
                                               {"random_linear(8,3,6)", 0.03, 0.5, 0.1, 0.25},
                                               {"repetition(5)", 0.1, 0.3, 0.05, 0.15}}) {
      const auto code = make_code(k.code);
      const auto r = verify_criteria(Model4Params(k.p, k.q), code, {k.xi, k.eps_prime, 0.01}, workers);
      c.expect(*r.leakage_bits <= kExactTolerance, k.code + " leakage " + detail::num(*r.leakage_bits));
      c.expect(r.check("key_uniform").value_or(false), k.code + " key entropy");
    }

    // Exhaustive: library membership and table contents against the display definition.
    struct TypCase {
      std::string code;
      double p, q, xi;
    };
    std::size_t pairs = 0;
    for (const auto& k : std::vector<TypCase>{{"random_linear(6,3,4)", 0.05, 0.2, 0.15},
                                              {"random_linear(6,2,1)", 0.1, 0.3, 0.3},
                                              {"random_linear(6,3,4)", 0.05, 0.5, 0.2},
                                              {"repetition(5)", 0.1, 0.1, 0.25},
                                              {"hamming(2)", 0.2, 0.3, 0.4}}) {
      const auto code = make_code(k.code);
      const Model4Params params(k.p, k.q);
      const std::size_t n = code.length();
      const std::uint64_t total = std::uint64_t{1} << n;
      // Only membership matters here; pick eps' so that M = 2.
      const double eps_prime = capacity(params) - 1.5 / static_cast<double>(n);
      bool membership = true;
      bool counts = true;
      bool audit = true;
      for (std::uint64_t yw = 0; yw < total; ++yw) {
        const auto y = BitVector::from_uint(yw, n);
        const auto table = build_regular_subsets(code, params, k.xi, eps_prime, y);
        std::vector<std::uint64_t> per_coset(code.coset_count(), 0);
        for (std::uint64_t xw = 0; xw < total; ++xw) {
          const auto x = BitVector::from_uint(xw, n);
          const bool brute = testing::brute_cond_typical(x, y, params, k.xi);
          membership &= brute == is_cond_typical(x, y, params, k.xi);
          if (brute) ++per_coset[code.syndrome(x).to_uint()];
          ++pairs;
        }
        for (std::uint64_t i = 0; i < code.coset_count(); ++i) counts &= table.typical_count(i) == per_coset[i];
        const auto issues = testing::audit_regular_subsets(
            table, code, [&](const BitVector& x) { return testing::brute_cond_typical(x, y, params, k.xi); },
            [&](const BitVector& x) { return testing::product_prob(x, params.p() + params.q() - 2 * params.p() * params.q()); });
        audit &= issues.empty();
      }
      c.expect(membership, k.code + " membership differs from the display definition");
      c.expect(counts, k.code + " table typical counts differ");
      c.expect(audit, k.code + " table audit");
    }
    c.note(std::to_string(pairs) + " (x, x3) pairs checked");
  });
}

/// 9. Mismatch of repetition(n), n = 3, 5, 7 at p = 0.05 strictly decreases.
inline CriterionResult monotone_improvement(std::size_t workers) {
  return detail::evaluate(9, "monotone improvement", 10.0, [&](detail::Checklist& c) {
    std::vector<double> values;
    for (std::size_t n : {3, 5, 7}) {
      const auto code = make_code("repetition(" + std::to_string(n) + ")");
      values.push_back(exact_outcome_distribution(Model1Params(0.05), code, {}, workers).prob_mismatch);
    }
    c.expect(values[0] > values[1] && values[1] > values[2], "not strictly decreasing");
    c.note("mismatch n=3,5,7: " + detail::num(values[0], 8) + ", " + detail::num(values[1], 8) + ", " +
           detail::num(values[2], 8));
  });
}

/// Configurations used by the determinism criterion; all four models, both paths.
inline std::vector<ExperimentConfig> determinism_configs() {
  std::vector<ExperimentConfig> out;
  auto add = [&](const std::string& text) { out.push_back(ExperimentConfig::parse(text)); };
  add("model = model1\np = 0.05\ncode = hamming(3)\ntrials = 30000\nseed = 7\nmode = both\n");
  add("model = model2\np = 0.1\nq = 0.3\ncode = random_linear(10,5,7)\ntrials = 20000\nseed = 11\n"
      "xi = 0.15\neps_prime = 0.25\nmode = both\n");
  add("model = model3\nlink_probs = 0.03,0.05\ncode = hamming(3)\ntrials = 20000\nseed = 13\nmode = both\n");
  add("model = model4\np = 0.05\nq = 0.2\ncode = random_linear(8,4,3)\ntrials = 20000\nseed = 17\n"
      "xi = 0.15\neps_prime = 0.35\nmode = both\n");
  return out;
}

/// 10. Same seed, byte-identical reports (timing aside) on 1, 2 and 8 workers.
inline CriterionResult determinism(std::size_t /*workers*/) {
  return detail::evaluate(10, "determinism across workers", 60.0, [&](detail::Checklist& c) {
    for (const auto& cfg : determinism_configs()) {
      const auto reference = strip_timing(run_experiment(cfg, 1).to_text());
      for (std::size_t w : {1, 2, 8}) {
        c.expect(strip_timing(run_experiment(cfg, w).to_text()) == reference,
                 cfg.model + " report differs at " + std::to_string(w) + " workers");
      }
    }
    c.note("4 configurations, workers 1/1/2/8");
  });
}

inline std::vector<std::function<CriterionResult(std::size_t)>> all_criteria() {
  return {exact_secrecy_model1, exact_uniformity, mismatch_identity,    monte_carlo_consistency, rate_bound,
          model2_structure,     model3_chain,     model4_privacy,       monotone_improvement,    determinism};
}

/// Runs every criterion, printing one line each. Returns true when all pass.
inline bool run_all(std::ostream& out, std::size_t workers) {
  bool ok = true;
  for (const auto& criterion : all_criteria()) {
    const auto r = criterion(workers);
    out << r << '\n' << std::flush;
    ok &= r.passed;
  }
  return ok;
}

}  // namespace sklab::acceptance
