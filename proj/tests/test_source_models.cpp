#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "sklab/source_models.hpp"
#include "sklab/testing/oracles.hpp"

using namespace sklab;

namespace {

// Sum of joint_pmf over every tuple of d sequences of length n.
double total_mass(const SourceModel& model, std::size_t n) {
  const std::size_t d = terminal_count(model);
  const std::uint64_t count = std::uint64_t{1} << (n * d);
  double total = 0.0;
  for (std::uint64_t code = 0; code < count; ++code) {
    SequenceTuple t;
    for (std::size_t k = 0; k < d; ++k) t.terminals.push_back(BitVector::from_uint((code >> (k * n)) & ((1u << n) - 1), n));
    total += joint_pmf(model, t);
  }
  return total;
}

}  // namespace

TEST(Params, RangesEnforced) {
  EXPECT_THROW(Model1Params(0.5), InvalidArgument);
  EXPECT_THROW(Model1Params(0.0), InvalidArgument);
  EXPECT_THROW(Model2Params(0.1, 1.0), InvalidArgument);
  EXPECT_THROW(Model3Params({}), InvalidArgument);
  EXPECT_THROW(Model3Params({0.1, 0.6}), InvalidArgument);
  EXPECT_THROW(Model4Params(0.7, 0.3), InvalidArgument);
  EXPECT_NO_THROW(Model2Params(0.1, 0.9));
}

TEST(JointPmf, SingleSymbolExamples) {
  const double p = 0.1;
  SequenceTuple t{{BitVector::from_string("0"), BitVector::from_string("0")}};
  EXPECT_DOUBLE_EQ(joint_pmf(Model1Params(p), t), 0.5 * (1 - p));
  SequenceTuple chain{{BitVector::from_string("0"), BitVector::from_string("0"), BitVector::from_string("0")}};
  EXPECT_DOUBLE_EQ(joint_pmf(Model3Params({0.1, 0.2}), chain), 0.5 * 0.9 * 0.8);
  EXPECT_THROW(joint_pmf(Model4Params(0.1, 0.2), t), InvalidArgument);
}

TEST(JointPmf, NormalizedExhaustively) {
  for (std::size_t n : {1, 2, 4, 6}) {
    EXPECT_NEAR(total_mass(Model1Params(0.07), n), 1.0, 1e-12);
    EXPECT_NEAR(total_mass(Model2Params(0.1, 0.3), n), 1.0, 1e-12);
  }
  for (std::size_t n : {1, 2, 4}) {
    EXPECT_NEAR(total_mass(Model3Params({0.03, 0.2}), n), 1.0, 1e-12);
    EXPECT_NEAR(total_mass(Model4Params(0.05, 0.3), n), 1.0, 1e-12);
  }
}

// P(x1, x2) = P(x2) * p^{w(v)} (1-p)^{n-w(v)} with v = x1 ^ x2.
TEST(JointPmf, VirtualChannelFactorization) {
  const std::size_t n = 5;
  const Model2Params m2(0.1, 0.3);
  for (std::uint64_t a = 0; a < 32; ++a) {
    for (std::uint64_t b = 0; b < 32; ++b) {
      const auto x1 = BitVector::from_uint(a, n);
      const auto x2 = BitVector::from_uint(b, n);
      const double v = sklab::testing::product_prob(x1 ^ x2, 0.1);
      EXPECT_NEAR(joint_pmf(m2, {{x1, x2}}), sklab::testing::product_prob(x2, 0.3) * v, 1e-15);
      EXPECT_NEAR(joint_pmf(Model1Params(0.1), {{x1, x2}}), std::pow(0.5, n) * v, 1e-15);
    }
  }
}

// The table gives X2 ^ X3 ~ B(q) independent of X3, and X1 = X2 ^ X3 ^ V.
TEST(JointPmf, Model4TableStructure) {
  const double p = 0.05, q = 0.3;
  const SourceModel m = Model4Params(p, q);
  for (int x1 = 0; x1 < 2; ++x1) {
    for (int x2 = 0; x2 < 2; ++x2) {
      for (int x3 = 0; x3 < 2; ++x3) {
        const int w = x2 ^ x3;
        const int v = x1 ^ x2 ^ x3;
        const double expected = 0.5 * (w ? q : 1 - q) * (v ? p : 1 - p);
        EXPECT_NEAR(symbol_pmf(m, {x1, x2, x3}), expected, 1e-17);
      }
    }
  }
  EXPECT_DOUBLE_EQ(symbol_pmf(m, {0, 0, 1}), p * q / 2);
  EXPECT_DOUBLE_EQ(symbol_pmf(m, {0, 1, 1}), (1 - p) * (1 - q) / 2);
}

TEST(Capacity, Examples) {
  EXPECT_NEAR(capacity(Model1Params(0.11)), 0.500084, 1e-6);
  EXPECT_NEAR(capacity(Model2Params(0.1, 0.3)), 0.4558, 1e-4);
  EXPECT_NEAR(capacity(Model3Params({0.03, 0.05})), 1 - binary_entropy(0.05), 1e-15);
  EXPECT_NEAR(capacity(Model3Params({0.03, 0.05})), 0.7136, 1e-4);
  for (double p = 0.01; p < 0.5; p += 0.01) {
    EXPECT_NEAR(capacity(Model2Params(p, 0.5)), capacity(Model1Params(p)), 1e-15);
  }
}

// Capacity of model 4 is I(X1 ^ X2 | X3), computed here from the table.
TEST(Capacity, Model4MatchesConditionalMutualInformation) {
  for (auto [p, q] : std::vector<std::pair<double, double>>{{0.05, 0.2}, {0.1, 0.5}, {0.2, 0.7}}) {
    const SourceModel m = Model4Params(p, q);
    double cmi = 0.0;
    for (int x3 = 0; x3 < 2; ++x3) {
      double p3 = 0.0;
      for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) p3 += symbol_pmf(m, {a, b, x3});
      }
      for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
          const double pab = symbol_pmf(m, {a, b, x3});
          double pa = 0.0, pb = 0.0;
          for (int k = 0; k < 2; ++k) {
            pa += symbol_pmf(m, {a, k, x3});
            pb += symbol_pmf(m, {k, b, x3});
          }
          if (pab > 0) cmi += pab * std::log2(pab * p3 / (pa * pb));
        }
      }
    }
    EXPECT_NEAR(capacity(m), cmi, 1e-12);
  }
}

TEST(WorstLink, TieBreak) {
  EXPECT_EQ(worst_link(Model3Params({0.1, 0.2, 0.05})), 2u);
  EXPECT_EQ(worst_link(Model3Params({0.2, 0.2})), 1u);
  EXPECT_EQ(worst_link(Model3Params({0.3})), 1u);
}

TEST(Sample, Model1CrossoverRate) {
  Rng rng(1);
  const std::size_t n = 100, trials = 2000;
  std::size_t flips = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto s = sample(Model1Params(0.1), n, rng);
    flips += (s.terminal(1) ^ s.terminal(2)).weight();
  }
  const double total = double(n * trials);
  EXPECT_NEAR(flips / total, 0.1, 4 * std::sqrt(0.09 / total));
}

TEST(Sample, Model2Marginals) {
  Rng rng(2);
  const std::size_t n = 100, trials = 2000;
  std::size_t ones1 = 0, ones2 = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto s = sample(Model2Params(0.1, 0.3), n, rng);
    ones1 += s.terminal(1).weight();
    ones2 += s.terminal(2).weight();
  }
  const double total = double(n * trials);
  EXPECT_NEAR(ones2 / total, 0.3, 4 * std::sqrt(0.21 / total));
  EXPECT_NEAR(ones1 / total, 0.34, 4 * std::sqrt(0.34 * 0.66 / total));
}

TEST(Sample, Model4FrequenciesMatchTable) {
  Rng rng(3);
  const SourceModel m = Model4Params(0.1, 0.3);
  std::array<std::size_t, 8> counts{};
  const std::size_t n = 50, trials = 4000;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto s = sample(m, n, rng);
    for (std::size_t i = 0; i < n; ++i) {
      ++counts[s.terminal(1)[i] * 4 + s.terminal(2)[i] * 2 + s.terminal(3)[i]];
    }
  }
  const double total = double(n * trials);
  for (int k = 0; k < 8; ++k) {
    const double pk = symbol_pmf(m, {k >> 2, (k >> 1) & 1, k & 1});
    EXPECT_NEAR(counts[k] / total, pk, 4 * std::sqrt(pk * (1 - pk) / total)) << k;
  }
}

TEST(Sample, SeededAndShaped) {
  Rng a(11), b(11);
  const auto s1 = sample(Model3Params({0.1, 0.2, 0.3}), 9, a);
  const auto s2 = sample(Model3Params({0.1, 0.2, 0.3}), 9, b);
  EXPECT_EQ(s1, s2);
  EXPECT_EQ(s1.count(), 4u);
  EXPECT_EQ(s1.length(), 9u);
  EXPECT_THROW(sample(Model1Params(0.1), 0, a), InvalidArgument);
}

TEST(Typicality, Examples) {
  EXPECT_TRUE(is_typical_weight(10, 3, 0.3, 0.1));
  EXPECT_FALSE(is_typical_weight(10, 10, 0.3, 0.1));
  for (std::size_t w = 0; w <= 12; ++w) EXPECT_TRUE(is_typical_weight(12, w, 0.5, 0.0));
}

TEST(Typicality, AcceptingWeightsAreAnInterval) {
  for (double alpha : {0.1, 0.3, 0.34, 0.7}) {
    for (double xi : {0.01, 0.05, 0.2}) {
      for (std::size_t n : {5, 10, 20}) {
        int transitions = 0;
        bool prev = is_typical_weight(n, 0, alpha, xi);
        for (std::size_t w = 1; w <= n; ++w) {
          const bool cur = is_typical_weight(n, w, alpha, xi);
          transitions += cur != prev;
          prev = cur;
        }
        EXPECT_LE(transitions, 2) << alpha << " " << xi << " " << n;
      }
    }
  }
}

TEST(Typicality, MatchesDisplayDefinition) {
  for (std::size_t n : {4, 6, 8}) {
    for (std::uint64_t x = 0; x < (1u << n); ++x) {
      const auto xv = BitVector::from_uint(x, n);
      for (double xi : {0.02, 0.1, 0.3}) EXPECT_EQ(is_typical(xv, 0.34, xi), sklab::testing::brute_typical(xv, 0.34, xi));
    }
  }
}

TEST(ConditionalTypicality, ExhaustiveAgainstDisplayDefinition) {
  for (auto [p, q] : std::vector<std::pair<double, double>>{{0.05, 0.2}, {0.1, 0.5}, {0.2, 0.2}, {0.3, 0.8}}) {
    const Model4Params m(p, q);
    for (std::size_t n : {3, 5, 6}) {
      for (double xi : {0.05, 0.2, 0.5}) {
        for (std::uint64_t y = 0; y < (1u << n); ++y) {
          const auto yv = BitVector::from_uint(y, n);
          for (std::uint64_t x = 0; x < (1u << n); ++x) {
            const auto xv = BitVector::from_uint(x, n);
            ASSERT_EQ(is_cond_typical(xv, yv, m, xi), sklab::testing::brute_cond_typical(xv, yv, m, xi))
                << "p=" << p << " q=" << q << " xi=" << xi << " x=" << xv.to_string() << " y=" << yv.to_string();
          }
        }
      }
    }
  }
}

// X3 is uniform, so every conditioning sequence is typical and T(y) is never
// empty for that reason; a zero slack still leaves most x out.
TEST(ConditionalTypicality, UniformConditionAlwaysTypical) {
  const Model4Params m(0.1, 0.3);
  const auto pmf = model4_x1_x3_pmf(m);
  EXPECT_DOUBLE_EQ(pmf.y_one(), 0.5);
  std::size_t members = 0;
  for (std::uint64_t x = 0; x < 64; ++x) members += is_cond_typical(BitVector::from_uint(x, 6), BitVector::from_string("000000"), m, 0.0);
  EXPECT_LT(members, 64u);
}

TEST(ConditionalTypicality, JointTypeCounts) {
  const auto jt = joint_type(BitVector::from_string("110100"), BitVector::from_string("011001"));
  EXPECT_EQ(jt.ones_where_y0, 2u);
  EXPECT_EQ(jt.ones_where_y1, 1u);
}
