#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "sklab/bits.hpp"
#include "sklab/errors.hpp"
#include "sklab/information.hpp"
#include "sklab/rng.hpp"

using namespace sklab;

TEST(BitVector, StringRoundTrip) {
  const auto v = BitVector::from_string("0110100");
  EXPECT_EQ(v.size(), 7u);
  EXPECT_EQ(v.to_string(), "0110100");
  EXPECT_EQ(v.weight(), 3u);
  EXPECT_TRUE(v[1]);
  EXPECT_FALSE(v[0]);
}

TEST(BitVector, RejectsBadCharacters) { EXPECT_THROW(BitVector::from_string("01x"), InvalidArgument); }

TEST(BitVector, BigEndianIntegers) {
  // Position 0 is the most significant bit.
  EXPECT_EQ(BitVector::from_string("100").to_uint(), 4u);
  EXPECT_EQ(BitVector::from_uint(5, 4).to_string(), "0101");
  for (std::uint64_t x = 0; x < 64; ++x) EXPECT_EQ(BitVector::from_uint(x, 6).to_uint(), x);
}

TEST(BitVector, XorAndDot) {
  const auto a = BitVector::from_string("1100");
  const auto b = BitVector::from_string("1010");
  EXPECT_EQ((a ^ b).to_string(), "0110");
  EXPECT_TRUE(a.dot(BitVector::from_string("1000")));
  EXPECT_FALSE(a.dot(b ^ a ^ a ^ BitVector::from_string("0110")));
  EXPECT_THROW((void)(a ^ BitVector::from_string("101")), InvalidArgument);
}

TEST(BitVector, LongVectorsSpanWords) {
  BitVector v(130);
  v.set(0, true);
  v.set(64, true);
  v.set(129, true);
  EXPECT_EQ(v.weight(), 3u);
  v.flip(64);
  EXPECT_EQ(v.weight(), 2u);
  EXPECT_FALSE(v.is_zero());
}

TEST(BitVector, LexicographicOrder) {
  EXPECT_LT(BitVector::from_string("0011"), BitVector::from_string("0100"));
  EXPECT_LT(BitVector::from_string("0111"), BitVector::from_string("1000"));
}

TEST(BitMatrix, RankAndMultiply) {
  const auto m = BitMatrix::from_rows({"110", "101"});
  EXPECT_EQ(m.rank(), 2u);
  EXPECT_EQ(m.multiply(BitVector::from_string("101")).to_string(), "10");
  EXPECT_EQ(m.multiply(BitVector::from_string("110")).to_string(), "01");
  EXPECT_EQ(BitMatrix::from_rows({"110", "110"}).rank(), 1u);
}

TEST(BitMatrix, RowEchelonPivots) {
  auto m = BitMatrix::from_rows({"0110", "1100", "1010"});
  const auto pivots = m.reduce_row_echelon();
  EXPECT_EQ(pivots, (std::vector<std::size_t>{0, 1}));
  EXPECT_TRUE(m.row(2).is_zero());
}

TEST(Rng, DeriveSeedIsDeterministicAndSpread) {
  EXPECT_EQ(derive_seed(1, 2), derive_seed(1, 2));
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(derive_seed(42, i));
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_NE(derive_seed(1, 2), derive_seed(2, 1));
}

TEST(Rng, SameSeedSameStream) {
  Rng a(9), b(9);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
}

TEST(Rng, BelowStaysInRangeAndCoversIt) {
  Rng rng(3);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const auto v = rng.below(7);
    ASSERT_LT(v, 7u);
    ++counts[v];
  }
  for (int c : counts) EXPECT_NEAR(c, 10000, 500);
}

TEST(Rng, BernoulliFrequency) {
  Rng rng(5);
  int ones = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) ones += rng.bernoulli(0.3);
  EXPECT_NEAR(ones / double(n), 0.3, 4 * std::sqrt(0.21 / n));
}

TEST(Information, BinaryEntropyValues) {
  EXPECT_EQ(binary_entropy(0.0), 0.0);
  EXPECT_EQ(binary_entropy(1.0), 0.0);
  EXPECT_DOUBLE_EQ(binary_entropy(0.5), 1.0);
  EXPECT_NEAR(binary_entropy(0.11), 0.499916, 1e-6);
  EXPECT_THROW(binary_entropy(1.5), InvalidArgument);
}

TEST(Information, EntropyOfUniform) {
  EXPECT_NEAR(entropy(Distribution::uniform(16)), 4.0, 1e-12);
  EXPECT_NEAR(entropy(Distribution({0.25, 0.75})), binary_entropy(0.25), 1e-15);
}

TEST(Information, RejectsUnnormalized) {
  EXPECT_THROW(Distribution({0.5, 0.6}), InvalidArgument);
  EXPECT_THROW(Distribution({-0.1, 1.1}), InvalidArgument);
}

TEST(Information, MutualInformationIndependentAndCopy) {
  // Product law: zero. Identity law on 4 symbols: 2 bits.
  std::vector<double> prod;
  for (double a : {0.2, 0.8}) {
    for (double b : {0.1, 0.6, 0.3}) prod.push_back(a * b);
  }
  EXPECT_NEAR(mutual_information(JointDistribution(2, 3, prod)), 0.0, 1e-15);
  std::vector<double> copy(16, 0.0);
  for (int i = 0; i < 4; ++i) copy[i * 4 + i] = 0.25;
  EXPECT_NEAR(mutual_information(JointDistribution(4, 4, copy)), 2.0, 1e-12);
}

TEST(Information, ChainRule) {
  const JointDistribution j(2, 2, {0.4, 0.1, 0.2, 0.3});
  EXPECT_NEAR(mutual_information(j), entropy(j.first()) + entropy(j.second()) - joint_entropy(j), 1e-14);
}
