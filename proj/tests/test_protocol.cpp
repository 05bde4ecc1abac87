#include <gtest/gtest.h>

#include <cstdint>
#include <vector>

#include "sklab/protocol.hpp"

using namespace sklab;

namespace {

BitVector bv(std::uint64_t x, std::size_t n) { return BitVector::from_uint(x, n); }

}  // namespace

TEST(Transcript, FormatAndLookup) {
  Transcript t;
  t.append(3, MessageKind::revealed_observation, BitVector::from_string("0011"));
  t.append(1, MessageKind::syndrome, BitVector::from_string("01"));
  EXPECT_EQ(t.to_string(), "3:R:0011 1:S:01");
  EXPECT_EQ(t.from(1).to_string(), "01");
  EXPECT_THROW((void)t.from(2), InvalidArgument);
}

TEST(Model1, ZeroNoiseAgrees) {
  const auto code = make_code("hamming(3)");
  const Model1Protocol proto(code, Model1Params(0.05));
  for (std::uint64_t x = 0; x < 128; ++x) {
    const auto out = proto.run({{bv(x, 7), bv(x, 7)}});
    EXPECT_TRUE(out.keys_agree());
    EXPECT_EQ(out.transcript.size(), 1u);
    EXPECT_EQ(out.transcript.messages()[0].payload, code.syndrome(bv(x, 7)));
  }
}

// Keys differ exactly when the noise is not its coset's leader.
TEST(Model1, MismatchIffDecodingFails) {
  const auto code = make_code("hamming(3)");
  const Model1Protocol proto(code, Model1Params(0.05));
  for (std::uint64_t x = 0; x < 128; ++x) {
    for (std::uint64_t v = 0; v < 128; ++v) {
      const auto out = proto.run({{bv(x, 7), bv(x ^ v, 7)}});
      const bool decode_ok = code.leader_word(code.syndrome_word(v)) == v;
      ASSERT_EQ(out.keys_agree(), decode_ok);
      ASSERT_EQ(out.reconstructions_correct(), decode_ok);
      if (std::popcount(v) <= 1) {
        ASSERT_TRUE(out.keys_agree());
      }
    }
  }
}

TEST(Model1, TrialsAreReproducible) {
  const auto code = make_code("random_linear(10,5,7)");
  const Model1Protocol proto(code, Model1Params(0.1));
  for (std::uint64_t seed : {1u, 99u, 12345u}) {
    const auto a = proto.run_trial(seed);
    const auto b = proto.run_trial(seed);
    EXPECT_EQ(a.transcript, b.transcript);
    EXPECT_EQ(a.keys, b.keys);
    EXPECT_EQ(a.sources, b.sources);
  }
  EXPECT_NE(proto.run_trial(1).sources, proto.run_trial(2).sources);
}

TEST(Model2, UniformSourceNoNoiseAgreesIndexed) {
  const auto code = make_code("hamming(3)");
  const Model2Protocol proto(code, Model2Params(0.05, 0.5), {0.05, 0.2, 0.01});
  Rng fb1(1), fb2(2);
  std::size_t indexed = 0;
  for (std::uint64_t x = 0; x < 128; ++x) {
    const auto out = proto.run({{bv(x, 7), bv(x, 7)}}, fb1, fb2);
    if (proto.table().lookup(bv(x, 7))) {
      ++indexed;
      EXPECT_TRUE(out.keys_agree());
      EXPECT_EQ(out.keys[0]->provenance, KeyProvenance::indexed);
    }
  }
  EXPECT_GT(indexed, 0u);
}

// Correct decoding with x1 assigned always yields equal indexed keys.
TEST(Model2, AgreementWhenDecodedAndAssigned) {
  const auto code = make_code("random_linear(10,5,7)");
  const Model2Protocol proto(code, Model2Params(0.1, 0.3), {0.15, 0.25, 0.01});
  Rng fb1(1), fb2(2);
  for (std::uint64_t x = 0; x < 1024; ++x) {
    for (std::uint64_t v : {0u, 1u, 3u, 64u, 513u}) {
      const auto out = proto.run({{bv(x, 10), bv(x ^ v, 10)}}, fb1, fb2);
      if (out.reconstructions_correct() && proto.table().lookup(bv(x, 10))) {
        ASSERT_TRUE(out.keys_agree());
      }
    }
  }
}

TEST(Model2, RejectsSlackViolation) {
  const auto code = make_code("random_linear(10,5,7)");
  EXPECT_THROW(Model2Protocol(code, Model2Params(0.1, 0.3), {0.15, 0.15, 0.01}), InvalidArgument);
  EXPECT_THROW(Model2Protocol(code, Model2Params(0.1, 0.3), {0.15, 0.16, 0.01}), InvalidArgument);
  EXPECT_NO_THROW(Model2Protocol(code, Model2Params(0.1, 0.3), {0.15, 0.17, 0.01}));
}

TEST(Model3, TwoTerminalsMatchModel1) {
  const auto code = make_code("hamming(3)");
  const Model1Protocol m1(code, Model1Params(0.08));
  const Model3Protocol m3(code, Model3Params({0.08}));
  for (std::uint64_t a = 0; a < 128; ++a) {
    for (std::uint64_t b = 0; b < 128; ++b) {
      const SequenceTuple t{{bv(a, 7), bv(b, 7)}};
      const auto o1 = m1.run(t);
      const auto o3 = m3.run(t);
      ASSERT_EQ(o1.transcript, o3.transcript);
      ASSERT_EQ(o1.keys, o3.keys);
    }
  }
}

TEST(Model3, TranscriptOrderAndAnchor) {
  const auto code = make_code("hamming(3)");
  const Model3Protocol proto(code, Model3Params({0.02, 0.09, 0.04}));
  EXPECT_EQ(proto.anchor(), 2u);
  const auto out = proto.run_trial(5);
  ASSERT_EQ(out.transcript.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(out.transcript.messages()[i].terminal, i + 1);
    EXPECT_EQ(out.transcript.messages()[i].payload, code.syndrome(out.sources.terminal(i + 1)));
  }
  EXPECT_EQ(out.keys.size(), 4u);
  // The anchor reads its own observation.
  EXPECT_EQ(*out.reconstructions[1], out.sources.terminal(2));
}

// A chain of noiseless links reproduces x_j everywhere.
TEST(Model3, NoiselessChainAgrees) {
  const auto code = make_code("random_linear(8,4,3)");
  const Model3Protocol proto(code, Model3Params({0.1, 0.2, 0.1}));
  for (std::uint64_t x = 0; x < 256; ++x) {
    const auto out = proto.run({{bv(x, 8), bv(x, 8), bv(x, 8), bv(x, 8)}});
    EXPECT_TRUE(out.keys_agree());
    EXPECT_TRUE(out.reconstructions_correct());
  }
}

TEST(Model4, TranscriptRevealsHelperFirst) {
  const auto code = make_code("random_linear(8,4,3)");
  const Model4Protocol proto(code, Model4Params(0.05, 0.2), {0.15, 0.35, 0.01});
  const auto out = proto.run_trial(3);
  ASSERT_EQ(out.transcript.size(), 2u);
  EXPECT_EQ(out.transcript.messages()[0].kind, MessageKind::revealed_observation);
  EXPECT_EQ(out.transcript.messages()[0].payload, out.sources.terminal(3));
  EXPECT_EQ(out.transcript.messages()[1].terminal, 1u);
  EXPECT_FALSE(out.keys[2].has_value());
  EXPECT_EQ(proto.run_trial(3).transcript, out.transcript);
}

TEST(Model4, RejectsSlackViolation) {
  const auto code = make_code("random_linear(8,4,3)");
  EXPECT_THROW(Model4Protocol(code, Model4Params(0.05, 0.2), {0.15, 0.3, 0.01}), InvalidArgument);
}

TEST(SingleShot, EntryPointsRun) {
  const auto h = make_code("hamming(3)");
  Rng rng(8);
  EXPECT_EQ(run_model1(h, Model1Params(0.05), rng).keys.size(), 2u);
  EXPECT_EQ(run_model2(h, Model2Params(0.05, 0.2), 0.1, 0.2, rng).keys.size(), 2u);
  EXPECT_EQ(run_model3(h, Model3Params({0.05, 0.05}), rng).keys.size(), 3u);
  EXPECT_EQ(run_model4(h, Model4Params(0.02, 0.1), 0.1, 0.25, rng).keys.size(), 3u);
}
