#include <gtest/gtest.h>

#include <random>

#include "fsdim/normality.hpp"
#include "support/oracles.hpp"

using namespace fsdim;

namespace {

NormalityParams P(double eps, std::size_t k, std::uint32_t b = 2) { return NormalityParams(eps, k, Alphabet(b)); }

const std::vector<Target> kN{Target{}};

}  // namespace

TEST(NormalityParams, Validation) {
  EXPECT_THROW(P(0.0, 1), InvalidArgument);
  EXPECT_THROW(P(-0.1, 1), InvalidArgument);
  EXPECT_THROW(P(0.1, 0), InvalidArgument);
}

TEST(IsEkNormal, Examples) {
  EXPECT_TRUE(is_ek_normal(2, P(0.1, 1)));         // "10"
  EXPECT_FALSE(is_ek_normal(1024, P(0.1, 1)));     // "10000000000": one 1 in 11 digits
  std::mt19937_64 rng(1);
  for (int t = 0; t < 100; ++t) {
    Natural n(std::to_string(1 + rng() % 1000000000));
    EXPECT_TRUE(is_ek_normal(n, P(1.0, 1 + t % 5, 2 + t % 9)));
  }
}

TEST(IsEkNormal, AgreesWithDefinitionOracle) {
  for (std::uint32_t b : {2u, 10u}) {
    for (std::size_t k = 1; k <= 3; ++k) {
      for (double eps : {0.02, 0.1, 0.125, 0.25}) {
        const auto params = P(eps, k, b);
        for (unsigned long n = 1; n <= 10000; ++n)
          ASSERT_EQ(is_ek_normal(n, params), oracle::ek_normal(n, eps, k, b)) << n << " b" << b << " k" << k << " e" << eps;
      }
    }
  }
}

TEST(IsEkNormal, MonotoneInEpsilon) {
  const std::vector<double> eps{0.01, 0.03, 0.1, 0.2, 0.4};
  for (unsigned long n = 1; n <= 20000; n += 3) {
    bool seen = false;
    for (double e : eps) {
      bool ok = is_ek_normal(n, P(e, 2));
      if (seen) {
        ASSERT_TRUE(ok) << n << " " << e;
      }
      seen = seen || ok;
    }
  }
}

TEST(Targets, ParseAndName) {
  auto t = parse_targets("n,2n,n2,n^3,6n^2");
  ASSERT_EQ(t.size(), 5u);
  EXPECT_EQ(t[0].name(), "n");
  EXPECT_EQ(t[1].name(), "2n");
  EXPECT_EQ(t[2].name(), "n2");
  EXPECT_EQ(t[3].name(), "n^3");
  EXPECT_EQ(t[4].name(), "6n^2");
  EXPECT_EQ(t[4].apply(3), 54);
  EXPECT_THROW(parse_target("m"), InvalidArgument);
  EXPECT_THROW(parse_target("0n"), InvalidArgument);
  EXPECT_THROW(parse_targets(""), InvalidArgument);
}

TEST(Census, TrivialTolerance) {
  auto c = census(10, P(1.0, 1), kN);
  EXPECT_EQ(c.failures, (std::vector<std::uint64_t>{0}));
}

TEST(Census, MatchesPointwiseCountAndIsReproducible) {
  const auto params = P(0.1, 2);
  const auto targets = parse_targets("n,n2");
  auto a = census(5000, params, targets, 1);
  auto b = census(5000, params, targets, 3);
  EXPECT_EQ(a.failures, b.failures);
  EXPECT_EQ(a.failures_by_decade, b.failures_by_decade);
  EXPECT_EQ(a.decades, (std::vector<std::uint64_t>{10, 100, 1000, 5000}));
  for (std::size_t t = 0; t < targets.size(); ++t) {
    std::uint64_t fails = 0;
    for (unsigned long n = 1; n <= 1000; ++n) fails += !oracle::ek_normal(targets[t].apply(n), 0.1, 2, 2);
    EXPECT_EQ(a.failures_by_decade[t][2], fails);
    EXPECT_LE(a.failures[t], 5000u);
  }
}

TEST(FindWitness, TrivialTolerance) {
  auto r = find_witness(1, P(1.0, 1), kN);
  ASSERT_TRUE(r.witness);
  EXPECT_EQ(*r.witness, 1);
}

// 2^19 candidates fit the budget, so the search is an increasing scan and the
// answer is the smallest 20-bit witness.
TEST(FindWitness, Length20Fixture) {
  const auto targets = parse_targets("n,2n,n2");
  auto r = find_witness(20, P(0.1, 2), targets, 1000000);
  ASSERT_TRUE(r.witness);
  EXPECT_TRUE(r.exhaustive);
  EXPECT_EQ(*r.witness, 525687);
  EXPECT_EQ(digit_length(*r.witness, Alphabet(2)), 20u);
  for (const auto& t : targets) EXPECT_TRUE(oracle::ek_normal(t.apply(*r.witness), 0.1, 2, 2));
  // Nothing smaller in the length class passes.
  for (unsigned long n = 1ul << 19; n < 525687; ++n) {
    bool all = true;
    for (const auto& t : targets) all = all && oracle::ek_normal(t.apply(n), 0.1, 2, 2);
    ASSERT_FALSE(all) << n;
  }
}

TEST(FindWitness, TooShortForBlocks) {
  auto r = find_witness(2, P(0.001, 4), kN);
  EXPECT_FALSE(r.witness);
  EXPECT_TRUE(r.exhaustive);
  EXPECT_EQ(r.candidates, 2u);
}

TEST(FindWitness, SampledSearchIsDeterministicAndVerified) {
  const auto targets = parse_targets("n,2n,n2");
  const auto params = P(0.0625, 4);
  auto a = find_witness(300, params, targets, 20000, 1);
  auto b = find_witness(300, params, targets, 20000, 3);
  ASSERT_TRUE(a.witness);
  EXPECT_FALSE(a.exhaustive);
  EXPECT_EQ(a.witness, b.witness);
  EXPECT_EQ(a.candidates, b.candidates);
  EXPECT_EQ(digit_length(*a.witness, Alphabet(2)), 300u);
  for (const auto& t : targets) EXPECT_TRUE(is_ek_normal(t.apply(*a.witness), params));
}

TEST(FindThreshold, Examples) {
  ThresholdProbe probe{.start_length = 1, .max_length = 4096, .candidates_per_length = 2000, .window = 8, .workers = 1};
  EXPECT_EQ(find_threshold(P(1.0, 1), kN, probe), 1u);
  EXPECT_LE(find_threshold(P(0.5, 1), kN, probe), 10u);
  // Recorded once; the search is deterministic.
  EXPECT_EQ(find_threshold(P(0.125, 3), parse_targets("n,2n,n2"), probe), 4u);
}

TEST(FindThreshold, ReportsExhaustion) {
  ThresholdProbe probe{.start_length = 1, .max_length = 6, .candidates_per_length = 100, .window = 2, .workers = 1};
  EXPECT_THROW(find_threshold(P(0.001, 4), kN, probe), ThresholdNotFound);
}

TEST(WitnessCache, ReturnsSameResult) {
  WitnessCache cache;
  const auto params = P(0.1, 2);
  auto a = cache.get(40, params, kN, 5000);
  auto b = cache.get(40, params, kN, 5000);
  EXPECT_EQ(a.witness, b.witness);
  EXPECT_EQ(a.witness, find_witness(40, params, kN, 5000).witness);
}
