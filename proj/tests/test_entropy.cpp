#include <gtest/gtest.h>

#include <random>

#include "fsdim/census.hpp"
#include "fsdim/entropy.hpp"
#include "fsdim/sequences.hpp"
#include "support/oracles.hpp"

using namespace fsdim;

namespace {

DigitString str(std::uint32_t b, const std::string& text) { return DigitString::from_text(text, Alphabet(b)); }

std::vector<digit_t> word(std::initializer_list<digit_t> w) { return w; }

double log_b(double x, double b) { return std::log(x) / std::log(b); }

}  // namespace

TEST(CountBlocks, Examples) {
  auto c = count_blocks(str(2, "1111"), 2);
  EXPECT_EQ(c.count(word({1, 1})), 3u);
  EXPECT_EQ(c.total(), 3u);

  auto d = count_blocks(str(2, "0101"), 2);
  EXPECT_EQ(d.count(word({0, 1})), 2u);
  EXPECT_EQ(d.count(word({1, 0})), 1u);
  EXPECT_EQ(d.count(word({0, 0})), 0u);

  auto e = count_blocks(str(2, "01"), 3);
  EXPECT_EQ(e.total(), 0u);
  EXPECT_EQ(e.distinct(), 0u);
}

TEST(SlidingProb, Examples) {
  auto d = count_blocks(str(2, "0101"), 2);
  EXPECT_EQ(sliding_prob(d, word({0, 1})), Rational(2, 3));
  EXPECT_EQ(sliding_prob(d, word({1, 1})), 0);
  auto whole = count_blocks(str(10, "314"), 3);
  EXPECT_EQ(sliding_prob(whole, word({3, 1, 4})), 1);
  EXPECT_THROW(sliding_prob(count_blocks(str(2, "0"), 2), word({0, 0})), EmptyCensus);
}

TEST(BlockEntropy, Examples) {
  EXPECT_DOUBLE_EQ(block_entropy(count_blocks(str(2, "0101"), 1)), 1.0);
  EXPECT_DOUBLE_EQ(block_entropy(count_blocks(str(2, "0000"), 1)), 0.0);
  const double expected = 0.5 * ((2.0 / 3) * std::log2(1.5) + (1.0 / 3) * std::log2(3.0));
  EXPECT_NEAR(block_entropy(count_blocks(str(2, "0101"), 2)), expected, 1e-12);
  EXPECT_NEAR(expected, 0.4591, 1e-4);
}

// Piecewise counting with the l-1 digit carry, merged, equals naive window
// enumeration over the whole string.
TEST(BlockCensus, SplitMergeMatchesNaiveOracle) {
  std::mt19937_64 rng(5);
  for (std::uint32_t b : {2u, 3u, 10u}) {
    for (int t = 0; t < 20; ++t) {
      const std::size_t n = std::uniform_int_distribution<std::size_t>(0, 10000)(rng);
      auto s = oracle::random_string(rng, b, n);
      for (std::size_t l = 1; l <= 6; ++l) {
        const std::size_t cut = std::uniform_int_distribution<std::size_t>(0, n)(rng);
        BlockCensus left(Alphabet(b), l);
        left.push(std::span<const digit_t>(s).first(cut));
        BlockCensus right = BlockCensus::seeded(Alphabet(b), l, left.tail());
        right.push(std::span<const digit_t>(s).subspan(cut));
        left.merge(right);

        auto expected = oracle::window_counts(s, l);
        std::uint64_t total = 0;
        for (const auto& [w, c] : expected) {
          ASSERT_EQ(left.count(w), c);
          total += c;
        }
        ASSERT_EQ(left.total(), total);
        ASSERT_EQ(left.total(), n >= l ? n - l + 1 : 0);
        ASSERT_EQ(left.distinct(), expected.size());
        if (n >= l) {
          ASSERT_NEAR(block_entropy(left), oracle::entropy(expected, b, l), 1e-9);
        }
      }
    }
  }
}

TEST(BlockCensus, MergeRejectsWrongCarry) {
  BlockCensus left(Alphabet(2), 3);
  left.push(word({1, 0, 1, 1}));
  BlockCensus right = BlockCensus::seeded(Alphabet(2), 3, word({0, 0}));
  EXPECT_THROW(left.merge(right), IntegrityError);
}

TEST(BlockCensus, WideBlocksUseExactKeys) {
  // 10^24 blocks exceed 64-bit keys.
  std::mt19937_64 rng(9);
  auto s = oracle::random_string(rng, 10, 3000);
  auto c = count_blocks(std::span<const digit_t>(s), Alphabet(10), 24);
  auto expected = oracle::window_counts(s, 24);
  EXPECT_EQ(c.distinct(), expected.size());
  for (const auto& [w, n] : expected) EXPECT_EQ(c.count(w), n);
}

TEST(BlockEntropy, BoundsAndZeroCase) {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 200; ++t) {
    const std::uint32_t b = 2 + t % 9;
    const std::size_t l = 1 + t % 4;
    auto s = oracle::random_string(rng, t % 3 == 0 ? 1 + b / 3 : b, 50 + t);
    auto c = count_blocks(std::span<const digit_t>(s), Alphabet(b), l);
    const double h = block_entropy(c);
    EXPECT_GE(h, 0.0);
    EXPECT_LE(h, 1.0);
    EXPECT_EQ(h == 0.0, c.distinct() == 1);
  }
}

TEST(MixtureConcavity, HoldsOnRandomPairs) {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 300; ++t) {
    const std::uint32_t b = std::array<std::uint32_t, 3>{2, 3, 10}[t % 3];
    const std::size_t l = 1 + t % 4;
    auto u = oracle::random_string(rng, b, 5 + rng() % 400);
    auto v = oracle::random_string(rng, 1 + rng() % b, 5 + rng() % 400);
    auto cu = count_blocks(std::span<const digit_t>(u), Alphabet(b), l);
    auto cv = count_blocks(std::span<const digit_t>(v), Alphabet(b), l);
    const double lambda = static_cast<double>(u.size()) / static_cast<double>(u.size() + v.size());
    EXPECT_GE(mixture_block_entropy(cu, cv, lambda) + 1e-12,
              lambda * block_entropy(cu) + (1 - lambda) * block_entropy(cv));
  }
}

TEST(Prop8Entropy, Endpoints) {
  for (std::size_t l : {1u, 4u, 40u}) {
    EXPECT_NEAR(prop8_entropy(0.0, l, Alphabet(2)), 1.0, 1e-12);
    EXPECT_NEAR(prop8_entropy(1.0, l, Alphabet(2)), 0.0, 1e-12);
  }
  EXPECT_NEAR(prop8_entropy(0.5, 1, Alphabet(2)), -(0.75 * std::log2(0.75) + 0.25 * std::log2(0.25)), 1e-12);
  EXPECT_NEAR(prop8_entropy(0.5, 1, Alphabet(2)), 0.8113, 1e-4);
  EXPECT_THROW(prop8_entropy(1.5, 1, Alphabet(2)), InvalidArgument);
}

TEST(Prop8Entropy, MatchesDirectSumOverBlocks) {
  // Enumerate Sigma_b^l directly: 0^l has rho + q, every other block q.
  for (std::uint32_t b : {2u, 3u}) {
    for (double rho : {0.1, 0.5, 0.8}) {
      for (std::size_t l = 1; l <= 6; ++l) {
        const double q = (1 - rho) * std::pow(b, -static_cast<double>(l));
        double h = -(rho + q) * log_b(rho + q, b);
        const double others = std::pow(b, static_cast<double>(l)) - 1;
        h -= others * q * log_b(q, b);
        EXPECT_NEAR(prop8_entropy(rho, l, Alphabet(b)), h / static_cast<double>(l), 1e-12);
      }
    }
  }
}

TEST(Prop8Entropy, NonIncreasingInBlockLength) {
  for (int r = 1; r <= 9; ++r) {
    const double rho = r / 10.0;
    for (std::size_t l = 1; l < 20; ++l)
      EXPECT_GE(prop8_entropy(rho, l, Alphabet(2)) + 1e-15, prop8_entropy(rho, l + 1, Alphabet(2))) << rho << " " << l;
  }
}

// The excess over 1 - rho is the (1/l)-scaled entropy of the zero/non-zero split,
// so at l = 40 it lies between 0 and h(rho)/40.
TEST(Prop8Entropy, ApproachesOneMinusRho) {
  for (int r = 1; r <= 9; ++r) {
    const double rho = r / 10.0;
    const double h = -(rho * std::log2(rho) + (1 - rho) * std::log2(1 - rho));
    const double v = prop8_entropy(rho, 40, Alphabet(2));
    EXPECT_GE(v, 1 - rho) << rho;
    EXPECT_LE(v, 1 - rho + h / 40 + 1e-12) << rho;
  }
}

TEST(Profile, AllZeros) {
  auto prof = profile(SequenceSource::constant(Alphabet(2), 0), 4, CheckpointSchedule::geometric(2, 16), 4096);
  EXPECT_EQ(prof.length, 4096u);
  for (const auto& row : prof.entropy)
    for (double h : row) EXPECT_EQ(h, 0.0);
  auto est = estimate_dim(prof);
  EXPECT_EQ(est.dim_proxy, 0.0);
  EXPECT_EQ(est.strong_dim_proxy, 0.0);
}

TEST(Profile, PeriodicBlockEntropies) {
  auto s = SequenceSource::periodic(DigitString(Alphabet(2), {0, 1}));
  auto prof = profile(s, 4, CheckpointSchedule::geometric(2, 1024), 1u << 16);
  EXPECT_NEAR(prof.final_entropy(1), 1.0, 1e-6);
  EXPECT_NEAR(prof.final_entropy(2), 0.5, 1e-6);
  EXPECT_NEAR(prof.final_entropy(4), 0.25, 1e-6);
}

TEST(Profile, CheckpointsAndLength) {
  auto prof = profile(champernowne(Alphabet(2)), 2, CheckpointSchedule::explicit_points({10, 100, 1000}), 500);
  EXPECT_EQ(prof.checkpoints, (std::vector<std::uint64_t>{10, 100, 500}));
  auto finite = profile(SequenceSource::from_digits(str(2, "0110")), 5, CheckpointSchedule::geometric(2, 1));
  EXPECT_EQ(finite.length, 4u);
  EXPECT_TRUE(std::isnan(finite.final_entropy(5)));
  EXPECT_THROW(estimate_dim(finite), NotEnoughData);
}

TEST(Profile, MatchesDirectCensusAtEveryCheckpoint) {
  auto s = ce_sequence(NaturalStream::naturals(0), Alphabet(3));
  auto prof = profile(s, 3, CheckpointSchedule::geometric(3, 50), 20000);
  for (std::size_t j = 0; j < prof.checkpoints.size(); ++j) {
    auto prefix = s.take(prof.checkpoints[j]);
    for (std::size_t l = 1; l <= 3; ++l) EXPECT_DOUBLE_EQ(prof.at(l, j), block_entropy(count_blocks(prefix, l)));
  }
}

TEST(EstimateDim, Champernowne2) {
  auto prof = profile(champernowne(Alphabet(2)), 4, CheckpointSchedule::geometric(2, 1024), 1u << 20);
  auto est = estimate_dim(prof);
  EXPECT_GE(est.dim_proxy, 0.95);
  EXPECT_GE(est.strong_dim_proxy, est.dim_proxy);
  EXPECT_EQ(est.tail_min.size(), 4u);
}

// At n = 2^20 each tail minimum tracks the finite-l dilution entropy, not 1 - rho.
TEST(EstimateDim, DilutedNormalTracksProp8Entropy) {
  for (double rho : {0.25, 0.5}) {
    auto s = dilute(champernowne(Alphabet(2)), DilutionSchedule::ratio(rho));
    auto prof = profile(s, 8, CheckpointSchedule::geometric(2, 1024), 1u << 20);
    auto est = estimate_dim(prof);
    for (std::size_t l = 1; l <= 8; ++l)
      EXPECT_NEAR(est.tail_min[l - 1], prop8_entropy(rho, l, Alphabet(2)), 0.05) << rho << " l=" << l;
  }
}
