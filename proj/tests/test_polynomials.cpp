#include <gtest/gtest.h>

#include <random>

#include "fsdim/polynomials.hpp"
#include "fsdim/primes.hpp"
#include "support/oracles.hpp"

using namespace fsdim;

namespace {

SetStream values(std::initializer_list<unsigned long> v) {
  std::vector<Natural> out;
  for (auto x : v) out.emplace_back(x);
  return NaturalStream::from_values(std::move(out));
}

std::vector<std::string> as_strings(const std::vector<Natural>& v) {
  std::vector<std::string> out;
  for (const auto& x : v) out.push_back(x.get_str());
  return out;
}

RealCoefficient sqrt2_stream(std::size_t digits = 2000) {
  auto d = oracle::sqrt2_decimal_digits(digits);
  return RealCoefficient::from_digits(SequenceSource::from_digits(DigitString(Alphabet(10), d)), 1, false);
}

}  // namespace

TEST(EvalFloor, Examples) {
  EXPECT_EQ(eval_floor(parse_poly("x^2"), 12), 144);
  EXPECT_EQ(eval_floor(parse_poly("1/3*x"), 10), 3);
  EXPECT_EQ(eval_floor(Poly({RealCoefficient::exact(0), sqrt2_stream()}), 10), 14);
}

TEST(EvalFloor, NegativeValueIsRejected) {
  EXPECT_THROW(eval_floor(parse_poly("x - 5"), 2), NegativeValue);
  EXPECT_EQ(eval_floor(parse_poly("x - 5"), 5), 0);
}

// A coefficient 0.333... known only through its digits makes 3 * (1/3) an integer
// reachable only in the limit.
TEST(EvalFloor, UnresolvableIntegerIsAmbiguous) {
  auto third = RealCoefficient::from_digits(SequenceSource::periodic(DigitString(Alphabet(10), {3})), 0, false);
  Poly p({RealCoefficient::exact(0), third});
  EXPECT_THROW(eval_floor(p, 3, {.initial_precision = 8, .max_precision = 256}), AmbiguousFloor);
  EXPECT_EQ(eval_floor(p, 4, {.initial_precision = 8, .max_precision = 256}), 1);
}

TEST(EvalFloor, RationalOracleAgreement) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> num(-100, 100);
  std::uniform_int_distribution<int> den(1, 100);
  std::uniform_int_distribution<int> deg(0, 4);
  std::uniform_int_distribution<unsigned long> arg(0, 10000);
  int checked = 0;
  for (int t = 0; t < 2000; ++t) {
    std::vector<Rational> c(deg(rng) + 1);
    for (auto& q : c) {
      q = Rational(num(rng), den(rng));
      q.canonicalize();
    }
    if (c.back() == 0) c.back() = 1;
    Natural n(arg(rng));
    Natural expected = oracle::floor_poly(c, n);
    Poly p = Poly::rational(c);
    Rational exact = 0;
    Natural x = 1;
    for (const auto& q : c) {
      exact += q * x;
      x *= n;
    }
    if (exact < 0) {
      EXPECT_THROW(eval_floor(p, n), NegativeValue);
      continue;
    }
    EXPECT_EQ(eval_floor(p, n), expected);
    ++checked;
  }
  EXPECT_GT(checked, 500);
}

// The same rational supplied as a terminating digit stream takes the interval path.
TEST(EvalFloor, DigitStreamAgreesWithExactPath) {
  // 5/4 = 1.25 in base 10; 7/8 = 0.111 in base 2.
  auto five_quarters = RealCoefficient::from_digits(
      SequenceSource::from_digits(DigitString(Alphabet(10), {1, 2, 5})), 1, true);
  auto seven_eighths = RealCoefficient::from_digits(
      SequenceSource::from_digits(DigitString(Alphabet(2), {0, 1, 1, 1})), 1, true);
  Poly streamed({RealCoefficient::exact(3), five_quarters, seven_eighths});
  Poly exact = Poly::rational({Rational(3), Rational(5, 4), Rational(7, 8)});
  for (unsigned long n = 0; n <= 2000; n += 7) EXPECT_EQ(eval_floor(streamed, n), eval_floor(exact, n)) << n;
}

TEST(EvalFloor, Sqrt2MatchesIsqrtOracle) {
  Poly p({RealCoefficient::exact(0), sqrt2_stream()});
  for (unsigned long n = 0; n <= 10000; n += 37) EXPECT_EQ(eval_floor(p, n), oracle::floor_n_sqrt2(n)) << n;
}

TEST(RealCoefficient, RefinementsAreNested) {
  auto c = sqrt2_stream();
  for (std::uint64_t t : {1u, 5u, 20u, 100u}) {
    Interval a = c.refine(t);
    Interval b = c.refine(t + 8);
    EXPECT_LE(a.lo, b.lo);
    EXPECT_LE(b.hi, a.hi);
    EXPECT_LE(b.lo, b.hi);
  }
  Interval i = c.refine(30);
  EXPECT_LT(i.lo * i.lo, 2);
  EXPECT_GT(i.hi * i.hi, 2);
}

TEST(ImageStream, Examples) {
  EXPECT_EQ(as_strings(image_stream(parse_poly("x^2"), values({2, 3, 4})).take(10)),
            (std::vector<std::string>{"4", "9", "16"}));
  EXPECT_EQ(as_strings(image_stream(parse_poly("3*x+5"), primes_stream(Natural(20))).take(10)),
            (std::vector<std::string>{"11", "14", "20", "26", "38", "44", "56", "62"}));
  EXPECT_EQ(as_strings(image_stream(parse_poly("x"), values({1, 5, 9})).take(10)),
            (std::vector<std::string>{"1", "5", "9"}));
}

TEST(CePolySequence, Examples) {
  EXPECT_EQ(ce_poly_sequence(parse_poly("x^2"), NaturalStream::naturals(1), Alphabet(10)).take(7).to_text(),
            "1491625");
  EXPECT_EQ(ce_poly_sequence(parse_poly("x"), NaturalStream::naturals(0), Alphabet(2)).take(12).to_text(),
            "011011100101");
  EXPECT_EQ(ce_poly_sequence(parse_poly("2*x"), values({1}), Alphabet(2)).take(10).to_text(), "10");
}

TEST(AuditImageOrder, MonotoneAndNot) {
  auto up = audit_image_order(parse_poly("x^2 + 3*x"), NaturalStream::naturals(1), 1000);
  EXPECT_EQ(up.checked, 1000u);
  EXPECT_TRUE(up.strictly_increasing());
  // (x - 3)^2 decreases on 1..3.
  auto dip = audit_image_order(parse_poly("x^2 - 6*x + 9"), NaturalStream::naturals(1), 10);
  EXPECT_FALSE(dip.strictly_increasing());
  EXPECT_FALSE(dip.inversions.empty());
}

TEST(ParsePoly, Grammar) {
  EXPECT_EQ(parse_poly("1/2 + 0.5*x + x^2 + x^2").degree(), 2u);
  EXPECT_EQ(eval_floor(parse_poly("1/2 + 0.5*x + x^2 + x^2"), 3), 20);  // 0.5 + 1.5 + 18
  EXPECT_EQ(eval_floor(parse_poly(" - 1 + x "), 4), 3);
  for (const char* bad : {"", "3*y", "1/0", "x^", "2 x", "1/2/3", "+"}) {
    EXPECT_THROW(parse_poly(bad), InvalidArgument) << bad;
  }
}
