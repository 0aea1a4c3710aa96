// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Thresholds are re-applied here to the measured values; the experiments' own
// verdicts are not trusted.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "fsdim/experiments.hpp"
#include "fsdim/fsdim.hpp"
#include "support/oracles.hpp"

using namespace fsdim;
using experiments::json;
using experiments::VerifyReport;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    detail << (ok ? "" : "!") << what << "; ";
  }
};

double measured(const VerifyReport& r, const std::string& name) {
  const auto& c = r.check(name);
  return c.measured ? *c.measured : NAN;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void within(Outcome& o, const std::string& name, double v, double target, double tol) {
  o.require(std::fabs(v - target) <= tol, name + "=" + num(v) + " (target " + num(target) + " +/- " + num(tol) + ")");
}
void at_least(Outcome& o, const std::string& name, double v, double lo) {
  o.require(v >= lo, name + "=" + num(v) + " (>= " + num(lo) + ")");
}
void at_most(Outcome& o, const std::string& name, double v, double hi) {
  o.require(v <= hi, name + "=" + num(v) + " (<= " + num(hi) + ")");
}

// Streaming census against naive window enumeration, exact counts.
Outcome census_oracle() {
  Outcome o;
  std::mt19937_64 rng(2024);
  const std::uint32_t bases[] = {2, 3, 10};
  std::uint64_t mismatches = 0;
  for (int t = 0; t < 500; ++t) {
    const std::uint32_t b = bases[t % 3];
    const std::size_t n = std::uniform_int_distribution<std::size_t>(0, 10000)(rng);
    auto s = oracle::random_string(rng, b, n);
    for (std::size_t l = 1; l <= 6; ++l) {
      BlockCensus c(Alphabet(b), l);
      // Feed in random chunks so the carry between pushes is exercised.
      for (std::size_t i = 0; i < n;) {
        const std::size_t len = std::min<std::size_t>(n - i, 1 + rng() % 997);
        c.push(std::span<const digit_t>(s).subspan(i, len));
        i += len;
      }
      const auto expected = oracle::window_counts(s, l);
      std::uint64_t total = 0;
      bool ok = c.distinct() == expected.size();
      for (const auto& [w, k] : expected) {
        ok = ok && c.count(w) == k;
        total += k;
      }
      ok = ok && c.total() == total;
      mismatches += !ok;
    }
  }
  o.require(mismatches == 0, "mismatching (string, l) pairs=" + std::to_string(mismatches) + " of 3000");
  return o;
}

Outcome champernowne_entropy() {
  Outcome o;
  auto r = experiments::run("champernowne", {{"digits", 1000000}, {"bases", {2, 10}}, {"max_block", 4}});
  for (int b : {2, 10})
    for (int l = 1; l <= 4; ++l) {
      const std::string name = "H_" + std::to_string(l) + "_base" + std::to_string(b);
      at_least(o, name, measured(r, name), 0.95);
    }
  return o;
}

Outcome prop1_invariance() {
  Outcome o;
  auto r = experiments::run("prop1", {{"digits", 1000000}, {"max_block", 4}});
  at_most(o, "|dH_4|", measured(r, "abs_dH_4"), 0.01);
  return o;
}

Outcome prop2_concavity() {
  Outcome o;
  auto r = experiments::run("prop2", {{"triples", 1000}, {"pairs", 50}, {"concat_length", 10000}});
  at_least(o, "mixture_min_slack", measured(r, "mixture_min_slack"), -1e-12);
  at_least(o, "concat_min_slack", measured(r, "concat_min_slack"), -0.01);
  return o;
}

Outcome prop8_dilution() {
  Outcome o;
  const Alphabet b2(2);
  for (double rho : {0.5, 0.25}) {
    auto r = experiments::run("prop8", {{"rho", rho}, {"digits", 1 << 20}, {"max_block", 8}});
    const std::string tag = "[rho=" + num(rho) + "] ";
    const double h1_target = rho == 0.5 ? 0.8113 : prop8_entropy(rho, 1, b2);
    within(o, tag + "H_1", measured(r, "H_1"), h1_target, 0.02);
    within(o, tag + "H_8", measured(r, "H_8"), prop8_entropy(rho, 8, b2), 0.05);
    within(o, tag + "dim_proxy", measured(r, "dim_proxy"), 1 - rho, 0.1);
  }
  return o;
}

Outcome prop9_linear_map() {
  Outcome o;
  auto r = experiments::run("prop9", {{"limit", 1000000}, {"poly", "3*x+5"}, {"base", 10}, {"max_block", 4}});
  const double a = measured(r, "dim_proxy_A");
  const double p = measured(r, "dim_proxy_pA");
  o.detail << "dim_A=" << num(a) << " dim_pA=" << num(p) << "; ";
  at_most(o, "|ddim|", std::fabs(a - p), 0.05);
  return o;
}

Outcome lemma10_trend() {
  Outcome o;
  auto r = experiments::run("lemma10", {{"ranges", {1000, 10000, 100000}},
                                        {"epsilon", 0.1}, {"k", 2}, {"base", 2}, {"targets", "n,n2"}});
  for (const char* t : {"n", "n2"}) {
    std::vector<double> f;
    for (const char* m : {"1000", "10000", "100000"}) f.push_back(measured(r, std::string("fraction_") + t + "_" + m));
    o.require(f[1] < f[0] && f[2] < f[1], std::string("fractions_") + t + "=" + num(f[0]) + "," + num(f[1]) + "," +
                                              num(f[2]) + " (strictly decreasing)");
  }
  return o;
}

Outcome prop11_densities() {
  Outcome o;
  auto r = experiments::run("prop11", {{"digits", 1000000}, {"max_block", 8}});
  o.require(r.check("completed").pass, "completed");
  o.detail << "elements=" << measured(r, "elements") << "; ";
  within(o, "zero_density_A", measured(r, "zero_density_A"), 0.5, 0.02);
  within(o, "zero_density_pA", measured(r, "zero_density_pA"), 0.25, 0.05);
  at_most(o, "slot_integrity_failures", measured(r, "slot_integrity_failures"), 0);
  at_least(o, "stripped_H_4_A", measured(r, "stripped_H_4_A"), 0.9);
  at_least(o, "stripped_H_4_pA", measured(r, "stripped_H_4_pA"), 0.9);
  within(o, "H_8_A", measured(r, "H_8_A"), 0.5, 0.1);
  within(o, "H_8_pA", measured(r, "H_8_pA"), 0.75, 0.1);
  return o;
}

Outcome corollary_slots() {
  Outcome o;
  auto r = experiments::run("corollary", {{"degree", 3}, {"elements", 100}, {"bases", {2, 10}}});
  for (const char* b : {"2", "10"}) {
    at_least(o, std::string("elements_base") + b, measured(r, std::string("elements_base") + b), 100);
    at_least(o, std::string("slot_exact_base") + b, measured(r, std::string("slot_exact_base") + b), 100);
  }
  return o;
}

Outcome prop13_target() {
  Outcome o;
  auto r = experiments::run("prop13", {{"digits", 1000000}, {"s", 0.5}, {"max_block", 8}});
  o.require(r.check("completed").pass, "completed");
  within(o, "zero_density_A", measured(r, "zero_density_A"), 0.5, 0.02);
  within(o, "zero_density_pA", measured(r, "zero_density_pA"), 0.5, 0.02);
  within(o, "H_8_A", measured(r, "H_8_A"), 0.5, 0.1);
  within(o, "H_8_pA", measured(r, "H_8_pA"), 0.5, 0.1);
  return o;
}

Outcome prop7_scaling() {
  Outcome o;
  auto r = experiments::run("prop7", {{"c", "3"}, {"digits", 100000}, {"growth", 2.0}, {"max_block", 4}});
  const double d = measured(r, "disagreement_density");
  o.require(d < 0.05, "disagreement_density=" + num(d) + " (< 0.05)");
  o.require(r.check("density_decreasing").pass, "density_decreasing");
  at_most(o, "|ddim|", std::fabs(measured(r, "dim_proxy_A") - measured(r, "dim_proxy_cA")), 0.05);
  return o;
}

Outcome eval_floor_oracle() {
  Outcome o;
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<int> num_d(-1000, 1000);
  std::uniform_int_distribution<int> den_d(1, 1000);
  std::uniform_int_distribution<unsigned long> arg(0, 1000000);
  // 10^4 nonnegative evaluations; negative draws are checked for NegativeValue on top.
  std::uint64_t checked = 0, wrong = 0, negative = 0;
  while (checked < 10000) {
    std::vector<Rational> c(1 + rng() % 5);
    for (auto& q : c) {
      q = Rational(num_d(rng), den_d(rng));
      q.canonicalize();
    }
    if (c.back() == 0) c.back() = 1;
    const Natural n(arg(rng));
    Rational exact = 0;
    Natural x = 1;
    for (const auto& q : c) {
      exact += q * x;
      x *= n;
    }
    const Poly p = Poly::rational(c);
    if (exact < 0) {
      bool threw = false;
      try {
        eval_floor(p, n);
      } catch (const NegativeValue&) {
        threw = true;
      }
      wrong += !threw;
      ++negative;
      continue;
    }
    wrong += eval_floor(p, n) != oracle::floor_poly(c, n);
    ++checked;
  }
  o.require(wrong == 0, "rational disagreements=" + std::to_string(wrong) + " over " + std::to_string(checked) +
                            " nonnegative and " + std::to_string(negative) + " negative cases");

  const auto digits = oracle::sqrt2_decimal_digits(100);
  Poly sqrt2({RealCoefficient::exact(0),
              RealCoefficient::from_digits(SequenceSource::from_digits(DigitString(Alphabet(10), digits)), 1, false)});
  std::uint64_t bad = 0;
  for (unsigned long n = 0; n <= 10000; ++n) bad += eval_floor(sqrt2, n) != oracle::floor_n_sqrt2(n);
  o.require(bad == 0, "floor(n sqrt2) disagreements for n <= 10^4: " + std::to_string(bad));
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"census equals naive window enumeration", census_oracle},
      {"Champernowne block entropies", champernowne_entropy},
      {"square-index zero insertion keeps H_4", prop1_invariance},
      {"mixture and concatenation concavity", prop2_concavity},
      {"diluted Champernowne entropies and dimension", prop8_dilution},
      {"linear image keeps the dimension proxy", prop9_linear_map},
      {"normality failure fractions decrease", lemma10_trend},
      {"degree-2 slot construction", prop11_densities},
      {"degree-3 slot decomposition", corollary_slots},
      {"scaled-witness construction at s = 0.5", prop13_target},
      {"prefix set scaled by 3", prop7_scaling},
      {"eval_floor oracle agreement", eval_floor_oracle},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << " (" << criteria[i].first << ", "
              << num(secs) << " s): " << o.detail.str() << std::endl;
  }
  std::cout << criteria.size() - failed << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed ? 1 : 0;
}
