#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fsdim/constructions.hpp"
#include "fsdim/entropy.hpp"
#include "fsdim/normality.hpp"
#include "fsdim/polynomials.hpp"
#include "fsdim/primes.hpp"
#include "fsdim/sequences.hpp"

namespace fsdim::experiments {

using json = nlohmann::json;

/// One measured quantity against optional bounds. A check without bounds is
/// informational and always passes; a missing measurement never passes.
struct Check {
  std::string name;
  std::optional<double> measured;
  std::optional<double> lower;
  std::optional<double> upper;
  bool pass = false;

  static Check make(std::string name, std::optional<double> measured, std::optional<double> lower,
                    std::optional<double> upper) {
    Check c{std::move(name), measured, lower, upper, false};
    c.pass = measured && !std::isnan(*measured) && (!lower || *measured >= *lower) &&
             (!upper || *measured <= *upper);
    if (!lower && !upper && measured) c.pass = true;
    return c;
  }
  static Check within(std::string name, double measured, double target, double tol) {
    return make(std::move(name), measured, target - tol, target + tol);
  }
  static Check at_least(std::string name, double measured, double lo) {
    return make(std::move(name), measured, lo, std::nullopt);
  }
  static Check at_most(std::string name, double measured, double hi) {
    return make(std::move(name), measured, std::nullopt, hi);
  }
  static Check below(std::string name, double measured, double hi) {
    // Strict: measured < hi, encoded as the largest double under hi.
    return make(std::move(name), measured, std::nullopt, std::nextafter(hi, -INFINITY));
  }
  static Check holds(std::string name, bool ok) { return make(std::move(name), ok ? 1.0 : 0.0, 1.0, 1.0); }
  static Check info(std::string name, double measured) {
    return make(std::move(name), measured, std::nullopt, std::nullopt);
  }
};

struct VerifyReport {
  std::string experiment;
  std::vector<Check> checks;
  double wall_clock = 0;  // seconds
  json config = json::object();

  bool pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return !checks.empty();
  }
  const Check& check(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return c;
    throw InvalidArgument("report has no check named " + name);
  }
};

inline void to_json(json& j, const Check& c) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  j = json{{"name", c.name},
           {"measured", opt(c.measured)},
           {"lower", opt(c.lower)},
           {"upper", opt(c.upper)},
           {"pass", c.pass}};
}

inline void from_json(const json& j, Check& c) {
  auto opt = [](const json& v) { return v.is_null() ? std::optional<double>{} : std::optional<double>(v.get<double>()); };
  c.name = j.at("name").get<std::string>();
  c.measured = opt(j.at("measured"));
  c.lower = opt(j.at("lower"));
  c.upper = opt(j.at("upper"));
  c.pass = j.at("pass").get<bool>();
}

inline void to_json(json& j, const VerifyReport& r) {
  j = json{{"experiment", r.experiment},
           {"pass", r.pass()},
           {"checks", r.checks},
           {"wall_clock", r.wall_clock},
           {"config", r.config}};
}

inline void from_json(const json& j, VerifyReport& r) {
  r.experiment = j.at("experiment").get<std::string>();
  r.checks = j.at("checks").get<std::vector<Check>>();
  r.wall_clock = j.at("wall_clock").get<double>();
  r.config = j.at("config");
  if (j.contains("pass") && j.at("pass").get<bool>() != r.pass()) {
    throw IntegrityError("report pass flag disagrees with its checks");
  }
}

// ---------------------------------------------------------------------------
// Measurement helpers
// ---------------------------------------------------------------------------

/// H_1..H_L of S[0..n) (fewer digits if S is shorter).
inline std::vector<double> entropies_at(const SequenceSource& s, std::size_t max_block, std::uint64_t n) {
  EntropyProfile p = profile(s, max_block, CheckpointSchedule::explicit_points({}), n);
  std::vector<double> h;
  for (std::size_t l = 1; l <= max_block; ++l) h.push_back(p.final_entropy(l));
  return h;
}

inline DimensionEstimate dimension_of(const SequenceSource& s, std::size_t max_block, std::uint64_t n,
                                      double burn_in = 0.125) {
  return estimate_dim(profile(s, max_block, CheckpointSchedule::geometric(), n), burn_in);
}

template <class T>
T param(const json& cfg, const char* key, T fallback) {
  return cfg.contains(key) ? cfg.at(key).get<T>() : fallback;
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Experiments. Each reads its parameters from `cfg` (missing keys take the
// defaults below) and echoes the effective configuration in the report.
// ---------------------------------------------------------------------------

/// Zero insertions at perfect squares leave H_l of Champernowne_2 unchanged.
inline VerifyReport prop1(const json& cfg) {
  VerifyReport r;
  const auto digits = param<std::uint64_t>(cfg, "digits", 1000000);
  const auto max_block = param<std::size_t>(cfg, "max_block", 4);
  const auto tol = param<double>(cfg, "tolerance", 0.01);
  r.config = {{"digits", digits}, {"max_block", max_block}, {"tolerance", tol}};
  SequenceSource s = champernowne(Alphabet(2));
  IndexSet squares = IndexSet::squares();
  SequenceSource t = insert_at(s, squares, digit_t{0});
  auto hs = entropies_at(s, max_block, digits);
  auto ht = entropies_at(t, max_block, digits);
  for (std::size_t l = 1; l <= max_block; ++l) {
    double d = std::fabs(hs[l - 1] - ht[l - 1]);
    if (l == max_block) r.checks.push_back(Check::at_most("abs_dH_" + std::to_string(l), d, tol));
    else r.checks.push_back(Check::info("abs_dH_" + std::to_string(l), d));
  }
  r.checks.push_back(Check::info("inserted_density",
                                 static_cast<double>(squares.count_below(digits)) / static_cast<double>(digits)));
  return r;
}

namespace detail {

inline std::vector<digit_t> biased_string(std::mt19937_64& rng, std::uint32_t base, std::size_t n) {
  // Each digit value gets a random weight, so different strings have different statistics.
  std::uniform_real_distribution<double> w(0.05, 1.0);
  std::vector<double> weights(base);
  for (auto& x : weights) x = w(rng);
  std::discrete_distribution<digit_t> pick(weights.begin(), weights.end());
  std::vector<digit_t> s(n);
  for (auto& d : s) d = pick(rng);
  return s;
}

}  // namespace detail

/// Concavity of H_l under mixing window distributions (exact form) and under
/// concatenation (with boundary slack).
inline VerifyReport prop2(const json& cfg) {
  VerifyReport r;
  const auto triples = param<std::uint64_t>(cfg, "triples", 1000);
  const auto pairs = param<std::uint64_t>(cfg, "pairs", 50);
  const auto min_len = param<std::uint64_t>(cfg, "concat_length", 10000);
  const auto seed = param<std::uint64_t>(cfg, "seed", 1);
  const auto mix_tol = param<double>(cfg, "mixture_tolerance", 1e-12);
  const auto concat_slack = param<double>(cfg, "concat_slack", 0.01);
  r.config = {{"triples", triples},           {"pairs", pairs},         {"concat_length", min_len},
              {"seed", seed},                 {"mixture_tolerance", mix_tol}, {"concat_slack", concat_slack}};
  std::mt19937_64 rng(seed);
  const std::uint32_t bases[] = {2, 3, 10};

  double worst_mix = INFINITY;
  for (std::uint64_t t = 0; t < triples; ++t) {
    const std::uint32_t b = bases[rng() % 3];
    const std::size_t l = 1 + rng() % 4;
    auto u = detail::biased_string(rng, b, l + rng() % 2000);
    auto v = detail::biased_string(rng, b, l + rng() % 2000);
    BlockCensus cu = count_blocks(u, Alphabet(b), l);
    BlockCensus cv = count_blocks(v, Alphabet(b), l);
    const double lambda = static_cast<double>(u.size()) / static_cast<double>(u.size() + v.size());
    const double lhs = mixture_block_entropy(cu, cv, lambda);
    const double rhs = lambda * block_entropy(cu) + (1 - lambda) * block_entropy(cv);
    worst_mix = std::min(worst_mix, lhs - rhs);
  }
  r.checks.push_back(Check::at_least("mixture_min_slack", worst_mix, -mix_tol));

  double worst_concat = INFINITY;
  for (std::uint64_t t = 0; t < pairs; ++t) {
    const std::uint32_t b = bases[rng() % 3];
    const std::size_t l = 1 + rng() % 4;
    auto u = detail::biased_string(rng, b, min_len + rng() % min_len);
    auto v = detail::biased_string(rng, b, min_len + rng() % min_len);
    std::vector<digit_t> uv = u;
    uv.insert(uv.end(), v.begin(), v.end());
    const double lambda = static_cast<double>(u.size()) / static_cast<double>(uv.size());
    const double lhs = block_entropy(count_blocks(uv, Alphabet(b), l));
    const double rhs = lambda * block_entropy(count_blocks(u, Alphabet(b), l)) +
                       (1 - lambda) * block_entropy(count_blocks(v, Alphabet(b), l));
    worst_concat = std::min(worst_concat, lhs - rhs);
  }
  r.checks.push_back(Check::at_least("concat_min_slack", worst_concat, -concat_slack));
  return r;
}

/// Champernowne_2 diluted to zero-density rho against the limiting block entropies.
inline VerifyReport prop8(const json& cfg) {
  VerifyReport r;
  const auto rho = param<double>(cfg, "rho", 0.5);
  const auto digits = param<std::uint64_t>(cfg, "digits", 1u << 20);
  const auto max_block = param<std::size_t>(cfg, "max_block", 8);
  const auto h1_tol = param<double>(cfg, "h1_tolerance", 0.02);
  const auto hl_tol = param<double>(cfg, "hl_tolerance", 0.05);
  const auto dim_tol = param<double>(cfg, "dim_tolerance", 0.1);
  r.config = {{"rho", rho},         {"digits", digits},   {"max_block", max_block},
              {"h1_tolerance", h1_tol}, {"hl_tolerance", hl_tol}, {"dim_tolerance", dim_tol}};
  const Alphabet b2(2);
  auto sched = DilutionSchedule::ratio(rho);
  SequenceSource s = dilute(champernowne(b2), sched);
  EntropyProfile prof = profile(s, max_block, CheckpointSchedule::geometric(), digits);
  DimensionEstimate est = estimate_dim(prof);
  auto trace = trace_dilution(champernowne(b2), sched, digits);
  r.checks.push_back(Check::info("zero_density", static_cast<double>(trace.inserted) / static_cast<double>(trace.length)));
  r.checks.push_back(Check::within("H_1", prof.final_entropy(1), prop8_entropy(rho, 1, b2), h1_tol));
  r.checks.push_back(Check::within("H_" + std::to_string(max_block), prof.final_entropy(max_block),
                                   prop8_entropy(rho, max_block, b2), hl_tol));
  r.checks.push_back(Check::within("dim_proxy", est.dim_proxy, 1.0 - rho, dim_tol));
  return r;
}

/// A rational linear map leaves the dimension proxy of CE_b(A) unchanged.
inline VerifyReport prop9(const json& cfg) {
  VerifyReport r;
  const auto limit = param<std::uint64_t>(cfg, "limit", 1000000);
  const auto poly_text = param<std::string>(cfg, "poly", "3*x+5");
  const auto base = param<std::uint32_t>(cfg, "base", 10);
  const auto max_block = param<std::size_t>(cfg, "max_block", 4);
  const auto tol = param<double>(cfg, "tolerance", 0.05);
  r.config = {{"limit", limit}, {"poly", poly_text}, {"base", base}, {"max_block", max_block}, {"tolerance", tol}};
  const Alphabet b(base);
  Poly p = parse_poly(poly_text, nullptr);
  SetStream a = primes_stream(Natural(std::to_string(limit)));
  SequenceSource sa = ce_sequence(a, b);
  SequenceSource sp = ce_poly_sequence(p, a, b);
  DimensionEstimate ea = dimension_of(sa, max_block, UINT64_MAX);
  DimensionEstimate ep = dimension_of(sp, max_block, UINT64_MAX);
  r.checks.push_back(Check::info("dim_proxy_A", ea.dim_proxy));
  r.checks.push_back(Check::info("dim_proxy_pA", ep.dim_proxy));
  r.checks.push_back(Check::at_most("abs_ddim", std::fabs(ea.dim_proxy - ep.dim_proxy), tol));
  return r;
}

/// Failure fractions of (eps, k)-normality over 1..m shrink as m grows.
inline VerifyReport lemma10(const json& cfg) {
  VerifyReport r;
  const auto ms = param<std::vector<std::uint64_t>>(cfg, "ranges", {1000, 10000, 100000});
  const auto eps = param<double>(cfg, "epsilon", 0.1);
  const auto k = param<std::size_t>(cfg, "k", 2);
  const auto base = param<std::uint32_t>(cfg, "base", 2);
  const auto targets_text = param<std::string>(cfg, "targets", "n,n2");
  r.config = {{"ranges", ms}, {"epsilon", eps}, {"k", k}, {"base", base}, {"targets", targets_text}};
  if (ms.empty()) throw InvalidArgument("lemma10 needs at least one range");
  const auto targets = parse_targets(targets_text);
  const NormalityParams params(eps, k, Alphabet(base));
  NormalityCensus c = census(*std::max_element(ms.begin(), ms.end()), params, targets);
  for (std::size_t t = 0; t < targets.size(); ++t) {
    std::vector<double> fractions;
    for (auto m : ms) {
      // Failures among 1..m: census again only when m is not a recorded decade bound.
      auto it = std::find(c.decades.begin(), c.decades.end(), m);
      double f;
      if (it != c.decades.end()) {
        f = c.fraction(t, static_cast<std::size_t>(it - c.decades.begin()));
      } else {
        NormalityCensus sub = census(m, params, {targets[t]});
        f = static_cast<double>(sub.failures[0]) / static_cast<double>(m);
      }
      fractions.push_back(f);
      r.checks.push_back(Check::info("fraction_" + targets[t].name() + "_" + std::to_string(m), f));
    }
    bool decreasing = true;
    for (std::size_t i = 1; i < fractions.size(); ++i) decreasing = decreasing && fractions[i] < fractions[i - 1];
    r.checks.push_back(Check::holds("strictly_decreasing_" + targets[t].name(), decreasing));
  }
  return r;
}

namespace detail {

inline StagedSpec staged_from(const json& cfg, std::uint32_t default_base) {
  StagedSpec spec;
  spec.base = Alphabet(param<std::uint32_t>(cfg, "base", default_base));
  spec.first_stage = param<unsigned>(cfg, "first_stage", spec.first_stage);
  spec.digit_budget = param<std::uint64_t>(cfg, "digits", 1000000);
  spec.probe.window = param<std::uint64_t>(cfg, "window", spec.probe.window);
  spec.probe.candidates_per_length = param<std::uint64_t>(cfg, "probe_candidates", spec.probe.candidates_per_length);
  spec.witness_budget = param<std::uint64_t>(cfg, "witness_budget", spec.witness_budget);
  spec.probe.workers = worker_count();
  return spec;
}

inline json staged_config(const StagedSpec& spec) {
  return {{"base", spec.base.base()},
          {"first_stage", spec.first_stage},
          {"digits", spec.digit_budget},
          {"window", spec.probe.window},
          {"probe_candidates", spec.probe.candidates_per_length},
          {"witness_budget", spec.witness_budget}};
}

inline double zero_density_at(const StreamLayout& layout, std::uint64_t n) {
  const std::uint64_t m = std::min(n, layout.total_digits());
  return m ? static_cast<double>(layout.zeros_in_prefix(m)) / static_cast<double>(m) : 0.0;
}

}  // namespace detail

/// Degree-2 slot construction: zero densities 1/2 and 1/4, normal payloads.
inline VerifyReport prop11(const json& cfg) {
  VerifyReport r;
  StagedSpec spec = detail::staged_from(cfg, 2);
  const auto max_block = param<std::size_t>(cfg, "max_block", 8);
  r.config = detail::staged_config(spec);
  r.config["max_block"] = max_block;
  const std::uint64_t n = spec.digit_budget;
  ConstructionReport rep = build_prop11(spec);
  r.checks.push_back(Check::holds("completed", !rep.halted));
  r.checks.push_back(Check::info("elements", static_cast<double>(rep.elements.size())));
  r.checks.push_back(Check::within("zero_density_A", detail::zero_density_at(rep.layout_a, n), 0.5, 0.02));
  r.checks.push_back(Check::within("zero_density_pA", detail::zero_density_at(rep.layout_p, n), 0.25, 0.05));
  std::uint64_t broken = 0;
  for (const auto& e : rep.elements)
    if (!verify_slot_integrity(e.witness, e.shift, 2, spec.base)) ++broken;
  r.checks.push_back(Check::at_most("slot_integrity_failures", static_cast<double>(broken), 0));

  SequenceSource sa = SequenceSource::truncate(rep.sequence_a(), n);
  SequenceSource sp = SequenceSource::truncate(rep.sequence_p(), n);
  r.checks.push_back(Check::at_least("stripped_H_4_A", entropies_at(strip_padding(sa, rep, Which::A), 4, n)[3], 0.9));
  r.checks.push_back(Check::at_least("stripped_H_4_pA", entropies_at(strip_padding(sp, rep, Which::Image), 4, n)[3], 0.9));
  const std::string hl = "H_" + std::to_string(max_block);
  r.checks.push_back(Check::within(hl + "_A", entropies_at(sa, max_block, n).back(), 0.5, 0.1));
  r.checks.push_back(Check::within(hl + "_pA", entropies_at(sp, max_block, n).back(), 0.75, 0.1));
  return r;
}

/// Scaled-witness construction: both zero densities 1 - s, both entropies s.
inline VerifyReport prop13(const json& cfg) {
  VerifyReport r;
  StagedSpec spec = detail::staged_from(cfg, 2);
  const auto s = param<double>(cfg, "s", 0.5);
  const auto d0 = param<std::uint64_t>(cfg, "d0", 16);
  const auto max_block = param<std::size_t>(cfg, "max_block", 8);
  r.config = detail::staged_config(spec);
  r.config["s"] = s;
  r.config["d0"] = d0;
  r.config["max_block"] = max_block;
  const std::uint64_t n = spec.digit_budget;
  ConstructionReport rep = build_prop13(spec, Prop13Schedule::for_target(s, d0));
  r.checks.push_back(Check::holds("completed", !rep.halted));
  r.checks.push_back(Check::info("elements", static_cast<double>(rep.elements.size())));
  r.checks.push_back(Check::within("zero_density_A", detail::zero_density_at(rep.layout_a, n), 1 - s, 0.02));
  r.checks.push_back(Check::within("zero_density_pA", detail::zero_density_at(rep.layout_p, n), 1 - s, 0.02));
  const std::string hl = "H_" + std::to_string(max_block);
  SequenceSource sa = SequenceSource::truncate(rep.sequence_a(), n);
  SequenceSource sp = SequenceSource::truncate(rep.sequence_p(), n);
  r.checks.push_back(Check::within(hl + "_A", entropies_at(sa, max_block, n).back(), s, 0.1));
  r.checks.push_back(Check::within(hl + "_pA", entropies_at(sp, max_block, n).back(), s, 0.1));
  return r;
}

/// CE_b(N) block entropies at a finite prefix.
inline VerifyReport champernowne_check(const json& cfg) {
  VerifyReport r;
  const auto digits = param<std::uint64_t>(cfg, "digits", 1000000);
  const auto max_block = param<std::size_t>(cfg, "max_block", 4);
  const auto bases = param<std::vector<std::uint32_t>>(cfg, "bases", {2, 10});
  const auto floor = param<double>(cfg, "floor", 0.95);
  r.config = {{"digits", digits}, {"max_block", max_block}, {"bases", bases}, {"floor", floor}};
  for (auto b : bases) {
    auto h = entropies_at(champernowne(Alphabet(b)), max_block, digits);
    for (std::size_t l = 1; l <= max_block; ++l)
      r.checks.push_back(Check::at_least("H_" + std::to_string(l) + "_base" + std::to_string(b), h[l - 1], floor));
  }
  return r;
}

/// Digit-exact slot decomposition of (b^i + n)^d for staged elements.
inline VerifyReport corollary(const json& cfg) {
  VerifyReport r;
  const auto d = param<unsigned>(cfg, "degree", 3);
  const auto count = param<std::uint64_t>(cfg, "elements", 100);
  const auto bases = param<std::vector<std::uint32_t>>(cfg, "bases", {2, 10});
  r.config = {{"degree", d}, {"elements", count}, {"bases", bases}};
  for (auto b : bases) {
    json sub = cfg;
    sub["base"] = b;
    StagedSpec spec = detail::staged_from(sub, b);
    spec.max_elements = count;
    spec.digit_budget = UINT64_MAX;
    ConstructionReport rep = build_corollary_d(spec, d);
    std::uint64_t exact = 0;
    for (const auto& e : rep.elements) {
      Natural v = fsdim::detail::pow_nat(b, e.shift) + e.witness;
      Natural p;
      mpz_pow_ui(p.get_mpz_t(), v.get_mpz_t(), d);
      auto predicted = binomial_slot_digits(e.witness, e.shift, d, Alphabet(b));
      if (predicted && sigma_b(p, Alphabet(b)).vec() == *predicted) ++exact;
    }
    const std::string tag = "_base" + std::to_string(b);
    r.checks.push_back(Check::at_least("elements" + tag, static_cast<double>(rep.elements.size()),
                                       static_cast<double>(count)));
    r.checks.push_back(Check::at_least("slot_exact" + tag, static_cast<double>(exact), static_cast<double>(count)));
  }
  return r;
}

/// Prefix set of Champernowne_2 scaled by c.
inline VerifyReport prop7(const json& cfg) {
  VerifyReport r;
  const auto c_text = param<std::string>(cfg, "c", "3");
  const auto digits = param<std::uint64_t>(cfg, "digits", 100000);
  const auto ratio = param<double>(cfg, "growth", 2.0);
  const auto max_block = param<std::size_t>(cfg, "max_block", 4);
  const auto tol = param<double>(cfg, "tolerance", 0.05);
  const auto density_max = param<double>(cfg, "density_max", 0.05);
  r.config = {{"c", c_text}, {"digits", digits}, {"growth", ratio}, {"max_block", max_block},
              {"tolerance", tol}, {"density_max", density_max}};
  Poly cp = parse_poly(c_text, nullptr);
  if (cp.degree() != 0) throw InvalidArgument("prop7 multiplier must be a constant");
  Prop7Options opt;
  opt.digit_budget = digits;
  opt.max_block = max_block;
  Prop7Report rep = prop7_demo(champernowne(Alphabet(2), 1), cp.coefficient(0), GrowthPolicy::geometric(ratio, 1), opt);
  r.checks.push_back(Check::below("disagreement_density", rep.final_density(), density_max));
  r.checks.push_back(Check::holds("density_decreasing", rep.density_decreasing()));
  r.checks.push_back(Check::info("dim_proxy_A", rep.dim_a.dim_proxy));
  r.checks.push_back(Check::info("dim_proxy_cA", rep.dim_scaled.dim_proxy));
  r.checks.push_back(Check::at_most("abs_ddim", std::fabs(rep.dim_a.dim_proxy - rep.dim_scaled.dim_proxy), tol));
  return r;
}

using Experiment = std::function<VerifyReport(const json&)>;

inline const std::map<std::string, Experiment>& registry() {
  static const std::map<std::string, Experiment> r{
      {"prop1", prop1},     {"prop2", prop2},       {"prop8", prop8},
      {"prop9", prop9},     {"lemma10", lemma10},   {"prop11", prop11},
      {"prop13", prop13},   {"champernowne", champernowne_check},
      {"corollary", corollary}, {"prop7", prop7},
  };
  return r;
}

/// Runs a registered experiment and stamps its wall-clock time.
inline VerifyReport run(const std::string& name, const json& cfg) {
  auto it = registry().find(name);
  if (it == registry().end()) throw InvalidArgument("unknown experiment: " + name);
  const auto t0 = std::chrono::steady_clock::now();
  VerifyReport r = it->second(cfg);
  r.experiment = name;
  r.wall_clock = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace fsdim::experiments
