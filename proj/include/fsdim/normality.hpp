#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fsdim/digits.hpp"
#include "fsdim/parallel.hpp"

namespace fsdim {

struct NormalityParams {
  double epsilon;
  std::size_t k;
  Alphabet base;

  NormalityParams(double epsilon_, std::size_t k_, Alphabet base_)
      : epsilon(epsilon_), k(k_), base(base_) {
    if (!(epsilon > 0)) throw InvalidArgument("epsilon must be positive");
    if (k == 0) throw InvalidArgument("k must be at least 1");
  }
};

/// A tested image of n: multiplier * n^exponent (n, 2n, n^2, n^d, C(d,j) n^j ...).
struct Target {
  Natural multiplier = 1;
  unsigned exponent = 1;

  Natural apply(const Natural& n) const {
    Natural v;
    mpz_pow_ui(v.get_mpz_t(), n.get_mpz_t(), exponent);
    return v * multiplier;
  }
  std::string name() const {
    std::string s = multiplier == 1 ? "" : multiplier.get_str();
    s += "n";
    if (exponent != 1) s += exponent == 2 && multiplier == 1 ? "2" : "^" + std::to_string(exponent);
    return s;
  }
  friend bool operator==(const Target& a, const Target& b) {
    return a.multiplier == b.multiplier && a.exponent == b.exponent;
  }
};

/// Parses "n", "2n", "n2", "n^3", "6n^2" ...
inline Target parse_target(const std::string& s) {
  auto pos = s.find('n');
  if (pos == std::string::npos) throw InvalidArgument("target must contain n: " + s);
  Target t;
  std::string mult = s.substr(0, pos);
  std::string rest = s.substr(pos + 1);
  auto all_digits = [](const std::string& x) {
    return !x.empty() && std::all_of(x.begin(), x.end(), [](char c) { return c >= '0' && c <= '9'; });
  };
  if (!mult.empty()) {
    if (!all_digits(mult)) throw InvalidArgument("bad target multiplier: " + s);
    t.multiplier = Natural(mult, 10);
  }
  if (!rest.empty()) {
    if (rest[0] == '^') rest = rest.substr(1);
    if (!all_digits(rest)) throw InvalidArgument("bad target exponent: " + s);
    t.exponent = static_cast<unsigned>(std::stoul(rest));
  }
  if (t.multiplier == 0 || t.exponent == 0) throw InvalidArgument("degenerate target: " + s);
  return t;
}

inline std::vector<Target> parse_targets(const std::string& csv) {
  std::vector<Target> out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    auto comma = csv.find(',', start);
    std::string item = csv.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!item.empty()) out.push_back(parse_target(item));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (out.empty()) throw InvalidArgument("no targets given");
  return out;
}

/// (eps, k)-normality of a digit string: |N(w, s)/|s| - b^-k| <= eps for every w of
/// length k. The denominator is |s|, not the window count |s| - k + 1.
inline bool is_ek_normal_digits(std::span<const digit_t> s, const NormalityParams& params) {
  const std::uint64_t b = params.base.base();
  const std::size_t k = params.k;
  const long double len = static_cast<long double>(s.size());
  // Compare |N * b^k - len| <= eps * len * b^k, with b^k in long double.
  const long double bk = std::pow(static_cast<long double>(b), static_cast<long double>(k));
  const long double bound = static_cast<long double>(params.epsilon) * len * bk;
  // Absent blocks deviate by exactly b^-k.
  const bool absent_ok = len <= bound;

  const std::size_t windows = s.size() >= k ? s.size() - k + 1 : 0;
  if (windows == 0) return absent_ok;

  bool fits = true;
  std::uint64_t modulus = 1;
  for (std::size_t i = 0; i < k && fits; ++i) {
    if (modulus > UINT64_MAX / b) fits = false;
    else modulus *= b;
  }
  // b^(k-1), used to drop the oldest digit from a rolling key.
  std::uint64_t top = 1;
  if (fits)
    for (std::size_t i = 1; i < k; ++i) top *= b;
  auto check = [&](std::uint64_t n) {
    long double dev = std::fabs(static_cast<long double>(n) * bk - len);
    return dev <= bound;
  };

  std::uint64_t distinct = 0;
  if (fits && modulus <= (1u << 16)) {
    thread_local std::vector<std::uint32_t> table;
    table.assign(static_cast<std::size_t>(modulus), 0);
    std::uint64_t key = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i >= k) key -= s[i - k] * top;
      key = key * b + s[i];
      if (i + 1 >= k) ++table[static_cast<std::size_t>(key)];
    }
    for (std::uint32_t n : table) {
      if (n == 0) continue;
      if (!check(n)) return false;
      ++distinct;
    }
  } else if (fits) {
    std::vector<std::uint64_t> keys;
    keys.reserve(windows);
    std::uint64_t key = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i >= k) key -= s[i - k] * top;
      key = key * b + s[i];
      if (i + 1 >= k) keys.push_back(key);
    }
    std::sort(keys.begin(), keys.end());
    for (std::size_t i = 0; i < keys.size();) {
      std::size_t j = i;
      while (j < keys.size() && keys[j] == keys[i]) ++j;
      if (!check(j - i)) return false;
      ++distinct;
      i = j;
    }
  } else {
    std::map<std::vector<digit_t>, std::uint64_t> counts;
    for (std::size_t i = 0; i < windows; ++i)
      ++counts[std::vector<digit_t>(s.begin() + static_cast<std::ptrdiff_t>(i),
                                    s.begin() + static_cast<std::ptrdiff_t>(i + k))];
    for (const auto& [w, n] : counts) {
      if (!check(n)) return false;
      ++distinct;
    }
  }
  const bool all_present = fits && distinct == modulus;
  return all_present || absent_ok;
}

inline bool is_ek_normal(const Natural& n, const NormalityParams& params) {
  if (n < 1) throw InvalidArgument("(eps,k)-normality is defined for n >= 1");
  std::vector<digit_t> s;
  append_sigma(n, params.base.base(), s);
  return is_ek_normal_digits(s, params);
}

/// `sigma_n`, when given, must be sigma_b(n); it saves one conversion for the target n.
inline bool all_targets_normal(const Natural& n, const NormalityParams& params,
                               const std::vector<Target>& targets,
                               std::span<const digit_t> sigma_n = {}) {
  std::vector<digit_t> s;
  for (const auto& t : targets) {
    if (!sigma_n.empty() && t.multiplier == 1 && t.exponent == 1) {
      if (!is_ek_normal_digits(sigma_n, params)) return false;
      continue;
    }
    s.clear();
    append_sigma(t.apply(n), params.base.base(), s);
    if (!is_ek_normal_digits(s, params)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Population census
// ---------------------------------------------------------------------------

struct NormalityCensus {
  Natural m;  // range is 1..m
  std::vector<Target> targets;
  std::vector<std::uint64_t> failures;  // per target, over 1..m
  /// Decade bounds 10, 100, ... (<= m) followed by m itself.
  std::vector<std::uint64_t> decades;
  /// failures_by_decade[t][d]: failures of target t among 1..decades[d].
  std::vector<std::vector<std::uint64_t>> failures_by_decade;

  double fraction(std::size_t target, std::size_t decade) const {
    return static_cast<double>(failures_by_decade[target][decade]) /
           static_cast<double>(decades[decade]);
  }
};

/// Exact failure counts over n = 1..m, split across workers and merged additively.
inline NormalityCensus census(std::uint64_t m, const NormalityParams& params,
                              const std::vector<Target>& targets, unsigned workers = worker_count()) {
  if (m < 1) throw InvalidArgument("census range must be at least 1");
  NormalityCensus c;
  c.m = Natural(std::to_string(m));
  c.targets = targets;
  for (std::uint64_t d = 10; d < m; d *= 10) {
    c.decades.push_back(d);
    if (d > UINT64_MAX / 10) break;
  }
  c.decades.push_back(m);

  const std::size_t T = targets.size();
  const std::size_t D = c.decades.size();
  std::vector<std::vector<std::uint64_t>> per_worker(
      std::max(1u, workers), std::vector<std::uint64_t>(T * D, 0));
  parallel_chunks(1, m + 1, workers, [&](unsigned w, std::uint64_t lo, std::uint64_t hi) {
    auto& acc = per_worker[w];
    std::vector<digit_t> s;
    Natural n;
    for (std::uint64_t v = lo; v < hi; ++v) {
      mpz_set_ui(n.get_mpz_t(), v);
      // First decade bound that contains v.
      std::size_t d0 = static_cast<std::size_t>(
          std::lower_bound(c.decades.begin(), c.decades.end(), v) - c.decades.begin());
      for (std::size_t t = 0; t < T; ++t) {
        s.clear();
        append_sigma(targets[t].apply(n), params.base.base(), s);
        if (!is_ek_normal_digits(s, params)) {
          for (std::size_t d = d0; d < D; ++d) ++acc[t * D + d];
        }
      }
    }
  });
  c.failures_by_decade.assign(T, std::vector<std::uint64_t>(D, 0));
  for (const auto& acc : per_worker)
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t d = 0; d < D; ++d) c.failures_by_decade[t][d] += acc[t * D + d];
  for (std::size_t t = 0; t < T; ++t) c.failures.push_back(c.failures_by_decade[t][D - 1]);
  return c;
}

// ---------------------------------------------------------------------------
// Witness search
// ---------------------------------------------------------------------------

struct WitnessResult {
  std::optional<Natural> witness;
  std::uint64_t candidates = 0;  // candidates examined
  bool exhaustive = false;       // the whole length class was scanned in increasing order
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Candidate j for length l: leading digit nonzero, remaining digits drawn from the
/// SplitMix64 stream keyed by (base, l, j). Identical on every platform.
inline void sampled_digits(std::uint32_t base, std::uint64_t l, std::uint64_t j, std::vector<digit_t>& scratch) {
  const std::uint64_t key = splitmix64(splitmix64(splitmix64(base) ^ l) ^ j);
  std::uint64_t counter = 0;
  auto draw = [&] { return splitmix64(key + 0x9E3779B97F4A7C15ull * ++counter); };
  scratch.resize(static_cast<std::size_t>(l));
  scratch[0] = static_cast<digit_t>(1 + draw() % (base - 1));
  if (std::has_single_bit(base)) {
    // Power-of-two bases: consume each 64-bit draw digit by digit.
    const int bits = std::countr_zero(base);
    const int per_draw = 64 / bits;
    std::uint64_t word = 0;
    int left = 0;
    for (std::size_t i = 1; i < scratch.size(); ++i) {
      if (left == 0) {
        word = draw();
        left = per_draw;
      }
      scratch[i] = static_cast<digit_t>(word & (base - 1));
      word >>= bits;
      --left;
    }
  } else {
    for (std::size_t i = 1; i < scratch.size(); ++i) scratch[i] = static_cast<digit_t>(draw() % base);
  }
}

inline Natural sampled_candidate(std::uint32_t base, std::uint64_t l, std::uint64_t j,
                                 std::vector<digit_t>& scratch) {
  sampled_digits(base, l, j, scratch);
  return from_digits(scratch, Alphabet(base));
}

}  // namespace detail

/// Finds an l-digit n (leading digit nonzero) with every target (eps, k)-normal.
///
/// When the length class has at most `budget` members it is scanned in increasing
/// order and the smallest witness is returned. Larger classes are searched through a
/// deterministic pseudo-random candidate sequence (see detail::sampled_candidate) and
/// the first passing candidate is returned; an increasing scan of a huge class only
/// ever visits numbers of the form 100...0xyz, which are never normal.
inline WitnessResult find_witness(std::uint64_t l, const NormalityParams& params,
                                  const std::vector<Target>& targets, std::uint64_t budget = 1000000,
                                  unsigned workers = 1) {
  if (l == 0) throw InvalidArgument("witness length must be at least 1");
  const std::uint32_t b = params.base.base();
  WitnessResult r;

  // Size of the length class, capped just above the budget.
  Natural class_size = detail::pow_nat(b, l - 1) * (b - 1);
  Natural budget_n(std::to_string(budget));
  if (class_size <= budget_n) {
    r.exhaustive = true;
    Natural lo = detail::pow_nat(b, l - 1);
    Natural hi = lo * b;
    for (Natural n = lo; n < hi; ++n) {
      ++r.candidates;
      if (all_targets_normal(n, params, targets)) {
        r.witness = n;
        return r;
      }
    }
    return r;
  }

  const bool screen_n = std::any_of(targets.begin(), targets.end(),
                                    [](const Target& t) { return t.multiplier == 1 && t.exponent == 1; });
  // Batches of candidates; the lowest passing index wins so the answer does not
  // depend on the worker count.
  const std::uint64_t batch = std::max<std::uint64_t>(64, workers * 16ull);
  for (std::uint64_t start = 0; start < budget; start += batch) {
    const std::uint64_t end = std::min(budget, start + batch);
    std::vector<std::optional<Natural>> hits(static_cast<std::size_t>(end - start));
    parallel_chunks(start, end, workers, [&](unsigned, std::uint64_t lo, std::uint64_t hi) {
      std::vector<digit_t> scratch;
      for (std::uint64_t j = lo; j < hi; ++j) {
        detail::sampled_digits(b, l, j, scratch);
        if (screen_n && !is_ek_normal_digits(scratch, params)) continue;
        Natural n = from_digits(scratch, Alphabet(b));
        if (all_targets_normal(n, params, targets, scratch)) hits[static_cast<std::size_t>(j - start)] = n;
      }
    });
    for (std::size_t i = 0; i < hits.size(); ++i) {
      if (hits[i]) {
        r.candidates = start + i + 1;
        r.witness = hits[i];
        return r;
      }
    }
    r.candidates = end;
  }
  return r;
}

struct ThresholdProbe {
  std::uint64_t start_length = 1;
  std::uint64_t max_length = 4096;
  std::uint64_t candidates_per_length = 1000000;
  std::uint64_t window = 8;  // lengths above l that must also have witnesses
  unsigned workers = 1;
};

/// Memoizes find_witness results by (eps, k, base, targets, length, budget).
class WitnessCache {
 public:
  WitnessResult get(std::uint64_t l, const NormalityParams& params, const std::vector<Target>& targets,
                    std::uint64_t budget, unsigned workers = 1) {
    Key key{params.epsilon, params.k, params.base.base(), targets_key(targets), l, budget};
    {
      std::lock_guard lock(mu_);
      auto it = cache_.find(key);
      if (it != cache_.end()) return it->second;
    }
    WitnessResult r = find_witness(l, params, targets, budget, workers);
    std::lock_guard lock(mu_);
    cache_.emplace(key, r);
    return r;
  }

 private:
  using Key = std::tuple<double, std::size_t, std::uint32_t, std::string, std::uint64_t, std::uint64_t>;
  static std::string targets_key(const std::vector<Target>& targets) {
    std::string s;
    for (const auto& t : targets) s += t.name() + ",";
    return s;
  }
  std::mutex mu_;
  std::map<Key, WitnessResult> cache_;
};

/// Smallest l >= probe.start_length such that witnesses exist for l and for each of
/// the next probe.window lengths.
inline std::uint64_t find_threshold(const NormalityParams& params, const std::vector<Target>& targets,
                                    const ThresholdProbe& probe = {}, WitnessCache* cache = nullptr) {
  std::uint64_t run_start = probe.start_length;
  std::uint64_t run = 0;
  for (std::uint64_t l = probe.start_length; l <= probe.max_length; ++l) {
    WitnessResult r = cache ? cache->get(l, params, targets, probe.candidates_per_length, probe.workers)
                            : find_witness(l, params, targets, probe.candidates_per_length, probe.workers);
    if (r.witness) {
      if (run == 0) run_start = l;
      if (++run == probe.window + 1) return run_start;
    } else {
      run = 0;
    }
  }
  throw ThresholdNotFound("no threshold up to length " + std::to_string(probe.max_length) +
                          " for eps=" + std::to_string(params.epsilon) +
                          ", k=" + std::to_string(params.k));
}

}  // namespace fsdim
