#pragma once

#include <cctype>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "fsdim/digit_io.hpp"
#include "fsdim/digits.hpp"
#include "fsdim/sequences.hpp"
#include "fsdim/sources.hpp"

namespace fsdim {

/// Closed rational interval [lo, hi].
struct Interval {
  Rational lo;
  Rational hi;
  bool exact() const { return lo == hi; }
};

inline Natural floor_of(const Rational& q) {
  Natural r;
  mpz_fdiv_q(r.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  return r;
}

/// A real number known through nested rational intervals. refine(t) returns an
/// interval of width at most base^-t containing the value; larger t never widens it.
/// Exact rationals refine to a point.
class RealCoefficient {
 public:
  using Refiner = std::function<Interval(std::uint64_t)>;

  static RealCoefficient exact(Rational value) {
    value.canonicalize();
    RealCoefficient c;
    c.exact_ = value;
    c.base_ = 2;
    c.refiner_ = [value](std::uint64_t) { return Interval{value, value}; };
    return c;
  }

  static RealCoefficient from_refiner(Refiner refiner, std::uint32_t base = 2) {
    RealCoefficient c;
    c.base_ = base;
    c.refiner_ = std::move(refiner);
    return c;
  }

  /// The real d_0 d_1 ... d_{m-1} . d_m d_{m+1} ... in the digits' base, where m is
  /// `integer_digits`. When the stream ends and `terminating` is set the value is the
  /// finite expansion; otherwise precision stops growing at the last available digit.
  static RealCoefficient from_digits(SequenceSource digits, std::uint64_t integer_digits = 1,
                                     bool terminating = false) {
    struct Cache {
      std::mutex mu;
      std::unique_ptr<DigitReader> reader;
      std::vector<digit_t> digits;
      bool ended = false;
    };
    auto cache = std::make_shared<Cache>();
    cache->reader = std::make_unique<DigitReader>(digits.open());
    const Alphabet alphabet = digits.alphabet();
    RealCoefficient c;
    c.base_ = alphabet.base();
    c.refiner_ = [cache, alphabet, integer_digits, terminating](std::uint64_t t) -> Interval {
      std::lock_guard lock(cache->mu);
      const std::uint64_t want = integer_digits + t;
      while (cache->digits.size() < want && !cache->ended) {
        auto d = cache->reader->next();
        if (!d) {
          cache->ended = true;
          break;
        }
        cache->digits.push_back(*d);
      }
      const std::uint64_t have = std::min<std::uint64_t>(want, cache->digits.size());
      if (have < integer_digits) {
        throw InvalidArgument("digit-stream coefficient is shorter than its integer part");
      }
      Natural p = have == 0 ? Natural(0)
                            : fsdim::from_digits(std::span<const digit_t>(cache->digits.data(), have),
                                          alphabet);
      const std::uint64_t frac = have - integer_digits;
      Rational scale(1, detail::pow_nat(alphabet.base(), frac));
      Rational lo = Rational(p) * scale;
      lo.canonicalize();
      const bool complete = cache->ended && have == cache->digits.size();
      if (complete && terminating) return {lo, lo};
      Rational hi = Rational(p + 1) * scale;
      hi.canonicalize();
      return {lo, hi};
    };
    return c;
  }

  static RealCoefficient sum(RealCoefficient a, RealCoefficient b) {
    if (a.exact_ && b.exact_) return exact(*a.exact_ + *b.exact_);
    return from_refiner(
        [a, b](std::uint64_t t) {
          Interval x = a.refine(t + 1);
          Interval y = b.refine(t + 1);
          Interval r{x.lo + y.lo, x.hi + y.hi};
          r.lo.canonicalize();
          r.hi.canonicalize();
          return r;
        },
        std::max(a.base_, b.base_));
  }

  static RealCoefficient negate(RealCoefficient a) {
    if (a.exact_) return exact(-*a.exact_);
    return from_refiner(
        [a](std::uint64_t t) {
          Interval x = a.refine(t);
          return Interval{-x.hi, -x.lo};
        },
        a.base_);
  }

  Interval refine(std::uint64_t precision) const { return refiner_(precision); }
  const std::optional<Rational>& exact_value() const noexcept { return exact_; }
  std::uint32_t base() const noexcept { return base_; }

 private:
  RealCoefficient() = default;
  Refiner refiner_;
  std::optional<Rational> exact_;
  std::uint32_t base_ = 2;
};

/// p(x) = sum_j c_j x^j with c_j indexed by exponent.
class Poly {
 public:
  explicit Poly(std::vector<RealCoefficient> coefficients) : coeffs_(std::move(coefficients)) {
    if (coeffs_.empty()) throw InvalidArgument("polynomial needs at least one coefficient");
    const Interval lead = coeffs_.back().refine(64);
    if (lead.lo == 0 && lead.hi == 0 && coeffs_.size() > 1) {
      throw InvalidArgument("leading coefficient is zero");
    }
  }

  static Poly rational(const std::vector<Rational>& coefficients) {
    std::vector<RealCoefficient> c;
    for (const auto& q : coefficients) c.push_back(RealCoefficient::exact(q));
    return Poly(std::move(c));
  }

  std::size_t degree() const noexcept { return coeffs_.size() - 1; }
  const std::vector<RealCoefficient>& coefficients() const noexcept { return coeffs_; }
  const RealCoefficient& coefficient(std::size_t j) const { return coeffs_.at(j); }
  bool is_exact() const {
    for (const auto& c : coeffs_)
      if (!c.exact_value()) return false;
    return true;
  }

 private:
  std::vector<RealCoefficient> coeffs_;
};

struct EvalOptions {
  std::uint64_t initial_precision = 32;
  std::uint64_t max_precision = 4096;  // base-b digits per coefficient
};

/// floor(p(n)), exactly. Interval coefficients are refined (precision doubling) until
/// the bracketing interval has a single integer floor.
inline Natural eval_floor(const Poly& p, const Natural& n, const EvalOptions& opt = {}) {
  if (sgn(n) < 0) throw InvalidArgument("eval_floor needs n >= 0");
  std::vector<Natural> powers{Natural(1)};
  for (std::size_t j = 1; j <= p.degree(); ++j) powers.push_back(powers.back() * n);

  if (p.is_exact()) {
    Rational v = 0;
    for (std::size_t j = 0; j <= p.degree(); ++j) v += *p.coefficients()[j].exact_value() * powers[j];
    v.canonicalize();
    if (sgn(v) < 0) throw NegativeValue("p(" + n.get_str() + ") is negative");
    return floor_of(v);
  }

  std::uint64_t t = std::min(opt.initial_precision, opt.max_precision);
  for (;;) {
    Rational lo = 0;
    Rational hi = 0;
    for (std::size_t j = 0; j <= p.degree(); ++j) {
      Interval c = p.coefficients()[j].refine(t);
      lo += c.lo * powers[j];
      hi += c.hi * powers[j];
    }
    lo.canonicalize();
    hi.canonicalize();
    if (sgn(hi) < 0) throw NegativeValue("p(" + n.get_str() + ") is negative");
    if (sgn(lo) >= 0) {
      Natural f = floor_of(lo);
      if (f == floor_of(hi)) return f;
    }
    if (t >= opt.max_precision) {
      throw AmbiguousFloor("floor of p(" + n.get_str() + ") undecided at precision " +
                               std::to_string(t),
                           lo.get_str(), hi.get_str());
    }
    t = std::min(opt.max_precision, t * 2);
  }
}

/// floor(p(a)) for each a in A, in A's order (not re-sorted).
inline NaturalStream image_stream(Poly p, SetStream set, EvalOptions opt = {}) {
  return NaturalStream::map(std::move(set), [p = std::move(p), opt](const Natural& a) {
    try {
      return eval_floor(p, a, opt);
    } catch (const NegativeValue&) {
      throw NegativeValue("polynomial is negative at n = " + a.get_str());
    }
  });
}

/// CE_b(p(A)) = sigma_b(floor p(a_1)) sigma_b(floor p(a_2)) ...
inline SequenceSource ce_poly_sequence(Poly p, SetStream set, Alphabet alphabet, EvalOptions opt = {}) {
  return concat_expansions(image_stream(std::move(p), std::move(set), opt), alphabet);
}

/// Order audit of the first `count` image values.
struct MonotonicityReport {
  std::uint64_t checked = 0;
  std::vector<std::uint64_t> inversions;  // i with v_i < v_{i-1}
  std::vector<std::uint64_t> ties;        // i with v_i == v_{i-1}
  bool strictly_increasing() const { return inversions.empty() && ties.empty(); }
};

inline MonotonicityReport audit_image_order(const Poly& p, const SetStream& set, std::uint64_t count,
                                            EvalOptions opt = {}) {
  MonotonicityReport r;
  auto cursor = image_stream(p, set, opt).open();
  std::optional<Natural> last;
  for (std::uint64_t i = 0; i < count; ++i) {
    auto v = cursor->next();
    if (!v) break;
    if (last) {
      if (*v < *last) r.inversions.push_back(i);
      if (*v == *last) r.ties.push_back(i);
    }
    last = std::move(v);
    ++r.checked;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Polynomial strings
// ---------------------------------------------------------------------------
//
//   poly     := ['+'|'-'] term (('+'|'-') term)*
//   term     := coef ['*' monomial] | monomial
//   monomial := 'x' ['^' digits]
//   coef     := digits ['/' digits] | digits '.' digits | 'real:' path
//
// Whitespace may separate tokens. A real: path runs to the next whitespace or '*'
// and names a digit file read as d0.d1d2... (one integer digit). Repeated exponents
// are summed.

inline Poly parse_poly(const std::string& text,
                       const std::function<RealCoefficient(const std::string&)>& load_real = {}) {
  std::size_t i = 0;
  auto fail = [&](const std::string& why) -> Poly {
    throw InvalidArgument("bad polynomial \"" + text + "\" at offset " + std::to_string(i) + ": " + why);
  };
  auto skip = [&] {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  };
  auto digits = [&]() -> std::string {
    std::size_t s = i;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
    return text.substr(s, i - s);
  };

  std::vector<std::optional<RealCoefficient>> coeffs;
  auto add = [&](std::size_t exp, RealCoefficient c) {
    if (coeffs.size() <= exp) coeffs.resize(exp + 1);
    coeffs[exp] = coeffs[exp] ? RealCoefficient::sum(*coeffs[exp], c) : c;
  };

  skip();
  if (i == text.size()) return fail("empty");
  bool first = true;
  while (true) {
    skip();
    bool negative = false;
    if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
      negative = text[i] == '-';
      ++i;
      skip();
    } else if (!first) {
      return fail("expected '+' or '-'");
    }
    first = false;

    std::optional<RealCoefficient> coef;
    if (text.compare(i, 5, "real:") == 0) {
      i += 5;
      std::size_t s = i;
      while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i])) && text[i] != '*') ++i;
      if (i == s) return fail("missing path after real:");
      std::string path = text.substr(s, i - s);
      coef = load_real ? load_real(path)
                       : RealCoefficient::from_digits(
                             SequenceSource::from_digits(io::read_digit_file(path)), 1, false);
    } else if (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
      std::string num = digits();
      Rational q;
      if (i < text.size() && text[i] == '/') {
        ++i;
        std::string den = digits();
        if (den.empty()) return fail("missing denominator");
        Natural d(den, 10);
        if (d == 0) return fail("zero denominator");
        q = Rational(Natural(num, 10), d);
      } else if (i < text.size() && text[i] == '.') {
        ++i;
        std::string frac = digits();
        if (frac.empty()) return fail("missing digits after '.'");
        q = Rational(Natural(num + frac, 10), detail::pow_nat(10, frac.size()));
      } else {
        q = Rational(Natural(num, 10));
      }
      q.canonicalize();
      coef = RealCoefficient::exact(q);
    }

    skip();
    std::size_t exponent = 0;
    bool has_mono = false;
    if (coef) {
      if (i < text.size() && text[i] == '*') {
        ++i;
        skip();
        if (i >= text.size() || text[i] != 'x') return fail("expected 'x' after '*'");
        has_mono = true;
      }
    } else {
      if (i >= text.size() || text[i] != 'x') return fail("expected a coefficient or 'x'");
      has_mono = true;
      coef = RealCoefficient::exact(1);
    }
    if (has_mono) {
      ++i;  // 'x'
      exponent = 1;
      skip();
      if (i < text.size() && text[i] == '^') {
        ++i;
        skip();
        std::string e = digits();
        if (e.empty()) return fail("missing exponent");
        exponent = std::stoul(e);
      }
    }
    add(exponent, negative ? RealCoefficient::negate(*coef) : *coef);
    skip();
    if (i == text.size()) break;
  }
  while (coeffs.size() > 1 && !coeffs.back()) coeffs.pop_back();
  std::vector<RealCoefficient> out;
  for (auto& c : coeffs) out.push_back(c ? *c : RealCoefficient::exact(0));
  return Poly(std::move(out));
}

}  // namespace fsdim
