#pragma once

#include <gmpxx.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fsdim/error.hpp"

namespace fsdim {

using digit_t = std::uint32_t;
using Natural = mpz_class;
using Rational = mpq_class;

/// The b-ary alphabet {0, ..., b-1}.
class Alphabet {
 public:
  explicit Alphabet(std::uint32_t base) : base_(base) {
    if (base < 2) throw InvalidArgument("base must be at least 2, got " + std::to_string(base));
  }
  std::uint32_t base() const noexcept { return base_; }
  bool contains(digit_t d) const noexcept { return d < base_; }
  friend bool operator==(const Alphabet&, const Alphabet&) = default;

 private:
  std::uint32_t base_;
};

namespace detail {

// GMP renders bases <= 36 with lowercase letters and 37..62 with 0-9A-Za-z.
inline digit_t gmp_char_value(char c, std::uint32_t base) {
  if (c >= '0' && c <= '9') return static_cast<digit_t>(c - '0');
  if (base <= 36) return static_cast<digit_t>(c - 'a' + 10);
  if (c >= 'A' && c <= 'Z') return static_cast<digit_t>(c - 'A' + 10);
  return static_cast<digit_t>(c - 'a' + 36);
}

inline char gmp_value_char(digit_t d, std::uint32_t base) {
  if (d < 10) return static_cast<char>('0' + d);
  if (base <= 36) return static_cast<char>('a' + (d - 10));
  if (d < 36) return static_cast<char>('A' + (d - 10));
  return static_cast<char>('a' + (d - 36));
}

inline constexpr std::uint32_t kGmpMaxBase = 62;

// Largest e with base^e < 2^64, and base^e itself.
inline std::pair<unsigned, std::uint64_t> word_power(std::uint32_t base) {
  unsigned e = 0;
  std::uint64_t p = 1;
  while (p <= UINT64_MAX / base) {
    p *= base;
    ++e;
  }
  return {e, p};
}

inline Natural pow_nat(std::uint32_t base, std::uint64_t exp) {
  Natural r;
  mpz_ui_pow_ui(r.get_mpz_t(), base, exp);
  return r;
}

}  // namespace detail

/// A finite string over an alphabet. Digits are stored as values, not characters.
class DigitString {
 public:
  explicit DigitString(Alphabet alphabet) : alphabet_(alphabet) {}
  DigitString(Alphabet alphabet, std::vector<digit_t> digits)
      : alphabet_(alphabet), digits_(std::move(digits)) {
    for (std::size_t i = 0; i < digits_.size(); ++i) {
      if (!alphabet_.contains(digits_[i])) {
        throw InvalidDigit("digit " + std::to_string(digits_[i]) + " at position " +
                           std::to_string(i) + " is out of range for base " +
                           std::to_string(alphabet_.base()));
      }
    }
  }

  const Alphabet& alphabet() const noexcept { return alphabet_; }
  std::uint32_t base() const noexcept { return alphabet_.base(); }
  std::size_t size() const noexcept { return digits_.size(); }
  bool empty() const noexcept { return digits_.empty(); }
  digit_t operator[](std::size_t i) const { return digits_[i]; }
  std::span<const digit_t> digits() const noexcept { return digits_; }
  const std::vector<digit_t>& vec() const noexcept { return digits_; }

  /// Renders with 0-9 then A-Z. Only defined for base <= 36.
  std::string to_text() const {
    if (base() > 36) throw InvalidArgument("text rendering needs base <= 36");
    std::string s(digits_.size(), '0');
    for (std::size_t i = 0; i < digits_.size(); ++i) {
      digit_t d = digits_[i];
      s[i] = d < 10 ? static_cast<char>('0' + d) : static_cast<char>('A' + (d - 10));
    }
    return s;
  }

  static DigitString from_text(std::string_view text, Alphabet alphabet) {
    std::vector<digit_t> out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
      char c = text[i];
      digit_t d;
      if (c >= '0' && c <= '9') {
        d = static_cast<digit_t>(c - '0');
      } else if (c >= 'A' && c <= 'Z') {
        d = static_cast<digit_t>(c - 'A' + 10);
      } else {
        throw InvalidDigit(std::string("invalid digit character '") + c + "' at position " +
                           std::to_string(i));
      }
      out.push_back(d);
    }
    return DigitString(alphabet, std::move(out));
  }

  friend bool operator==(const DigitString& a, const DigitString& b) {
    return a.alphabet_ == b.alphabet_ && a.digits_ == b.digits_;
  }

 private:
  Alphabet alphabet_;
  std::vector<digit_t> digits_;
};

/// Appends the base-b digits of n (most significant first) to out.
/// sigma_b(0) is the single digit 0.
inline void append_sigma(const Natural& n, std::uint32_t base, std::vector<digit_t>& out) {
  if (sgn(n) < 0) throw InvalidArgument("sigma_b is only defined for naturals");
  if (sgn(n) == 0) {
    out.push_back(0);
    return;
  }
  if (base <= detail::kGmpMaxBase) {
    std::string s = n.get_str(static_cast<int>(base));
    std::size_t at = out.size();
    out.resize(at + s.size());
    for (std::size_t i = 0; i < s.size(); ++i) out[at + i] = detail::gmp_char_value(s[i], base);
    return;
  }
  // Large bases: peel off word-sized chunks of digits, least significant first.
  auto [chunk_digits, chunk] = detail::word_power(base);
  std::vector<digit_t> rev;
  Natural q = n;
  while (sgn(q) != 0) {
    std::uint64_t r = mpz_fdiv_q_ui(q.get_mpz_t(), q.get_mpz_t(), chunk);
    for (unsigned i = 0; i < chunk_digits; ++i) {
      rev.push_back(static_cast<digit_t>(r % base));
      r /= base;
    }
  }
  while (rev.size() > 1 && rev.back() == 0) rev.pop_back();
  out.insert(out.end(), rev.rbegin(), rev.rend());
}

/// Base-b expansion of n.
inline DigitString sigma_b(const Natural& n, Alphabet alphabet) {
  std::vector<digit_t> digits;
  append_sigma(n, alphabet.base(), digits);
  return DigitString(alphabet, std::move(digits));
}

/// Value of a digit sequence; leading zeros are ignored.
inline Natural from_digits(std::span<const digit_t> digits, Alphabet alphabet) {
  if (digits.empty()) throw InvalidArgument("from_digits needs at least one digit");
  const std::uint32_t base = alphabet.base();
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (digits[i] >= base) {
      throw InvalidDigit("digit " + std::to_string(digits[i]) + " at position " +
                         std::to_string(i) + " is out of range for base " + std::to_string(base));
    }
  }
  if (base <= detail::kGmpMaxBase) {
    std::string s(digits.size(), '0');
    for (std::size_t i = 0; i < digits.size(); ++i) s[i] = detail::gmp_value_char(digits[i], base);
    Natural n;
    mpz_set_str(n.get_mpz_t(), s.c_str(), static_cast<int>(base));
    return n;
  }
  auto [chunk_digits, chunk] = detail::word_power(base);
  Natural n = 0;
  std::size_t i = 0;
  while (i < digits.size()) {
    std::size_t take = std::min<std::size_t>(chunk_digits, digits.size() - i);
    std::uint64_t word = 0;
    std::uint64_t scale = 1;
    for (std::size_t j = 0; j < take; ++j) {
      word = word * base + digits[i + j];
      scale *= base;
    }
    mpz_mul_ui(n.get_mpz_t(), n.get_mpz_t(), scale);
    mpz_add_ui(n.get_mpz_t(), n.get_mpz_t(), word);
    i += take;
  }
  return n;
}

inline Natural from_digits(const DigitString& d) { return from_digits(d.digits(), d.alphabet()); }

/// |sigma_b(n)|, computed from the magnitude without producing the digits.
inline std::uint64_t digit_length(const Natural& n, Alphabet alphabet) {
  if (sgn(n) < 0) throw InvalidArgument("digit_length is only defined for naturals");
  if (sgn(n) == 0) return 1;
  const std::uint32_t base = alphabet.base();
  if ((base & (base - 1)) == 0) {
    // Exact for powers of two.
    std::uint64_t bits = mpz_sizeinbase(n.get_mpz_t(), 2);
    unsigned shift = static_cast<unsigned>(std::countr_zero(base));
    return (bits + shift - 1) / shift;
  }
  std::uint64_t est;
  if (base <= detail::kGmpMaxBase) {
    est = mpz_sizeinbase(n.get_mpz_t(), static_cast<int>(base));  // exact or one too big
  } else {
    long double bits = static_cast<long double>(mpz_sizeinbase(n.get_mpz_t(), 2));
    est = static_cast<std::uint64_t>(bits * std::log(2.0L) / std::log(static_cast<long double>(base))) + 1;
  }
  // Normalize so that base^(est-1) <= n < base^est.
  while (est > 1 && detail::pow_nat(base, est - 1) > n) --est;
  while (detail::pow_nat(base, est) <= n) ++est;
  return est;
}

}  // namespace fsdim
