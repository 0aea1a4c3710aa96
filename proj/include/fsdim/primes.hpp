#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "fsdim/sources.hpp"

namespace fsdim {

/// Segmented sieve of Eratosthenes that extends itself one segment at a time.
/// Base primes are regrown on demand, so the stream has no upper bound short of 2^64.
class IncrementalSieve {
 public:
  explicit IncrementalSieve(std::uint64_t segment = 1u << 18) : segment_(segment) {}

  std::optional<std::uint64_t> next() {
    while (idx_ == found_.size()) {
      if (lo_ > UINT64_MAX - segment_) return std::nullopt;
      sieve_next_segment();
    }
    return found_[idx_++];
  }

 private:
  void grow_base(std::uint64_t limit) {
    if (limit <= base_limit_) return;
    std::uint64_t n = std::max(limit, base_limit_ * 2);
    std::vector<bool> composite(n + 1, false);
    base_.clear();
    for (std::uint64_t i = 2; i <= n; ++i) {
      if (composite[i]) continue;
      base_.push_back(i);
      for (std::uint64_t j = i * i; j <= n; j += i) composite[j] = true;
    }
    base_limit_ = n;
  }

  void sieve_next_segment() {
    const std::uint64_t lo = lo_;
    const std::uint64_t hi = lo + segment_;  // exclusive
    grow_base(detail::isqrt_u64(hi) + 1);
    std::vector<char> composite(segment_, 0);
    for (std::uint64_t p : base_) {
      if (p * p >= hi) break;
      std::uint64_t start = std::max(p * p, (lo + p - 1) / p * p);
      for (std::uint64_t j = start; j < hi; j += p) composite[j - lo] = 1;
    }
    found_.clear();
    idx_ = 0;
    for (std::uint64_t i = std::max<std::uint64_t>(lo, 2); i < hi; ++i) {
      if (!composite[i - lo]) found_.push_back(i);
    }
    lo_ = hi;
  }

  std::uint64_t segment_;
  std::uint64_t lo_ = 0;
  std::vector<std::uint64_t> base_;
  std::uint64_t base_limit_ = 1;
  std::vector<std::uint64_t> found_;
  std::size_t idx_ = 0;
};

/// Primes in increasing order, optionally only those <= limit.
inline SetStream primes_stream(std::optional<Natural> limit = std::nullopt) {
  class PrimeCursor final : public NaturalCursor {
   public:
    explicit PrimeCursor(std::optional<Natural> limit) : limit_(std::move(limit)) {}
    std::optional<Natural> next() override {
      if (done_) return std::nullopt;
      auto p = sieve_.next();
      if (!p) {
        done_ = true;
        return std::nullopt;
      }
      Natural v;
      mpz_set_ui(v.get_mpz_t(), *p);
      if (limit_ && v > *limit_) {
        done_ = true;
        return std::nullopt;
      }
      return v;
    }

   private:
    IncrementalSieve sieve_;
    std::optional<Natural> limit_;
    bool done_ = false;
  };
  return SetStream([limit] { return std::make_unique<PrimeCursor>(limit); });
}

}  // namespace fsdim
