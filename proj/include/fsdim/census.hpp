#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "fsdim/digits.hpp"
#include "fsdim/sources.hpp"

namespace fsdim {

/// Sliding-window counts N(w, s) for every block w of a fixed length l.
///
/// Digits are pushed one at a time; the census keeps the last l-1 digits so that a
/// stream can be counted in pieces. A census for a later piece is started with
/// seeded(previous.tail()) and folded back with merge(), which gives exactly the
/// counts of the whole stream.
///
/// Storage is a dense table while b^l <= 2^24, a hash table keyed by the block's
/// value while b^l fits in 64 bits, and an ordered map of digit strings beyond that.
class BlockCensus {
 public:
  static constexpr std::uint64_t kDenseLimit = std::uint64_t{1} << 24;

  BlockCensus(Alphabet alphabet, std::size_t block_length)
      : alphabet_(alphabet), l_(block_length) {
    if (block_length == 0) throw InvalidArgument("block length must be at least 1");
    modulus_ = 1;
    wide_ = false;
    for (std::size_t i = 0; i < l_; ++i) {
      if (modulus_ > UINT64_MAX / alphabet_.base()) {
        wide_ = true;
        break;
      }
      modulus_ *= alphabet_.base();
    }
    if (!wide_ && modulus_ <= kDenseLimit) dense_.assign(static_cast<std::size_t>(modulus_), 0);
    window_.reserve(l_);
  }

  /// A census that continues after the given carry (the previous piece's tail).
  /// Carry digits complete windows but are not counted as consumed.
  static BlockCensus seeded(Alphabet alphabet, std::size_t block_length,
                            std::span<const digit_t> carry) {
    BlockCensus c(alphabet, block_length);
    if (carry.size() >= block_length) throw InvalidArgument("carry must hold fewer than l digits");
    for (digit_t d : carry) c.shift_in(d);
    c.seed_.assign(carry.begin(), carry.end());
    return c;
  }

  const Alphabet& alphabet() const noexcept { return alphabet_; }
  std::size_t block_length() const noexcept { return l_; }
  /// Number of windows counted.
  std::uint64_t total() const noexcept { return total_; }
  /// Number of digits pushed (carry excluded).
  std::uint64_t consumed() const noexcept { return consumed_; }
  bool is_dense() const noexcept { return !dense_.empty(); }

  void push(digit_t d) {
    if (!alphabet_.contains(d)) {
      throw InvalidDigit("digit " + std::to_string(d) + " out of range for base " +
                         std::to_string(alphabet_.base()));
    }
    ++consumed_;
    shift_in(d);
  }

  void push(std::span<const digit_t> digits) {
    for (digit_t d : digits) push(d);
  }

  /// The last min(l-1, digits seen) digits, oldest first.
  std::vector<digit_t> tail() const {
    std::size_t keep = std::min(window_.size(), l_ - 1);
    std::vector<digit_t> out;
    out.reserve(keep);
    std::size_t n = window_.size();
    // window_ is a ring of capacity l once full; head_ points at the oldest digit.
    for (std::size_t i = n - keep; i < n; ++i) out.push_back(window_[(head_ + i) % n]);
    return out;
  }

  /// Folds in the census of the piece that follows this one. `next` must have been
  /// seeded with this->tail().
  void merge(const BlockCensus& next) {
    if (!(next.alphabet_ == alphabet_) || next.l_ != l_) {
      throw InvalidArgument("cannot merge censuses with different alphabet or block length");
    }
    if (next.seed_ != tail()) throw IntegrityError("census merge: carry does not match tail");
    next.for_each_key([this](std::uint64_t key, std::span<const digit_t> block, std::uint64_t n) {
      add(key, block, n);
    });
    total_ += next.total_;
    consumed_ += next.consumed_;
    window_ = next.window_;
    head_ = next.head_;
    rolling_ = next.rolling_;
  }

  /// N(w, s) for a block w of length l.
  std::uint64_t count(std::span<const digit_t> w) const {
    if (w.size() != l_) throw InvalidArgument("block has the wrong length");
    if (wide_) {
      auto it = wide_counts_.find(std::basic_string<digit_t>(w.begin(), w.end()));
      return it == wide_counts_.end() ? 0 : it->second;
    }
    std::uint64_t key = 0;
    for (digit_t d : w) {
      if (!alphabet_.contains(d)) return 0;
      key = key * alphabet_.base() + d;
    }
    if (is_dense()) return dense_[static_cast<std::size_t>(key)];
    auto it = sparse_.find(key);
    return it == sparse_.end() ? 0 : it->second;
  }

  /// Calls f(count) for every block with a nonzero count.
  template <class F>
  void for_each_count(F&& f) const {
    if (is_dense()) {
      for (std::uint64_t n : dense_)
        if (n) f(n);
    } else if (!wide_) {
      for (const auto& [k, n] : sparse_) f(n);
    } else {
      for (const auto& [k, n] : wide_counts_) f(n);
    }
  }

  /// Calls f(block digits, count) for every block with a nonzero count.
  template <class F>
  void for_each_block(F&& f) const {
    for_each_key([&](std::uint64_t, std::span<const digit_t> block, std::uint64_t n) { f(block, n); });
  }

  /// Number of distinct blocks observed.
  std::uint64_t distinct() const {
    std::uint64_t c = 0;
    for_each_count([&](std::uint64_t) { ++c; });
    return c;
  }

 private:
  void shift_in(digit_t d) {
    if (window_.size() < l_) {
      window_.push_back(d);
    } else {
      window_[head_] = d;
      head_ = (head_ + 1) % l_;
    }
    if (!wide_) rolling_ = (rolling_ * alphabet_.base() + d) % modulus_;
    if (window_.size() == l_) {
      ++total_;
      if (wide_) {
        std::basic_string<digit_t> key(l_, 0);
        for (std::size_t i = 0; i < l_; ++i) key[i] = window_[(head_ + i) % l_];
        ++wide_counts_[key];
      } else if (is_dense()) {
        ++dense_[static_cast<std::size_t>(rolling_)];
      } else {
        ++sparse_[rolling_];
      }
    }
  }

  void add(std::uint64_t key, std::span<const digit_t> block, std::uint64_t n) {
    if (wide_) {
      wide_counts_[std::basic_string<digit_t>(block.begin(), block.end())] += n;
    } else if (is_dense()) {
      dense_[static_cast<std::size_t>(key)] += n;
    } else {
      sparse_[key] += n;
    }
  }

  template <class F>
  void for_each_key(F&& f) const {
    std::vector<digit_t> block(l_);
    auto decode = [&](std::uint64_t key) {
      for (std::size_t i = l_; i-- > 0;) {
        block[i] = static_cast<digit_t>(key % alphabet_.base());
        key /= alphabet_.base();
      }
    };
    if (is_dense()) {
      for (std::size_t k = 0; k < dense_.size(); ++k) {
        if (!dense_[k]) continue;
        decode(k);
        f(std::uint64_t{k}, std::span<const digit_t>(block), dense_[k]);
      }
    } else if (!wide_) {
      for (const auto& [k, n] : sparse_) {
        decode(k);
        f(k, std::span<const digit_t>(block), n);
      }
    } else {
      for (const auto& [k, n] : wide_counts_) {
        f(std::uint64_t{0}, std::span<const digit_t>(k.data(), k.size()), n);
      }
    }
  }

  Alphabet alphabet_;
  std::size_t l_;
  std::uint64_t modulus_ = 1;  // b^l when it fits
  bool wide_ = false;
  std::vector<std::uint64_t> dense_;
  std::unordered_map<std::uint64_t, std::uint64_t> sparse_;
  std::map<std::basic_string<digit_t>, std::uint64_t> wide_counts_;
  std::vector<digit_t> window_;
  std::size_t head_ = 0;
  std::uint64_t rolling_ = 0;
  std::uint64_t total_ = 0;
  std::uint64_t consumed_ = 0;
  std::vector<digit_t> seed_;
};

inline BlockCensus count_blocks(std::span<const digit_t> s, Alphabet alphabet, std::size_t l) {
  BlockCensus c(alphabet, l);
  c.push(s);
  return c;
}

inline BlockCensus count_blocks(const DigitString& s, std::size_t l) {
  return count_blocks(s.digits(), s.alphabet(), l);
}

/// Streams a whole source (or its first max_digits digits) through a census.
inline BlockCensus count_blocks(const SequenceSource& s, std::size_t l,
                                std::uint64_t max_digits = UINT64_MAX) {
  BlockCensus c(s.alphabet(), l);
  auto cursor = s.open();
  std::vector<digit_t> buf(1 << 14);
  std::uint64_t seen = 0;
  while (seen < max_digits) {
    auto want = static_cast<std::size_t>(std::min<std::uint64_t>(buf.size(), max_digits - seen));
    std::size_t n = cursor->read(std::span(buf).first(want));
    if (n == 0) break;
    c.push(std::span<const digit_t>(buf.data(), n));
    seen += n;
  }
  return c;
}

/// P(w, s) = N(w, s) / (|s| - l + 1), exact.
inline Rational sliding_prob(const BlockCensus& c, std::span<const digit_t> w) {
  if (c.total() == 0) throw EmptyCensus("sliding probability of an empty census");
  Rational p(Natural(std::to_string(c.count(w))), Natural(std::to_string(c.total())));
  p.canonicalize();
  return p;
}

/// H_l = (1/l) * sum_w P(w) log_b(1/P(w)). Probabilities stay exact integer ratios
/// until the logarithm.
inline double block_entropy(const BlockCensus& c) {
  if (c.total() == 0) throw EmptyCensus("block entropy of an empty census");
  const long double total = static_cast<long double>(c.total());
  long double acc = 0;
  std::uint64_t distinct = 0;
  c.for_each_count([&](std::uint64_t n) {
    const long double x = static_cast<long double>(n);
    acc += x * std::log(x);
    ++distinct;
  });
  if (distinct <= 1) return 0.0;
  long double h = (std::log(total) - acc / total) /
                  (static_cast<long double>(c.block_length()) *
                   std::log(static_cast<long double>(c.alphabet().base())));
  return static_cast<double>(std::clamp<long double>(h, 0.0L, 1.0L));
}

/// Entropy of the mixture lambda*P_u + (1-lambda)*P_v of two window distributions.
inline double mixture_block_entropy(const BlockCensus& u, const BlockCensus& v, double lambda) {
  if (u.block_length() != v.block_length() || !(u.alphabet() == v.alphabet())) {
    throw InvalidArgument("mixture needs censuses of the same shape");
  }
  if (u.total() == 0 || v.total() == 0) throw EmptyCensus("mixture of an empty census");
  std::map<std::vector<digit_t>, long double> p;
  u.for_each_block([&](std::span<const digit_t> w, std::uint64_t n) {
    p[std::vector<digit_t>(w.begin(), w.end())] +=
        lambda * static_cast<long double>(n) / static_cast<long double>(u.total());
  });
  v.for_each_block([&](std::span<const digit_t> w, std::uint64_t n) {
    p[std::vector<digit_t>(w.begin(), w.end())] +=
        (1.0L - lambda) * static_cast<long double>(n) / static_cast<long double>(v.total());
  });
  long double h = 0;
  for (const auto& [w, q] : p)
    if (q > 0) h -= q * std::log(q);
  return static_cast<double>(h / (static_cast<long double>(u.block_length()) *
                                  std::log(static_cast<long double>(u.alphabet().base()))));
}

}  // namespace fsdim
