#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fsdim/digits.hpp"

namespace fsdim {

// ---------------------------------------------------------------------------
// Digit streams
// ---------------------------------------------------------------------------

/// One traversal of a digit sequence.
class DigitCursor {
 public:
  virtual ~DigitCursor() = default;
  /// Writes up to out.size() digits and returns how many were written; 0 means the
  /// stream has ended.
  virtual std::size_t read(std::span<digit_t> out) = 0;
};

/// A restartable producer of digits. Every call to open() starts a fresh traversal,
/// and all traversals yield the same digits.
class SequenceSource {
 public:
  using Factory = std::function<std::unique_ptr<DigitCursor>()>;

  SequenceSource(Alphabet alphabet, Factory factory,
                 std::optional<std::uint64_t> known_length = std::nullopt)
      : alphabet_(alphabet), factory_(std::move(factory)), known_length_(known_length) {}

  const Alphabet& alphabet() const noexcept { return alphabet_; }
  std::uint32_t base() const noexcept { return alphabet_.base(); }
  std::optional<std::uint64_t> known_length() const noexcept { return known_length_; }
  std::unique_ptr<DigitCursor> open() const { return factory_(); }

  /// The first n digits (fewer if the stream is shorter).
  DigitString take(std::uint64_t n) const;

  /// The whole stream; only meaningful for finite sources.
  DigitString collect() const { return take(UINT64_MAX); }

  static SequenceSource from_digits(DigitString digits);
  /// The same digit forever.
  static SequenceSource constant(Alphabet alphabet, digit_t digit);
  /// A fixed block repeated forever.
  static SequenceSource periodic(DigitString block);
  /// Truncates a source to at most n digits.
  static SequenceSource truncate(SequenceSource source, std::uint64_t n);

 private:
  Alphabet alphabet_;
  Factory factory_;
  std::optional<std::uint64_t> known_length_;
};

/// Buffered digit-at-a-time access to a cursor.
class DigitReader {
 public:
  explicit DigitReader(std::unique_ptr<DigitCursor> cursor, std::size_t chunk = 1 << 14)
      : cursor_(std::move(cursor)), buf_(chunk) {}

  std::optional<digit_t> next() {
    if (pos_ == len_ && !refill()) return std::nullopt;
    return buf_[pos_++];
  }

  /// Reads up to out.size() digits.
  std::size_t read(std::span<digit_t> out) {
    std::size_t written = 0;
    while (written < out.size()) {
      if (pos_ == len_ && !refill()) break;
      std::size_t n = std::min(out.size() - written, len_ - pos_);
      std::copy_n(buf_.begin() + static_cast<std::ptrdiff_t>(pos_), n,
                  out.begin() + static_cast<std::ptrdiff_t>(written));
      pos_ += n;
      written += n;
    }
    return written;
  }

 private:
  bool refill() {
    if (done_) return false;
    len_ = cursor_->read(buf_);
    pos_ = 0;
    if (len_ == 0) done_ = true;
    return len_ > 0;
  }

  std::unique_ptr<DigitCursor> cursor_;
  std::vector<digit_t> buf_;
  std::size_t pos_ = 0;
  std::size_t len_ = 0;
  bool done_ = false;
};

namespace detail {

class VectorCursor final : public DigitCursor {
 public:
  explicit VectorCursor(std::shared_ptr<const std::vector<digit_t>> digits)
      : digits_(std::move(digits)) {}
  std::size_t read(std::span<digit_t> out) override {
    std::size_t n = std::min(out.size(), digits_->size() - pos_);
    std::copy_n(digits_->begin() + static_cast<std::ptrdiff_t>(pos_), n, out.begin());
    pos_ += n;
    return n;
  }

 private:
  std::shared_ptr<const std::vector<digit_t>> digits_;
  std::size_t pos_ = 0;
};

class PeriodicCursor final : public DigitCursor {
 public:
  explicit PeriodicCursor(std::shared_ptr<const std::vector<digit_t>> block)
      : block_(std::move(block)) {}
  std::size_t read(std::span<digit_t> out) override {
    for (auto& d : out) {
      d = (*block_)[pos_];
      if (++pos_ == block_->size()) pos_ = 0;
    }
    return out.size();
  }

 private:
  std::shared_ptr<const std::vector<digit_t>> block_;
  std::size_t pos_ = 0;
};

class TruncateCursor final : public DigitCursor {
 public:
  TruncateCursor(std::unique_ptr<DigitCursor> inner, std::uint64_t left)
      : inner_(std::move(inner)), left_(left) {}
  std::size_t read(std::span<digit_t> out) override {
    if (left_ == 0) return 0;
    auto want = static_cast<std::size_t>(std::min<std::uint64_t>(out.size(), left_));
    std::size_t n = inner_->read(out.first(want));
    left_ -= n;
    return n;
  }

 private:
  std::unique_ptr<DigitCursor> inner_;
  std::uint64_t left_;
};

}  // namespace detail

inline DigitString SequenceSource::take(std::uint64_t n) const {
  std::vector<digit_t> out;
  if (known_length_) n = std::min(n, *known_length_);
  if (n != UINT64_MAX) out.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(n, 1u << 26)));
  auto cursor = open();
  std::vector<digit_t> buf(1 << 14);
  while (out.size() < n) {
    auto want = static_cast<std::size_t>(std::min<std::uint64_t>(buf.size(), n - out.size()));
    std::size_t got = cursor->read(std::span(buf).first(want));
    if (got == 0) break;
    out.insert(out.end(), buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(got));
  }
  return DigitString(alphabet_, std::move(out));
}

inline SequenceSource SequenceSource::from_digits(DigitString digits) {
  auto shared = std::make_shared<const std::vector<digit_t>>(digits.vec());
  const auto length = static_cast<std::uint64_t>(shared->size());
  return SequenceSource(
      digits.alphabet(), [shared] { return std::make_unique<detail::VectorCursor>(shared); }, length);
}

inline SequenceSource SequenceSource::constant(Alphabet alphabet, digit_t digit) {
  return periodic(DigitString(alphabet, {digit}));
}

inline SequenceSource SequenceSource::periodic(DigitString block) {
  if (block.empty()) throw InvalidArgument("periodic source needs a non-empty block");
  auto shared = std::make_shared<const std::vector<digit_t>>(block.vec());
  return SequenceSource(block.alphabet(),
                        [shared] { return std::make_unique<detail::PeriodicCursor>(shared); });
}

inline SequenceSource SequenceSource::truncate(SequenceSource source, std::uint64_t n) {
  std::optional<std::uint64_t> length = n;
  if (source.known_length()) length = std::min(n, *source.known_length());
  Alphabet alphabet = source.alphabet();
  return SequenceSource(
      alphabet,
      [source = std::move(source), n] {
        return std::make_unique<detail::TruncateCursor>(source.open(), n);
      },
      length);
}

// ---------------------------------------------------------------------------
// Streams of naturals
// ---------------------------------------------------------------------------

class NaturalCursor {
 public:
  virtual ~NaturalCursor() = default;
  virtual std::optional<Natural> next() = 0;
};

/// A restartable producer of naturals. When used as a set (the A of a Copeland-Erdos
/// sequence) the values must be strictly increasing; consumers that need that check it.
class NaturalStream {
 public:
  using Factory = std::function<std::unique_ptr<NaturalCursor>()>;

  explicit NaturalStream(Factory factory) : factory_(std::move(factory)) {}
  std::unique_ptr<NaturalCursor> open() const { return factory_(); }

  /// The first n values (fewer if the stream is shorter).
  std::vector<Natural> take(std::uint64_t n) const {
    std::vector<Natural> out;
    auto cursor = open();
    while (out.size() < n) {
      auto v = cursor->next();
      if (!v) break;
      out.push_back(std::move(*v));
    }
    return out;
  }

  static NaturalStream from_values(std::vector<Natural> values);
  /// start, start+1, start+2, ... (unbounded unless last is given, inclusive).
  static NaturalStream naturals(Natural start = 0, std::optional<Natural> last = std::nullopt);
  /// Values of the stream that do not exceed limit.
  static NaturalStream bounded(NaturalStream stream, Natural limit);
  /// Applies f to every value, preserving order.
  static NaturalStream map(NaturalStream stream, std::function<Natural(const Natural&)> f);

 private:
  Factory factory_;
};

using SetStream = NaturalStream;

namespace detail {

class ValuesCursor final : public NaturalCursor {
 public:
  explicit ValuesCursor(std::shared_ptr<const std::vector<Natural>> values)
      : values_(std::move(values)) {}
  std::optional<Natural> next() override {
    if (pos_ >= values_->size()) return std::nullopt;
    return (*values_)[pos_++];
  }

 private:
  std::shared_ptr<const std::vector<Natural>> values_;
  std::size_t pos_ = 0;
};

class CountingCursor final : public NaturalCursor {
 public:
  CountingCursor(Natural start, std::optional<Natural> last)
      : next_(std::move(start)), last_(std::move(last)) {}
  std::optional<Natural> next() override {
    if (last_ && next_ > *last_) return std::nullopt;
    Natural v = next_;
    ++next_;
    return v;
  }

 private:
  Natural next_;
  std::optional<Natural> last_;
};

class BoundedCursor final : public NaturalCursor {
 public:
  BoundedCursor(std::unique_ptr<NaturalCursor> inner, Natural limit)
      : inner_(std::move(inner)), limit_(std::move(limit)) {}
  std::optional<Natural> next() override {
    if (done_) return std::nullopt;
    auto v = inner_->next();
    if (!v || *v > limit_) {
      done_ = true;
      return std::nullopt;
    }
    return v;
  }

 private:
  std::unique_ptr<NaturalCursor> inner_;
  Natural limit_;
  bool done_ = false;
};

class MapCursor final : public NaturalCursor {
 public:
  MapCursor(std::unique_ptr<NaturalCursor> inner, std::function<Natural(const Natural&)> f)
      : inner_(std::move(inner)), f_(std::move(f)) {}
  std::optional<Natural> next() override {
    auto v = inner_->next();
    if (!v) return std::nullopt;
    return f_(*v);
  }

 private:
  std::unique_ptr<NaturalCursor> inner_;
  std::function<Natural(const Natural&)> f_;
};

}  // namespace detail

inline NaturalStream NaturalStream::from_values(std::vector<Natural> values) {
  auto shared = std::make_shared<const std::vector<Natural>>(std::move(values));
  return NaturalStream([shared] { return std::make_unique<detail::ValuesCursor>(shared); });
}

inline NaturalStream NaturalStream::naturals(Natural start, std::optional<Natural> last) {
  return NaturalStream(
      [start, last] { return std::make_unique<detail::CountingCursor>(start, last); });
}

inline NaturalStream NaturalStream::bounded(NaturalStream stream, Natural limit) {
  return NaturalStream([stream = std::move(stream), limit] {
    return std::make_unique<detail::BoundedCursor>(stream.open(), limit);
  });
}

inline NaturalStream NaturalStream::map(NaturalStream stream,
                                        std::function<Natural(const Natural&)> f) {
  return NaturalStream([stream = std::move(stream), f = std::move(f)] {
    return std::make_unique<detail::MapCursor>(stream.open(), f);
  });
}

// ---------------------------------------------------------------------------
// Index sets (positions in a sequence)
// ---------------------------------------------------------------------------

class IndexCursor {
 public:
  virtual ~IndexCursor() = default;
  virtual std::optional<std::uint64_t> next() = 0;
};

/// A strictly increasing set of positions, traversable as a stream and able to
/// report how many members lie below a bound.
class IndexSet {
 public:
  using Factory = std::function<std::unique_ptr<IndexCursor>()>;
  using Counter = std::function<std::uint64_t(std::uint64_t)>;

  IndexSet(Factory factory, Counter count_below)
      : factory_(std::move(factory)), count_below_(std::move(count_below)) {}

  std::unique_ptr<IndexCursor> open() const { return factory_(); }
  /// Number of members strictly less than n.
  std::uint64_t count_below(std::uint64_t n) const { return count_below_(n); }

  static IndexSet empty();
  /// Explicit members; must be strictly increasing.
  static IndexSet from_sorted(std::vector<std::uint64_t> members);
  /// {k^2 : k >= first_root}.
  static IndexSet squares(std::uint64_t first_root = 1);
  /// {offset, offset + period, offset + 2*period, ...}.
  static IndexSet arithmetic(std::uint64_t offset, std::uint64_t period);
  /// Members are the positions where pred holds (scanned lazily).
  static IndexSet predicate(std::function<bool(std::uint64_t)> pred);

 private:
  Factory factory_;
  Counter count_below_;
};

namespace detail {

class FnIndexCursor final : public IndexCursor {
 public:
  explicit FnIndexCursor(std::function<std::optional<std::uint64_t>(std::uint64_t)> nth)
      : nth_(std::move(nth)) {}
  std::optional<std::uint64_t> next() override { return nth_(i_++); }

 private:
  std::function<std::optional<std::uint64_t>(std::uint64_t)> nth_;
  std::uint64_t i_ = 0;
};

inline std::uint64_t isqrt_u64(std::uint64_t n) {
  auto r = static_cast<std::uint64_t>(std::sqrt(static_cast<long double>(n)));
  while (r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return r;
}

}  // namespace detail

inline IndexSet IndexSet::empty() {
  return IndexSet(
      [] {
        return std::make_unique<detail::FnIndexCursor>(
            [](std::uint64_t) -> std::optional<std::uint64_t> { return std::nullopt; });
      },
      [](std::uint64_t) -> std::uint64_t { return 0; });
}

inline IndexSet IndexSet::from_sorted(std::vector<std::uint64_t> members) {
  for (std::size_t i = 1; i < members.size(); ++i) {
    if (members[i] <= members[i - 1]) throw OrderViolation("index set must be strictly increasing");
  }
  auto shared = std::make_shared<const std::vector<std::uint64_t>>(std::move(members));
  return IndexSet(
      [shared] {
        return std::make_unique<detail::FnIndexCursor>(
            [shared](std::uint64_t i) -> std::optional<std::uint64_t> {
              if (i >= shared->size()) return std::nullopt;
              return (*shared)[i];
            });
      },
      [shared](std::uint64_t n) -> std::uint64_t {
        return static_cast<std::uint64_t>(std::lower_bound(shared->begin(), shared->end(), n) -
                                          shared->begin());
      });
}

inline IndexSet IndexSet::squares(std::uint64_t first_root) {
  return IndexSet(
      [first_root] {
        return std::make_unique<detail::FnIndexCursor>(
            [first_root](std::uint64_t i) -> std::optional<std::uint64_t> {
              std::uint64_t k = first_root + i;
              return k * k;
            });
      },
      [first_root](std::uint64_t n) -> std::uint64_t {
        if (n == 0) return 0;
        std::uint64_t r = detail::isqrt_u64(n - 1);  // roots k with k^2 <= n-1
        return r + 1 > first_root ? r + 1 - first_root : 0;
      });
}

inline IndexSet IndexSet::arithmetic(std::uint64_t offset, std::uint64_t period) {
  if (period == 0) throw InvalidArgument("arithmetic index set needs a positive period");
  return IndexSet(
      [offset, period] {
        return std::make_unique<detail::FnIndexCursor>(
            [offset, period](std::uint64_t i) -> std::optional<std::uint64_t> {
              return offset + i * period;
            });
      },
      [offset, period](std::uint64_t n) -> std::uint64_t {
        return n <= offset ? 0 : (n - offset - 1) / period + 1;
      });
}

inline IndexSet IndexSet::predicate(std::function<bool(std::uint64_t)> pred) {
  class PredicateCursor final : public IndexCursor {
   public:
    explicit PredicateCursor(std::function<bool(std::uint64_t)> p) : pred_(std::move(p)) {}
    std::optional<std::uint64_t> next() override {
      while (!pred_(pos_)) ++pos_;
      return pos_++;
    }

   private:
    std::function<bool(std::uint64_t)> pred_;
    std::uint64_t pos_ = 0;
  };
  return IndexSet([pred] { return std::make_unique<PredicateCursor>(pred); },
                  [pred](std::uint64_t n) {
                    std::uint64_t c = 0;
                    for (std::uint64_t i = 0; i < n; ++i) c += pred(i) ? 1 : 0;
                    return c;
                  });
}

}  // namespace fsdim
