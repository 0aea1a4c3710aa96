#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "fsdim/census.hpp"
#include "fsdim/digits.hpp"
#include "fsdim/entropy.hpp"
#include "fsdim/sources.hpp"

namespace fsdim {

// ---------------------------------------------------------------------------
// Copeland-Erdos concatenation
// ---------------------------------------------------------------------------

namespace detail {

/// Emits sigma_b(v_1) sigma_b(v_2) ... for a stream of naturals.
class ExpansionCursor final : public DigitCursor {
 public:
  ExpansionCursor(std::unique_ptr<NaturalCursor> values, std::uint32_t base, bool strictly_increasing)
      : values_(std::move(values)), base_(base), check_order_(strictly_increasing) {}

  std::size_t read(std::span<digit_t> out) override {
    std::size_t written = 0;
    while (written < out.size()) {
      if (pos_ == pending_.size() && !refill()) break;
      std::size_t n = std::min(out.size() - written, pending_.size() - pos_);
      std::copy_n(pending_.begin() + static_cast<std::ptrdiff_t>(pos_), n,
                  out.begin() + static_cast<std::ptrdiff_t>(written));
      pos_ += n;
      written += n;
    }
    return written;
  }

  std::uint64_t elements() const noexcept { return elements_; }

 private:
  bool refill() {
    auto v = values_->next();
    if (!v) return false;
    if (sgn(*v) < 0) throw NegativeValue("negative value in a Copeland-Erdos stream");
    if (check_order_ && last_ && *v <= *last_) {
      throw OrderViolation("set stream is not strictly increasing: " + v->get_str() +
                           " follows " + last_->get_str());
    }
    pending_.clear();
    pos_ = 0;
    append_sigma(*v, base_, pending_);
    if (check_order_) last_ = std::move(*v);
    ++elements_;
    return true;
  }

  std::unique_ptr<NaturalCursor> values_;
  std::uint32_t base_;
  bool check_order_;
  std::optional<Natural> last_;
  std::vector<digit_t> pending_;
  std::size_t pos_ = 0;
  std::uint64_t elements_ = 0;
};

}  // namespace detail

/// Concatenated expansions of a value stream, in stream order, with no order check.
inline SequenceSource concat_expansions(NaturalStream values, Alphabet alphabet) {
  return SequenceSource(alphabet, [values = std::move(values), base = alphabet.base()] {
    return std::make_unique<detail::ExpansionCursor>(values.open(), base, false);
  });
}

/// CE_b(A) = sigma_b(a_1) sigma_b(a_2) ... ; throws OrderViolation when the stream
/// fails to increase.
inline SequenceSource ce_sequence(SetStream set, Alphabet alphabet) {
  return SequenceSource(alphabet, [set = std::move(set), base = alphabet.base()] {
    return std::make_unique<detail::ExpansionCursor>(set.open(), base, true);
  });
}

/// CE_b(N) with N = {0, 1, 2, ...}; the classical Champernowne sequence in base b.
/// With first = 1 the leading sigma_b(0) is omitted.
inline SequenceSource champernowne(Alphabet alphabet, Natural first = 0) {
  return ce_sequence(NaturalStream::naturals(std::move(first)), alphabet);
}

// ---------------------------------------------------------------------------
// Insertion and deletion at index sets
// ---------------------------------------------------------------------------

/// Material written at inserted positions: a fixed digit or the successive digits
/// of another stream.
using Fill = std::variant<digit_t, SequenceSource>;

/// Output position i carries fill material when i is in I, otherwise the next unread
/// digit of S. Ends when S ends.
inline SequenceSource insert_at(SequenceSource s, IndexSet positions, Fill fill) {
  if (const auto* d = std::get_if<digit_t>(&fill); d && !s.alphabet().contains(*d)) {
    throw InvalidDigit("fill digit out of range");
  }
  if (const auto* f = std::get_if<SequenceSource>(&fill); f && !(f->alphabet() == s.alphabet())) {
    throw InvalidArgument("fill stream has a different alphabet");
  }
  class InsertCursor final : public DigitCursor {
   public:
    InsertCursor(std::unique_ptr<DigitCursor> s, std::unique_ptr<IndexCursor> idx, Fill fill)
        : s_(std::move(s)), idx_(std::move(idx)) {
      if (auto* d = std::get_if<digit_t>(&fill)) {
        constant_ = *d;
      } else {
        fill_.emplace(std::get<SequenceSource>(fill).open());
      }
      next_index_ = idx_->next();
    }
    std::size_t read(std::span<digit_t> out) override {
      std::size_t written = 0;
      while (written < out.size()) {
        if (next_index_ && *next_index_ == pos_) {
          // A digit is only emitted if S still has material after it.
          if (!peek()) break;
          digit_t d = constant_;
          if (fill_) {
            auto f = fill_->next();
            if (!f) throw InvalidArgument("fill stream ended before the index set");
            d = *f;
          }
          out[written++] = d;
          ++pos_;
          advance_index();
        } else {
          auto d = peek();
          if (!d) break;
          out[written++] = *d;
          peeked_.reset();
          ++pos_;
        }
      }
      return written;
    }

   private:
    std::optional<digit_t> peek() {
      if (!peeked_) peeked_ = s_.next();
      return peeked_;
    }
    void advance_index() {
      auto prev = *next_index_;
      next_index_ = idx_->next();
      if (next_index_ && *next_index_ <= prev) throw OrderViolation("index set is not increasing");
    }

    DigitReader s_;
    std::unique_ptr<IndexCursor> idx_;
    std::optional<DigitReader> fill_;
    digit_t constant_ = 0;
    std::optional<std::uint64_t> next_index_;
    std::optional<digit_t> peeked_;
    std::uint64_t pos_ = 0;
  };
  Alphabet alphabet = s.alphabet();
  return SequenceSource(alphabet, [s = std::move(s), positions = std::move(positions),
                                   fill = std::move(fill)] {
    return std::make_unique<InsertCursor>(s.open(), positions.open(), fill);
  });
}

/// Skips the digits of S whose positions are in I.
inline SequenceSource delete_at(SequenceSource s, IndexSet positions) {
  class DeleteCursor final : public DigitCursor {
   public:
    DeleteCursor(std::unique_ptr<DigitCursor> s, std::unique_ptr<IndexCursor> idx)
        : s_(std::move(s)), idx_(std::move(idx)) {
      next_index_ = idx_->next();
    }
    std::size_t read(std::span<digit_t> out) override {
      std::size_t written = 0;
      while (written < out.size()) {
        auto d = s_.next();
        if (!d) break;
        if (next_index_ && *next_index_ == pos_) {
          auto prev = *next_index_;
          next_index_ = idx_->next();
          if (next_index_ && *next_index_ <= prev) throw OrderViolation("index set is not increasing");
        } else {
          out[written++] = *d;
        }
        ++pos_;
      }
      return written;
    }

   private:
    DigitReader s_;
    std::unique_ptr<IndexCursor> idx_;
    std::optional<std::uint64_t> next_index_;
    std::uint64_t pos_ = 0;
  };
  Alphabet alphabet = s.alphabet();
  return SequenceSource(alphabet, [s = std::move(s), positions = std::move(positions)] {
    return std::make_unique<DeleteCursor>(s.open(), positions.open());
  });
}

// ---------------------------------------------------------------------------
// Zero-run dilution
// ---------------------------------------------------------------------------

/// How many zeros to insert after the m-th digit of the source (m counted from 1;
/// m = 0 means before the first digit).
class DilutionSchedule {
 public:
  using Rule = std::function<std::uint64_t(std::uint64_t)>;

  DilutionSchedule(Rule rule, std::string description)
      : rule_(std::move(rule)), description_(std::move(description)) {}

  std::uint64_t zeros_after(std::uint64_t m) const { return rule_(m); }
  const std::string& description() const noexcept { return description_; }

  static DilutionSchedule none() {
    return DilutionSchedule([](std::uint64_t) { return std::uint64_t{0}; }, "none");
  }

  /// `run` zeros after every source digit.
  static DilutionSchedule per_digit(std::uint64_t run) {
    return DilutionSchedule([run](std::uint64_t m) { return m == 0 ? 0 : run; },
                            "per-digit:" + std::to_string(run));
  }

  /// Long zero-runs inserted only after source digits k^2 (k = 1, 2, ...), sized so
  /// that after each run the inserted total is round(rho/(1-rho) * m). The number of
  /// insertion events below n is O(sqrt n), and z(n)/n tends to rho.
  static DilutionSchedule ratio(double rho) {
    if (!(rho >= 0.0 && rho < 1.0)) throw InvalidArgument("dilution ratio must lie in [0, 1)");
    const long double factor = rho / (1.0L - rho);
    auto target = [factor](std::uint64_t m) {
      return static_cast<std::uint64_t>(std::floor(factor * static_cast<long double>(m) + 0.5L));
    };
    return DilutionSchedule(
        [target](std::uint64_t m) -> std::uint64_t {
          if (m == 0) return 0;
          std::uint64_t k = detail::isqrt_u64(m);
          if (k * k != m) return 0;
          return target(m) - target((k - 1) * (k - 1));
        },
        "ratio:" + std::to_string(rho));
  }

 private:
  Rule rule_;
  std::string description_;
};

/// Cursor for dilute(); exposes its bookkeeping so callers can read z(n).
class DilutionCursor final : public DigitCursor {
 public:
  DilutionCursor(std::unique_ptr<DigitCursor> s, DilutionSchedule schedule)
      : s_(std::move(s)), schedule_(std::move(schedule)) {
    pending_zeros_ = schedule_.zeros_after(0);
  }

  std::size_t read(std::span<digit_t> out) override {
    std::size_t written = 0;
    while (written < out.size()) {
      if (pending_zeros_ > 0) {
        // Trailing zero-runs are only emitted while S continues.
        if (!peek()) break;
        out[written++] = 0;
        --pending_zeros_;
        ++inserted_;
        continue;
      }
      auto d = peek();
      if (!d) break;
      out[written++] = *d;
      peeked_.reset();
      ++consumed_;
      pending_zeros_ = schedule_.zeros_after(consumed_);
    }
    return written;
  }

  /// Zeros emitted so far (z(n) for n = emitted()).
  std::uint64_t inserted() const noexcept { return inserted_; }
  /// Source digits emitted so far.
  std::uint64_t consumed() const noexcept { return consumed_; }
  std::uint64_t emitted() const noexcept { return inserted_ + consumed_; }

 private:
  std::optional<digit_t> peek() {
    if (!peeked_) peeked_ = s_.next();
    return peeked_;
  }

  DigitReader s_;
  DilutionSchedule schedule_;
  std::uint64_t pending_zeros_ = 0;
  std::optional<digit_t> peeked_;
  std::uint64_t inserted_ = 0;
  std::uint64_t consumed_ = 0;
};

/// Interleaves zero-runs into S per the schedule.
inline SequenceSource dilute(SequenceSource s, DilutionSchedule schedule) {
  Alphabet alphabet = s.alphabet();
  return SequenceSource(alphabet, [s = std::move(s), schedule = std::move(schedule)] {
    return std::make_unique<DilutionCursor>(s.open(), schedule);
  });
}

struct DilutionTrace {
  std::uint64_t length = 0;    // n
  std::uint64_t inserted = 0;  // z(n)
  std::uint64_t consumed = 0;  // source digits among the first n
};

/// z(n) for the first n digits of dilute(S, schedule).
inline DilutionTrace trace_dilution(const SequenceSource& s, const DilutionSchedule& schedule,
                                    std::uint64_t n) {
  DilutionCursor cursor(s.open(), schedule);
  std::vector<digit_t> buf(1 << 14);
  std::uint64_t seen = 0;
  while (seen < n) {
    auto want = static_cast<std::size_t>(std::min<std::uint64_t>(buf.size(), n - seen));
    std::size_t got = cursor.read(std::span(buf).first(want));
    if (got == 0) break;
    seen += got;
  }
  return {cursor.emitted(), cursor.inserted(), cursor.consumed()};
}

// ---------------------------------------------------------------------------
// Prefix concatenation S[0..n_1] S[0..n_2] ...
// ---------------------------------------------------------------------------

/// Tuning for the entropy-adaptive cut policy.
struct AdaptiveCutParams {
  std::size_t max_block = 4;       // l ranges over 1..max_block
  std::uint64_t first_cut = 64;    // n_1
  double min_growth = 1.5;         // candidates start at ceil(min_growth * n_{i-1})
  double grid_ratio = 1.25;        // spacing of candidate cuts
  double horizon = 8.0;            // candidates end at horizon * n_{i-1}
  std::uint64_t max_output = 1u << 20;  // stop planning once this many digits are planned
};

/// Per-cut record of which finite-horizon conditions were met.
struct AdaptiveCut {
  std::uint64_t cut = 0;
  std::size_t probe_block = 0;  // a_i
  bool lower_ok = false;        // H_l(T S[0..n]) >= est_l - 2^-(i+1) for all l
  bool upper_ok = false;        // H_{a_i}(T S[0..n]) <= est_{a_i} + 2^-i
};

/// Cut points n_1 < n_2 < ... ; S[0..n] denotes the first n+1 digits.
class GrowthPolicy {
 public:
  /// n_1 = first, n_{i+1} = ceil(ratio * n_i).
  static GrowthPolicy geometric(double ratio = 2.0, std::uint64_t first = 1) {
    if (first == 0) throw InvalidArgument("first cut must be positive for geometric growth");
    GrowthPolicy p;
    p.kind_ = Kind::Geometric;
    p.ratio_ = ratio;
    p.first_ = first;
    return p;
  }
  /// n_i = i - 1: S[0] S[0..1] S[0..2] ...
  static GrowthPolicy all_prefixes() {
    GrowthPolicy p;
    p.kind_ = Kind::AllPrefixes;
    return p;
  }
  static GrowthPolicy explicit_cuts(std::vector<std::uint64_t> cuts) {
    GrowthPolicy p;
    p.kind_ = Kind::Explicit;
    p.cuts_ = std::make_shared<const std::vector<std::uint64_t>>(std::move(cuts));
    return p;
  }
  static GrowthPolicy adaptive(AdaptiveCutParams params = {}) {
    GrowthPolicy p;
    p.kind_ = Kind::Adaptive;
    p.adaptive_ = params;
    return p;
  }

  bool is_adaptive() const noexcept { return kind_ == Kind::Adaptive; }
  const AdaptiveCutParams& adaptive_params() const noexcept { return adaptive_; }

  /// The i-th cut (0-based) for the non-adaptive policies; nullopt past an explicit list.
  std::optional<std::uint64_t> cut(std::uint64_t i, std::optional<std::uint64_t> previous) const {
    switch (kind_) {
      case Kind::AllPrefixes:
        return i;
      case Kind::Explicit:
        if (i >= cuts_->size()) return std::nullopt;
        return (*cuts_)[i];
      case Kind::Geometric:
        if (!previous) return first_;
        return static_cast<std::uint64_t>(std::ceil(ratio_ * static_cast<long double>(*previous)));
      case Kind::Adaptive:
        break;
    }
    throw InvalidArgument("adaptive cuts must be planned with adaptive_cut_points");
  }

  std::string describe() const {
    switch (kind_) {
      case Kind::AllPrefixes:
        return "all-prefixes";
      case Kind::Explicit:
        return "explicit";
      case Kind::Geometric:
        return "geometric:" + std::to_string(ratio_);
      case Kind::Adaptive:
        return "adaptive";
    }
    return "?";
  }

 private:
  enum class Kind { Geometric, AllPrefixes, Explicit, Adaptive };
  Kind kind_ = Kind::Geometric;
  double ratio_ = 2.0;
  std::uint64_t first_ = 1;
  std::shared_ptr<const std::vector<std::uint64_t>> cuts_;
  AdaptiveCutParams adaptive_;
};

namespace detail {

/// Probe schedule 1, 1, 2, 1, 2, 3, 1, 2, 3, 4, ... (i is 1-based), capped at max_block.
inline std::size_t probe_block(std::uint64_t i, std::size_t max_block) {
  std::uint64_t row = 1;
  while (i > row) {
    i -= row;
    ++row;
  }
  return static_cast<std::size_t>(std::min<std::uint64_t>(i, max_block));
}

class PrefixConcatCursor final : public DigitCursor {
 public:
  PrefixConcatCursor(std::unique_ptr<DigitCursor> s, GrowthPolicy policy)
      : s_(std::move(s)), policy_(std::move(policy)) {}

  std::size_t read(std::span<digit_t> out) override {
    std::size_t written = 0;
    while (written < out.size()) {
      if (!active_ && !start_next()) break;
      std::size_t n = static_cast<std::size_t>(
          std::min<std::uint64_t>(out.size() - written, piece_len_ - piece_pos_));
      std::copy_n(prefix_.begin() + static_cast<std::ptrdiff_t>(piece_pos_), n,
                  out.begin() + static_cast<std::ptrdiff_t>(written));
      piece_pos_ += n;
      written += n;
      if (piece_pos_ == piece_len_) active_ = false;
    }
    return written;
  }

 private:
  bool start_next() {
    auto cut = policy_.cut(index_, last_cut_);
    if (!cut) return false;
    if (last_cut_ && *cut <= *last_cut_) {
      throw OrderViolation("cut points must be strictly increasing: " + std::to_string(*cut) +
                           " after " + std::to_string(*last_cut_));
    }
    const std::uint64_t need = *cut + 1;
    while (prefix_.size() < need) {
      auto d = s_.next();
      if (!d) return false;  // S is too short for this prefix
      prefix_.push_back(*d);
    }
    last_cut_ = cut;
    ++index_;
    piece_len_ = need;
    piece_pos_ = 0;
    active_ = true;
    return true;
  }

  DigitReader s_;
  GrowthPolicy policy_;
  std::vector<digit_t> prefix_;
  std::optional<std::uint64_t> last_cut_;
  std::uint64_t index_ = 0;
  std::uint64_t piece_len_ = 0;
  std::uint64_t piece_pos_ = 0;
  bool active_ = false;
};

}  // namespace detail

/// Plans cut points with finite-horizon versions of the two conditions used when
/// choosing prefixes: appending S[0..n] must not pull any H_l of the running
/// concatenation T far below S's estimated liminf, and the probed block length
/// a_i must come close to that liminf. The liminf of each S is estimated as the
/// minimum of H_l(S[0..k]) over the candidate grid. When several sequences are
/// given, each proposes its own smallest acceptable cut and the maximum is taken.
/// If no candidate satisfies both conditions the horizon is used and the miss is
/// recorded.
inline std::vector<AdaptiveCut> adaptive_cut_points(const std::vector<SequenceSource>& sources,
                                                    const AdaptiveCutParams& params) {
  if (sources.empty()) throw InvalidArgument("adaptive cuts need at least one sequence");
  if (params.max_block == 0 || params.first_cut == 0 || !(params.min_growth > 1.0) ||
      !(params.grid_ratio > 1.0) || !(params.horizon >= params.min_growth)) {
    throw InvalidArgument("invalid adaptive cut parameters");
  }
  const std::size_t L = params.max_block;

  struct Track {
    std::vector<digit_t> prefix;  // digits of S read so far
    std::unique_ptr<DigitReader> reader;
    std::vector<BlockCensus> concat;  // census of T so far, per l
    bool exhausted = false;
  };
  std::vector<Track> tracks;
  for (const auto& s : sources) {
    Track t;
    t.reader = std::make_unique<DigitReader>(s.open());
    for (std::size_t l = 1; l <= L; ++l) t.concat.emplace_back(s.alphabet(), l);
    tracks.push_back(std::move(t));
  }
  auto ensure = [](Track& t, std::uint64_t n) {
    while (t.prefix.size() < n && !t.exhausted) {
      auto d = t.reader->next();
      if (!d) {
        t.exhausted = true;
        break;
      }
      t.prefix.push_back(*d);
    }
    return t.prefix.size() >= n;
  };

  std::vector<AdaptiveCut> cuts;
  std::uint64_t planned = 0;
  std::uint64_t prev = 0;
  for (std::uint64_t stage = 1; planned < params.max_output; ++stage) {
    const std::size_t probe = detail::probe_block(stage, L);
    const long double tol_hi = std::ldexp(1.0L, -static_cast<int>(std::min<std::uint64_t>(stage, 60)));
    const long double tol_lo = tol_hi / 2;

    std::uint64_t lo_cand = stage == 1 ? params.first_cut
                                       : static_cast<std::uint64_t>(std::ceil(
                                             params.min_growth * static_cast<long double>(prev)));
    if (lo_cand <= prev) lo_cand = prev + 1;
    const std::uint64_t hi_cand = std::max<std::uint64_t>(
        lo_cand, static_cast<std::uint64_t>(std::ceil(params.horizon * static_cast<long double>(
                                                          stage == 1 ? params.first_cut : prev))));
    std::vector<std::uint64_t> grid;
    for (long double c = static_cast<long double>(lo_cand);;) {
      auto v = static_cast<std::uint64_t>(std::ceil(c));
      if (v >= hi_cand) {
        grid.push_back(hi_cand);
        break;
      }
      if (grid.empty() || v > grid.back()) grid.push_back(v);
      c = std::max<long double>(c * params.grid_ratio, static_cast<long double>(v + 1));
    }

    std::uint64_t chosen = 0;
    bool all_lower = true;
    bool all_upper = true;
    bool out_of_data = false;
    for (auto& t : tracks) {
      if (!ensure(t, hi_cand + 1)) {
        out_of_data = true;
        break;
      }
      // H_l(S[0..k]) and H_l(T S[0..k]) at each grid point k, in one pass over S.
      std::vector<BlockCensus> solo;
      std::vector<BlockCensus> joined;
      for (std::size_t l = 1; l <= L; ++l) {
        solo.emplace_back(t.concat[0].alphabet(), l);
        joined.push_back(t.concat[l - 1]);
      }
      std::vector<std::vector<double>> h_solo(L), h_join(L);
      std::size_t g = 0;
      for (std::uint64_t k = 0; k <= hi_cand && g < grid.size(); ++k) {
        digit_t d = t.prefix[static_cast<std::size_t>(k)];
        for (std::size_t l = 0; l < L; ++l) {
          solo[l].push(d);
          joined[l].push(d);
        }
        if (k == grid[g]) {
          for (std::size_t l = 0; l < L; ++l) {
            h_solo[l].push_back(solo[l].total() ? block_entropy(solo[l]) : 0.0);
            h_join[l].push_back(joined[l].total() ? block_entropy(joined[l]) : 0.0);
          }
          ++g;
        }
      }
      std::vector<double> est(L, 1.0);
      for (std::size_t l = 0; l < L; ++l)
        for (double h : h_solo[l]) est[l] = std::min(est[l], h);

      std::optional<std::size_t> pick;
      for (std::size_t j = 0; j < grid.size(); ++j) {
        bool lower = true;
        for (std::size_t l = 0; l < L; ++l)
          if (h_join[l][j] < est[l] - tol_lo) lower = false;
        bool upper = h_join[probe - 1][j] <= est[probe - 1] + tol_hi;
        if (lower && upper) {
          pick = j;
          break;
        }
      }
      if (!pick) {
        pick = grid.size() - 1;
        bool lower = true;
        for (std::size_t l = 0; l < L; ++l)
          if (h_join[l].back() < est[l] - tol_lo) lower = false;
        all_lower = all_lower && lower;
        all_upper = all_upper && h_join[probe - 1].back() <= est[probe - 1] + tol_hi;
      }
      chosen = std::max(chosen, grid[*pick]);
    }
    if (out_of_data) break;
    for (auto& t : tracks) {
      for (std::uint64_t k = 0; k <= chosen; ++k)
        for (auto& c : t.concat) c.push(t.prefix[static_cast<std::size_t>(k)]);
    }
    cuts.push_back({chosen, probe, all_lower, all_upper});
    planned += chosen + 1;
    prev = chosen;
  }
  return cuts;
}

/// T = S[0..n_1] S[0..n_2] S[0..n_3] ...
inline SequenceSource prefix_concat(SequenceSource s, GrowthPolicy policy) {
  if (policy.is_adaptive()) {
    std::vector<std::uint64_t> cuts;
    for (const auto& c : adaptive_cut_points({s}, policy.adaptive_params())) cuts.push_back(c.cut);
    policy = GrowthPolicy::explicit_cuts(std::move(cuts));
  }
  Alphabet alphabet = s.alphabet();
  return SequenceSource(alphabet, [s = std::move(s), policy = std::move(policy)] {
    return std::make_unique<detail::PrefixConcatCursor>(s.open(), policy);
  });
}

// ---------------------------------------------------------------------------
// Alignment padding and nearest multiples (rational linear maps)
// ---------------------------------------------------------------------------

/// Emits 0^{j_i} sigma_b(n_i) with j_i = | |sigma_b(n_i)| - |sigma_b(k n_i)| |, so
/// that the padded string lines up digit-for-digit with CE_b(kA).
inline SequenceSource align_pad(SetStream set, Natural k, Alphabet alphabet) {
  if (k < 1) throw InvalidArgument("align_pad needs k >= 1");
  class AlignCursor final : public DigitCursor {
   public:
    AlignCursor(std::unique_ptr<NaturalCursor> set, Natural k, Alphabet alphabet)
        : set_(std::move(set)), k_(std::move(k)), alphabet_(alphabet) {}
    std::size_t read(std::span<digit_t> out) override {
      std::size_t written = 0;
      while (written < out.size()) {
        if (pos_ == pending_.size() && !refill()) break;
        std::size_t n = std::min(out.size() - written, pending_.size() - pos_);
        std::copy_n(pending_.begin() + static_cast<std::ptrdiff_t>(pos_), n,
                    out.begin() + static_cast<std::ptrdiff_t>(written));
        pos_ += n;
        written += n;
      }
      return written;
    }

   private:
    bool refill() {
      auto v = set_->next();
      if (!v) return false;
      if (last_ && *v <= *last_) throw OrderViolation("set stream is not strictly increasing");
      std::uint64_t a = digit_length(*v, alphabet_);
      std::uint64_t b = digit_length(k_ * *v, alphabet_);
      std::uint64_t j = a > b ? a - b : b - a;
      pending_.assign(static_cast<std::size_t>(j), 0);
      pos_ = 0;
      append_sigma(*v, alphabet_.base(), pending_);
      last_ = std::move(*v);
      return true;
    }
    std::unique_ptr<NaturalCursor> set_;
    Natural k_;
    Alphabet alphabet_;
    std::optional<Natural> last_;
    std::vector<digit_t> pending_;
    std::size_t pos_ = 0;
  };
  return SequenceSource(alphabet, [set = std::move(set), k = std::move(k), alphabet] {
    return std::make_unique<AlignCursor>(set.open(), k, alphabet);
  });
}

struct PaddingTally {
  std::uint64_t padded = 0;  // sum of j_i
  std::uint64_t total = 0;   // length of the aligned sequence
  double density() const { return total ? static_cast<double>(padded) / static_cast<double>(total) : 0.0; }
};

/// Padding accounting for align_pad over a finite set.
inline PaddingTally align_pad_tally(const SetStream& set, const Natural& k, Alphabet alphabet) {
  PaddingTally t;
  auto cursor = set.open();
  while (auto v = cursor->next()) {
    std::uint64_t a = digit_length(*v, alphabet);
    std::uint64_t b = digit_length(k * *v, alphabet);
    std::uint64_t j = a > b ? a - b : b - a;
    t.padded += j;
    t.total += j + a;
  }
  return t;
}

/// Each element replaced by its nearest multiple of b (ties round up); repeated
/// values are dropped so the output stays strictly increasing.
inline SetStream nearest_multiple_stream(SetStream set, Alphabet alphabet) {
  class NearestCursor final : public NaturalCursor {
   public:
    NearestCursor(std::unique_ptr<NaturalCursor> set, std::uint32_t base)
        : set_(std::move(set)), base_(base) {}
    std::optional<Natural> next() override {
      while (auto v = set_->next()) {
        Natural r;
        mpz_fdiv_r_ui(r.get_mpz_t(), v->get_mpz_t(), base_);
        Natural m = *v - r;
        if (2 * r >= base_) m += base_;
        if (last_ && m <= *last_) {
          if (m < *last_) throw OrderViolation("set stream is not strictly increasing");
          continue;
        }
        last_ = m;
        return m;
      }
      return std::nullopt;
    }

   private:
    std::unique_ptr<NaturalCursor> set_;
    std::uint32_t base_;
    std::optional<Natural> last_;
  };
  return SetStream([set = std::move(set), base = alphabet.base()] {
    return std::make_unique<NearestCursor>(set.open(), base);
  });
}

}  // namespace fsdim
