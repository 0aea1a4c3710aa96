#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fsdim/digits.hpp"
#include "fsdim/entropy.hpp"
#include "fsdim/normality.hpp"
#include "fsdim/polynomials.hpp"
#include "fsdim/sequences.hpp"
#include "fsdim/sources.hpp"

namespace fsdim {

// ---------------------------------------------------------------------------
// Digit layouts
// ---------------------------------------------------------------------------

enum class SegmentKind { Lead, Pad, Payload };

inline const char* segment_name(SegmentKind k) {
  switch (k) {
    case SegmentKind::Lead: return "lead";
    case SegmentKind::Pad: return "pad";
    case SegmentKind::Payload: return "payload";
  }
  return "?";
}

struct Segment {
  SegmentKind kind;
  std::uint64_t length;
};

/// Segment decomposition of a CE stream. Lead segments are the single digit 1 of
/// b^i, Pad segments are all-zero, Payload segments are witness material.
class StreamLayout {
 public:
  void append(SegmentKind kind, std::uint64_t length) {
    if (length == 0) return;
    segments_.push_back({kind, length});
    ends_.push_back(total_ + length);
    total_ += length;
    if (kind == SegmentKind::Pad) padding_ += length;
  }
  const std::vector<Segment>& segments() const noexcept { return segments_; }
  std::uint64_t total_digits() const noexcept { return total_; }
  std::uint64_t padding_digits() const noexcept { return padding_; }
  bool empty() const noexcept { return segments_.empty(); }

  /// Pad digits among the first n positions.
  std::uint64_t zeros_in_prefix(std::uint64_t n) const {
    std::uint64_t zeros = 0;
    std::uint64_t start = 0;
    for (std::size_t i = 0; i < segments_.size() && start < n; ++i) {
      std::uint64_t take = std::min(n, ends_[i]) - start;
      if (segments_[i].kind == SegmentKind::Pad) zeros += take;
      start = ends_[i];
    }
    return zeros;
  }

 private:
  std::vector<Segment> segments_;
  std::vector<std::uint64_t> ends_;
  std::uint64_t total_ = 0;
  std::uint64_t padding_ = 0;
};

struct DensityPoint {
  std::uint64_t position = 0;
  std::uint64_t zeros = 0;
  double density() const { return position ? static_cast<double>(zeros) / static_cast<double>(position) : 0.0; }
};

struct ElementRecord {
  Natural value;
  Natural witness;      // n (slot constructions) or m (scaled construction)
  unsigned stage = 0;
  std::uint64_t shift = 0;  // i for b^i + n, d_n - c_n for m b^(d_n - c_n)
};

struct StageRecord {
  unsigned stage = 0;
  double epsilon = 1;
  std::size_t k = 1;
  std::optional<std::uint64_t> threshold;  // l_i; absent for the fallback stage
  std::uint64_t first_element = 0;
};

struct ConstructionReport {
  std::string recipe;
  std::uint32_t base = 2;
  unsigned degree = 2;  // exponent of the image polynomial x^degree
  std::vector<ElementRecord> elements;
  StreamLayout layout_a;
  StreamLayout layout_p;
  std::vector<DensityPoint> trace_a;  // after each element
  std::vector<DensityPoint> trace_p;
  std::vector<StageRecord> stages;
  std::vector<std::string> audit;
  std::optional<std::string> halted;  // set when a witness search failed

  SetStream set() const {
    std::vector<Natural> v;
    v.reserve(elements.size());
    for (const auto& e : elements) v.push_back(e.value);
    return NaturalStream::from_values(std::move(v));
  }
  SetStream image() const {
    std::vector<Natural> v;
    v.reserve(elements.size());
    for (const auto& e : elements) {
      Natural p;
      mpz_pow_ui(p.get_mpz_t(), e.value.get_mpz_t(), degree);
      v.push_back(std::move(p));
    }
    return NaturalStream::from_values(std::move(v));
  }
  SequenceSource sequence_a() const { return ce_sequence(set(), Alphabet(base)); }
  SequenceSource sequence_p() const { return ce_sequence(image(), Alphabet(base)); }
};

enum class Which { A, Image };

inline std::uint64_t zeros_in_prefix(const ConstructionReport& r, Which which, std::uint64_t n) {
  return (which == Which::A ? r.layout_a : r.layout_p).zeros_in_prefix(n);
}

/// Removes Lead and Pad segments from `seq`, checking each against the layout
/// (lead digit 1, pad digits 0). An empty report leaves the sequence unchanged.
inline SequenceSource strip_padding(SequenceSource seq, const ConstructionReport& report, Which which) {
  const StreamLayout& layout = which == Which::A ? report.layout_a : report.layout_p;
  if (layout.empty()) return seq;
  if (seq.base() != report.base) throw IntegrityError("sequence base does not match the report");
  auto segments = std::make_shared<const std::vector<Segment>>(layout.segments());

  class StripCursor final : public DigitCursor {
   public:
    StripCursor(std::unique_ptr<DigitCursor> in, std::shared_ptr<const std::vector<Segment>> segs)
        : in_(std::move(in)), segs_(std::move(segs)) {}
    std::size_t read(std::span<digit_t> out) override {
      std::size_t written = 0;
      while (written < out.size()) {
        auto d = in_.next();
        if (!d) break;
        while (seg_ < segs_->size() && used_ == (*segs_)[seg_].length) {
          ++seg_;
          used_ = 0;
        }
        if (seg_ == segs_->size()) throw IntegrityError("sequence is longer than the recorded layout");
        const Segment& s = (*segs_)[seg_];
        ++used_;
        ++position_;
        if (s.kind == SegmentKind::Payload) {
          out[written++] = *d;
        } else if ((s.kind == SegmentKind::Lead && *d != 1) || (s.kind == SegmentKind::Pad && *d != 0)) {
          throw IntegrityError("digit " + std::to_string(*d) + " at position " +
                               std::to_string(position_ - 1) + " contradicts the " +
                               segment_name(s.kind) + " segment in the layout");
        }
      }
      return written;
    }

   private:
    DigitReader in_;
    std::shared_ptr<const std::vector<Segment>> segs_;
    std::size_t seg_ = 0;
    std::uint64_t used_ = 0;
    std::uint64_t position_ = 0;
  };
  Alphabet alphabet = seq.alphabet();
  return SequenceSource(alphabet, [seq = std::move(seq), segments] {
    return std::make_unique<StripCursor>(seq.open(), segments);
  });
}

// ---------------------------------------------------------------------------
// Binomial slots
// ---------------------------------------------------------------------------

inline Natural binomial(unsigned d, unsigned j) {
  Natural r;
  mpz_bin_uiui(r.get_mpz_t(), d, j);
  return r;
}

/// Predicted digits of (b^i + n)^d: "1", then for j = 1..d the slot
/// 0^(i - |C(d,j) n^j|) C(d,j) n^j. nullopt when some term is wider than i.
inline std::optional<std::vector<digit_t>> binomial_slot_digits(const Natural& n, std::uint64_t i, unsigned d,
                                                                Alphabet alphabet,
                                                                StreamLayout* layout = nullptr) {
  if (n < 1) throw InvalidArgument("slot expansion needs n >= 1");
  if (d < 1) throw InvalidArgument("degree must be at least 1");
  std::vector<digit_t> out{1};
  StreamLayout local;
  local.append(SegmentKind::Lead, 1);
  std::vector<digit_t> term;
  Natural power = 1;
  for (unsigned j = 1; j <= d; ++j) {
    power *= n;
    term.clear();
    append_sigma(binomial(d, j) * power, alphabet.base(), term);
    if (term.size() > i) return std::nullopt;
    local.append(SegmentKind::Pad, i - term.size());
    local.append(SegmentKind::Payload, term.size());
    out.insert(out.end(), i - term.size(), 0);
    out.insert(out.end(), term.begin(), term.end());
  }
  if (layout) *layout = std::move(local);
  return out;
}

/// True iff sigma_b((b^i + n)^d) equals the slot prediction digit for digit.
inline bool verify_slot_integrity(const Natural& n, std::uint64_t i, unsigned d, Alphabet alphabet) {
  auto predicted = binomial_slot_digits(n, i, d, alphabet);
  if (!predicted) return false;
  Natural v = detail::pow_nat(alphabet.base(), i) + n;
  Natural p;
  mpz_pow_ui(p.get_mpz_t(), v.get_mpz_t(), d);
  return sigma_b(p, alphabet).vec() == *predicted;
}

/// Smallest slot width i with i > d |sigma_b(n)| + |sigma_b(C(d, floor(d/2)))|.
inline std::uint64_t corollary_slot_width(std::uint64_t witness_length, unsigned d, Alphabet alphabet) {
  return d * witness_length + digit_length(binomial(d, d / 2), alphabet) + 1;
}

// ---------------------------------------------------------------------------
// Staged constructions
// ---------------------------------------------------------------------------

/// Stage i tests (2^-i, max(i, 1))-normality. Thresholds l_i come from
/// `thresholds` (l_first_stage, l_first_stage+1, ...) and are otherwise probed
/// with find_threshold, each search starting at the previous threshold.
struct StagedSpec {
  Alphabet base{2};
  unsigned first_stage = 1;
  unsigned max_stage = 62;
  std::vector<std::uint64_t> thresholds;
  ThresholdProbe probe{.start_length = 1, .max_length = 0, .candidates_per_length = 2000, .window = 8, .workers = 1};
  std::uint64_t witness_budget = 1000000;
  std::uint64_t digit_budget = 1u << 20;  // both CE streams reach at least this many digits
  std::uint64_t max_elements = UINT64_MAX;
  // A failed witness search at stage i refutes l_i: drop back one stage and
  // re-probe l_i above the failing length instead of halting.
  bool reprobe_on_miss = true;
  std::shared_ptr<WitnessCache> cache = std::make_shared<WitnessCache>();

  static double epsilon_of(unsigned i) { return std::ldexp(1.0, -static_cast<int>(i)); }
  static std::size_t k_of(unsigned i) { return std::max<std::size_t>(i, 1); }
  NormalityParams params(unsigned i) const { return NormalityParams(epsilon_of(i), k_of(i), base); }
};

namespace detail {

/// Lazily computed, memoized thresholds l_i for one target family.
class ThresholdTable {
 public:
  ThresholdTable(const StagedSpec& spec, std::vector<Target> targets, std::uint64_t max_length)
      : spec_(spec), targets_(std::move(targets)), max_length_(max_length) {}

  /// nullopt when the probe gives up (ThresholdNotFound) or the stage is out of range.
  std::optional<std::uint64_t> get(unsigned i) {
    if (i < spec_.first_stage || i > spec_.max_stage) return std::nullopt;
    const std::size_t idx = i - spec_.first_stage;
    while (known_.size() <= idx) {
      if (exhausted_) return std::nullopt;
      const std::size_t j = known_.size();
      const std::uint64_t floor = std::max(known_.empty() ? 1 : known_.back(), j < floors_.size() ? floors_[j] : 1);
      if (j < spec_.thresholds.size() && spec_.thresholds[j] >= floor) {
        known_.push_back(spec_.thresholds[j]);
        continue;
      }
      ThresholdProbe probe = spec_.probe;
      probe.start_length = std::max(probe.start_length, floor);
      probe.max_length = spec_.probe.max_length ? spec_.probe.max_length : max_length_;
      try {
        known_.push_back(find_threshold(spec_.params(spec_.first_stage + static_cast<unsigned>(j)), targets_,
                                        probe, spec_.cache.get()));
      } catch (const ThresholdNotFound& e) {
        exhausted_ = true;
        failure_ = e.what();
        return std::nullopt;
      }
    }
    return known_[idx];
  }

  /// A witness search at stage i failed for length l, so l_i > l. Drops l_i and
  /// every later threshold; they are re-probed from l + 1 on the next get().
  void refute(unsigned i, std::uint64_t l) {
    const std::size_t idx = i - spec_.first_stage;
    if (floors_.size() <= idx) floors_.resize(idx + 1, 1);
    floors_[idx] = std::max(floors_[idx], l + 1);
    if (known_.size() > idx) known_.resize(idx);
    exhausted_ = false;
  }
  void limit(std::uint64_t max_length) { max_length_ = std::min(max_length_, max_length); }
  const std::string& failure() const noexcept { return failure_; }

 private:
  const StagedSpec& spec_;
  std::vector<Target> targets_;
  std::uint64_t max_length_;
  std::vector<std::uint64_t> known_;
  std::vector<std::uint64_t> floors_;  // lower bounds from refutations
  bool exhausted_ = false;
  std::string failure_;
};

inline void record_traces(ConstructionReport& r) {
  r.trace_a.push_back({r.layout_a.total_digits(), r.layout_a.padding_digits()});
  r.trace_p.push_back({r.layout_p.total_digits(), r.layout_p.padding_digits()});
}

inline bool budget_met(const ConstructionReport& r, const StagedSpec& spec) {
  return (r.layout_a.total_digits() >= spec.digit_budget && r.layout_p.total_digits() >= spec.digit_budget) ||
         r.elements.size() >= spec.max_elements;
}

/// Shared loop for b^i + n constructions with witnesses of length l = l_first, l_first + 1, ...
/// `slot_width(l)` gives i; `targets` are the images that must be normal.
inline ConstructionReport build_slotted(const StagedSpec& spec, unsigned degree, std::vector<Target> targets,
                                        const std::function<std::uint64_t(std::uint64_t)>& slot_width,
                                        std::string recipe) {
  ConstructionReport r;
  r.recipe = std::move(recipe);
  r.base = spec.base.base();
  r.degree = degree;

  // Largest l reachable within the digit budget: sum of element lengths ~ sum (slot_width(l) + 1).
  std::uint64_t reach = 1;
  for (std::uint64_t acc = 0; acc < spec.digit_budget && reach < (1u << 24); ++reach) acc += slot_width(reach) + 1;
  ThresholdTable table(spec, targets, reach + spec.probe.window + 1);

  unsigned stage = spec.first_stage;
  auto first = table.get(stage);
  if (!first) {
    r.halted = "no threshold for stage " + std::to_string(stage) + ": " + table.failure();
    return r;
  }
  if (spec.max_elements != UINT64_MAX) table.limit(*first + spec.max_elements + spec.probe.window + 1);
  r.stages.push_back({stage, StagedSpec::epsilon_of(stage), StagedSpec::k_of(stage), first, 0});
  std::optional<std::uint64_t> next = table.get(stage + 1);
  if (!next) r.audit.push_back("stage " + std::to_string(stage + 1) + " not reached: " + table.failure());

  std::vector<digit_t> expected_a;
  for (std::uint64_t l = *first; !budget_met(r, spec); ++l) {
    while (next && l >= *next) {
      ++stage;
      r.stages.push_back({stage, StagedSpec::epsilon_of(stage), StagedSpec::k_of(stage), next, r.elements.size()});
      next = table.get(stage + 1);
      if (!next) r.audit.push_back("stage " + std::to_string(stage + 1) + " not reached: " + table.failure());
    }
    const NormalityParams params = spec.params(stage);
    WitnessResult w = spec.cache->get(l, params, targets, spec.witness_budget, spec.probe.workers);
    if (!w.witness) {
      const std::string miss = "stage " + std::to_string(stage) + ": no witness of length " + std::to_string(l) +
                               " within " + std::to_string(w.candidates) + " candidates";
      if (!spec.reprobe_on_miss || stage == spec.first_stage) {
        r.halted = miss;
        break;
      }
      r.audit.push_back(miss + "; threshold re-probed above " + std::to_string(l));
      table.refute(stage, l);
      --stage;
      r.stages.push_back({stage, StagedSpec::epsilon_of(stage), StagedSpec::k_of(stage), table.get(stage),
                          r.elements.size()});
      next = table.get(stage + 1);
      if (!next) r.audit.push_back("stage " + std::to_string(stage + 1) + " not reached: " + table.failure());
      --l;  // retry this length
      continue;
    }
    const Natural& n = *w.witness;
    if (!all_targets_normal(n, params, targets)) throw IntegrityError("witness failed re-verification");
    const std::uint64_t i = slot_width(l);

    StreamLayout slots;
    auto predicted = binomial_slot_digits(n, i, degree, spec.base, &slots);
    if (!predicted || !verify_slot_integrity(n, i, degree, spec.base)) {
      throw IntegrityError("slot integrity violated for n=" + n.get_str() + ", i=" + std::to_string(i));
    }
    Natural value = pow_nat(spec.base.base(), i) + n;
    r.layout_a.append(SegmentKind::Lead, 1);
    r.layout_a.append(SegmentKind::Pad, i - l);
    r.layout_a.append(SegmentKind::Payload, l);
    for (const auto& s : slots.segments()) r.layout_p.append(s.kind, s.length);
    r.elements.push_back({std::move(value), n, stage, i});
    record_traces(r);
  }
  return r;
}

}  // namespace detail

/// Elements b^(2l) + n for l-digit witnesses n with n, 2n, n^2 normal at the current stage.
inline ConstructionReport build_prop11(const StagedSpec& spec) {
  return detail::build_slotted(spec, 2, {Target{1, 1}, Target{2, 1}, Target{1, 2}},
                               [](std::uint64_t l) { return 2 * l; }, "prop11");
}

/// Elements b^i + n with i = corollary_slot_width(l, d); witnesses need n and every
/// C(d,j) n^j (j = 1..d) normal.
inline ConstructionReport build_corollary_d(const StagedSpec& spec, unsigned d) {
  if (d < 2) throw InvalidArgument("corollary construction needs degree >= 2");
  std::vector<Target> targets{Target{1, 1}};
  for (unsigned j = 1; j <= d; ++j) {
    Target t{binomial(d, j), j};
    if (!(t == targets.front())) targets.push_back(t);
  }
  Alphabet alphabet = spec.base;
  return detail::build_slotted(spec, d, std::move(targets),
                               [d, alphabet](std::uint64_t l) { return corollary_slot_width(l, d, alphabet); },
                               "corollary:" + std::to_string(d));
}

/// Rationals c_n / d_n with 1 <= c_n <= d_n and 1 <= d_(n+1) - d_n <= gap_bound.
class Prop13Schedule {
 public:
  using Rule = std::function<std::pair<std::uint64_t, std::uint64_t>(std::uint64_t)>;

  Prop13Schedule(Rule rule, std::uint64_t gap_bound, double target, std::string description)
      : rule_(std::move(rule)), gap_bound_(gap_bound), target_(target), description_(std::move(description)) {
    if (gap_bound_ == 0) throw InvalidArgument("gap bound must be positive");
  }

  /// c_n = max(1, round(s d_n)), d_n = d0 + n.
  static Prop13Schedule for_target(double s, std::uint64_t d0 = 16) {
    if (!(s >= 0.0 && s <= 1.0)) throw InvalidArgument("target dimension must lie in [0, 1]");
    if (d0 == 0) throw InvalidArgument("d0 must be positive");
    return Prop13Schedule(
        [s, d0](std::uint64_t n) {
          std::uint64_t d = d0 + n;
          auto c = static_cast<std::uint64_t>(std::llround(s * static_cast<double>(d)));
          return std::make_pair(std::clamp<std::uint64_t>(c, 1, d), d);
        },
        1, s, "round(" + std::to_string(s) + "*d)/(" + std::to_string(d0) + "+n)");
  }

  std::pair<std::uint64_t, std::uint64_t> at(std::uint64_t n) const {
    auto [c, d] = rule_(n);
    if (c < 1 || c > d) {
      throw InvalidArgument("schedule term " + std::to_string(n) + " violates 1 <= c_n <= d_n");
    }
    return {c, d};
  }
  std::uint64_t gap_bound() const noexcept { return gap_bound_; }
  double target() const noexcept { return target_; }
  const std::string& describe() const noexcept { return description_; }

 private:
  Rule rule_;
  std::uint64_t gap_bound_;
  double target_;
  std::string description_;
};

/// Elements m b^(d_n - c_n) for c_n-digit m with m and m^2 normal at the largest
/// stage i with l_i < c_n. Thresholds use the {n, 2n, n^2} family; if no stage
/// qualifies, (1, 1)-normality is used. Non-increasing elements are skipped.
inline ConstructionReport build_prop13(const StagedSpec& spec, const Prop13Schedule& sched) {
  ConstructionReport r;
  r.recipe = "prop13:" + std::to_string(sched.target());
  r.base = spec.base.base();
  r.degree = 2;
  const std::vector<Target> threshold_targets{Target{1, 1}, Target{2, 1}, Target{1, 2}};
  const std::vector<Target> targets{Target{1, 1}, Target{1, 2}};

  std::uint64_t reach = 1;
  {
    std::uint64_t acc = 0;
    for (std::uint64_t n = 0; acc < spec.digit_budget && n < (1u << 24); ++n) {
      auto [c, d] = sched.at(n);
      acc += d;
      reach = std::max(reach, c);
    }
  }
  detail::ThresholdTable table(spec, threshold_targets, reach + spec.probe.window + 1);

  std::optional<unsigned> stage;  // nullopt: fallback (1, 1)
  bool fallback_logged = false;
  std::optional<std::uint64_t> prev_d;
  std::optional<Natural> prev_value;
  for (std::uint64_t n = 0; !detail::budget_met(r, spec); ++n) {
    auto [c, d] = sched.at(n);
    if (prev_d && (d <= *prev_d || d - *prev_d > sched.gap_bound())) {
      throw InvalidArgument("schedule gap d_(n+1) - d_n outside [1, " + std::to_string(sched.gap_bound()) +
                            "] at n=" + std::to_string(n));
    }
    prev_d = d;

    WitnessResult w;
    NormalityParams params(1.0, 1, spec.base);
    for (;;) {
      // Largest i with l_i < c; thresholds are nondecreasing.
      std::optional<unsigned> best;
      for (unsigned i = spec.first_stage; i <= spec.max_stage; ++i) {
        auto li = table.get(i);
        if (!li || *li >= c) break;
        best = i;
      }
      if (best != stage || r.stages.empty()) {
        if (best) {
          r.stages.push_back({*best, StagedSpec::epsilon_of(*best), StagedSpec::k_of(*best), table.get(*best),
                              r.elements.size()});
        } else if (!fallback_logged) {
          r.stages.push_back({0, 1.0, 1, std::nullopt, r.elements.size()});
          r.audit.push_back("c_n=" + std::to_string(c) + " below every threshold; using (1, 1)-normality");
          fallback_logged = true;
        }
        stage = best;
      }
      params = stage ? spec.params(*stage) : NormalityParams(1.0, 1, spec.base);
      w = spec.cache->get(c, params, targets, spec.witness_budget, spec.probe.workers);
      if (w.witness || !stage || !spec.reprobe_on_miss) break;
      r.audit.push_back("stage " + std::to_string(*stage) + ": no witness of length " + std::to_string(c) +
                        " within " + std::to_string(w.candidates) + " candidates; threshold re-probed above " +
                        std::to_string(c));
      table.refute(*stage, c);
    }
    if (!w.witness) {
      r.halted = "stage " + std::to_string(stage.value_or(0)) + ": no witness of length " + std::to_string(c) +
                 " within " + std::to_string(w.candidates) + " candidates";
      break;
    }
    const Natural& m = *w.witness;
    if (!all_targets_normal(m, params, targets)) throw IntegrityError("witness failed re-verification");
    Natural value = m * detail::pow_nat(spec.base.base(), d - c);
    if (prev_value && value <= *prev_value) {
      r.audit.push_back("n=" + std::to_string(n) + ": element " + value.get_str() +
                        " does not exceed its predecessor; skipped");
      continue;
    }
    prev_value = value;
    Natural m2 = m * m;
    r.layout_a.append(SegmentKind::Payload, c);
    r.layout_a.append(SegmentKind::Pad, d - c);
    r.layout_p.append(SegmentKind::Payload, digit_length(m2, spec.base));
    r.layout_p.append(SegmentKind::Pad, 2 * (d - c));
    r.elements.push_back({std::move(value), m, stage.value_or(0), d - c});
    detail::record_traces(r);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Prefix sets and real multipliers
// ---------------------------------------------------------------------------

struct Prop7Checkpoint {
  std::uint64_t position = 0;       // digits of CE_b(cA)
  std::uint64_t disagreements = 0;  // among those digits
  double density() const {
    return position ? static_cast<double>(disagreements) / static_cast<double>(position) : 0.0;
  }
};

struct Prop7Report {
  std::uint32_t base = 2;
  std::vector<std::uint64_t> cuts;
  std::vector<Natural> elements;  // a_i = value of alpha[0..n_i]
  std::vector<Natural> scaled;    // floor(c a_i)
  std::vector<std::uint64_t> disagreement_positions;  // in CE_b(cA), increasing
  std::vector<Prop7Checkpoint> checkpoints;
  std::uint64_t digits_a = 0;
  std::uint64_t digits_scaled = 0;
  DimensionEstimate dim_a;
  DimensionEstimate dim_scaled;

  std::uint64_t disagreements_below(std::uint64_t n) const {
    return static_cast<std::uint64_t>(
        std::lower_bound(disagreement_positions.begin(), disagreement_positions.end(), n) -
        disagreement_positions.begin());
  }
  double final_density() const { return checkpoints.empty() ? 0.0 : checkpoints.back().density(); }
  /// Each checkpoint density is below the previous one, or both are zero.
  bool density_decreasing() const {
    for (std::size_t j = 1; j < checkpoints.size(); ++j) {
      const double a = checkpoints[j - 1].density();
      const double b = checkpoints[j].density();
      if (!(b < a) && !(a == 0 && b == 0)) return false;
    }
    return true;
  }
};

struct Prop7Options {
  std::uint64_t digit_budget = 100000;  // stop once CE_b(A) has this many digits
  std::size_t max_block = 4;
  CheckpointSchedule entropy_checkpoints = CheckpointSchedule::geometric(2.0, 1024);
  double burn_in = 0.125;
  std::uint64_t guard_digits = 16;
  std::uint64_t max_precision = 1u << 22;
};

/// A = {alpha[0..n_i]}, compared against c alpha. Requires c > 0 and a nonzero
/// first digit of alpha.
inline Prop7Report prop7_demo(SequenceSource alpha, RealCoefficient c, GrowthPolicy cuts,
                              const Prop7Options& opt = {}) {
  const Alphabet alphabet = alpha.alphabet();
  const std::uint32_t b = alphabet.base();
  Prop7Report rep;
  rep.base = b;

  std::vector<std::uint64_t> plan;
  if (cuts.is_adaptive()) {
    for (const auto& ac : adaptive_cut_points({alpha}, cuts.adaptive_params())) plan.push_back(ac.cut);
  }
  // Cut points until CE_b(A) reaches the budget; alpha digits needed: last cut + 1.
  {
    std::optional<std::uint64_t> prev;
    std::uint64_t total = 0;
    for (std::uint64_t i = 0; total < opt.digit_budget; ++i) {
      std::optional<std::uint64_t> n;
      if (cuts.is_adaptive()) {
        if (i < plan.size()) n = plan[i];
      } else {
        n = cuts.cut(i, prev);
      }
      if (!n) break;
      if (prev && *n <= *prev) throw OrderViolation("cut points must be strictly increasing");
      rep.cuts.push_back(*n);
      total += *n + 1;
      prev = n;
    }
  }
  if (rep.cuts.empty()) throw InvalidArgument("no cut points");

  const std::uint64_t need = rep.cuts.back() + 1 + opt.guard_digits;
  DigitString prefix = alpha.take(need);
  if (prefix.size() == 0 || prefix[0] == 0) throw InvalidArgument("alpha must start with a nonzero digit");
  const auto digits = prefix.digits();

  // Bounds for c: [clo, chi] at precision t.
  auto c_bounds = [&](std::uint64_t t) -> Interval {
    if (c.exact_value()) return {*c.exact_value(), *c.exact_value()};
    return c.refine(t);
  };
  if (c_bounds(64).hi <= 0) throw InvalidArgument("multiplier must be positive");

  Poly scale({RealCoefficient::exact(Rational(0)), c});
  std::vector<digit_t> got;
  std::vector<digit_t> lo_digits;
  std::vector<digit_t> hi_digits;
  std::uint64_t position = 0;
  for (std::size_t e = 0; e < rep.cuts.size(); ++e) {
    const std::uint64_t n_i = rep.cuts[e];
    const std::uint64_t len = std::min<std::uint64_t>(n_i + 1, digits.size());
    Natural a = fsdim::from_digits(digits.first(static_cast<std::size_t>(len)), alphabet);
    Natural x = eval_floor(scale, a, EvalOptions{32, opt.max_precision});
    got.clear();
    append_sigma(x, b, got);

    // Leading |got| digits of c alpha from floor(c [P_M, P_M + 1]) with M guard digits.
    bool settled = false;
    for (std::uint64_t guard = opt.guard_digits; !settled; guard *= 2) {
      const std::uint64_t m = std::min<std::uint64_t>(len + guard, digits.size());
      Natural p = fsdim::from_digits(digits.first(static_cast<std::size_t>(m)), alphabet);
      const bool alpha_exact = m == digits.size() && alpha.known_length() && *alpha.known_length() == m;
      for (std::uint64_t t = 64; t <= opt.max_precision; t *= 2) {
        Interval cb = c_bounds(t);
        Natural lo = floor_of(cb.lo * Rational(p));
        Natural hi = floor_of(cb.hi * Rational(alpha_exact ? p : p + 1));
        lo_digits.clear();
        hi_digits.clear();
        append_sigma(lo, b, lo_digits);
        append_sigma(hi, b, hi_digits);
        if (lo_digits.size() == hi_digits.size() && lo_digits.size() >= got.size() &&
            std::equal(lo_digits.begin(), lo_digits.begin() + static_cast<std::ptrdiff_t>(got.size()),
                       hi_digits.begin())) {
          settled = true;
          break;
        }
        if (cb.exact()) break;
      }
      if (!settled && (m == digits.size() || guard > opt.max_precision)) {
        throw AmbiguousFloor("leading digits of c*alpha unresolved at element " + std::to_string(e),
                             "", "");
      }
    }
    for (std::size_t j = 0; j < got.size(); ++j)
      if (got[j] != lo_digits[j]) rep.disagreement_positions.push_back(position + j);
    position += got.size();
    rep.digits_a += len;
    rep.digits_scaled += got.size();
    rep.elements.push_back(std::move(a));
    rep.scaled.push_back(std::move(x));
  }
  for (std::uint64_t p : opt.entropy_checkpoints.points_below(position))
    rep.checkpoints.push_back({p, rep.disagreements_below(p)});
  rep.checkpoints.push_back({position, rep.disagreements_below(position)});

  auto seq_a = ce_sequence(NaturalStream::from_values(rep.elements), alphabet);
  auto seq_c = concat_expansions(NaturalStream::from_values(rep.scaled), alphabet);
  rep.dim_a = estimate_dim(profile(seq_a, opt.max_block, opt.entropy_checkpoints), opt.burn_in);
  rep.dim_scaled = estimate_dim(profile(seq_c, opt.max_block, opt.entropy_checkpoints), opt.burn_in);
  return rep;
}

}  // namespace fsdim
