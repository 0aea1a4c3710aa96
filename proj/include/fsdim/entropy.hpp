#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fsdim/census.hpp"
#include "fsdim/parallel.hpp"
#include "fsdim/sources.hpp"

namespace fsdim {

/// Counts a string in independent chunks, each seeded with the preceding chunk's
/// last l-1 digits, and merges the pieces. Equal to count_blocks on the whole string.
inline BlockCensus count_blocks_parallel(const DigitString& s, std::size_t l,
                                         unsigned workers = worker_count()) {
  const std::uint64_t n = s.size();
  if (workers <= 1 || n < 2 * l + 2) return count_blocks(s, l);
  std::vector<std::uint64_t> bounds;
  for (unsigned w = 0; w <= workers; ++w) bounds.push_back(n * w / workers);
  std::vector<std::optional<BlockCensus>> parts(workers);
  parallel_chunks(0, workers, workers, [&](unsigned, std::uint64_t lo, std::uint64_t hi) {
    for (std::uint64_t w = lo; w < hi; ++w) {
      std::uint64_t a = bounds[w];
      std::uint64_t b = bounds[w + 1];
      std::uint64_t carry_from = a >= l - 1 ? a - (l - 1) : 0;
      auto carry = s.digits().subspan(carry_from, a - carry_from);
      BlockCensus c = BlockCensus::seeded(s.alphabet(), l, carry);
      c.push(s.digits().subspan(a, b - a));
      parts[w].emplace(std::move(c));
    }
  });
  BlockCensus total = std::move(*parts[0]);
  for (unsigned w = 1; w < workers; ++w) total.merge(*parts[w]);
  return total;
}

/// Positions (prefix lengths) at which a profile records entropies.
class CheckpointSchedule {
 public:
  /// start, ceil(start*ratio), ... ; the final position is always added.
  static CheckpointSchedule geometric(double ratio = 2.0, std::uint64_t start = 1024) {
    if (!(ratio > 1.0)) throw InvalidArgument("geometric checkpoint ratio must exceed 1");
    if (start == 0) throw InvalidArgument("first checkpoint must be positive");
    CheckpointSchedule s;
    s.ratio_ = ratio;
    s.start_ = start;
    return s;
  }
  static CheckpointSchedule explicit_points(std::vector<std::uint64_t> points) {
    for (std::size_t i = 1; i < points.size(); ++i)
      if (points[i] <= points[i - 1]) throw OrderViolation("checkpoints must be strictly increasing");
    CheckpointSchedule s;
    s.points_ = std::move(points);
    return s;
  }

  /// Checkpoints strictly below `end`.
  std::vector<std::uint64_t> points_below(std::uint64_t end) const {
    std::vector<std::uint64_t> out;
    if (!points_.empty()) {
      for (auto p : points_)
        if (p < end) out.push_back(p);
      return out;
    }
    long double p = static_cast<long double>(start_);
    std::uint64_t last = 0;
    while (p < static_cast<long double>(end)) {
      auto q = static_cast<std::uint64_t>(std::ceil(p));
      if (q > last && q < end) out.push_back(q);
      last = q;
      p = std::max<long double>(p * ratio_, static_cast<long double>(q + 1));
    }
    return out;
  }

  std::string describe() const {
    if (!points_.empty()) return "explicit";
    return "geometric:" + std::to_string(ratio_) + "@" + std::to_string(start_);
  }

 private:
  double ratio_ = 2.0;
  std::uint64_t start_ = 1024;
  std::vector<std::uint64_t> points_;
};

/// H[l-1][j] = H_l(S[0..n_j)) for l = 1..L.
struct EntropyProfile {
  std::uint32_t base = 2;
  std::uint64_t length = 0;  // digits consumed
  std::vector<std::uint64_t> checkpoints;
  std::vector<std::vector<double>> entropy;  // NaN where no window exists yet

  std::size_t max_block() const { return entropy.size(); }
  double at(std::size_t l, std::size_t j) const { return entropy.at(l - 1).at(j); }
  double final_entropy(std::size_t l) const { return entropy.at(l - 1).back(); }
};

/// One streaming pass over S maintaining L censuses. Reads at most max_digits
/// digits; the last position read is always a checkpoint.
inline EntropyProfile profile(const SequenceSource& s, std::size_t max_block,
                              const CheckpointSchedule& schedule = CheckpointSchedule::geometric(),
                              std::uint64_t max_digits = UINT64_MAX) {
  if (max_block == 0) throw InvalidArgument("max block length must be at least 1");
  std::vector<BlockCensus> censuses;
  censuses.reserve(max_block);
  for (std::size_t l = 1; l <= max_block; ++l) censuses.emplace_back(s.alphabet(), l);

  EntropyProfile prof;
  prof.base = s.base();
  prof.entropy.assign(max_block, {});

  std::uint64_t horizon = max_digits;
  if (s.known_length()) horizon = std::min(horizon, *s.known_length());
  std::vector<std::uint64_t> points =
      schedule.points_below(horizon == UINT64_MAX ? UINT64_MAX : horizon);
  std::size_t next_point = 0;

  auto record = [&](std::uint64_t at) {
    prof.checkpoints.push_back(at);
    for (std::size_t l = 1; l <= max_block; ++l) {
      const auto& c = censuses[l - 1];
      prof.entropy[l - 1].push_back(c.total() ? block_entropy(c)
                                              : std::numeric_limits<double>::quiet_NaN());
    }
  };

  auto cursor = s.open();
  std::vector<digit_t> buf(1 << 14);
  std::uint64_t seen = 0;
  while (seen < max_digits) {
    std::uint64_t limit = max_digits - seen;
    if (next_point < points.size()) limit = std::min(limit, points[next_point] - seen);
    auto want = static_cast<std::size_t>(std::min<std::uint64_t>(buf.size(), limit));
    std::size_t n = cursor->read(std::span(buf).first(want));
    if (n == 0) break;
    std::span<const digit_t> chunk(buf.data(), n);
    for (auto& c : censuses) c.push(chunk);
    seen += n;
    if (next_point < points.size() && seen == points[next_point]) {
      record(seen);
      ++next_point;
    }
  }
  prof.length = seen;
  if (prof.checkpoints.empty() || prof.checkpoints.back() != seen) record(seen);
  return prof;
}

struct DimensionEstimate {
  double dim_proxy = 0;
  double strong_dim_proxy = 0;
  std::uint64_t burn_in = 0;  // first position kept
  std::size_t max_block = 0;
  std::vector<double> tail_min;  // per l
  std::vector<double> tail_max;  // per l
};

/// Finite-horizon proxies for inf_l liminf_n H_l and inf_l limsup_n H_l: checkpoints
/// below burn_in * (final position) are discarded, and each l contributes the
/// min (resp. max) of its remaining values.
inline DimensionEstimate estimate_dim(const EntropyProfile& prof, double burn_in = 0.125) {
  if (prof.checkpoints.empty()) throw NotEnoughData("profile has no checkpoints");
  const auto cutoff = static_cast<std::uint64_t>(
      std::ceil(burn_in * static_cast<double>(prof.checkpoints.back())));
  std::vector<std::size_t> tail;
  for (std::size_t j = 0; j < prof.checkpoints.size(); ++j)
    if (prof.checkpoints[j] >= cutoff) tail.push_back(j);
  if (tail.size() < 2) {
    throw NotEnoughData("need at least 2 checkpoints past burn-in, have " +
                        std::to_string(tail.size()));
  }
  DimensionEstimate est;
  est.burn_in = cutoff;
  est.max_block = prof.max_block();
  est.dim_proxy = 1.0;
  est.strong_dim_proxy = 1.0;
  for (std::size_t l = 1; l <= prof.max_block(); ++l) {
    double lo = 1.0;
    double hi = 0.0;
    for (std::size_t j : tail) {
      double h = prof.at(l, j);
      if (std::isnan(h)) throw NotEnoughData("block length " + std::to_string(l) + " has no windows");
      lo = std::min(lo, h);
      hi = std::max(hi, h);
    }
    est.tail_min.push_back(lo);
    est.tail_max.push_back(hi);
    est.dim_proxy = std::min(est.dim_proxy, lo);
    est.strong_dim_proxy = std::min(est.strong_dim_proxy, hi);
  }
  return est;
}

/// Limiting l-block entropy of a normal sequence diluted with zero-runs of density rho:
///   -(1/l) [ p0 log_b p0 + (b^l - 1) q log_b q ],  q = (1-rho) b^-l,  p0 = rho + q.
/// The (b^l - 1) q term is evaluated in log space, so large l is safe.
inline double prop8_entropy(double rho, std::size_t l, Alphabet alphabet) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw InvalidArgument("rho must lie in [0, 1]");
  if (l == 0) throw InvalidArgument("block length must be at least 1");
  const long double b = alphabet.base();
  const long double L = static_cast<long double>(l);
  const long double lnb = std::log(b);
  const long double inv_bl = std::exp(-L * lnb);  // b^-l, may underflow to 0
  const long double q = (1.0L - rho) * inv_bl;
  const long double p0 = rho + q;
  long double acc = 0;  // sum p log_b p
  if (p0 > 0) acc += p0 * std::log(p0) / lnb;
  if (rho < 1.0) {
    // (b^l - 1) q = (1-rho)(1 - b^-l);  log_b q = log_b(1-rho) - l
    const long double mass = (1.0L - rho) * (1.0L - inv_bl);
    const long double log_q = std::log1p(-static_cast<long double>(rho)) / lnb - L;
    acc += mass * log_q;
  }
  double h = static_cast<double>(-acc / L);
  return std::clamp(h, 0.0, 1.0);
}

}  // namespace fsdim
