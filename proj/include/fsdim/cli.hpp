#pragma once

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "fsdim/constructions.hpp"
#include "fsdim/digit_io.hpp"
#include "fsdim/entropy.hpp"
#include "fsdim/experiments.hpp"
#include "fsdim/normality.hpp"
#include "fsdim/polynomials.hpp"
#include "fsdim/primes.hpp"
#include "fsdim/sequences.hpp"

namespace fsdim::cli {

using json = nlohmann::json;

/// Bad flag values found after CLI11 parsing; always mapped to exit status 2.
class UsageError : public std::runtime_error {
 public:
  UsageError(const std::string& flag, const std::string& what) : std::runtime_error(flag + ": " + what) {}
};

enum ExitCode : int { kOk = 0, kFailed = 1, kUsage = 2 };

/// Files registered here are deleted unless commit() runs. Register a path just
/// before opening it so that pre-existing files survive an early failure.
class OutputGuard {
 public:
  OutputGuard() = default;
  OutputGuard(const OutputGuard&) = delete;
  OutputGuard& operator=(const OutputGuard&) = delete;
  ~OutputGuard() {
    if (committed_) return;
    for (const auto& p : paths_) {
      std::error_code ec;
      std::filesystem::remove(p, ec);
    }
  }
  const std::string& add(const std::string& path) {
    paths_.push_back(path);
    return paths_.back();
  }
  void commit() { committed_ = true; }
  const std::vector<std::string>& paths() const noexcept { return paths_; }

 private:
  std::vector<std::string> paths_;
  bool committed_ = false;
};

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

template <class T>
T number(const std::string& flag, const std::string& text) {
  std::istringstream in(text);
  T v{};
  in >> v;
  if (text.empty() || !in || !in.eof()) throw UsageError(flag, "not a number: \"" + text + "\"");
  return v;
}

inline void require_writable(const std::string& flag, const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty() && !std::filesystem::is_directory(parent))
    throw UsageError(flag, "directory does not exist: " + parent.string());
}

inline json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write " + path);
  out << j.dump(2) << '\n';
  if (!out) throw InvalidArgument("error writing " + path);
}

inline std::string extension(std::uint32_t base) {
  return io::default_format(base) == io::DigitFormat::Text ? ".txt" : ".fsd";
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Flag grammars
// ---------------------------------------------------------------------------

/// geometric:<ratio>[@<start>] | list:<n1>,<n2>,...
inline CheckpointSchedule parse_checkpoints(const std::string& text) {
  const std::string flag = "--checkpoints";
  try {
    if (text.rfind("geometric:", 0) == 0) {
      std::string rest = text.substr(10);
      std::uint64_t start = 1024;
      if (auto at = rest.find('@'); at != std::string::npos) {
        start = detail::number<std::uint64_t>(flag, rest.substr(at + 1));
        rest = rest.substr(0, at);
      }
      return CheckpointSchedule::geometric(detail::number<double>(flag, rest), start);
    }
    if (text.rfind("list:", 0) == 0) {
      std::vector<std::uint64_t> pts;
      for (const auto& p : detail::split(text.substr(5), ',')) pts.push_back(detail::number<std::uint64_t>(flag, p));
      if (pts.empty()) throw UsageError(flag, "empty checkpoint list");
      return CheckpointSchedule::explicit_points(std::move(pts));
    }
  } catch (const Error& e) {
    throw UsageError(flag, e.what());
  }
  throw UsageError(flag, "expected geometric:<ratio>[@<start>] or list:<n>,..., got \"" + text + "\"");
}

/// geometric[:<ratio>] | all-prefixes | adaptive
inline GrowthPolicy parse_growth(const std::string& flag, const std::string& text) {
  if (text == "all-prefixes") return GrowthPolicy::all_prefixes();
  if (text == "adaptive") return GrowthPolicy::adaptive();
  if (text == "geometric") return GrowthPolicy::geometric();
  if (text.rfind("geometric:", 0) == 0) {
    const double r = detail::number<double>(flag, text.substr(10));
    if (!(r > 1.0)) throw UsageError(flag, "geometric ratio must exceed 1");
    return GrowthPolicy::geometric(r);
  }
  throw UsageError(flag, "unknown growth policy \"" + text + "\"");
}

/// dilute:none | dilute:per-digit:<run> | dilute:ratio:<rho>
/// insert:squares[:<fill>] | insert:arithmetic:<offset>:<period>[:<fill>]
/// delete:squares | delete:arithmetic:<offset>:<period>
/// prefix-concat:geometric[:<ratio>] | prefix-concat:all-prefixes | prefix-concat:adaptive
inline SequenceSource apply_transform(SequenceSource s, const std::string& text) {
  const std::string flag = "--transform";
  const auto parts = detail::split(text, ':');
  const std::string& kind = parts.front();
  auto fill_at = [&](std::size_t i) -> Fill {
    if (parts.size() <= i) return digit_t{0};
    auto d = detail::number<digit_t>(flag, parts[i]);
    if (!s.alphabet().contains(d)) throw UsageError(flag, "fill digit out of range: " + parts[i]);
    return d;
  };
  auto index_set = [&](std::size_t& i) -> IndexSet {
    if (parts.size() <= i) throw UsageError(flag, "missing index set in \"" + text + "\"");
    if (parts[i] == "squares") {
      ++i;
      return IndexSet::squares();
    }
    if (parts[i] == "arithmetic") {
      if (parts.size() < i + 3) throw UsageError(flag, "arithmetic needs <offset>:<period>");
      auto offset = detail::number<std::uint64_t>(flag, parts[i + 1]);
      auto period = detail::number<std::uint64_t>(flag, parts[i + 2]);
      if (period == 0) throw UsageError(flag, "arithmetic period must be positive");
      i += 3;
      return IndexSet::arithmetic(offset, period);
    }
    throw UsageError(flag, "unknown index set \"" + parts[i] + "\"");
  };
  try {
    if (kind == "dilute" && parts.size() >= 2) {
      if (parts[1] == "none" && parts.size() == 2) return dilute(std::move(s), DilutionSchedule::none());
      if (parts[1] == "per-digit" && parts.size() == 3)
        return dilute(std::move(s), DilutionSchedule::per_digit(detail::number<std::uint64_t>(flag, parts[2])));
      if (parts[1] == "ratio" && parts.size() == 3)
        return dilute(std::move(s), DilutionSchedule::ratio(detail::number<double>(flag, parts[2])));
    } else if (kind == "insert") {
      std::size_t i = 1;
      IndexSet set = index_set(i);
      if (parts.size() > i + 1) throw UsageError(flag, "trailing fields in \"" + text + "\"");
      Fill fill = fill_at(i);
      return insert_at(std::move(s), std::move(set), std::move(fill));
    } else if (kind == "delete") {
      std::size_t i = 1;
      IndexSet set = index_set(i);
      if (parts.size() != i) throw UsageError(flag, "trailing fields in \"" + text + "\"");
      return delete_at(std::move(s), std::move(set));
    } else if (kind == "prefix-concat" && parts.size() >= 2) {
      std::string policy = text.substr(kind.size() + 1);
      return prefix_concat(std::move(s), parse_growth(flag, policy));
    }
  } catch (const Error& e) {
    throw UsageError(flag, e.what());
  }
  throw UsageError(flag, "unrecognized transform \"" + text + "\"");
}

inline Poly parse_poly_flag(const std::string& flag, const std::string& text) {
  try {
    return parse_poly(text, [&](const std::string& path) {
      if (!std::filesystem::exists(path)) throw UsageError(flag, "real: file does not exist: " + path);
      return RealCoefficient::from_digits(SequenceSource::from_digits(io::read_digit_file(path)), 1, false);
    });
  } catch (const Error& e) {
    throw UsageError(flag, e.what());
  }
}

// ---------------------------------------------------------------------------
// Construction recipes
// ---------------------------------------------------------------------------

struct RecipeFlags {
  std::uint32_t base = 2;
  std::uint64_t digits = 0;
  std::optional<unsigned> first_stage;
  std::optional<std::uint64_t> window;
  std::optional<std::uint64_t> probe_candidates;
  std::optional<std::uint64_t> witness_budget;
  std::optional<std::uint64_t> max_elements;
  std::uint64_t d0 = 16;
  bool no_reprobe = false;
  // prop7 only
  std::string c = "3";
  std::optional<std::string> alpha;
  std::string cuts = "geometric:2";
  std::size_t max_block = 4;
};

inline StagedSpec staged_spec(const RecipeFlags& f) {
  StagedSpec spec;
  spec.base = Alphabet(f.base);
  spec.digit_budget = f.digits;
  if (f.first_stage) spec.first_stage = *f.first_stage;
  if (f.window) spec.probe.window = *f.window;
  if (f.probe_candidates) spec.probe.candidates_per_length = *f.probe_candidates;
  if (f.witness_budget) spec.witness_budget = *f.witness_budget;
  if (f.max_elements) spec.max_elements = *f.max_elements;
  spec.reprobe_on_miss = !f.no_reprobe;
  spec.probe.workers = worker_count();
  return spec;
}

/// prop11 | corollary:<d> | prop13:<s>. prop7 is handled separately since it
/// produces a different report.
inline ConstructionReport build_recipe(const std::string& flag, const std::string& recipe, const RecipeFlags& f) {
  StagedSpec spec = staged_spec(f);
  if (recipe == "prop11") return build_prop11(spec);
  if (recipe.rfind("corollary:", 0) == 0) {
    auto d = detail::number<unsigned>(flag, recipe.substr(10));
    if (d < 2) throw UsageError(flag, "corollary degree must be at least 2");
    return build_corollary_d(spec, d);
  }
  if (recipe.rfind("prop13:", 0) == 0) {
    auto s = detail::number<double>(flag, recipe.substr(7));
    if (!(s > 0.0 && s <= 1.0)) throw UsageError(flag, "prop13 target must lie in (0, 1]");
    return build_prop13(spec, Prop13Schedule::for_target(s, f.d0));
  }
  throw UsageError(flag, "unknown recipe \"" + recipe + "\"");
}

inline json layout_json(const StreamLayout& layout, std::uint64_t n) {
  json segs = json::array();
  for (const auto& s : layout.segments()) segs.push_back({segment_name(s.kind), s.length});
  const std::uint64_t m = std::min(n, layout.total_digits());
  return {{"total_digits", layout.total_digits()},
          {"padding_digits", layout.padding_digits()},
          {"zero_density_at_budget", m ? static_cast<double>(layout.zeros_in_prefix(m)) / static_cast<double>(m) : 0.0},
          {"segments", std::move(segs)}};
}

inline json trace_json(const std::vector<DensityPoint>& trace) {
  json out = json::array();
  for (const auto& p : trace) out.push_back({p.position, p.zeros});
  return out;
}

/// ConstructionReport as JSON; `digits` is the budget at which densities are quoted.
inline json report_json(const ConstructionReport& r, std::uint64_t digits) {
  json elements = json::array();
  for (const auto& e : r.elements)
    elements.push_back({{"value", e.value.get_str(10)}, {"witness", e.witness.get_str(10)},
                        {"stage", e.stage}, {"shift", e.shift}});
  json stages = json::array();
  for (const auto& s : r.stages)
    stages.push_back({{"stage", s.stage}, {"epsilon", s.epsilon}, {"k", s.k},
                      {"threshold", s.threshold ? json(*s.threshold) : json(nullptr)},
                      {"first_element", s.first_element}});
  return {{"recipe", r.recipe},
          {"base", r.base},
          {"degree", r.degree},
          {"digits", digits},
          {"halted", r.halted ? json(*r.halted) : json(nullptr)},
          {"elements", std::move(elements)},
          {"stages", std::move(stages)},
          {"audit", r.audit},
          {"layout_A", layout_json(r.layout_a, digits)},
          {"layout_pA", layout_json(r.layout_p, digits)},
          {"trace_A", trace_json(r.trace_a)},
          {"trace_pA", trace_json(r.trace_p)}};
}

inline json prop7_json(const Prop7Report& r, const std::string& c, const std::string& cuts) {
  json cps = json::array();
  for (const auto& p : r.checkpoints) cps.push_back({{"position", p.position}, {"disagreements", p.disagreements}});
  auto dim = [](const DimensionEstimate& d) {
    return json{{"dim_proxy", d.dim_proxy}, {"strong_dim_proxy", d.strong_dim_proxy}, {"burn_in", d.burn_in}};
  };
  return {{"recipe", "prop7"},
          {"base", r.base},
          {"c", c},
          {"cuts_policy", cuts},
          {"cuts", r.cuts},
          {"elements", r.elements.size()},
          {"digits_A", r.digits_a},
          {"digits_cA", r.digits_scaled},
          {"disagreements", r.disagreement_positions.size()},
          {"checkpoints", std::move(cps)},
          {"final_density", r.final_density()},
          {"density_decreasing", r.density_decreasing()},
          {"dim_A", dim(r.dim_a)},
          {"dim_cA", dim(r.dim_scaled)}};
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

struct GenerateOptions {
  std::string set;
  std::uint32_t base = 10;
  std::uint64_t digits = 0;
  std::optional<std::string> out;
  std::vector<std::string> transforms;
  std::optional<std::string> poly;
  std::string format = "auto";
  bool no_header = false;
  RecipeFlags recipe;
};

inline SetStream make_set(const GenerateOptions& o) {
  const std::string flag = "--set";
  if (o.set == "naturals") return NaturalStream::naturals(0);
  if (o.set == "primes") return primes_stream();
  if (o.set.rfind("file:", 0) == 0) {
    const std::string path = o.set.substr(5);
    if (!std::filesystem::is_regular_file(path)) throw UsageError(flag, "file does not exist: " + path);
    try {
      return NaturalStream::from_values(io::read_set_file(path));
    } catch (const Error& e) {
      throw UsageError(flag, e.what());
    }
  }
  if (o.set.rfind("construct:", 0) == 0) {
    RecipeFlags f = o.recipe;
    f.base = o.base;
    f.digits = o.digits;
    ConstructionReport rep = build_recipe(flag, o.set.substr(10), f);
    if (rep.halted) throw Error("construction halted: " + *rep.halted);
    return rep.set();
  }
  throw UsageError(flag, "expected naturals, primes, file:<path> or construct:<recipe>, got \"" + o.set + "\"");
}

inline int run_generate(const GenerateOptions& o, std::ostream& out) {
  std::optional<io::DigitFormat> format;
  if (o.format == "text") format = io::DigitFormat::Text;
  if (o.format == "binary") format = io::DigitFormat::Binary;
  if (o.out) {
    detail::require_writable("--out", *o.out);
    const auto fmt = format.value_or(o.base <= 36 ? io::DigitFormat::Text : io::DigitFormat::Binary);
    if (fmt == io::DigitFormat::Text && o.base > 36) throw UsageError("--format", "text output needs base <= 36");
    if (fmt == io::DigitFormat::Binary && o.base > 256) throw UsageError("--base", "binary output needs base <= 256");
  } else if (o.base > 36) {
    throw UsageError("--base", "stdout output is text and needs base <= 36; use --out");
  }
  std::optional<Poly> poly;
  if (o.poly) poly = parse_poly_flag("--poly", *o.poly);

  const Alphabet alphabet(o.base);
  SetStream set = make_set(o);
  SequenceSource s = poly ? ce_poly_sequence(*poly, std::move(set), alphabet) : ce_sequence(std::move(set), alphabet);
  for (const auto& t : o.transforms) s = apply_transform(std::move(s), t);

  if (!o.out) {
    // Raw digits, no header.
    auto cursor = s.open();
    std::vector<digit_t> buf(1 << 14);
    std::string text;
    std::uint64_t written = 0;
    while (written < o.digits) {
      auto want = static_cast<std::size_t>(std::min<std::uint64_t>(buf.size(), o.digits - written));
      std::size_t n = cursor->read(std::span(buf).first(want));
      if (n == 0) break;
      text.resize(n);
      for (std::size_t i = 0; i < n; ++i)
        text[i] = buf[i] < 10 ? static_cast<char>('0' + buf[i]) : static_cast<char>('A' + (buf[i] - 10));
      out << text;
      written += n;
    }
    out << '\n';
    return kOk;
  }

  OutputGuard guard;
  bool more = false;
  const std::uint64_t written =
      io::write_digit_file(guard.add(*o.out), s, o.digits, format, !o.no_header, &more);
  guard.commit();
  out << json{{"path", *o.out}, {"base", o.base}, {"digits", written}, {"truncated", more},
              {"truncated_at", more ? json(written) : json(nullptr)}}
             .dump()
      << '\n';
  return kOk;
}

struct EntropyOptions {
  std::string in;
  std::uint32_t base = 10;
  std::size_t max_block = 4;
  std::string checkpoints = "geometric:2@1024";
  double burn_in = 0.125;
  std::optional<std::uint64_t> max_digits;
  bool json_out = false;
  std::optional<std::string> csv;
};

inline json dimension_json(const EntropyProfile& prof, double burn_in_fraction) {
  json j{{"base", prof.base}, {"length", prof.length}, {"max_block", prof.max_block()},
         {"burn_in_fraction", burn_in_fraction}};
  try {
    DimensionEstimate est = estimate_dim(prof, burn_in_fraction);
    j["dim_proxy"] = est.dim_proxy;
    j["strong_dim_proxy"] = est.strong_dim_proxy;
    j["burn_in"] = est.burn_in;
    j["tail_min"] = est.tail_min;
    j["tail_max"] = est.tail_max;
  } catch (const NotEnoughData& e) {
    j["dim_proxy"] = nullptr;
    j["strong_dim_proxy"] = nullptr;
    j["burn_in"] = nullptr;
    j["estimate_error"] = e.what();
  }
  return j;
}

inline int run_entropy(const EntropyOptions& o, bool estimate_only, std::ostream& out) {
  const CheckpointSchedule schedule = parse_checkpoints(o.checkpoints);
  if (!(o.burn_in >= 0.0 && o.burn_in < 1.0)) throw UsageError("--burn-in", "must lie in [0, 1)");
  if (o.csv) detail::require_writable("--csv", *o.csv);
  DigitString digits = [&] {
    try {
      return io::read_digit_file(o.in, o.base);
    } catch (const Error& e) {
      throw UsageError("--in", e.what());
    }
  }();
  const EntropyProfile prof =
      profile(SequenceSource::from_digits(std::move(digits)), o.max_block, schedule, o.max_digits.value_or(UINT64_MAX));
  json j = dimension_json(prof, o.burn_in);
  if (!estimate_only) {
    j["checkpoints"] = prof.checkpoints;
    json h = json::array();
    for (const auto& row : prof.entropy) {
      json r = json::array();
      for (double v : row) r.push_back(detail::nullable(v));
      h.push_back(std::move(r));
    }
    j["H"] = std::move(h);
  }

  OutputGuard guard;
  if (o.csv) {
    std::ofstream csv(guard.add(*o.csv), std::ios::trunc);
    if (!csv) throw InvalidArgument("cannot write " + *o.csv);
    csv << "l";
    for (auto p : prof.checkpoints) csv << ',' << p;
    csv << '\n' << std::setprecision(17);
    for (std::size_t l = 1; l <= prof.max_block(); ++l) {
      csv << l;
      for (std::size_t c = 0; c < prof.checkpoints.size(); ++c) {
        csv << ',';
        if (double v = prof.at(l, c); std::isfinite(v)) csv << v;
      }
      csv << '\n';
    }
    if (!csv) throw InvalidArgument("error writing " + *o.csv);
  }
  guard.commit();

  if (o.json_out) {
    out << j.dump(2) << '\n';
    return kOk;
  }
  out << "base " << prof.base << ", " << prof.length << " digits\n";
  if (!estimate_only) {
    out << std::setw(8) << "n";
    for (std::size_t l = 1; l <= prof.max_block(); ++l) out << std::setw(10) << ("H_" + std::to_string(l));
    out << '\n' << std::fixed << std::setprecision(6);
    for (std::size_t c = 0; c < prof.checkpoints.size(); ++c) {
      out << std::setw(8) << prof.checkpoints[c];
      for (std::size_t l = 1; l <= prof.max_block(); ++l) out << std::setw(10) << prof.at(l, c);
      out << '\n';
    }
  }
  if (j["dim_proxy"].is_null()) {
    out << "dimension estimate unavailable: " << j["estimate_error"].get<std::string>() << '\n';
  } else {
    out << std::fixed << std::setprecision(6) << "dim_proxy " << j["dim_proxy"].get<double>()
        << "\nstrong_dim_proxy " << j["strong_dim_proxy"].get<double>() << '\n';
  }
  return kOk;
}

struct ConstructOptions {
  std::string recipe;
  std::string out;
  RecipeFlags flags;
};

inline int run_construct(ConstructOptions o, std::ostream& out, std::ostream& err) {
  detail::require_writable("--out", o.out);
  if (o.flags.base > 256) throw UsageError("--base", "digit files need base <= 256");
  if (o.flags.digits == 0) throw UsageError("--digits", "must be positive");
  const std::string ext = detail::extension(o.flags.base);
  const std::string set_path = o.out + ".set";
  const std::string a_path = o.out + ".A" + ext;
  const std::string p_path = o.out + ".pA" + ext;
  const std::string report_path = o.out + ".report.json";
  const Alphabet alphabet(o.flags.base);

  if (o.recipe == "prop7") {
    Poly cp = parse_poly_flag("--c", o.flags.c);
    if (cp.degree() != 0) throw UsageError("--c", "multiplier must be a constant");
    GrowthPolicy cuts = parse_growth("--cuts", o.flags.cuts);
    SequenceSource alpha = champernowne(alphabet, 1);
    if (o.flags.alpha) {
      if (!std::filesystem::is_regular_file(*o.flags.alpha))
        throw UsageError("--alpha", "file does not exist: " + *o.flags.alpha);
      alpha = SequenceSource::from_digits(io::read_digit_file(*o.flags.alpha, o.flags.base));
      if (alpha.base() != o.flags.base) throw UsageError("--alpha", "digit file base differs from --base");
    }
    Prop7Options opt;
    opt.digit_budget = o.flags.digits;
    opt.max_block = o.flags.max_block;
    Prop7Report rep = prop7_demo(std::move(alpha), cp.coefficient(0), cuts, opt);
    OutputGuard guard;
    io::write_set_file(guard.add(set_path), rep.elements);
    io::write_digit_file(guard.add(a_path), concat_expansions(NaturalStream::from_values(rep.elements), alphabet),
                         o.flags.digits);
    io::write_digit_file(guard.add(p_path), concat_expansions(NaturalStream::from_values(rep.scaled), alphabet),
                         o.flags.digits);
    detail::write_json_file(guard.add(report_path), prop7_json(rep, o.flags.c, cuts.describe()));
    guard.commit();
    out << json{{"recipe", "prop7"}, {"elements", rep.elements.size()}, {"files", guard.paths()}}.dump() << '\n';
    return kOk;
  }

  ConstructionReport rep = build_recipe("--recipe", o.recipe, o.flags);
  if (rep.halted) {
    err << "construction halted: " << *rep.halted << '\n';
    return kFailed;
  }
  OutputGuard guard;
  std::vector<Natural> values;
  for (const auto& e : rep.elements) values.push_back(e.value);
  io::write_set_file(guard.add(set_path), values);
  io::write_digit_file(guard.add(a_path), rep.sequence_a(), o.flags.digits);
  io::write_digit_file(guard.add(p_path), rep.sequence_p(), o.flags.digits);
  detail::write_json_file(guard.add(report_path), report_json(rep, o.flags.digits));
  guard.commit();
  out << json{{"recipe", rep.recipe}, {"elements", rep.elements.size()}, {"files", guard.paths()}}.dump() << '\n';
  return kOk;
}

struct NormalityOptions {
  std::uint32_t base = 2;
  double epsilon = 0;
  std::size_t k = 0;
  std::uint64_t range = 0;
  std::string targets = "n";
  bool json_out = false;
};

inline json census_json(const NormalityCensus& c, const NormalityParams& p) {
  json targets = json::array();
  for (std::size_t t = 0; t < c.targets.size(); ++t) {
    json decades = json::array();
    for (std::size_t d = 0; d < c.decades.size(); ++d)
      decades.push_back({{"upto", c.decades[d]}, {"failures", c.failures_by_decade[t][d]}, {"fraction", c.fraction(t, d)}});
    targets.push_back({{"target", c.targets[t].name()},
                       {"failures", c.failures[t]},
                       {"fraction", c.fraction(t, c.decades.size() - 1)},
                       {"decades", std::move(decades)}});
  }
  return {{"base", p.base.base()}, {"epsilon", p.epsilon}, {"k", p.k}, {"range", c.m.get_str(10)},
          {"targets", std::move(targets)}};
}

inline int run_normality(const NormalityOptions& o, std::ostream& out) {
  std::vector<Target> targets;
  std::optional<NormalityParams> params;
  try {
    targets = parse_targets(o.targets);
  } catch (const Error& e) {
    throw UsageError("--targets", e.what());
  }
  try {
    params.emplace(o.epsilon, o.k, Alphabet(o.base));
  } catch (const Error& e) {
    throw UsageError("--epsilon", e.what());
  }
  NormalityCensus c = census(o.range, *params, targets);
  json j = census_json(c, *params);
  if (o.json_out) {
    out << j.dump(2) << '\n';
    return kOk;
  }
  out << "(" << o.epsilon << ", " << o.k << ")-normality in base " << o.base << " over 1.." << o.range << '\n';
  for (const auto& t : j["targets"]) {
    out << t["target"].get<std::string>() << ":";
    for (const auto& d : t["decades"])
      out << "  <=" << d["upto"].get<std::uint64_t>() << " " << d["failures"].get<std::uint64_t>() << " ("
          << d["fraction"].get<double>() << ")";
    out << '\n';
  }
  return kOk;
}

struct VerifyOptions {
  std::string experiment;
  json config = json::object();
  std::vector<std::string> params;
  std::optional<std::string> out;
};

/// key=value pairs; values are parsed as JSON and fall back to plain strings.
inline void merge_params(json& cfg, const std::vector<std::string>& params) {
  for (const auto& p : params) {
    auto eq = p.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--param", "expected key=value, got \"" + p + "\"");
    const std::string value = p.substr(eq + 1);
    json v = json::parse(value, nullptr, false);
    cfg[p.substr(0, eq)] = v.is_discarded() ? json(value) : v;
  }
}

inline int run_verify(VerifyOptions o, std::ostream& out) {
  merge_params(o.config, o.params);
  if (o.out) detail::require_writable("--out", *o.out);
  experiments::VerifyReport r;
  try {
    r = experiments::run(o.experiment, o.config);
  } catch (const InvalidArgument& e) {
    throw UsageError("--experiment", e.what());
  } catch (const json::exception& e) {
    throw UsageError("--param", e.what());
  }
  json j = r;
  OutputGuard guard;
  if (o.out) detail::write_json_file(guard.add(*o.out), j);
  guard.commit();
  out << j.dump(2) << '\n';
  return r.pass() ? kOk : kFailed;
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

inline constexpr const char* kPolyHelp =
    "polynomial: terms joined by + or -; term := coef[*x[^e]] | x[^e]; "
    "coef := a | a/b | a.b | real:<digit file read as d0.d1d2...>";

/// argv without the program name. Exit status: 0 success or verified pass,
/// 1 verified fail or computation failure, 2 usage error.
inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Copeland-Erdos sequences, block entropies and finite-state dimension estimates", "fsdim"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  auto positive = CLI::PositiveNumber;
  auto base_range = CLI::Range(2u, 1u << 24);

  GenerateOptions gen;
  auto* g = app.add_subcommand("generate", "Write digits of CE_b(A), p(A) images or their transforms");
  g->add_option("--set", gen.set, "naturals | primes | file:<path> | construct:<recipe>")->required();
  g->add_option("--base", gen.base, "Digit base")->check(base_range)->capture_default_str();
  g->add_option("--digits", gen.digits, "Digit budget (hard cap)")->required()->check(positive);
  g->add_option("--out", gen.out, "Output digit file; stdout gets raw digits when absent");
  g->add_option("--transform", gen.transforms,
                "dilute:none|per-digit:<r>|ratio:<rho>, insert:squares[:<fill>]|arithmetic:<o>:<p>[:<fill>], "
                "delete:squares|arithmetic:<o>:<p>, prefix-concat:geometric[:<r>]|all-prefixes|adaptive; "
                "repeatable, applied in order");
  g->add_option("--poly", gen.poly, std::string("Emit CE_b(p(A)) instead; ") + kPolyHelp);
  g->add_option("--format", gen.format, "auto | text | binary")
      ->check(CLI::IsMember({"auto", "text", "binary"}))
      ->capture_default_str();
  g->add_flag("--no-header", gen.no_header, "Omit the #base= line in text files");
  g->add_option("--first-stage", gen.recipe.first_stage, "Staged constructions: first stage");
  g->add_option("--d0", gen.recipe.d0, "prop13: denominator offset d_n = d0 + n")->check(positive);

  EntropyOptions ent;
  EntropyOptions dimo;
  auto add_entropy_flags = [&](CLI::App* sub, EntropyOptions& o, bool csv) {
    sub->add_option("--in", o.in, "Digit file")->required()->check(CLI::ExistingFile);
    sub->add_option("--base", o.base, "Base for headerless text files")->check(base_range)->capture_default_str();
    sub->add_option("--max-block", o.max_block, "Largest block length L")->check(positive)->capture_default_str();
    sub->add_option("--checkpoints", o.checkpoints, "geometric:<r>[@<start>] | list:<n1>,<n2>,...")
        ->capture_default_str();
    sub->add_option("--burn-in", o.burn_in, "Fraction of the final position discarded")->capture_default_str();
    sub->add_option("--max-digits", o.max_digits, "Read at most this many digits")->check(positive);
    sub->add_flag("--json", o.json_out, "JSON report");
    if (csv) sub->add_option("--csv", o.csv, "Write the entropy matrix as CSV");
  };
  auto* e = app.add_subcommand("entropy", "Block entropy profile of a digit file");
  add_entropy_flags(e, ent, true);
  auto* d = app.add_subcommand("dimension", "Finite-state dimension proxies of a digit file");
  add_entropy_flags(d, dimo, false);

  ConstructOptions con;
  auto* c = app.add_subcommand("construct", "Build a set with prescribed dimensions of CE_b(A) and CE_b(p(A))");
  c->add_option("--recipe", con.recipe, "prop11 | corollary:<d> | prop13:<s> | prop7")->required();
  c->add_option("--base", con.flags.base, "Digit base")->check(base_range)->capture_default_str();
  c->add_option("--digits", con.flags.digits, "Digit budget for both CE streams")->required()->check(positive);
  c->add_option("--out", con.out, "Output prefix for .set, .A, .pA and .report.json")->required();
  c->add_option("--first-stage", con.flags.first_stage, "First stage i (epsilon 2^-i, k max(i,1))");
  c->add_option("--window", con.flags.window, "Consecutive witness lengths that confirm a threshold")->check(positive);
  c->add_option("--probe-candidates", con.flags.probe_candidates, "Candidates per length in threshold probes")
      ->check(positive);
  c->add_option("--witness-budget", con.flags.witness_budget, "Candidates per witness search")->check(positive);
  c->add_option("--max-elements", con.flags.max_elements, "Stop after this many elements")->check(positive);
  c->add_option("--d0", con.flags.d0, "prop13: denominator offset d_n = d0 + n")->check(positive)->capture_default_str();
  c->add_flag("--no-reprobe", con.flags.no_reprobe, "Halt on a missing witness instead of re-probing the threshold");
  c->add_option("--c", con.flags.c, "prop7: constant multiplier (polynomial grammar)")->capture_default_str();
  c->add_option("--alpha", con.flags.alpha, "prop7: digit file for alpha (default Champernowne from 1)");
  c->add_option("--cuts", con.flags.cuts, "prop7: geometric[:<r>] | all-prefixes | adaptive")->capture_default_str();
  c->add_option("--max-block", con.flags.max_block, "prop7: largest block length for dimension estimates")
      ->check(positive)
      ->capture_default_str();

  NormalityOptions nor;
  auto* n = app.add_subcommand("normality", "Census of (epsilon, k)-normality over 1..m");
  n->add_option("--base", nor.base, "Digit base")->check(base_range)->capture_default_str();
  n->add_option("--epsilon", nor.epsilon, "Absolute tolerance on block frequencies")->required();
  n->add_option("--k", nor.k, "Block length")->required()->check(positive);
  n->add_option("--range", nor.range, "Upper end m")->required()->check(positive);
  n->add_option("--targets", nor.targets, "Comma list of n, 2n, n2, n^3, 6n^2, ...")->capture_default_str();
  n->add_flag("--json", nor.json_out, "JSON report");

  VerifyOptions ver;
  std::vector<std::string> names;
  for (const auto& [name, fn] : experiments::registry()) names.push_back(name);
  auto* v = app.add_subcommand("verify", "Run a self-contained experiment and report pass/fail as JSON");
  v->add_option("--experiment", ver.experiment, "Experiment name")->required()->check(CLI::IsMember(names));
  v->add_option("--out", ver.out, "Also write the JSON report here");
  v->add_option("--param", ver.params, "Extra key=value configuration (value parsed as JSON)");
  struct Bound {
    std::string flag, key;
    enum { Int, Real, Text } kind;
  };
  const std::vector<Bound> bound{
      {"--rho", "rho", Bound::Real},         {"--digits", "digits", Bound::Int},
      {"--s", "s", Bound::Real},             {"--c", "c", Bound::Text},
      {"--base", "base", Bound::Int},        {"--limit", "limit", Bound::Int},
      {"--poly", "poly", Bound::Text},       {"--max-block", "max_block", Bound::Int},
      {"--degree", "degree", Bound::Int},    {"--elements", "elements", Bound::Int},
      {"--seed", "seed", Bound::Int},        {"--first-stage", "first_stage", Bound::Int},
      {"--window", "window", Bound::Int},    {"--probe-candidates", "probe_candidates", Bound::Int},
      {"--witness-budget", "witness_budget", Bound::Int},
      {"--epsilon", "epsilon", Bound::Real}, {"--k", "k", Bound::Int},
      {"--targets", "targets", Bound::Text}, {"--d0", "d0", Bound::Int},
      {"--growth", "growth", Bound::Real},   {"--tolerance", "tolerance", Bound::Real},
  };
  std::vector<std::string> bound_values(bound.size());
  for (std::size_t i = 0; i < bound.size(); ++i) {
    auto* opt = v->add_option(bound[i].flag, bound_values[i], "Sets config key " + bound[i].key);
    if (bound[i].kind == Bound::Int) opt->check(CLI::NonNegativeNumber);
    if (bound[i].kind == Bound::Real) opt->check(CLI::Number);
  }

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& ex) {
    std::ostringstream o, e2;
    const int code = app.exit(ex, o, e2);
    out << o.str();
    err << e2.str();
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*g) return run_generate(gen, out);
    if (*e) return run_entropy(ent, false, out);
    if (*d) return run_entropy(dimo, true, out);
    if (*c) return run_construct(con, out, err);
    if (*n) return run_normality(nor, out);
    if (*v) {
      for (std::size_t i = 0; i < bound.size(); ++i) {
        if (v->count(bound[i].flag) == 0) continue;
        const auto& val = bound_values[i];
        switch (bound[i].kind) {
          case Bound::Int: ver.config[bound[i].key] = detail::number<std::uint64_t>(bound[i].flag, val); break;
          case Bound::Real: ver.config[bound[i].key] = detail::number<double>(bound[i].flag, val); break;
          case Bound::Text: ver.config[bound[i].key] = val; break;
        }
      }
      return run_verify(std::move(ver), out);
    }
  } catch (const UsageError& ex) {
    err << "error: " << ex.what() << '\n';
    return kUsage;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return kFailed;
  }
  return kUsage;
}

}  // namespace fsdim::cli
