#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "gmc/chaos.hpp"
#include "gmc/errors.hpp"
#include "gmc/geometry.hpp"
#include "gmc/io.hpp"
#include "gmc/kernels.hpp"
#include "gmc/mollifier.hpp"
#include "gmc/parallel.hpp"
#include "gmc/phase.hpp"
#include "gmc/sampler.hpp"
#include "gmc/svg.hpp"
#include "gmc/verify.hpp"

#ifndef GMC_VERSION
#define GMC_VERSION "0.1.0"
#endif

namespace gmc {

using json = nlohmann::json;

inline constexpr const char* kCodeVersion = GMC_VERSION;

/// Config failed fail-fast validation (CLI exit status 2).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class ExperimentKind {
  PhaseScan,
  KernelCheck,
  FieldStats,
  MomentCheck,
  Cauchy,
  MollifierIndependence,
  TailCheck,
  SupProb,
  TiltCheck,
  Sobolev
};

inline const std::vector<std::pair<std::string, ExperimentKind>>& experiment_kinds() {
  static const std::vector<std::pair<std::string, ExperimentKind>> k{
      {"phase-scan", ExperimentKind::PhaseScan},
      {"kernel-check", ExperimentKind::KernelCheck},
      {"field-stats", ExperimentKind::FieldStats},
      {"moment-check", ExperimentKind::MomentCheck},
      {"cauchy", ExperimentKind::Cauchy},
      {"mollifier-independence", ExperimentKind::MollifierIndependence},
      {"tail-check", ExperimentKind::TailCheck},
      {"sup-prob", ExperimentKind::SupProb},
      {"tilt-check", ExperimentKind::TiltCheck},
      {"sobolev", ExperimentKind::Sobolev}};
  return k;
}

inline std::string to_string(ExperimentKind k) {
  for (const auto& [name, kind] : experiment_kinds())
    if (kind == k) return name;
  return "unknown";
}

struct TruncationPolicy {
  /// "auto": enabled exactly outside the L2 region.
  std::optional<bool> enabled;
  int q = 2;
  std::optional<double> lambda;  // empty = pick_lambda
  bool mollified_levels = false;
};

/// One experiment, parsed from a JSON document.
struct RunConfig {
  json raw;
  ExperimentKind kind = ExperimentKind::PhaseScan;
  int d = 1;
  std::size_t grid = 512;
  std::optional<int> n_max;
  std::vector<double> ladder;
  std::vector<cplx> gammas;
  ChaosMode mode = ChaosMode::Single;
  TruncationPolicy truncation;
  std::size_t replicas = 1000;
  std::uint64_t seed = 2026;
  std::string output = "run";
  Point f_centre{0.5, 0.5};
  double f_radius = 0.24;

  // phase-scan
  double scan_lo = -2.5, scan_hi = 2.5;
  std::size_t scan_resolution = 200, lambda_scan_resolution = 100;
  // kernel-check
  std::size_t closed_form_points = 50, dft_points = 1024, pd_grid = 64;
  int pd_levels = 8, n_cap = 10;
  // field-stats
  std::vector<int> variance_levels{2, 5, 8};
  std::size_t probes = 20;
  // sobolev
  double u = 0.75;
  // sup-prob
  double lambda = 1.6;
  std::vector<int> ks{4, 5, 6, 7, 8, 9, 10};
  std::vector<int> qs{2, 4, 6, 8};
  std::size_t event_replicas = 1000;
  // tilt-check
  double alpha = 1.1, beta = 0.25;
  std::vector<double> separations;
  double tilt_eps = 0.0078125, tilt_eps2 = 0.0078125;
  Point tilt_x{0.5, 0.5};
  // tail-check
  std::vector<double> sigmas{0.5, 1.0, 2.0, 4.0};
  std::vector<double> u_over_sigma{0, 1, 2, 3, 4, 5};

  std::string hash() const { return io::sha256_hex(raw.dump()); }
};

namespace detail {

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config field '") + key + "': " + e.what());
  }
}

inline cplx parse_gamma(const json& g) {
  if (g.is_number()) return {g.get<double>(), 0.0};
  if (g.is_array() && g.size() == 2 && g[0].is_number() && g[1].is_number()) return {g[0].get<double>(), g[1].get<double>()};
  if (g.is_object()) return {get_or(g, "re", 0.0), get_or(g, "im", 0.0)};
  throw ValidationError("gamma entries must be a number, [re, im] or {\"re\", \"im\"}");
}

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

}  // namespace detail

inline RunConfig parse_config(const json& j) {
  using detail::get_or;
  using detail::require;
  require(j.is_object(), "config must be a JSON object");
  RunConfig c;
  c.raw = j;
  const auto kind = get_or<std::string>(j, "kind", "");
  bool found = false;
  for (const auto& [name, k] : experiment_kinds())
    if (name == kind) {
      c.kind = k;
      found = true;
    }
  require(found, "unknown experiment kind '" + kind + "'");
  static const std::vector<std::string> known{
      "kind", "d", "grid", "n_max", "ladder", "gammas", "mode", "truncation", "replicas", "seed", "output",
      "test_function", "scan", "closed_form_points", "dft_points", "pd_grid", "pd_levels", "n_cap",
      "variance_levels", "probes", "u", "lambda", "ks", "qs", "event_replicas", "alpha", "beta", "separations",
      "tilt", "sigmas", "u_over_sigma", "description"};
  for (const auto& [key, _] : j.items())
    require(std::find(known.begin(), known.end(), key) != known.end(), "unknown config field '" + key + "'");

  c.d = get_or(j, "d", 1);
  require(c.d == 1 || c.d == 2, "d must be 1 or 2");
  const long grid = get_or(j, "grid", 512L);
  require(grid >= 2, "grid must have at least 2 cells per axis");
  c.grid = static_cast<std::size_t>(grid);
  if (j.contains("n_max")) c.n_max = get_or(j, "n_max", 0);
  c.ladder = get_or(j, "ladder", std::vector<double>{});
  if (j.contains("gammas")) {
    require(j["gammas"].is_array(), "gammas must be an array");
    for (const auto& g : j["gammas"]) c.gammas.push_back(detail::parse_gamma(g));
  }
  const auto mode = get_or<std::string>(j, "mode", "single");
  require(mode == "single" || mode == "two_field", "mode must be 'single' or 'two_field'");
  c.mode = mode == "single" ? ChaosMode::Single : ChaosMode::TwoField;
  if (j.contains("truncation")) {
    const auto& t = j["truncation"];
    require(t.is_object(), "truncation must be an object");
    if (t.contains("enabled") && t["enabled"].is_boolean()) c.truncation.enabled = t["enabled"].get<bool>();
    c.truncation.q = get_or(t, "q", 2);
    if (t.contains("lambda") && t["lambda"].is_number()) c.truncation.lambda = t["lambda"].get<double>();
    else require(!t.contains("lambda") || t["lambda"] == "auto", "truncation.lambda must be a number or \"auto\"");
    const auto lv = get_or<std::string>(t, "levels", "partial_sums");
    require(lv == "partial_sums" || lv == "mollified", "truncation.levels must be 'partial_sums' or 'mollified'");
    c.truncation.mollified_levels = lv == "mollified";
  }
  const long replicas = get_or(j, "replicas", 1000L);
  require(replicas >= 2, "replicas must be >= 2");
  c.replicas = static_cast<std::size_t>(replicas);
  c.seed = get_or<std::uint64_t>(j, "seed", 2026);
  c.output = get_or<std::string>(j, "output", to_string(c.kind));
  if (j.contains("test_function")) {
    const auto& f = j["test_function"];
    if (f.contains("centre")) {
      const auto v = get_or(f, "centre", std::vector<double>{});
      require(v.size() == static_cast<std::size_t>(c.d) || v.size() == 2, "test_function.centre needs d coordinates");
      c.f_centre = {v[0], v.size() > 1 ? v[1] : 0.5};
    }
    c.f_radius = get_or(f, "radius", c.f_radius);
  }
  if (j.contains("scan")) {
    const auto& s = j["scan"];
    c.scan_lo = get_or(s, "lo", c.scan_lo);
    c.scan_hi = get_or(s, "hi", c.scan_hi);
    c.scan_resolution = get_or(s, "resolution", c.scan_resolution);
    c.lambda_scan_resolution = get_or(s, "lambda_resolution", c.lambda_scan_resolution);
  }
  c.closed_form_points = get_or(j, "closed_form_points", c.closed_form_points);
  c.dft_points = get_or(j, "dft_points", c.dft_points);
  c.pd_grid = get_or(j, "pd_grid", c.pd_grid);
  c.pd_levels = get_or(j, "pd_levels", c.pd_levels);
  c.n_cap = get_or(j, "n_cap", c.n_cap);
  c.variance_levels = get_or(j, "variance_levels", c.variance_levels);
  c.probes = get_or(j, "probes", c.probes);
  c.u = get_or(j, "u", c.u);
  c.lambda = get_or(j, "lambda", c.lambda);
  c.ks = get_or(j, "ks", c.ks);
  c.qs = get_or(j, "qs", c.qs);
  c.event_replicas = get_or(j, "event_replicas", c.event_replicas);
  c.alpha = get_or(j, "alpha", c.alpha);
  c.beta = get_or(j, "beta", c.beta);
  c.separations = get_or(j, "separations", c.separations);
  if (j.contains("tilt")) {
    const auto& t = j["tilt"];
    c.tilt_eps = get_or(t, "eps", c.tilt_eps);
    c.tilt_eps2 = get_or(t, "eps2", c.tilt_eps2);
    if (t.contains("x")) {
      const auto v = get_or(t, "x", std::vector<double>{});
      require(!v.empty(), "tilt.x needs coordinates");
      c.tilt_x = {v[0], v.size() > 1 ? v[1] : 0.5};
    }
  }
  c.sigmas = get_or(j, "sigmas", c.sigmas);
  c.u_over_sigma = get_or(j, "u_over_sigma", c.u_over_sigma);
  return c;
}

inline RunConfig load_config(const std::filesystem::path& p) {
  json j;
  try {
    j = json::parse(io::read_file(p));
  } catch (const json::exception& e) {
    throw ValidationError("config " + p.string() + " is not valid JSON: " + e.what());
  } catch (const std::runtime_error& e) {
    throw ValidationError(e.what());
  }
  return parse_config(j);
}

// ---------------------------------------------------------------------------
// Resolved parameters and fail-fast validation.

struct Resolved {
  Grid grid;
  int n_max = 0;
  std::vector<double> f;
  /// Per gamma: truncation actually used.
  std::vector<Truncation> truncations;
  std::vector<PhaseLabel> labels;
  json info = json::object();
};

namespace detail {

inline Point point_in(int d, Point p) { return d == 1 ? Point{p[0], 0.0} : p; }

inline Truncation resolve_truncation(const RunConfig& c, cplx g) {
  const auto label = classify(c.d, g.real(), g.imag());
  Truncation t;
  t.enabled = c.truncation.enabled.value_or(label == PhaseLabel::SubcriticalNonL2);
  if (!t.enabled) return t;
  t.q = c.truncation.q;
  t.use_mollified_levels = c.truncation.mollified_levels;
  if (c.truncation.lambda) {
    t.lambda = *c.truncation.lambda;
  } else {
    try {
      t.lambda = pick_lambda(c.d, g.real(), g.imag());
    } catch (const PhaseError& e) {
      throw ValidationError(std::string("truncation.lambda = auto: ") + e.what());
    }
  }
  require(t.lambda > std::sqrt(2.0 * c.d), "truncation.lambda must exceed sqrt(2d)");
  require(t.q >= 1, "truncation.q must be >= 1");
  return t;
}

inline bool uses_chaos(ExperimentKind k) {
  return k == ExperimentKind::MomentCheck || k == ExperimentKind::Cauchy || k == ExperimentKind::MollifierIndependence ||
         k == ExperimentKind::Sobolev;
}

}  // namespace detail

/// Checks every precondition the run will rely on and fixes derived
/// parameters, before any sampling.
inline Resolved resolve(const RunConfig& c) {
  using detail::require;
  Resolved r;
  try {
    r.grid = Grid::uniform(c.d, c.grid);
    for (double e : c.ladder) require(e > 0.0 && e <= 1.0, "ladder entries must lie in (0, 1]");
    if (!c.ladder.empty() && c.kind != ExperimentKind::MomentCheck) check_ladder(c.ladder);
    const double eps_min = c.ladder.empty() ? 1.0 : *std::min_element(c.ladder.begin(), c.ladder.end());
    const double eps_max = c.ladder.empty() ? 1.0 : *std::max_element(c.ladder.begin(), c.ladder.end());
    switch (c.kind) {
      case ExperimentKind::PhaseScan:
        require(c.scan_hi > c.scan_lo, "scan.hi must exceed scan.lo");
        require(c.scan_resolution >= 2 && c.lambda_scan_resolution >= 2, "scan resolutions must be >= 2");
        break;
      case ExperimentKind::TailCheck:
        for (double s : c.sigmas) require(s > 0.0, "sigmas must be positive");
        for (double k : c.u_over_sigma) require(k >= 0.0, "u_over_sigma must be nonnegative");
        break;
      case ExperimentKind::KernelCheck:
        require(c.closed_form_points >= 1 && c.dft_points >= 4 && c.pd_grid >= 2 && c.pd_levels >= 1,
                "kernel-check sizes out of range");
        for (double e : c.ladder) require(!shrink_domain(r.grid.box(), e).empty, "D_eps is empty for a ladder entry");
        if (!c.ladder.empty()) check_ladder(c.ladder);
        break;
      case ExperimentKind::FieldStats: {
        require(!c.ladder.empty(), "field-stats needs a ladder of eps values");
        int need = required_n_max(eps_min);
        for (int n : c.variance_levels) {
          require(n >= 0, "variance_levels must be >= 0");
          need = std::max(need, n);
        }
        r.n_max = c.n_max.value_or(need);
        require(r.n_max >= need, "n_max too small for the requested levels");
        for (double e : c.ladder) {
          check_resolution(r.grid, e);
          require(!shrink_domain(r.grid.box(), e).empty, "D_eps is empty for a ladder entry");
        }
        require(c.probes >= 1, "probes must be >= 1");
        break;
      }
      case ExperimentKind::SupProb: {
        require(c.lambda > std::sqrt(2.0 * c.d), "lambda must exceed sqrt(2d)");
        int need = 1;
        for (int k : c.ks) need = std::max(need, k);
        for (int q : c.qs) need = std::max(need, q);
        for (int k : c.ks) require(k >= 1, "ks must be >= 1");
        for (int q : c.qs) require(q >= 1, "qs must be >= 1");
        r.n_max = c.n_max.value_or(need);
        require(r.n_max >= need, "n_max below the largest requested level");
        require(c.ks.size() >= 3 || c.ks.empty(), "ks needs at least three levels for the decay fit");
        r.f = bump_function(r.grid, detail::point_in(c.d, c.f_centre), c.f_radius);
        require(!support_points(r.f).empty(), "test function has empty support on the grid");
        break;
      }
      case ExperimentKind::TiltCheck: {
        const auto label = classify(c.d, c.alpha, c.beta);
        require(label == PhaseLabel::SubcriticalNonL2,
                "tilt-check needs subcritical_non_L2 (alpha, beta), got " + to_string(label));
        Truncation t;
        t.q = c.truncation.q;
        t.lambda = c.truncation.lambda.value_or(pick_lambda(c.d, c.alpha, c.beta));
        require(t.lambda > std::sqrt(2.0 * c.d), "lambda must exceed sqrt(2d)");
        r.truncations.push_back(t);
        r.n_max = c.n_max.value_or(10);
        require(t.q >= 1 && t.q <= r.n_max, "truncation.q must lie in 1..n_max");
        require(c.separations.size() >= 4, "tilt-check needs at least four separations");
        require(c.tilt_eps2 > 0.0 && c.tilt_eps2 <= c.tilt_eps && c.tilt_eps <= 1.0, "need 0 < tilt.eps2 <= tilt.eps <= 1");
        const Box box = Box::unit(c.d);
        const Point x = detail::point_in(c.d, c.tilt_x);
        require(shrink_domain(box, c.tilt_eps).contains(x), "tilt point x lies outside D_eps");
        for (double s : c.separations) {
          require(s > 0.0, "separations must be positive");
          require(shrink_domain(box, c.tilt_eps2).contains({x[0] + s, x[1]}), "tilt point y lies outside D_eps'");
        }
        break;
      }
      default: break;
    }
    if (detail::uses_chaos(c.kind)) {
      require(!c.ladder.empty(), "this experiment needs a ladder of eps values");
      require(!c.gammas.empty(), "this experiment needs at least one gamma");
      if (c.kind == ExperimentKind::Sobolev) require(c.u > c.d / 2.0, "u must exceed d/2");
      int need = required_n_max(eps_min);
      r.n_max = c.n_max.value_or(need);
      require(r.n_max >= need, "n_max=" + std::to_string(r.n_max) + " is below ceil(log 1/eps_min) + 2");
      for (double e : c.ladder) check_resolution(r.grid, e);
      r.f = bump_function(r.grid, detail::point_in(c.d, c.f_centre), c.f_radius);
      require(!support_points(r.f).empty(), "test function has empty support on the grid");
      check_support(r.f, r.grid, eps_max);
      for (const auto& g : c.gammas) {
        const auto label = classify(c.d, g.real(), g.imag());
        require(is_subcritical(label), "gamma = " + io::format_double(g.real()) + "+" + io::format_double(g.imag()) +
                                           "i is " + to_string(label) + ", need a subcritical phase");
        auto t = detail::resolve_truncation(c, g);
        if (c.kind != ExperimentKind::MomentCheck)
          require(t.enabled || label == PhaseLabel::L2Subcritical,
                  "truncation must be enabled outside the L2 region");
        if (t.enabled) {
          require(t.q <= r.n_max, "truncation.q exceeds n_max");
          if (t.use_mollified_levels)
            for (int k = t.q; k <= r.n_max; ++k) check_resolution(r.grid, std::exp(-double(k)));
        }
        if (c.kind == ExperimentKind::MomentCheck) t.enabled = false;
        r.truncations.push_back(t);
        r.labels.push_back(label);
      }
    }
  } catch (const ValidationError&) {
    throw;
  } catch (const NumericError&) {
    throw;
  } catch (const std::exception& e) {
    throw ValidationError(e.what());
  }
  r.info["n_max"] = r.n_max;
  r.info["grid_hash"] = io::grid_hash(r.grid);
  if (!r.truncations.empty()) {
    json ts = json::array();
    for (const auto& t : r.truncations)
      ts.push_back({{"enabled", t.enabled}, {"q", t.q}, {"lambda", t.lambda}, {"mollified_levels", t.use_mollified_levels}});
    r.info["truncation"] = ts;
  }
  if (!r.f.empty()) r.info["q0_f"] = q0_of(r.f, r.grid), r.info["integral_f"] = integrate(r.f, r.grid);
  return r;
}

// ---------------------------------------------------------------------------
// Run outputs.

struct Verdict {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct RunResult {
  std::filesystem::path dir;
  std::vector<Verdict> verdicts;
  std::map<std::string, std::string> csv_hashes;
  bool all_pass() const {
    return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
  }
  const Verdict* find(const std::string& name) const {
    for (const auto& v : verdicts)
      if (v.name == name) return &v;
    return nullptr;
  }
};

class RunWriter {
 public:
  explicit RunWriter(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

  void csv(const std::string& name, const io::CsvWriter& w) {
    const std::string data = w.str();
    io::write_file(dir_ / name, data);
    hashes_[name] = io::sha256_hex(data);
  }
  void text(const std::string& name, const std::string& data) { io::write_file(dir_ / name, data); }
  void svg(const std::string& name, const std::string& data) { io::write_file(dir_ / name, data); }
  void verdict(std::string name, bool pass, std::string detail) {
    verdicts_.push_back({std::move(name), pass, std::move(detail)});
  }

  const std::filesystem::path& dir() const { return dir_; }
  const std::map<std::string, std::string>& hashes() const { return hashes_; }
  const std::vector<Verdict>& verdicts() const { return verdicts_; }

 private:
  std::filesystem::path dir_;
  std::map<std::string, std::string> hashes_;
  std::vector<Verdict> verdicts_;
};

namespace detail {

inline std::string gamma_tag(std::size_t i) { return "g" + std::to_string(i); }

inline std::string fmt_gamma(cplx g) {
  return io::format_double(g.real()) + (g.imag() < 0 ? "-" : "+") + io::format_double(std::abs(g.imag())) + "i";
}

inline std::string num(double v) { return io::format_double(v); }

inline ChaosParams chaos_params(const RunConfig& c, const Resolved& r, std::size_t i) {
  ChaosParams p;
  p.mode = c.mode;
  p.gamma = c.gammas[i];
  p.truncation = r.truncations[i];
  p.f = r.f;
  return p;
}

inline std::vector<Level> chaos_levels(const RunConfig& c, const Resolved& r, bool both_profiles) {
  std::vector<Level> lv;
  for (double e : c.ladder) {
    lv.push_back({e, MollifierProfile::StandardBump});
    if (both_profiles) lv.push_back({e, MollifierProfile::QuadraticBump});
  }
  for (const auto& t : r.truncations)
    if (t.enabled && t.use_mollified_levels)
      for (int k = t.q; k <= r.n_max; ++k) lv.push_back({std::exp(-double(k)), MollifierProfile::StandardBump});
  return lv;
}

inline void chaos_rows(io::CsvWriter& w, const std::vector<ReplicaChaos>& rows) {
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (const auto& v : rows[r].values) w.row(r, v.eps, v.value.real(), v.value.imag(), v.truncated, v.overflow);
}

inline io::CsvWriter ladder_csv(const LadderReport& rep) {
  io::CsvWriter w({"eps", "eps2", "value", "se", "change", "change_se"});
  for (const auto& s : rep.steps) w.row(s.eps, s.eps2, s.value, s.se, s.change, s.change_se);
  return w;
}

inline std::string ladder_detail(const LadderReport& rep) {
  std::string s = "values";
  for (const auto& st : rep.steps) s += " " + num(st.value);
  s += "; last/first=" + num(rep.steps.back().value / rep.steps.front().value);
  s += "; excluded=" + std::to_string(rep.overflow_excluded);
  return s;
}

inline svg::Series ladder_series(const LadderReport& rep, std::string label, std::string color) {
  svg::Series s;
  s.label = std::move(label);
  s.color = std::move(color);
  for (const auto& st : rep.steps) {
    s.x.push_back(st.eps2);
    s.y.push_back(st.value);
    s.err.push_back(st.se);
  }
  return s;
}

inline const char* palette(std::size_t i) {
  static const char* c[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  return c[i % 6];
}

// ----- individual experiments ------------------------------------------------

inline void run_phase_scan(const RunConfig& c, RunWriter& out) {
  const std::size_t n = c.scan_resolution;
  io::CsvWriter w({"alpha", "beta", "label"});
  svg::Raster ras;
  ras.title = "phase diagram, d=" + std::to_string(c.d);
  ras.xlabel = "alpha";
  ras.ylabel = "beta";
  ras.x0 = ras.y0 = c.scan_lo;
  ras.x1 = ras.y1 = c.scan_hi;
  ras.nx = ras.ny = n;
  ras.names = {"L2_subcritical", "subcritical_non_L2", "boundary", "phase_II_glassy", "phase_III"};
  ras.colors = {"#4c9be8", "#f2c14e", "#444444", "#d1495b", "#66a182"};
  const double step = (c.scan_hi - c.scan_lo) / double(n);
  bool symmetric = true;
  std::size_t labelled = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const double b = c.scan_lo + (double(j) + 0.5) * step;
    for (std::size_t i = 0; i < n; ++i) {
      const double a = c.scan_lo + (double(i) + 0.5) * step;
      const auto l = classify(c.d, a, b);
      w.row(a, b, to_string(l));
      ras.cells.push_back(static_cast<int>(l));
      ++labelled;
      symmetric = symmetric && classify(c.d, -a, b) == l && classify(c.d, a, -b) == l && classify(c.d, -a, -b) == l;
    }
  }
  out.csv("phase_scan.csv", w);
  out.svg("phase_diagram.svg", ras.str());
  out.verdict("all_points_labelled", labelled == n * n && w.data_rows() == n * n, std::to_string(labelled) + " rows");
  out.verdict("sign_symmetry", symmetric, "");
  const std::size_t m = c.lambda_scan_resolution;
  const double s2 = (c.scan_hi - c.scan_lo) / double(m);
  std::size_t checked = 0, ok = 0;
  io::CsvWriter lw({"alpha", "beta", "lambda"});
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t i = 0; i < m; ++i) {
      const double a = c.scan_lo + (double(i) + 0.5) * s2, b = c.scan_lo + (double(j) + 0.5) * s2;
      if (classify(c.d, a, b) != PhaseLabel::SubcriticalNonL2) continue;
      const double lam = pick_lambda(c.d, a, b);
      ++checked;
      ok += lambda_admissible(c.d, a, b, lam);
      lw.row(a, b, lam);
    }
  out.csv("lambda_scan.csv", lw);
  out.verdict("lambda_admissible", ok == checked, std::to_string(ok) + "/" + std::to_string(checked));
}

inline void run_tail_check(const RunConfig& c, RunWriter& out) {
  const auto rows = tail_bound_check(c.sigmas, c.u_over_sigma);
  io::CsvWriter w({"sigma", "u", "tail", "bound", "literal_bound", "holds", "literal_holds"});
  bool all = true;
  std::optional<bool> literal_at_3;
  svg::Chart ch("Gaussian tail vs bounds (sigma = 1)", "u", "probability");
  ch.log_y();
  svg::Series t{"tail", {}, {}, {}, "#1f77b4"}, b{"2exp(-u^2/2s^2)", {}, {}, {}, "#2ca02c"},
      l{"2exp(-u^2/s^2)", {}, {}, {}, "#d62728"};
  for (const auto& r : rows) {
    w.row(r.sigma, r.u, r.tail, r.bound, r.literal_bound, r.holds, r.literal_holds);
    all = all && r.holds;
    if (r.sigma == 1.0 && r.u == 3.0) literal_at_3 = r.literal_holds;
    if (r.sigma == 1.0) {
      t.x.push_back(r.u), t.y.push_back(r.tail);
      b.x.push_back(r.u), b.y.push_back(r.bound);
      l.x.push_back(r.u), l.y.push_back(r.literal_bound);
    }
  }
  out.csv("tail_bound.csv", w);
  ch.add(t).add(b).add(l);
  out.svg("tail_bound.svg", ch.str());
  out.verdict("corrected_bound_holds", all, std::to_string(rows.size()) + " table entries");
  if (literal_at_3)
    out.verdict("literal_bound_discrepancy_recorded", !*literal_at_3,
                "tail(1,3)=" + num(0.5 * std::erfc(3.0 / std::numbers::sqrt2)) + " vs 2e^-9=" + num(2.0 * std::exp(-9.0)));
}

inline void run_kernel_check(const RunConfig& c, const Resolved& r, RunWriter& out, unsigned workers) {
  const auto spec = KernelSpec::reference(c.d);
  // Closed form (d = 1) on r in (0, 1/e].
  if (c.d == 1 && c.closed_form_points > 0) {
    io::CsvWriter w({"r", "k_exact", "closed_form", "abs_error"});
    double worst = 0.0;
    for (std::size_t i = 0; i < c.closed_form_points; ++i) {
      // Log-spaced from 1e-6 up to 1/e.
      const double t = c.closed_form_points == 1 ? 1.0 : double(i) / double(c.closed_form_points - 1);
      const double rr = std::exp(std::log(1e-6) * (1.0 - t) + (-1.0) * t);
      const double k = k_exact(spec, rr), cf = std::log(1.0 / rr) - 2.0 + std::numbers::e * rr;
      worst = std::max(worst, std::abs(k - cf));
      w.row(rr, k, cf, std::abs(k - cf));
    }
    out.csv("kernel_closed_form.csv", w);
    out.verdict("closed_form", worst <= 1e-9, "max abs error " + num(worst));
  }
  // Positive definiteness.
  {
    const auto [fmin, fimag] = kappa_spectrum_min(c.d, c.dft_points);
    const Grid pg = Grid::uniform(c.d, c.pd_grid);
    io::CsvWriter w({"level", "min_eigenvalue", "trace", "relative"});
    bool ok = true;
    for (int n = 1; n <= c.pd_levels; ++n) {
      const auto rep = pd_check(spec, pg, {GramSpec::Kind::Increment, n});
      w.row(n, rep.min_eigenvalue, rep.trace, rep.min_eigenvalue / rep.trace);
      ok = ok && rep.min_eigenvalue >= -1e-8 * rep.trace;
    }
    out.csv("pd_check.csv", w);
    io::CsvWriter fw({"points", "fourier_min", "fourier_max_imag"});
    fw.row(c.dft_points, fmin, fimag);
    out.csv("kappa_spectrum.csv", fw);
    out.verdict("kappa_spectrum_nonnegative", fmin >= -1e-8, "min " + num(fmin));
    out.verdict("gram_min_eigenvalue", ok, "levels 1.." + std::to_string(c.pd_levels));
  }
  // Mollifier profile and one exported kernel table.
  if (!c.ladder.empty()) {
    const double e0 = c.ladder.front();
    const auto moll = MollifierSpec::standard(c.d);
    const Grid tg = r.grid;
    if (tg.max_spacing() <= e0 / 4.0) out.csv("mollifier_profile.csv", io::profile_csv(discrete_kernel(moll, e0, tg), tg));
    const auto table = mollified_table_midpoint(spec, moll, tg, e0, e0);
    out.csv("kernel_table.csv", table.to_csv());
    out.text("kernel_table.json", table_sidecar(spec, table) + "\n");
    // Suprema along the ladder.
    io::CsvWriter w({"kind", "eps", "supremum"});
    svg::Chart ch("kernel estimate suprema", "eps", "supremum");
    ch.log_x();
    std::size_t idx = 0;
    for (auto kind : {KernelEstimate::Mollified, KernelEstimate::PartialMollified}) {
      const auto rep = kernel_estimate_check(spec, kind, tg, c.ladder, c.n_cap, workers);
      svg::Series s{to_string(kind), {}, {}, {}, palette(idx++)};
      std::string det;
      for (const auto& row : rep.rows) {
        w.row(to_string(kind), row.eps, row.supremum);
        s.x.push_back(row.eps);
        s.y.push_back(row.supremum);
        det += num(row.supremum) + " ";
      }
      ch.add(s);
      out.verdict(to_string(kind) + "_stable", rep.stable, det + "max ratio " + num(rep.max_ratio));
    }
    out.csv("kernel_estimates.csv", w);
    out.svg("kernel_estimates.svg", ch.str());
  }
}

inline void run_field_stats(const RunConfig& c, const Resolved& r, RunWriter& out, unsigned workers) {
  std::vector<Level> lv;
  for (double e : c.ladder) lv.push_back({e, MollifierProfile::StandardBump});
  const Lab lab(KernelSpec::reference(c.d), r.grid, r.n_max, lv, workers);
  const auto& g = lab.grid();
  // Probe pairs drawn from a dedicated stream of the master seed.
  struct Probe {
    double eps, eps2;
    std::size_t i, j;
  };
  std::vector<Probe> probes;
  KeyedStream pick(c.seed, 0, 0, 7);
  for (std::size_t p = 0; p < c.probes; ++p) {
    const double a = c.ladder[std::uniform_int_distribution<std::size_t>(0, c.ladder.size() - 1)(pick)];
    const double b = c.ladder[std::uniform_int_distribution<std::size_t>(0, c.ladder.size() - 1)(pick)];
    const double e = std::max(a, b), e2 = std::min(a, b);
    const auto da = shrink_domain(g.box(), e), db = shrink_domain(g.box(), e2);
    std::vector<std::size_t> ia, ib;
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (da.contains(g.point(k))) ia.push_back(k);
      if (db.contains(g.point(k))) ib.push_back(k);
    }
    const auto i = ia[std::uniform_int_distribution<std::size_t>(0, ia.size() - 1)(pick)];
    // Second point within a few eps of the first so the covariance is not trivially zero.
    std::vector<std::size_t> near;
    for (auto k : ib)
      if (distance(g.point(k), g.point(i)) <= 4.0 * e) near.push_back(k);
    const auto j = near[std::uniform_int_distribution<std::size_t>(0, near.size() - 1)(pick)];
    probes.push_back({e, e2, i, j});
  }
  const std::size_t mid = g.index(g.cells(0) / 2, c.d == 2 ? g.cells(1) / 2 : 0);
  struct Row {
    std::vector<double> var, cov;
  };
  auto rows = map_replicas(lab, c.seed, c.replicas, false, [&](FieldSample& s, FieldSample*) {
    Row row;
    for (int n : c.variance_levels) row.var.push_back(s.y(n)[mid] * s.y(n)[mid]);
    for (const auto& p : probes) row.cov.push_back(s.x(p.eps).at(p.i) * s.x(p.eps2).at(p.j));
    return row;
  });
  io::CsvWriter vw({"n", "estimate", "se", "oracle", "z"});
  bool vok = true;
  std::string vdet;
  for (std::size_t k = 0; k < c.variance_levels.size(); ++k) {
    std::vector<double> v(c.replicas);
    for (std::size_t rr = 0; rr < c.replicas; ++rr) v[rr] = rows[rr].var[k];
    const int n = c.variance_levels[k];
    const auto e = make_estimate("var_y", std::span<const double>(v), {}, double(n));
    vw.row(n, e.estimate.real(), e.se_re, double(n), e.z_re);
    vok = vok && e.within();
    vdet += "n=" + std::to_string(n) + " z=" + num(e.z_re) + " ";
  }
  out.csv("field_variance.csv", vw);
  out.verdict("variance_matches_n", vok, vdet);
  io::CsvWriter cw({"eps", "eps2", "x", "y", "estimate", "se", "oracle", "z"});
  bool cok = true;
  double zmax = 0.0;
  svg::Chart ch("covariance probes: z-scores", "probe", "z");
  svg::Series zs{"z", {}, {}, {}, "#1f77b4"};
  zs.line = false;
  for (std::size_t k = 0; k < probes.size(); ++k) {
    const auto& p = probes[k];
    std::vector<double> v(c.replicas);
    for (std::size_t rr = 0; rr < c.replicas; ++rr) v[rr] = rows[rr].cov[k];
    const double oracle = lab.table(p.eps, MollifierProfile::StandardBump, p.eps2, MollifierProfile::StandardBump)(p.i, p.j);
    const auto e = make_estimate("cov_x", std::span<const double>(v), {}, oracle);
    cw.row(p.eps, p.eps2, g.point(p.i)[0], g.point(p.j)[0], e.estimate.real(), e.se_re, oracle, e.z_re);
    cok = cok && e.within();
    zmax = std::max(zmax, std::abs(e.z_re));
    zs.x.push_back(double(k));
    zs.y.push_back(e.z_re);
  }
  ch.add(zs).hline({4.0, "+4", "#d62728"}).hline({-4.0, "-4", "#d62728"});
  out.csv("field_covariance.csv", cw);
  out.svg("field_covariance_z.svg", ch.str());
  out.verdict("covariance_matches_kernel", cok, "max |z| " + num(zmax) + " over " + std::to_string(probes.size()) + " probes");
}

inline void run_moment_check(const RunConfig& c, const Resolved& r, RunWriter& out, unsigned workers) {
  const Lab lab(KernelSpec::reference(c.d), r.grid, r.n_max, chaos_levels(c, r, false), workers);
  const double integral = integrate(r.f, r.grid);
  io::CsvWriter mw({"estimand", "gamma_re", "gamma_im", "eps", "estimate_re", "estimate_im", "se_re", "se_im",
                    "oracle_re", "oracle_im", "z_re", "z_im", "excluded"});
  bool mean_ok = true, second_ok = true, any_second = false;
  std::string mean_det, second_det;
  svg::Chart ch("moment z-scores", "check", "z");
  svg::Series zr{"z (real)", {}, {}, {}, "#1f77b4"}, zi{"z (imag)", {}, {}, {}, "#d62728"};
  zr.line = zi.line = false;
  double pos = 0.0;
  for (std::size_t gi = 0; gi < c.gammas.size(); ++gi) {
    const auto p = chaos_params(c, r, gi);
    std::vector<ReplicaChaos> rows = map_replicas(lab, c.seed, c.replicas, c.mode == ChaosMode::TwoField,
                                                  [&](FieldSample& s, FieldSample* s2) {
                                                    ReplicaChaos rc;
                                                    for (double e : c.ladder) {
                                                      rc.values.push_back(chaos_at(lab, s, s2, p, {e}));
                                                      rc.overflow = rc.overflow || rc.values.back().overflow;
                                                    }
                                                    return rc;
                                                  });
    io::CsvWriter vw({"replica", "eps", "re", "im", "truncated_flag", "overflow_flag"});
    chaos_rows(vw, rows);
    out.csv("chaos_" + gamma_tag(gi) + ".csv", vw);
    for (std::size_t l = 0; l < c.ladder.size(); ++l) {
      std::vector<cplx> m(c.replicas), m2(c.replicas);
      std::vector<char> excl(c.replicas);
      for (std::size_t rr = 0; rr < c.replicas; ++rr) {
        m[rr] = rows[rr].values[l].value;
        m2[rr] = std::norm(m[rr]);
        excl[rr] = rows[rr].values[l].overflow;
      }
      const auto e = make_estimate("mean", m, excl, cplx(integral, 0.0));
      mw.row("E[M]", p.gamma.real(), p.gamma.imag(), c.ladder[l], e.estimate.real(), e.estimate.imag(), e.se_re,
             e.se_im, integral, 0.0, e.z_re, e.z_im, e.overflow_excluded);
      mean_ok = mean_ok && e.within();
      mean_det += fmt_gamma(p.gamma) + "@" + num(c.ladder[l]) + " z=(" + num(e.z_re) + "," + num(e.z_im) + ") ";
      zr.x.push_back(pos), zr.y.push_back(e.z_re), zi.x.push_back(pos), zi.y.push_back(e.z_im);
      pos += 1.0;
      if (r.labels[gi] == PhaseLabel::L2Subcritical && c.mode == ChaosMode::Single) {
        any_second = true;
        const double oracle =
            second_moment_oracle(lab.table(c.ladder[l], MollifierProfile::StandardBump, c.ladder[l], MollifierProfile::StandardBump),
                                 p.gamma, r.f);
        const auto e2 = make_estimate("second", m2, excl, cplx(oracle, 0.0));
        mw.row("E[M conj(M)]", p.gamma.real(), p.gamma.imag(), c.ladder[l], e2.estimate.real(), 0.0, e2.se_re, 0.0,
               oracle, 0.0, e2.z_re, 0.0, e2.overflow_excluded);
        second_ok = second_ok && e2.within();
        second_det += fmt_gamma(p.gamma) + "@" + num(c.ladder[l]) + " z=" + num(e2.z_re) + " ";
        zr.x.push_back(pos), zr.y.push_back(e2.z_re);
        pos += 1.0;
      }
    }
  }
  out.csv("moments.csv", mw);
  ch.add(zr).add(zi).hline({4.0, "+4", "#999999"}).hline({-4.0, "-4", "#999999"});
  out.svg("moment_z_scores.svg", ch.str());
  out.verdict("mean_identity", mean_ok, mean_det);
  if (any_second) out.verdict("second_moment_oracle", second_ok, second_det);
}

inline void run_ladder(const RunConfig& c, const Resolved& r, RunWriter& out, unsigned workers) {
  const bool indep = c.kind == ExperimentKind::MollifierIndependence;
  const Lab lab(KernelSpec::reference(c.d), r.grid, r.n_max, chaos_levels(c, r, indep), workers);
  svg::Chart ch(indep ? "E|M_eps(theta) - M_eps(theta')|^2" : "E|M_eps - M_eps'|^2", indep ? "eps" : "eps'",
                "mean squared distance");
  ch.log_x().log_y();
  for (std::size_t gi = 0; gi < c.gammas.size(); ++gi) {
    const auto p = chaos_params(c, r, gi);
    std::vector<ReplicaChaos> rows;
    const auto rep = indep ? mollifier_independence(lab, p, c.ladder, c.replicas, c.seed, &rows)
                           : cauchy_ladder(lab, p, c.ladder, c.replicas, c.seed, &rows);
    io::CsvWriter vw({"replica", "eps", "re", "im", "truncated_flag", "overflow_flag"});
    chaos_rows(vw, rows);
    out.csv("chaos_" + gamma_tag(gi) + ".csv", vw);
    out.csv("ladder_" + gamma_tag(gi) + ".csv", ladder_csv(rep));
    ch.add(ladder_series(rep, "gamma=" + fmt_gamma(p.gamma), palette(gi)));
    out.verdict(std::string(indep ? "independence_trend_" : "cauchy_trend_") + gamma_tag(gi), rep.decreasing,
                "gamma=" + fmt_gamma(p.gamma) + (p.truncation.enabled ? " q=" + std::to_string(p.truncation.q) +
                                                                            " lambda=" + num(p.truncation.lambda)
                                                                      : std::string(" untruncated")) +
                    "; " + ladder_detail(rep));
  }
  out.svg(indep ? "independence_ladder.svg" : "cauchy_ladder.svg", ch.str());
}

inline void run_sobolev(const RunConfig& c, const Resolved& r, RunWriter& out, unsigned workers) {
  const Lab lab(KernelSpec::reference(c.d), r.grid, r.n_max, chaos_levels(c, r, false), workers);
  io::CsvWriter w({"eps", "eps2", "u", "distance2", "se"});
  svg::Chart ch("H^-u distance between consecutive levels", "eps'", "distance^2");
  ch.log_x().log_y();
  for (std::size_t gi = 0; gi < c.gammas.size(); ++gi) {
    const auto p = chaos_params(c, r, gi);
    const auto rep = sobolev_ladder(lab, p, c.ladder, c.u, c.replicas, c.seed);
    for (const auto& s : rep.steps) w.row(s.eps, s.eps2, c.u, s.value, s.se);
    out.csv("ladder_" + gamma_tag(gi) + ".csv", ladder_csv(rep));
    ch.add(ladder_series(rep, "gamma=" + fmt_gamma(p.gamma), palette(gi)));
    out.verdict("sobolev_trend_" + gamma_tag(gi), rep.decreasing,
                "gamma=" + fmt_gamma(p.gamma) + " u=" + num(c.u) + "; " + ladder_detail(rep));
  }
  out.csv("sobolev.csv", w);
  out.svg("sobolev_ladder.svg", ch.str());
}

inline void run_sup_prob(const RunConfig& c, const Resolved& r, RunWriter& out, unsigned workers) {
  const Lab lab(KernelSpec::reference(c.d), r.grid, r.n_max, {}, workers);
  const auto rep = sup_field_prob(lab, r.f, c.lambda, c.ks, c.qs, c.replicas, c.event_replicas, c.seed);
  io::CsvWriter sw({"k", "plain", "plain_se", "importance", "importance_se"});
  svg::Chart ch("P(sup Y_k > lambda k)", "k", "probability");
  ch.log_y();
  svg::Series a{"plain", {}, {}, {}, "#1f77b4"}, b{"importance sampling", {}, {}, {}, "#d62728"};
  for (const auto& row : rep.sup_rows) {
    sw.row(row.k, row.plain.estimate.real(), row.plain.se_re, row.importance.estimate.real(), row.importance.se_re);
    a.x.push_back(row.k), a.y.push_back(row.plain.estimate.real()), a.err.push_back(row.plain.se_re);
    b.x.push_back(row.k), b.y.push_back(row.importance.estimate.real()), b.err.push_back(row.importance.se_re);
  }
  out.csv("sup_prob.csv", sw);
  ch.add(a).add(b);
  out.svg("sup_prob.svg", ch.str());
  io::CsvWriter ew({"q", "prob", "se"});
  std::string edet;
  for (const auto& row : rep.event_rows) {
    ew.row(row.q, row.prob.estimate.real(), row.prob.se_re);
    edet += "q=" + std::to_string(row.q) + ":" + num(row.prob.estimate.real()) + " ";
  }
  out.csv("event_prob.csv", ew);
  if (!rep.event_rows.empty()) {
    out.verdict("event_prob_increasing", rep.event_increasing, edet);
    const double last = rep.event_rows.back().prob.estimate.real();
    out.verdict("event_prob_at_largest_q", last >= 0.99, "P=" + num(last) + " at q=" + std::to_string(rep.event_rows.back().q));
  }
  if (!rep.sup_rows.empty())
    out.verdict("sup_prob_log_linear_decay", rep.decay_linear,
                "slope=" + num(rep.log_fit.slope) + " +- " + num(rep.log_fit.slope_se) + " R2=" + num(rep.log_fit.r2));
}

inline void run_tilt_check(const RunConfig& c, const Resolved& r, RunWriter& out, unsigned workers) {
  const auto& t = r.truncations.front();
  const auto spec = KernelSpec::reference(c.d);
  const auto rep = tilted_event_prob(spec, detail::point_in(c.d, c.tilt_x), c.separations, c.tilt_eps, c.tilt_eps2,
                                     t.q, t.lambda, c.alpha, r.n_max, c.replicas, c.seed, workers);
  io::CsvWriter w({"separation", "prob", "se"});
  svg::Chart ch("tilted event probability", "separation", "probability");
  ch.log_x().log_y();
  svg::Series s{"P~[A_q(x,y)]", {}, {}, {}, "#1f77b4"};
  for (const auto& row : rep.rows) {
    w.row(row.separation, row.prob.estimate.real(), row.prob.se_re);
    s.x.push_back(row.separation), s.y.push_back(row.prob.estimate.real()), s.err.push_back(row.prob.se_re);
  }
  out.csv("tilted_event.csv", w);
  ch.add(s);
  out.svg("tilted_event.svg", ch.str());
  out.verdict("tilted_decay_exponent", rep.bound_holds,
              "fitted exponent " + num(rep.fit.slope) + " +- " + num(rep.fit.slope_se) + " vs (2a-l)^2/2 - 0.3 = " +
                  num(rep.target - 0.3) + " (lambda=" + num(t.lambda) + ")");
}

}  // namespace detail

inline json manifest_json(const RunConfig& c, const Resolved& r, const RunWriter& w) {
  json m;
  m["code_version"] = kCodeVersion;
  m["config"] = c.raw;
  m["config_hash"] = c.hash();
  m["resolved"] = r.info;
  m["csv"] = w.hashes();
  return m;
}

inline json verdicts_json(const std::vector<Verdict>& vs) {
  json arr = json::array();
  bool all = true;
  for (const auto& v : vs) {
    arr.push_back({{"name", v.name}, {"pass", v.pass}, {"detail", v.detail}});
    all = all && v.pass;
  }
  return {{"all_pass", all}, {"verdicts", arr}};
}

/// Executes one experiment into `dir` (defaults to the config's output).
inline RunResult run(const RunConfig& c, std::optional<std::filesystem::path> dir = std::nullopt,
                     unsigned workers = default_workers()) {
  const Resolved r = resolve(c);
  RunWriter out(dir.value_or(std::filesystem::path(c.output)));
  switch (c.kind) {
    case ExperimentKind::PhaseScan: detail::run_phase_scan(c, out); break;
    case ExperimentKind::TailCheck: detail::run_tail_check(c, out); break;
    case ExperimentKind::KernelCheck: detail::run_kernel_check(c, r, out, workers); break;
    case ExperimentKind::FieldStats: detail::run_field_stats(c, r, out, workers); break;
    case ExperimentKind::MomentCheck: detail::run_moment_check(c, r, out, workers); break;
    case ExperimentKind::Cauchy:
    case ExperimentKind::MollifierIndependence: detail::run_ladder(c, r, out, workers); break;
    case ExperimentKind::Sobolev: detail::run_sobolev(c, r, out, workers); break;
    case ExperimentKind::SupProb: detail::run_sup_prob(c, r, out, workers); break;
    case ExperimentKind::TiltCheck: detail::run_tilt_check(c, r, out, workers); break;
  }
  out.text("manifest.json", manifest_json(c, r, out).dump(2) + "\n");
  out.text("verdicts.json", verdicts_json(out.verdicts()).dump(2) + "\n");
  return {out.dir(), out.verdicts(), out.hashes()};
}

struct ReplayResult {
  bool replay_mode = true;  // false when the recorded config hash no longer matches
  bool identical = false;
  std::vector<std::string> differing;
  RunResult run;
};

/// Refused replays (code version mismatch, unreadable manifest).
class ReplayError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Re-executes the config recorded in a manifest and compares CSV hashes.
inline ReplayResult replay(const std::filesystem::path& manifest_path, const std::filesystem::path& out_dir,
                           unsigned workers = default_workers()) {
  json m;
  try {
    m = json::parse(io::read_file(manifest_path));
  } catch (const std::exception& e) {
    throw ReplayError("cannot read manifest " + manifest_path.string() + ": " + e.what());
  }
  if (!m.contains("code_version") || !m.contains("config") || !m.contains("csv"))
    throw ReplayError("manifest " + manifest_path.string() + " lacks code_version/config/csv");
  const auto version = m["code_version"].get<std::string>();
  if (version != kCodeVersion)
    throw ReplayError("manifest was written by code version " + version + ", this is " + kCodeVersion +
                      "; refusing to replay");
  const RunConfig c = parse_config(m["config"]);
  ReplayResult res;
  res.replay_mode = m.value("config_hash", std::string()) == c.hash();
  res.run = run(c, out_dir, workers);
  const auto recorded = m["csv"].get<std::map<std::string, std::string>>();
  for (const auto& [name, h] : recorded) {
    auto it = res.run.csv_hashes.find(name);
    if (it == res.run.csv_hashes.end() || it->second != h) res.differing.push_back(name);
  }
  for (const auto& [name, h] : res.run.csv_hashes)
    if (!recorded.count(name)) res.differing.push_back(name);
  res.identical = res.differing.empty();
  return res;
}

}  // namespace gmc
