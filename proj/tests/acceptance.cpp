// Runs every experiment in configs/ with 8 workers, replays each with one
// worker, and prints one PASS/FAIL line per acceptance criterion.
//
// usage: acceptance <out-dir> [config-dir]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gmc/cli.hpp"
#include "gmc/experiments.hpp"
#include "gmc/io.hpp"

namespace fs = std::filesystem;

namespace {

struct Criterion {
  int id;
  std::string title;
  std::string run;
  std::vector<std::string> verdicts;
  double limit_s;
};

struct Done {
  gmc::RunResult result;
  double seconds = 0.0;
  std::string error;
};

const gmc::Verdict* find(const gmc::RunResult& r, const std::string& name) {
  for (const auto& v : r.verdicts)
    if (v.name == name) return &v;
  return nullptr;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: acceptance <out-dir> [config-dir]\n";
    return 2;
  }
  const fs::path out = argv[1];
  const fs::path configs = argc > 2 ? fs::path(argv[2]) : fs::path(GMC_CONFIG_DIR);
  constexpr unsigned kWorkers = 8, kReplayWorkers = 1;

  const std::vector<std::string> runs{"kernel_check", "field_stats", "moment_check", "cauchy",
                                      "mollifier_independence", "sup_prob", "tilt_check", "tail_check",
                                      "sobolev", "phase_scan", "phase_scan_d2"};
  // kernel_check covers three criteria, so its limit is their sum.
  const std::vector<Criterion> criteria{
      {1, "kernel closed form", "kernel_check", {"closed_form"}, 127},
      {2, "positive definiteness", "kernel_check", {"kappa_spectrum_nonnegative", "gram_min_eigenvalue"}, 127},
      {3, "covariance fidelity", "field_stats", {"variance_matches_n", "covariance_matches_kernel"}, 120},
      {4, "mean identity", "moment_check", {"mean_identity"}, 120},
      {5, "L2 oracle match", "moment_check", {"second_moment_oracle"}, 300},
      {6, "Cauchy ladders", "cauchy", {"cauchy_trend_g0", "cauchy_trend_g1"}, 300},
      {7, "mollifier independence", "mollifier_independence", {"independence_trend_g0"}, 300},
      {8, "truncation events", "sup_prob",
       {"event_prob_increasing", "event_prob_at_largest_q", "sup_prob_log_linear_decay"}, 180},
      {9, "tilted-event scaling", "tilt_check", {"tilted_decay_exponent"}, 600},
      {10, "kernel estimates", "kernel_check", {"mollified_log_stable", "partial_mollified_log_stable"}, 127},
      {11, "tail bound", "tail_check", {"corrected_bound_holds", "literal_bound_discrepancy_recorded"}, 1},
      {12, "Sobolev diagnostic", "sobolev", {"sobolev_trend_g0"}, 300},
  };

  std::map<std::string, Done> done;
  for (const auto& name : runs) {
    Done d;
    const auto t0 = std::chrono::steady_clock::now();
    std::ostringstream err;
    const int code = gmc::cli::guarded(
        [&] {
          d.result = gmc::run(gmc::load_config(configs / (name + ".json")), out / name, kWorkers);
          return 0;
        },
        err);
    if (code != 0) d.error = err.str();
    d.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << "run " << name << ": " << (d.error.empty() ? "ok" : d.error) << " ("
              << gmc::io::format_double(std::round(d.seconds * 100.0) / 100.0) << " s)\n"
              << std::flush;
    done[name] = std::move(d);
  }

  bool all = true;
  for (const auto& c : criteria) {
    const auto& d = done.at(c.run);
    bool pass = d.error.empty();
    std::string detail = pass ? "" : d.error;
    for (const auto& vn : c.verdicts) {
      if (!d.error.empty()) break;
      const auto* v = find(d.result, vn);
      if (!v) {
        pass = false;
        detail += vn + " missing; ";
        continue;
      }
      pass = pass && v->pass;
      detail += vn + (v->pass ? " ok" : " FAILED") + " (" + v->detail + "); ";
    }
    if (d.seconds > c.limit_s) {
      pass = false;
      detail += "runtime " + gmc::io::format_double(d.seconds) + " s over limit; ";
    }
    all = all && pass;
    std::cout << (pass ? "PASS" : "FAIL") << " criterion " << c.id << " " << c.title << ": " << detail << "\n";
  }

  // Criterion 13: replay every run with one worker and compare CSV bytes.
  bool same = true;
  std::string detail;
  for (const auto& name : runs) {
    const auto& d = done.at(name);
    if (!d.error.empty()) {
      same = false;
      detail += name + " did not run; ";
      continue;
    }
    std::ostringstream err;
    bool identical = false;
    std::size_t files = 0;
    const int code = gmc::cli::guarded(
        [&] {
          const auto r = gmc::replay(d.result.dir / "manifest.json", out / (name + "_replay"), kReplayWorkers);
          identical = r.replay_mode && r.identical;
          for (const auto& [csv, h] : d.result.csv_hashes) {
            ++files;
            identical = identical && gmc::io::read_file(d.result.dir / csv) ==
                                         gmc::io::read_file(out / (name + "_replay") / csv);
          }
          return 0;
        },
        err);
    if (code != 0 || !identical) {
      same = false;
      detail += name + (code ? " replay error " + err.str() : " differs") + "; ";
    } else {
      detail += name + " " + std::to_string(files) + " csv; ";
    }
  }
  all = all && same;
  std::cout << (same ? "PASS" : "FAIL") << " criterion 13 reproducibility (workers 8 vs 1): " << detail << "\n";
  std::cout << (all ? "all criteria pass" : "some criteria fail") << "\n";
  return all ? 0 : 1;
}
