#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "gmc/cli.hpp"
#include "gmc/experiments.hpp"

namespace {

using namespace gmc::cli;

void print_verdicts(const gmc::RunResult& r) {
  for (const auto& v : r.verdicts)
    std::cout << (v.pass ? "PASS " : "FAIL ") << v.name << (v.detail.empty() ? "" : ": " + v.detail) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Complex Gaussian multiplicative chaos experiments"};
  app.require_subcommand(1);
  unsigned workers = gmc::default_workers();
  app.add_option("--workers", workers, "worker threads (default: GMC_WORKERS or hardware concurrency)")
      ->check(CLI::PositiveNumber);

  std::string config, manifest, out;
  auto* run = app.add_subcommand("run", "execute an experiment config");
  run->add_option("config", config, "config JSON")->required();
  run->add_option("--out", out, "output directory (overrides the config's output)");
  auto* rep = app.add_subcommand("replay", "re-run a manifest and compare CSV hashes");
  rep->add_option("manifest", manifest, "manifest.json of an earlier run")->required();
  rep->add_option("--out", out, "output directory (default: <run>/replay)");
  auto* val = app.add_subcommand("validate", "check a config without running it");
  val->add_option("config", config, "config JSON")->required();

  CLI11_PARSE(app, argc, argv);

  if (run->parsed())
    return guarded([&] {
      const auto c = gmc::load_config(config);
      std::optional<std::filesystem::path> dir;
      if (!out.empty()) dir = out;
      const auto r = gmc::run(c, dir, workers);
      print_verdicts(r);
      std::cout << "outputs in " << r.dir.string() << "\n";
      return r.all_pass() ? kPass : kVerdictFail;
    });
  if (rep->parsed())
    return guarded([&] {
      const std::filesystem::path m(manifest);
      const std::filesystem::path dir = out.empty() ? m.parent_path() / "replay" : std::filesystem::path(out);
      const auto r = gmc::replay(m, dir, workers);
      if (!r.replay_mode) std::cout << "non-replay mode: config differs from the recorded hash\n";
      print_verdicts(r.run);
      for (const auto& d : r.differing) std::cout << "DIFFERS " << d << "\n";
      std::cout << (r.identical ? "replay identical" : "replay differs") << "\n";
      if (!r.identical || !r.replay_mode) return kVerdictFail;
      return r.run.all_pass() ? kPass : kVerdictFail;
    });
  return guarded([&] {
    const auto c = gmc::load_config(config);
    const auto r = gmc::resolve(c);
    std::cout << "valid " << gmc::to_string(c.kind) << " config; resolved " << r.info.dump() << "\n";
    return kPass;
  });
}
