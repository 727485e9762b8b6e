// Command-line front end: tunnelsim <subcommand> --config run.json [--out DIR] [--threads N]

#include <cstdlib>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "tunnel/io.hpp"

namespace {

unsigned thread_count(unsigned flag) {
  if (const char* env = std::getenv("TUNNEL_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
    std::cerr << "ignoring invalid TUNNEL_THREADS='" << env << "'\n";
  }
  if (flag > 0) return flag;
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Effective-potential tunneling simulations"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  unsigned threads = 0;
  long long seed = 0;
  app.add_option("--config", config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory (overrides the config)");
  app.add_option("--threads", threads, "sweep workers (0: all cores)");
  app.add_option("--seed", seed, "reserved; the dynamics is deterministic");

  auto* ground = app.add_subcommand("ground-state", "field-free ground state");
  auto* evolve = app.add_subcommand("evolve", "trajectory from the ground state");
  auto* contour = app.add_subcommand("contour", "equipotential contour of V_eff at the ground-state energy");
  auto* criteria = app.add_subcommand("criteria", "trajectory plus tunneling-time criteria");
  auto* sweep = app.add_subcommand("sweep", "criteria over the configured parameter grid");
  auto* backprop = app.add_subcommand("backprop", "classical back-propagation from t_f");
  for (auto* sub : {ground, evolve, contour, criteria, sweep, backprop}) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  tunnel::RunConfig cfg;
  try {
    cfg = tunnel::parse_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    if (!out_dir.empty()) tunnel::write_error_report(out_dir, "config_error", e.what());
    return 2;
  }
  if (!out_dir.empty()) cfg.output = out_dir;

  try {
    tunnel::RunSummary s;
    if (ground->parsed()) {
      s = tunnel::run_ground_state(cfg);
    } else if (evolve->parsed()) {
      s = tunnel::run_scenario(cfg, false);
    } else if (contour->parsed()) {
      s = tunnel::run_contour(cfg);
    } else if (criteria->parsed()) {
      s = tunnel::run_scenario(cfg, true);
    } else if (sweep->parsed()) {
      s = tunnel::run_sweep(cfg, thread_count(threads));
    } else {
      s = tunnel::run_backprop(cfg);
    }
    for (const auto& f : s.files) std::cout << f.string() << '\n';
    if (!s.ok) {
      std::cerr << "run failed: " << s.error << '\n';
      return 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    tunnel::write_error_report(cfg.output, "runtime_error", e.what());
    return 1;
  }
  return 0;
}
