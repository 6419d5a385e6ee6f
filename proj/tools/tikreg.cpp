// tikreg: convergence-rate experiments for Tikhonov regularization in l^r spaces.
//
//   tikreg run --config exp.json --out rows.csv [--summary summary.json] [--jobs N]
//   tikreg probe --config probe.json
//   tikreg selftest [--tolerance T]
//
// Exit codes: 0 success, 1 rate verdict or selftest failed, 2 usage or config
// error, 3 more than a fifth of the solves did not converge.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "tikreg/error.hpp"
#include "tikreg/experiment.hpp"
#include "tikreg/selftest.hpp"

namespace {

int cmd_run(const std::string& config_path, const std::string& out_path, const std::string& summary_path,
            int jobs) {
  const tikreg::ExperimentConfig config = tikreg::ExperimentConfig::load(config_path);
  const tikreg::RunResult result = tikreg::run_experiment(config, jobs);
  std::ofstream csv(out_path, std::ios::binary);
  if (!csv) {
    std::cerr << "tikreg: cannot write '" << out_path << "'\n";
    return 2;
  }
  tikreg::write_csv(csv, result.rows);
  const std::string summary = tikreg::summary_json(result.summary);
  if (!summary_path.empty()) {
    std::ofstream js(summary_path);
    js << summary << '\n';
  }
  std::cout << summary << '\n';
  return tikreg::exit_code(result);
}

int cmd_probe(const std::string& config_path) {
  const tikreg::ExperimentConfig config = tikreg::ExperimentConfig::load(config_path);
  std::cout << tikreg::probe_json(tikreg::run_probe(config)) << '\n';
  return 0;
}

int cmd_selftest(std::optional<double> tolerance) {
  const tikreg::SelftestReport report = tikreg::run_selftest(tolerance);
  for (const auto& c : report.checks) {
    std::printf("%s  %-60s worst %.3e  tol %.1e\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.worst,
                c.tolerance);
  }
  return report.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tikhonov regularization rate experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::string summary_path;
  int jobs = 1;
  auto* run = app.add_subcommand("run", "sweep (delta, seed, alpha) and fit the convergence rate");
  run->add_option("--config", config_path, "experiment JSON")->required();
  run->add_option("--out", out_path, "CSV output")->required();
  run->add_option("--summary", summary_path, "JSON summary output");
  run->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);

  std::string probe_config;
  auto* probe = app.add_subcommand("probe", "sample the variational inequality and the range condition");
  probe->add_option("--config", probe_config, "experiment JSON")->required();

  std::optional<double> tolerance;
  auto* selftest = app.add_subcommand("selftest", "oracle-equivalence and duality-identity suites");
  selftest->add_option("--tolerance", tolerance, "replace every threshold (fault injection)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 2;
  }

  try {
    if (*run) return cmd_run(config_path, out_path, summary_path, jobs);
    if (*probe) return cmd_probe(probe_config);
    if (*selftest) return cmd_selftest(tolerance);
  } catch (const tikreg::ConfigError& e) {
    std::cerr << "tikreg: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "tikreg: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
