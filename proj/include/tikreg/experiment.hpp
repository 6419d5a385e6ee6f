#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tikreg/linop.hpp"
#include "tikreg/problem.hpp"
#include "tikreg/rates.hpp"
#include "tikreg/regfun.hpp"
#include "tikreg/solver.hpp"

namespace tikreg {

/// Parsed experiment description. See README.md for the JSON layout.
struct ExperimentConfig {
  enum class SourceMode { Smooth, Generic, Explicit };
  enum class AlphaRule { Choice, Linear, Sweep };
  enum class RateMode { TwoSided, LowerBound };

  OperatorSpec op = OperatorSpec::diagonal(Vec::Ones(1));
  RegSpec reg = RegSpec::power_norm(2.0, 2.0);
  double p = 2.0;

  SourceMode source = SourceMode::Smooth;
  Vec source_vector;  // v for Smooth, omega_dag for Explicit
  std::uint64_t source_seed = 0;
  double source_scale = 1.0;

  double delta_min = 0.0;
  double delta_max = 0.0;
  int delta_count = 0;
  int seeds = 1;
  std::uint64_t master_seed = 0;

  AlphaRule alpha_rule = AlphaRule::Choice;
  std::optional<double> c0;  // empty: calibrate at the largest delta
  double alpha_min = 0.0;
  double alpha_max = 0.0;
  int alpha_count = 0;

  double index_q = 2.0;
  std::optional<double> index_c;  // empty: sqrt(2) ||v|| of the smooth source

  SolveOptions solver;

  double tolerance = 0.1;
  RateMode rate_mode = RateMode::TwoSided;
  std::optional<double> predicted;
  double trim = 0.1;

  int probe_samples = 10000;
  std::uint64_t probe_seed = 1;
  double probe_phi_scale = 1.0;

  /// Throws ConfigError with a message naming the offending field.
  static ExperimentConfig parse(const std::string& json_text,
                                const std::filesystem::path& base_dir = {});
  static ExperimentConfig load(const std::filesystem::path& path);

  std::vector<double> delta_grid() const;
  std::vector<double> alpha_grid() const;
  Vec omega_dag() const;
  /// The index function Phi = c t^{1/q*} implied by index_q and index_c.
  IndexFn index_function() const;
};

struct ResultRow {
  double delta = 0.0;
  int seed = 0;
  double alpha = 0.0;
  double bregman_error = 0.0;
  double norm_error = 0.0;
  double kkt_r1 = 0.0;
  double kkt_r2 = 0.0;
  int iters = 0;
  bool converged = false;
};

struct RunSummary {
  double slope = 0.0;
  double stderr_slope = 0.0;
  double predicted = 0.0;
  double tolerance = 0.0;
  bool verdict = false;
  int n_rows = 0;
  int n_failed = 0;
  double c0 = 0.0;
  bool fitted = false;
  std::string note;
};

struct RunResult {
  std::vector<ResultRow> rows;
  RunSummary summary;
};

/// Cells run on up to `jobs` threads; output order is (delta, seed) regardless.
/// TIKREG_SINGLE_THREAD set in the environment forces one thread.
RunResult run_experiment(const ExperimentConfig& config, int jobs = 1);

inline constexpr const char* kCsvHeader =
    "delta,seed,alpha,bregman_error,norm_error,kkt_r1,kkt_r2,iters,converged";

void write_csv(std::ostream& out, const std::vector<ResultRow>& rows);
std::string summary_json(const RunSummary& summary);

/// 0 verdict pass, 1 verdict fail, 3 more than 20% of solves failed.
int exit_code(const RunResult& result);

struct ProbeOutput {
  ProbeReport probe;
  RangeDiagnostic range;
};

ProbeOutput run_probe(const ExperimentConfig& config);
std::string probe_json(const ProbeOutput& out);

}  // namespace tikreg
