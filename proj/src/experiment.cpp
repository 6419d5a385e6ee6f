#include "tikreg/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "tikreg/error.hpp"
#include "tikreg/random.hpp"

namespace tikreg {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& what) { throw ConfigError("config: " + what); }

const json& member(const json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) fail(std::string("missing field '") + key + "'");
  return obj.at(key);
}

double number(const json& obj, const char* key) {
  const json& v = member(obj, key);
  if (!v.is_number()) fail(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

double number_or(const json& obj, const char* key, double fallback) {
  return obj.contains(key) ? number(obj, key) : fallback;
}

int integer(const json& obj, const char* key) {
  const json& v = member(obj, key);
  if (!v.is_number_integer()) fail(std::string("field '") + key + "' must be an integer");
  return v.get<int>();
}

int integer_or(const json& obj, const char* key, int fallback) {
  return obj.contains(key) ? integer(obj, key) : fallback;
}

std::uint64_t seed_or(const json& obj, const char* key, std::uint64_t fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
    fail(std::string("field '") + key + "' must be a nonnegative integer");
  }
  return v.get<std::uint64_t>();
}

std::string text(const json& obj, const char* key) {
  const json& v = member(obj, key);
  if (!v.is_string()) fail(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

Vec vector_field(const json& obj, const char* key) {
  const json& v = member(obj, key);
  if (!v.is_array() || v.empty()) fail(std::string("field '") + key + "' must be a nonempty array");
  Vec out(static_cast<Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) fail(std::string("field '") + key + "' must contain numbers");
    out[static_cast<Index>(i)] = v[i].get<double>();
  }
  return out;
}

OperatorSpec parse_operator(const json& j, double r_x, double r_y, const std::filesystem::path& base) {
  const std::string kind = text(j, "kind");
  if (kind == "diagonal") {
    Vec values;
    if (j.contains("values")) {
      values = vector_field(j, "values");
    } else {
      const int n = integer(j, "n");
      if (n < 1) fail("operator.n must be positive");
      const double decay = number_or(j, "decay", 1.0);
      values.resize(n);
      for (int i = 0; i < n; ++i) values[i] = std::pow(i + 1.0, -decay);
    }
    return OperatorSpec::diagonal(std::move(values), r_x, r_y);
  }
  if (kind == "dense") {
    if (j.contains("file")) {
      std::filesystem::path file = text(j, "file");
      if (file.is_relative()) file = base / file;
      return OperatorSpec::dense(load_matrix(file.string()), r_x, r_y);
    }
    if (j.contains("data")) {
      const json& rows = j.at("data");
      if (!rows.is_array() || rows.empty() || !rows[0].is_array()) fail("operator.data must be a 2-d array");
      Matrix m(rows.size(), rows[0].size());
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (!rows[i].is_array() || rows[i].size() != rows[0].size()) fail("operator.data rows differ in length");
        for (std::size_t k = 0; k < rows[i].size(); ++k) {
          if (!rows[i][k].is_number()) fail("operator.data must contain numbers");
          m(i, k) = rows[i][k].get<double>();
        }
      }
      return OperatorSpec::dense(std::move(m), r_x, r_y);
    }
    const json& rnd = member(j, "random");
    const int rows = integer(rnd, "rows");
    const int cols = integer(rnd, "cols");
    if (rows < 1 || cols < 1) fail("operator.random dimensions must be positive");
    Rng rng(seed_or(rnd, "seed", 0));
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i) {
      for (int k = 0; k < cols; ++k) m(i, k) = normal(rng) / std::sqrt(static_cast<double>(rows));
    }
    return OperatorSpec::dense(std::move(m), r_x, r_y);
  }
  if (kind == "convolution") return OperatorSpec::convolution(vector_field(j, "kernel"), r_x, r_y);
  fail("unknown operator kind '" + kind + "'");
}

RegSpec parse_regularizer(const json& j, double r_x) {
  const std::string kind = text(j, "kind");
  if (kind == "power_norm") return RegSpec::power_norm(r_x, number_or(j, "q", 2.0));
  if (kind == "neg_entropy") return RegSpec::neg_entropy();
  fail("unknown regularizer kind '" + kind + "'");
}

Vec zero_padded(const Vec& v, Index n, const char* what) {
  if (v.size() > n) fail(std::string(what) + " is longer than the space dimension");
  Vec out = Vec::Zero(n);
  out.head(v.size()) = v;
  return out;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Runs body(i) for i in [0, count) on up to `jobs` threads; the first
// exception is rethrown after all workers stop.
template <class Body>
void parallel_for(std::size_t count, int jobs, Body body) {
  const std::size_t nthreads = std::min<std::size_t>(std::max(jobs, 1), std::max<std::size_t>(count, 1));
  if (nthreads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  for (std::size_t t = 0; t < nthreads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count && !stop; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          stop = true;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

ResultRow solve_cell(const ProblemInstance& inst, double alpha, int seed, const SolveOptions& opts) {
  const PrimalDualSolution sol = solve_primal(inst.op, inst.y_delta, alpha, inst.p, inst.reg, opts);
  ResultRow row;
  row.delta = inst.delta;
  row.seed = seed;
  row.alpha = alpha;
  row.bregman_error = primal_bregman(inst.reg, sol.x, inst.x_dag, inst.xi_dag);
  row.norm_error = norm(sol.x - inst.x_dag, inst.op.domain());
  row.kkt_r1 = sol.kkt_r1;
  row.kkt_r2 = sol.kkt_r2;
  row.iters = sol.iters;
  row.converged = sol.converged;
  return row;
}

}  // namespace

ExperimentConfig ExperimentConfig::parse(const std::string& json_text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) fail("top level must be an object");

  ExperimentConfig c;
  try {
    const double r_x = number_or(j, "r_x", 2.0);
    const double r_y = number_or(j, "r_y", 2.0);
    c.p = number_or(j, "p", 2.0);
    if (!(c.p > 1.0)) fail("p must exceed 1");
    c.op = parse_operator(member(j, "operator"), r_x, r_y, base_dir);
    c.reg = j.contains("regularizer") ? parse_regularizer(j.at("regularizer"), r_x)
                                      : RegSpec::power_norm(r_x, 2.0);

    const json& src = member(j, "source");
    const std::string mode = text(src, "mode");
    if (mode == "smooth") {
      c.source = SourceMode::Smooth;
      c.source_vector = zero_padded(vector_field(src, "v"), c.op.domain().dim(), "source.v");
    } else if (mode == "generic") {
      c.source = SourceMode::Generic;
      c.source_seed = seed_or(src, "seed", 0);
      c.source_scale = number_or(src, "scale", 1.0);
    } else if (mode == "explicit") {
      c.source = SourceMode::Explicit;
      c.source_vector = zero_padded(vector_field(src, "omega"), c.op.range().dim(), "source.omega");
    } else {
      fail("unknown source mode '" + mode + "'");
    }

    c.master_seed = seed_or(j, "master_seed", 0);
    c.seeds = integer_or(j, "seeds", 1);
    if (c.seeds < 1) fail("seeds must be positive");

    const json& alpha = member(j, "alpha");
    const std::string rule = text(alpha, "rule");
    if (rule == "choice" || rule == "linear") {
      c.alpha_rule = rule == "choice" ? AlphaRule::Choice : AlphaRule::Linear;
      const json& c0 = member(alpha, "c0");
      if (c0.is_string() && c0.get<std::string>() == "calibrate") {
        if (c.alpha_rule == AlphaRule::Linear) fail("alpha.c0 'calibrate' applies to the choice rule only");
      } else if (c0.is_number() && c0.get<double>() > 0.0) {
        c.c0 = c0.get<double>();
      } else {
        fail("alpha.c0 must be a positive number or \"calibrate\"");
      }
    } else if (rule == "sweep") {
      c.alpha_rule = AlphaRule::Sweep;
      c.alpha_min = number(alpha, "min");
      c.alpha_max = number(alpha, "max");
      c.alpha_count = integer(alpha, "count");
      if (!(c.alpha_min > 0.0) || !(c.alpha_max > c.alpha_min)) fail("alpha sweep must satisfy 0 < min < max");
      if (c.alpha_count < 3) fail("alpha sweep count must be >= 3");
    } else {
      fail("unknown alpha rule '" + rule + "'");
    }

    if (c.alpha_rule != AlphaRule::Sweep) {
      const json& d = member(j, "delta");
      c.delta_min = number(d, "min");
      c.delta_max = number(d, "max");
      c.delta_count = integer(d, "count");
      if (c.delta_count < 3) fail("delta grid count must be >= 3");
      if (!(c.delta_min > 0.0) || !(c.delta_max > c.delta_min)) {
        fail("delta grid must be positive and increasing (0 < min < max)");
      }
    }

    if (j.contains("index")) {
      const json& ix = j.at("index");
      c.index_q = number_or(ix, "q", 2.0);
      if (ix.contains("c")) c.index_c = number(ix, "c");
    }
    if (!(c.index_q > 1.0)) fail("index.q must exceed 1");
    if (c.index_c && !(*c.index_c > 0.0)) fail("index.c must be positive");

    if (j.contains("solver")) {
      const json& s = j.at("solver");
      c.solver.kkt_tol = number_or(s, "kkt_tol", c.solver.kkt_tol);
      c.solver.max_iters = integer_or(s, "max_iters", c.solver.max_iters);
      c.solver.step_backtrack = number_or(s, "step_backtrack", c.solver.step_backtrack);
      if (s.contains("restart_period")) c.solver.restart_period = integer(s, "restart_period");
      if (s.contains("separable")) {
        if (!s.at("separable").is_boolean()) fail("solver.separable must be true or false");
        c.solver.separable = s.at("separable").get<bool>();
      }
      c.solver.validate();
    }

    if (j.contains("rate")) {
      const json& r = j.at("rate");
      c.tolerance = number_or(r, "tolerance", c.tolerance);
      c.trim = number_or(r, "trim", c.trim);
      if (r.contains("predicted")) c.predicted = number(r, "predicted");
      if (r.contains("mode")) {
        const std::string m = text(r, "mode");
        if (m == "two_sided") {
          c.rate_mode = RateMode::TwoSided;
        } else if (m == "lower_bound") {
          c.rate_mode = RateMode::LowerBound;
        } else {
          fail("unknown rate mode '" + m + "'");
        }
      }
      if (!(c.tolerance >= 0.0)) fail("rate.tolerance must be >= 0");
      if (!(c.trim >= 0.0 && c.trim < 0.5)) fail("rate.trim must lie in [0, 0.5)");
    }

    if (j.contains("probe")) {
      const json& pr = j.at("probe");
      c.probe_samples = integer_or(pr, "samples", c.probe_samples);
      c.probe_seed = seed_or(pr, "seed", c.probe_seed);
      c.probe_phi_scale = number_or(pr, "phi_scale", c.probe_phi_scale);
      if (c.probe_samples < 1) fail("probe.samples must be positive");
      if (!(c.probe_phi_scale > 0.0)) fail("probe.phi_scale must be positive");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    fail(e.what());
  } catch (const json::exception& e) {
    fail(e.what());
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.parent_path());
}

std::vector<double> ExperimentConfig::delta_grid() const {
  std::vector<double> out(delta_count);
  for (int i = 0; i < delta_count; ++i) {
    out[i] = delta_min * std::pow(delta_max / delta_min, static_cast<double>(i) / (delta_count - 1));
  }
  out.back() = delta_max;
  return out;
}

std::vector<double> ExperimentConfig::alpha_grid() const {
  std::vector<double> out(alpha_count);
  for (int i = 0; i < alpha_count; ++i) {
    out[i] = alpha_min * std::pow(alpha_max / alpha_min, static_cast<double>(i) / (alpha_count - 1));
  }
  out.back() = alpha_max;
  return out;
}

Vec ExperimentConfig::omega_dag() const {
  switch (source) {
    case SourceMode::Smooth:
      return smooth_source(op, p, source_vector);
    case SourceMode::Generic: {
      Rng rng(source_seed);
      return source_scale * gaussian_vector(op.range().dim(), rng);
    }
    case SourceMode::Explicit:
      return source_vector;
  }
  return {};
}

IndexFn ExperimentConfig::index_function() const {
  double c = 0.0;
  if (index_c) {
    c = *index_c;
  } else if (source == SourceMode::Smooth) {
    c = std::sqrt(2.0) * norm(source_vector, op.domain());
  } else {
    throw ConfigError("config: index.c is required unless the source is smooth");
  }
  return IndexFn::power(c, 1.0 / conjugate_exponent(index_q));
}

RunResult run_experiment(const ExperimentConfig& config, int jobs) {
  if (std::getenv("TIKREG_SINGLE_THREAD")) jobs = 1;
  const ProblemInstance base = build_source_problem(config.op, config.reg, config.p, config.omega_dag());

  RunResult result;
  RunSummary& s = result.summary;
  s.tolerance = config.tolerance;
  const bool sweep = config.alpha_rule == ExperimentConfig::AlphaRule::Sweep;
  const double ps = conjugate_exponent(config.p);
  s.predicted = config.predicted ? *config.predicted
                : sweep          ? (ps - 1.0) * config.index_q
                                 : predicted_exponent(config.p, config.index_q);

  std::vector<std::pair<double, double>> series;
  if (sweep) {
    const std::vector<double> alphas = config.alpha_grid();
    result.rows.resize(alphas.size());
    parallel_for(alphas.size(), jobs, [&](std::size_t i) {
      result.rows[i] = solve_cell(base, alphas[i], 0, config.solver);
    });
    for (const ResultRow& row : result.rows) {
      if (row.converged && row.bregman_error > 0.0) series.emplace_back(row.alpha, row.bregman_error);
    }
  } else {
    const std::vector<double> deltas = config.delta_grid();
    if (config.alpha_rule == ExperimentConfig::AlphaRule::Choice) {
      if (config.c0) {
        s.c0 = *config.c0;
      } else {
        // The convexity constant of Y* is dimension-free; a small copy of the
        // space exposes near-extremal pairs to the sampler far more often.
        const SpaceSpec dual = config.op.range().dual();
        const SpaceSpec probe_space(std::min<Index>(dual.dim(), 4), dual.r());
        const double cq = qconvexity_constant(probe_space, ps, 20000, config.master_seed);
        s.c0 = calibrate_c0(deltas.back(), config.index_function(), config.p, config.index_q, cq);
      }
    } else {
      s.c0 = *config.c0;
    }
    auto alpha_for = [&](double delta) {
      return config.alpha_rule == ExperimentConfig::AlphaRule::Choice
                 ? choose_alpha(delta, config.p, config.index_q, s.c0)
                 : s.c0 * delta;
    };
    const std::size_t nseeds = static_cast<std::size_t>(config.seeds);
    result.rows.resize(deltas.size() * nseeds);
    parallel_for(result.rows.size(), jobs, [&](std::size_t cell) {
      const std::size_t di = cell / nseeds;
      const std::size_t si = cell % nseeds;
      const ProblemInstance inst = with_noise(base, deltas[di], derive_seed(config.master_seed, di, si));
      result.rows[cell] = solve_cell(inst, alpha_for(deltas[di]), static_cast<int>(si), config.solver);
    });
    for (std::size_t di = 0; di < deltas.size(); ++di) {
      std::vector<double> errs;
      for (std::size_t si = 0; si < nseeds; ++si) {
        const ResultRow& row = result.rows[di * nseeds + si];
        if (row.converged) errs.push_back(row.bregman_error);
      }
      if (!errs.empty()) {
        const double m = median(errs);
        if (m > 0.0) series.emplace_back(deltas[di], m);
      }
    }
  }

  s.n_rows = static_cast<int>(result.rows.size());
  s.n_failed = static_cast<int>(
      std::count_if(result.rows.begin(), result.rows.end(), [](const ResultRow& r) { return !r.converged; }));

  std::sort(series.begin(), series.end());
  const std::size_t k = static_cast<std::size_t>(std::floor(config.trim * series.size()));
  if (series.size() >= 2 * k + 3) {
    series = std::vector<std::pair<double, double>>(series.begin() + k, series.end() - k);
  }
  if (series.size() < 3) {
    s.note = "fewer than 3 usable points";
    return result;
  }
  const LogLogFit fit = fit_loglog(series);
  s.fitted = true;
  s.slope = fit.slope;
  s.stderr_slope = fit.stderr_slope;
  s.verdict = config.rate_mode == ExperimentConfig::RateMode::TwoSided
                  ? std::abs(s.slope - s.predicted) <= s.tolerance
                  : s.slope >= s.predicted - s.tolerance;
  return result;
}

void write_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << kCsvHeader << '\n';
  for (const ResultRow& r : rows) {
    out << format_double(r.delta) << ',' << r.seed << ',' << format_double(r.alpha) << ','
        << format_double(r.bregman_error) << ',' << format_double(r.norm_error) << ','
        << format_double(r.kkt_r1) << ',' << format_double(r.kkt_r2) << ',' << r.iters << ','
        << (r.converged ? 1 : 0) << '\n';
  }
}

std::string summary_json(const RunSummary& s) {
  json j;
  j["slope"] = s.fitted ? json(s.slope) : json(nullptr);
  j["stderr"] = s.fitted ? json(s.stderr_slope) : json(nullptr);
  j["predicted"] = s.predicted;
  j["tolerance"] = s.tolerance;
  j["verdict"] = s.verdict ? "pass" : "fail";
  j["n_rows"] = s.n_rows;
  j["n_failed"] = s.n_failed;
  if (s.c0 > 0.0) j["c0"] = s.c0;
  if (!s.note.empty()) j["note"] = s.note;
  return j.dump(2);
}

int exit_code(const RunResult& result) {
  const RunSummary& s = result.summary;
  if (s.n_failed * 5 > s.n_rows) return 3;
  return s.verdict ? 0 : 1;
}

ProbeOutput run_probe(const ExperimentConfig& config) {
  const ProblemInstance inst = build_source_problem(config.op, config.reg, config.p, config.omega_dag());
  ProbeOutput out;
  out.range = range_diagnostic(config.op, inst.omega_dag, config.p);
  const IndexFn phi = config.index_function().scaled(config.probe_phi_scale);
  out.probe = var_ineq_probe(inst, phi, config.probe_samples, {}, config.probe_seed);
  return out;
}

std::string probe_json(const ProbeOutput& out) {
  json j;
  const bool degenerate = out.probe.degenerate || out.range.degenerate;
  j["degenerate"] = degenerate;
  // JSON has no infinity; an unbounded ratio (LHS > 0 = Phi(D*)) is spelled out.
  if (degenerate) {
    j["max_ratio"] = nullptr;
  } else if (std::isinf(out.probe.max_ratio)) {
    j["max_ratio"] = "inf";
  } else {
    j["max_ratio"] = out.probe.max_ratio;
  }
  j["fitted_mu"] = degenerate || std::isnan(out.probe.fitted_mu) ? json(nullptr) : json(out.probe.fitted_mu);
  j["range_residual"] = out.range.residual;
  j["numerical_rank"] = out.range.numerical_rank;
  j["samples"] = out.probe.samples;
  j["positive_samples"] = out.probe.positive_samples;
  return j.dump(2);
}

}  // namespace tikreg
