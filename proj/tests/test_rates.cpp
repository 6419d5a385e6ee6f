#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracle.hpp"
#include "tikreg/error.hpp"
#include "tikreg/problem.hpp"
#include "tikreg/rates.hpp"

using namespace tikreg;

namespace {

std::vector<double> geometric(double lo, double hi, int n) {
  std::vector<double> out(n);
  for (int k = 0; k < n; ++k) out[k] = lo * std::pow(hi / lo, double(k) / (n - 1));
  return out;
}

ProblemInstance smooth_hilbert(Index n, const Vec& v) {
  Vec sigma(n);
  for (Index i = 0; i < n; ++i) sigma[i] = 1.0 / double(i + 1);
  const OperatorSpec a = OperatorSpec::diagonal(sigma);
  return build_source_problem(a, RegSpec::power_norm(2, 2), 2.0, smooth_source(a, 2.0, v));
}

}  // namespace

TEST(IndexFn, Validation) {
  EXPECT_THROW(IndexFn::power(0.0, 0.5), DomainError);
  EXPECT_THROW(IndexFn::power(1.0, 1.5), DomainError);
  EXPECT_THROW(IndexFn::power(1.0, 0.0), DomainError);
  EXPECT_THROW(IndexFn::tabulated({0, 1, 1}, {0, 1, 2}), DomainError);
  EXPECT_THROW(IndexFn::tabulated({0, 1, 2}, {0, 1, 0.5}), DomainError);
  EXPECT_THROW(IndexFn::tabulated({0, 1, 2}, {0, 1, 3}), DomainError);  // convex kink
  EXPECT_THROW(IndexFn::tabulated({0.5, 1}, {0, 1}), DomainError);
  EXPECT_NO_THROW(IndexFn::tabulated({0, 1, 2}, {0, 1, 1.5}));
}

TEST(IndexFn, Evaluation) {
  const IndexFn phi = IndexFn::power(2.0, 0.5);
  EXPECT_DOUBLE_EQ(phi(4.0), 4.0);
  EXPECT_EQ(phi(0.0), 0.0);
  const IndexFn tab = IndexFn::tabulated({0, 1, 2}, {0, 1, 1.5});
  EXPECT_DOUBLE_EQ(tab(0.5), 0.5);
  EXPECT_DOUBLE_EQ(tab(1.5), 1.25);
  EXPECT_DOUBLE_EQ(tab(4.0), 2.5);
  EXPECT_DOUBLE_EQ(tab.scaled(2.0)(1.5), 2.5);
}

TEST(PsiConjugate, Examples) {
  const ScalarFn psi = psi_conjugate(IndexFn::power(1.0, 0.5));
  for (double s : {0.0, 0.3, 1.0, 7.0}) EXPECT_NEAR(psi(s), s * s / 4.0, 1e-15 * (1.0 + s * s));
  for (const IndexFn& phi : {IndexFn::power(3.0, 0.25), IndexFn::power(0.5, 1.0),
                             IndexFn::tabulated({0, 1, 2}, {0, 1, 1.5})}) {
    EXPECT_EQ(psi_conjugate(phi)(0.0), 0.0);
  }
}

TEST(PsiConjugate, ClosedFormConstantMatchesGridLegendre) {
  // Psi(s) = sup_t s Phi(t) - t, brute-forced on a fine grid.
  for (double mu : {0.5, 0.25, 0.75}) {
    const double c = 1.7;
    const ScalarFn psi = psi_conjugate(IndexFn::power(c, mu));
    for (double s : {0.2, 1.0, 3.0}) {
      const double t_star = std::pow(s * c * mu, 1.0 / (1.0 - mu));
      const double want = oracle::grid_conjugate_1d([&](double t) { return t - s * c * std::pow(t, mu); }, 0.0, 0.0,
                                                    4.0 * t_star, 400000);
      EXPECT_NEAR(psi(s), want, 1e-6 * want) << mu << " " << s;
    }
  }
}

TEST(PsiConjugate, LinearIndexIsIndicator) {
  const ScalarFn psi = psi_conjugate(IndexFn::power(2.0, 1.0));
  EXPECT_EQ(psi(1.5), 0.0);
  EXPECT_EQ(psi(2.0), 0.0);
  EXPECT_EQ(psi(2.5), INFINITY);
}

TEST(PsiConjugate, TabulatedMatchesClosedForm) {
  const IndexFn phi = IndexFn::power(1.0, 0.5);
  // Psi of the linear extension is finite only for s up to the last slope, here just above 1.
  const IndexFn tab = IndexFn::tabulate(phi, geometric(1e-14, 0.25, 100000));
  const ScalarFn exact = psi_conjugate(phi);
  const ScalarFn numeric = psi_conjugate(tab);
  double worst = 0.0;
  for (double s : geometric(1e-4, 1.0, 200)) worst = std::max(worst, std::abs(numeric(s) / exact(s) - 1.0));
  EXPECT_LE(worst, 1e-4);
  EXPECT_EQ(numeric(1e9), INFINITY);
}

TEST(PsiConjugate, YoungInequalityAndShapeProperty) {
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const double c = 0.1 + 3.0 * unit(rng);
    const double mu = 0.1 + 0.85 * unit(rng);
    const IndexFn phi = IndexFn::power(c, mu);
    const ScalarFn psi = psi_conjugate(phi);
    for (int j = 0; j < 50; ++j) {
      const double s = 5.0 * unit(rng);
      const double t = 5.0 * unit(rng);
      // s u <= Phi^{-1}(u) + Psi(s) with u = Phi(t).
      EXPECT_LE(s * phi(t), t + psi(s) + 1e-9 * (1.0 + t + psi(s)));
    }
    // Convex and nondecreasing on a sampled grid.
    std::vector<double> vals;
    for (int j = 0; j <= 40; ++j) vals.push_back(psi(0.1 * j));
    for (int j = 1; j <= 40; ++j) EXPECT_GE(vals[j], vals[j - 1]);
    for (int j = 1; j < 40; ++j) EXPECT_LE(vals[j], 0.5 * (vals[j - 1] + vals[j + 1]) + 1e-12 * (1.0 + vals[j]));
  }
}

TEST(TheoreticalBound, Examples) {
  const IndexFn phi = IndexFn::power(1.0, 0.5);
  // 0.1^2 / 4 + 1e-4 / (2 * sqrt(2) * 0.5 * 0.1).
  EXPECT_NEAR(theoretical_bound(0.1, 0.01, phi, 2.0, 0.5), 0.0025 + 7.0710678118654752e-4, 1e-15);
  EXPECT_NEAR(theoretical_bound(0.1, 0.0, phi, 2.0, 0.5), 0.0025, 1e-16);
  double prev = 0.0;
  for (double delta : geometric(1e-6, 1.0, 30)) {
    const double b = theoretical_bound(0.05, delta, phi, 2.0, 0.5);
    EXPECT_GE(b, prev);
    prev = b;
  }
  EXPECT_THROW(theoretical_bound(0.0, 0.1, phi, 2.0, 0.5), DomainError);
  EXPECT_THROW(theoretical_bound(0.1, 0.1, phi, 2.0, 0.0), DomainError);
}

TEST(ParameterChoice, Examples) {
  EXPECT_NEAR(choice_exponent(2.0, 2.0), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(choice_exponent(1.5, 2.0), 0.3, 1e-15);
  EXPECT_NEAR(predicted_exponent(2.0, 2.0), 4.0 / 3.0, 1e-15);
  EXPECT_NEAR(predicted_exponent(1.5, 2.0), 1.2, 1e-15);
  EXPECT_NEAR(predicted_exponent(2.0, 1.0 + 1e-9), 1.0, 1e-8);
  EXPECT_NEAR(choose_alpha(1e-3, 2.0, 2.0, 3.0), 3.0 * choose_alpha(1e-3, 2.0, 2.0, 1.0), 1e-16);
  EXPECT_NEAR(choose_alpha(1e-3, 2.0, 2.0, 1.0), 1e-2, 1e-15);
  EXPECT_THROW(choose_alpha(0.0, 2.0, 2.0, 1.0), DomainError);
}

TEST(ParameterChoice, ExponentBalanceProperty) {
  std::mt19937_64 rng(52);
  std::uniform_real_distribution<double> exponent(1.05, 6.0);
  for (int k = 0; k < 1000; ++k) {
    const double p = exponent(rng);
    const double q = exponent(rng);
    const double ps = p / (p - 1.0);
    const double denom = (ps - 1.0) * q + 1.0;
    // Psi(alpha^{p*-1}) ~ delta^{a (p*-1) q} balances delta^p / alpha ~ delta^{p - a}.
    EXPECT_NEAR(p * (ps - 1.0) * q / denom, p - p / denom, 1e-12);
    EXPECT_NEAR(predicted_exponent(p, q), choice_exponent(p, q) * (ps - 1.0) * q, 1e-12);
  }
}

TEST(CalibrateC0, MinimizesBoundAtReference) {
  const IndexFn phi = IndexFn::power(std::sqrt(2.0) * std::sqrt(3.0), 0.5);
  const double c0 = calibrate_c0(1e-2, phi, 2.0, 2.0, 0.5);
  const double alpha = choose_alpha(1e-2, 2.0, 2.0, c0);
  const double best = theoretical_bound(alpha, 1e-2, phi, 2.0, 0.5);
  for (double f : {0.9, 0.99, 1.01, 1.1}) EXPECT_GE(theoretical_bound(alpha * f, 1e-2, phi, 2.0, 0.5), best);
  // Closed form for p = q = 2: d/da (k a^2 + d^2 / (sqrt 2 a)) = 0.
  const double k = 6.0 / 4.0;
  const double want = std::cbrt(1e-4 / (2.0 * std::sqrt(2.0) * k));
  EXPECT_NEAR(alpha, want, 1e-6 * want);
}

TEST(FitLoglog, Examples) {
  std::vector<std::pair<double, double>> pts;
  for (double d : geometric(1e-6, 1e-2, 15)) pts.emplace_back(d, std::pow(d, 4.0 / 3.0));
  const LogLogFit exact = fit_loglog(pts);
  EXPECT_NEAR(exact.slope, 4.0 / 3.0, 1e-12);
  EXPECT_LE(exact.stderr_slope, 1e-12);

  pts.clear();
  for (double d : geometric(1e-4, 1.0, 10)) pts.emplace_back(d, 2.0 * d);
  EXPECT_NEAR(fit_loglog(pts).slope, 1.0, 1e-12);
  EXPECT_NEAR(fit_loglog(pts).intercept, std::log(2.0), 1e-12);

  EXPECT_THROW(fit_loglog({{1, 1}, {2, 2}}), DomainError);
  EXPECT_THROW(fit_loglog({{1, 1}, {2, 0}, {3, 3}}), DomainError);
  EXPECT_THROW(fit_loglog({{1, 1}, {-2, 2}, {3, 3}}), DomainError);
}

TEST(FitLoglog, PerturbedPowerLawProperty) {
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> noise(-0.01, 0.01);
  std::uniform_real_distribution<double> rate(0.5, 2.5);
  for (int k = 0; k < 200; ++k) {
    const double s = rate(rng);
    std::vector<std::pair<double, double>> pts;
    std::vector<double> ds, es;
    for (double d : geometric(1e-6, 1e-2, 15)) {
      pts.emplace_back(d, std::pow(d, s) * (1.0 + noise(rng)));
      ds.push_back(pts.back().first);
      es.push_back(pts.back().second);
    }
    const LogLogFit fit = fit_loglog(pts);
    EXPECT_NEAR(fit.slope, s, 0.02);
    EXPECT_NEAR(fit.slope, oracle::loglog_slope(ds, es), 1e-10);
  }
}

TEST(VarIneqProbe, SmoothSourceSatisfiesBoundWithSqrtIndex) {
  Vec v = Vec::Zero(60);
  v.head(3).setOnes();
  const ProblemInstance inst = smooth_hilbert(60, v);
  const IndexFn phi = IndexFn::power(v.norm() * std::sqrt(2.0), 0.5);
  const std::vector<double> radii = default_radius_grid(inst.omega_dag.norm());
  const ProbeReport ok = var_ineq_probe(inst, phi, 2000, radii, 5);
  EXPECT_FALSE(ok.degenerate);
  EXPECT_LE(ok.max_ratio, 1.0 + 1e-8);
  EXPECT_NEAR(ok.fitted_mu, 0.5, 0.05);
  EXPECT_GT(ok.positive_samples, 100);
  const ProbeReport bad = var_ineq_probe(inst, phi.scaled(0.1), 2000, radii, 5);
  EXPECT_GT(bad.max_ratio, 1.0);
  // Same seed, same report.
  const ProbeReport again = var_ineq_probe(inst, phi, 2000, radii, 5);
  EXPECT_EQ(again.max_ratio, ok.max_ratio);
  EXPECT_EQ(again.fitted_mu, ok.fitted_mu);
}

TEST(VarIneqProbe, ZeroSourceIsDegenerate) {
  const OperatorSpec a = OperatorSpec::diagonal(Vec::Ones(5));
  const ProblemInstance inst = build_source_problem(a, RegSpec::power_norm(2, 2), 2.0, Vec::Zero(5));
  const ProbeReport r = var_ineq_probe(inst, IndexFn::power(1.0, 0.5), 100, default_radius_grid(1.0), 1);
  EXPECT_TRUE(r.degenerate);
}

TEST(VarIneqProbe, RadiusGrid) {
  const std::vector<double> g = default_radius_grid(3.0, 20);
  ASSERT_EQ(g.size(), 20u);
  EXPECT_NEAR(g.front(), 3e-4, 1e-18);
  EXPECT_NEAR(g.back(), 3.0, 1e-15);
  for (std::size_t k = 1; k < g.size(); ++k) EXPECT_NEAR(g[k] / g[k - 1], std::pow(1e4, 1.0 / 19.0), 1e-12);
  EXPECT_THROW(default_radius_grid(0.0), DomainError);
}
