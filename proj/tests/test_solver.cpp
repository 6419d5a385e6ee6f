#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracle.hpp"
#include "tikreg/error.hpp"
#include "tikreg/problem.hpp"
#include "tikreg/solver.hpp"

using namespace tikreg;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

const RegSpec kL2 = RegSpec::power_norm(2, 2);

SolveOptions tight() {
  SolveOptions o;
  o.kkt_tol = 1e-11;
  o.max_iters = 400000;
  return o;
}

}  // namespace

TEST(SolveOptions, Validation) {
  SolveOptions o;
  EXPECT_NO_THROW(o.validate());
  o.kkt_tol = 0.0;
  EXPECT_THROW(o.validate(), DomainError);
  o = {};
  o.step_backtrack = 1.0;
  EXPECT_THROW(o.validate(), DomainError);
  o = {};
  o.restart_period = 0;
  EXPECT_THROW(o.validate(), DomainError);
}

TEST(SolvePrimal, QuadraticExample) {
  const OperatorSpec a = OperatorSpec::diagonal(vec({1, 0.5}));
  const Vec y = vec({1, 1});
  for (bool separable : {true, false}) {
    SolveOptions o = tight();
    o.separable = separable;
    const PrimalDualSolution sol = solve_primal(a, y, 0.5, 2.0, kL2, o);
    EXPECT_TRUE(sol.converged);
    EXPECT_NEAR(sol.x[0], 2.0 / 3.0, 1e-10);
    EXPECT_NEAR(sol.x[1], 2.0 / 3.0, 1e-10);
    EXPECT_NEAR(sol.omega[0], 2.0 / 3.0, 1e-10);
    EXPECT_NEAR(sol.omega[1], 4.0 / 3.0, 1e-10);
    EXPECT_LE(sol.kkt_r1, 1e-10);
    EXPECT_LE(sol.kkt_r2, 1e-10);
  }
}

TEST(SolvePrimal, RejectsBadArguments) {
  const OperatorSpec a = OperatorSpec::diagonal(vec({1, 0.5}));
  EXPECT_THROW(solve_primal(a, vec({1, 1}), 0.0, 2.0, kL2), DomainError);
  EXPECT_THROW(solve_primal(a, vec({1, 1}), -1.0, 2.0, kL2), DomainError);
  EXPECT_THROW(solve_primal(a, vec({1, 1}), 1.0, 1.0, kL2), DomainError);
  EXPECT_THROW(solve_primal(a, vec({1, 1, 1}), 1.0, 2.0, kL2), DimensionError);
}

TEST(KktResidual, ExactAndPerturbed) {
  const OperatorSpec a = OperatorSpec::diagonal(vec({1, 0.5}));
  const Vec y = vec({1, 1});
  const Vec x = vec({2.0 / 3.0, 2.0 / 3.0});
  const Vec omega = recover_dual(x, a, y, 0.5, 2.0);
  const KktResidual exact = kkt_residual(x, omega, a, kL2, y, 0.5, 2.0);
  EXPECT_LE(exact.r1, 1e-12);
  EXPECT_LE(exact.r2, 1e-12);
  const KktResidual off = kkt_residual(x + vec({0.1, 0}), omega, a, kL2, y, 0.5, 2.0);
  EXPECT_GE(off.r1, 0.05);
}

TEST(SolvePrimal, MatchesNormalEquationsProperty) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> log_alpha(-4.0, 0.0);
  for (int k = 0; k < 20; ++k) {
    const Matrix a = oracle::normal_matrix(9, 6, rng);
    const Vec y = oracle::normal_vector(9, rng);
    const double alpha = std::pow(10.0, log_alpha(rng));
    const PrimalDualSolution sol = solve_primal(OperatorSpec::dense(a), y, alpha, 2.0, kL2, tight());
    const Vec want = oracle::tikhonov_closed_form(a, y, alpha);
    EXPECT_TRUE(sol.converged);
    EXPECT_LE((sol.x - want).norm(), 1e-8 * (1.0 + want.norm())) << "alpha=" << alpha;
  }
}

TEST(SolvePrimal, AlphaLimits) {
  const OperatorSpec a = OperatorSpec::diagonal(vec({1, 0.5, 0.25}));
  const Vec y = vec({1, -1, 2});
  SolveOptions o = tight();
  o.separable = false;
  const PrimalDualSolution big = solve_primal(a, y, 1e8, 2.0, kL2, o);
  EXPECT_LE(big.x.norm(), 1e-7);
  const PrimalDualSolution small = solve_primal(a, y, 1e-10, 2.0, kL2, o);
  EXPECT_LE((small.x - vec({1, -2, 8})).norm(), 1e-6);
}

TEST(SolvePrimal, TraceIsMonotone) {
  std::mt19937_64 rng(42);
  for (double p : {1.5, 2.0, 3.0}) {
    const OperatorSpec a = OperatorSpec::dense(oracle::normal_matrix(8, 8, rng), 2.0, p);
    SolveOptions o;
    o.record_trace = true;
    const PrimalDualSolution sol =
        solve_primal(a, oracle::normal_vector(8, rng), 0.01, p, RegSpec::power_norm(2.0, 1.7), o);
    ASSERT_GE(sol.trace.size(), 2u);
    for (std::size_t k = 1; k < sol.trace.size(); ++k) {
      // Accepted steps never increase the objective beyond rounding.
      EXPECT_LE(sol.trace[k], sol.trace[k - 1] + 1e-12 * (1.0 + std::abs(sol.trace[k - 1])));
    }
    EXPECT_NEAR(sol.objective, sol.trace.back(), 1e-15 * (1.0 + sol.objective));
  }
}

TEST(SolvePrimal, GeneralExponentsSatisfyKkt) {
  std::mt19937_64 rng(43);
  const double cases[][4] = {{1.5, 2.0, 2.0, 2.0}, {3.0, 2.0, 3.0, 1.5}, {2.0, 1.5, 1.5, 2.5}, {4.0, 3.0, 2.0, 4.0}};
  for (const auto& c : cases) {
    const double rx = c[0], ry = c[1], p = c[2], q = c[3];
    const OperatorSpec a = OperatorSpec::dense(oracle::normal_matrix(7, 5, rng), rx, ry);
    const RegSpec reg = RegSpec::power_norm(rx, q);
    const Vec y = oracle::normal_vector(7, rng);
    const PrimalDualSolution sol = solve_primal(a, y, 0.05, p, reg);
    EXPECT_TRUE(sol.converged) << rx << " " << ry << " " << p << " " << q;
    const KktResidual r = kkt_residual(sol.x, sol.omega, a, reg, y, 0.05, p);
    EXPECT_NEAR(r.r1, sol.kkt_r1, 1e-14);
    // The minimizer beats nearby points.
    for (int k = 0; k < 20; ++k) {
      const Vec x = sol.x + 1e-3 * oracle::normal_vector(5, rng);
      EXPECT_GE(tikhonov_objective(a, y, 0.05, p, reg, x), sol.objective - 1e-12);
    }
  }
}

TEST(SolvePrimal, SeparablePathAgreesWithIterativePath) {
  std::mt19937_64 rng(44);
  std::uniform_real_distribution<double> sigma(0.05, 2.0);
  for (double r : {1.5, 2.0, 3.0}) {
    Vec s(6);
    for (Index i = 0; i < 6; ++i) s[i] = sigma(rng);
    const OperatorSpec a = OperatorSpec::diagonal(s, r, r);
    const RegSpec reg = RegSpec::power_norm(r, r);
    const Vec y = oracle::normal_vector(6, rng);
    SolveOptions exact;
    exact.kkt_tol = 1e-10;
    SolveOptions iterative = exact;
    iterative.separable = false;
    iterative.max_iters = 400000;
    const PrimalDualSolution a_sol = solve_primal(a, y, 0.1, r, reg, exact);
    const PrimalDualSolution b_sol = solve_primal(a, y, 0.1, r, reg, iterative);
    EXPECT_TRUE(a_sol.converged);
    EXPECT_LE(std::abs(a_sol.objective - b_sol.objective), 1e-10 * (1.0 + a_sol.objective)) << "r=" << r;
    EXPECT_LE((a_sol.x - b_sol.x).cwiseAbs().maxCoeff(), 1e-5) << "r=" << r;
    // Coordinate equation sigma |sigma x - y|^{r-1} sgn(y - sigma x) = alpha |x|^{r-1} sgn(x).
    for (Index i = 0; i < 6; ++i) {
      const double res = s[i] * a_sol.x[i] - y[i];
      const double lhs = -s[i] * std::copysign(std::pow(std::abs(res), r - 1.0), res);
      const double rhs = 0.1 * std::copysign(std::pow(std::abs(a_sol.x[i]), r - 1.0), a_sol.x[i]);
      EXPECT_NEAR(lhs, rhs, 1e-9);
    }
  }
}

TEST(SolvePrimal, NegEntropyScalarEquation) {
  // Identity operator, p = 2: x_i + alpha ln x_i = y_i coordinatewise.
  const Vec y = vec({0.5, 1.0, 2.0, -0.3});
  const double alpha = 0.3;
  SolveOptions o;
  o.kkt_tol = 1e-10;
  const PrimalDualSolution sol = solve_primal(OperatorSpec::diagonal(Vec::Ones(4)), y, alpha, 2.0,
                                              RegSpec::neg_entropy(), o);
  EXPECT_TRUE(sol.converged);
  for (Index i = 0; i < 4; ++i) {
    double lo = 1e-300, hi = 10.0;
    for (int k = 0; k < 2000; ++k) {
      const double mid = 0.5 * (lo + hi);
      (mid + alpha * std::log(mid) < y[i] ? lo : hi) = mid;
    }
    EXPECT_NEAR(sol.x[i], lo, 1e-8 * (1.0 + lo));
  }
  EXPECT_GE(sol.x.minCoeff(), 0.0);
  // Fenchel-Young gap of the recovered pair is at KKT scale.
  const Vec xi = adjoint_apply(OperatorSpec::diagonal(Vec::Ones(4)), sol.omega);
  EXPECT_LE(fenchel_young_gap(RegSpec::neg_entropy(), sol.x, xi), 10.0 * o.kkt_tol);
}

TEST(RecoverDual, HomogeneityInAlpha) {
  std::mt19937_64 rng(45);
  const OperatorSpec a = OperatorSpec::dense(oracle::normal_matrix(5, 4, rng), 2.0, 3.0);
  const Vec x = oracle::normal_vector(4, rng);
  const Vec y = oracle::normal_vector(5, rng);
  const Vec w1 = recover_dual(x, a, y, 0.2, 3.0);
  const Vec w2 = recover_dual(x, a, y, 0.4, 3.0);
  EXPECT_LE((w1 - 2.0 * w2).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(DualFunctional, Examples) {
  const OperatorSpec a = OperatorSpec::diagonal(vec({1, 0.5}));
  const ProblemInstance inst = build_source_problem(a, kL2, 2.0, vec({1, 1}));
  // D* = 0 and the data term vanishes, leaving alpha ||omega||^2 / 2.
  EXPECT_NEAR(dual_functional(inst.omega_dag, a, kL2, inst.x_dag, inst.omega_dag, 0.5, 2.0, inst.y_dag, inst.y_dag),
              0.5, 1e-15);
  const Vec y_obs = inst.y_dag + vec({0.1, 0});
  EXPECT_NEAR(dual_functional(vec({2, 1}), a, kL2, inst.x_dag, inst.omega_dag, 0.5, 2.0, y_obs, inst.y_dag),
              0.5 + 1.25 - 0.1, 1e-14);
}

TEST(DualFunctional, SolverDualMinimizesProperty) {
  std::mt19937_64 rng(46);
  for (double p : {1.5, 2.0, 3.0}) {
    const OperatorSpec a = OperatorSpec::dense(oracle::normal_matrix(6, 6, rng), 2.0, p);
    const RegSpec reg = RegSpec::power_norm(2.0, 2.0);
    const ProblemInstance inst = with_noise(build_source_problem(a, reg, p, oracle::normal_vector(6, rng)), 0.05, 7);
    SolveOptions o;
    o.kkt_tol = 1e-10;
    o.max_iters = 400000;
    const double alpha = 0.1;
    const PrimalDualSolution sol = solve_primal(a, inst.y_delta, alpha, p, reg, o);
    ASSERT_TRUE(sol.converged);
    auto tstar = [&](const Vec& w) {
      return dual_functional(w, a, reg, inst.x_dag, inst.omega_dag, alpha, p, inst.y_delta, inst.y_dag);
    };
    const double best = tstar(sol.omega);
    for (int k = 0; k < 100; ++k) {
      const Vec w = sol.omega + 0.01 * oracle::normal_vector(6, rng);
      EXPECT_GE(tstar(w), best - 1e-9) << "p=" << p;
    }
  }
}

TEST(AlmostMinGap, SharpBoundHoldsOnRandomQuadratics) {
  std::mt19937_64 rng(47);
  std::uniform_real_distribution<double> log_alpha(-3.0, 0.0);
  for (int k = 0; k < 30; ++k) {
    const OperatorSpec a = OperatorSpec::dense(oracle::normal_matrix(6, 6, rng));
    const ProblemInstance base = build_source_problem(a, kL2, 2.0, oracle::normal_vector(6, rng));
    const double alpha = std::pow(10.0, log_alpha(rng));
    for (double delta : {0.0, 1e-4, 1e-2}) {
      SolveOptions o;
      o.kkt_tol = 1e-11;
      o.max_iters = 400000;
      const AlmostMinGap g = almost_min_gap(with_noise(base, delta, 100 + k), alpha, o);
      EXPECT_LE(g.gap, g.sharp_bound + 1e-8);
      EXPECT_GE(g.gap, -1e-8);
      EXPECT_GE(g.bound, 0.0);
      if (delta == 0.0) {
        EXPECT_LE(std::abs(g.gap), 1e-12);
      }
    }
  }
}

TEST(AlmostMinGap, SourceCenteredBoundCanFail) {
  // A = 1, alpha = 1, omega_dag = delta, noise +delta: the noisy dual lands on
  // omega_dag, so delta |omega_delta - omega_dag| = 0 while the gap is delta^2 / 4.
  const double delta = 0.1;
  const ProblemInstance base = build_source_problem(OperatorSpec::diagonal(vec({1})), kL2, 2.0, vec({delta}));
  ProblemInstance inst = base;
  inst.delta = delta;
  inst.y_delta = base.y_dag + vec({delta});
  SolveOptions o;
  o.kkt_tol = 1e-12;
  const AlmostMinGap g = almost_min_gap(inst, 1.0, o);
  EXPECT_NEAR(g.gap, delta * delta / 4.0, 1e-12);
  EXPECT_NEAR(g.bound, 0.0, 1e-12);
  EXPECT_NEAR(g.sharp_bound, delta * delta / 2.0, 1e-12);
}

TEST(AlmostMinGap, ThrowsWhenSolveFails) {
  const OperatorSpec a = OperatorSpec::diagonal(vec({1, 1e-3}));
  const ProblemInstance inst = with_noise(build_source_problem(a, kL2, 2.0, vec({1, 1})), 0.1, 1);
  SolveOptions o;
  o.max_iters = 1;
  o.separable = false;
  o.kkt_tol = 1e-14;
  EXPECT_THROW(almost_min_gap(inst, 1e-6, o), ConvergenceError);
}
