#include "tikreg/selftest.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>

#include "tikreg/banach.hpp"
#include "tikreg/linop.hpp"
#include "tikreg/random.hpp"
#include "tikreg/regfun.hpp"
#include "tikreg/solver.hpp"

namespace tikreg {

namespace {

SelftestCheck check(std::string name, double worst, double tol) {
  return SelftestCheck{std::move(name), worst <= tol, worst, tol};
}

void oracle_suite(std::vector<SelftestCheck>& out, std::optional<double> override_tol) {
  const std::pair<int, int> shapes[] = {{8, 5}, {30, 20}, {50, 50}};
  const double alphas[] = {1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0};
  SolveOptions opts;
  opts.kkt_tol = 1e-9;
  opts.max_iters = 400000;
  double worst = 0.0;
  Rng rng(20240601);
  for (const auto& [m, n] : shapes) {
    Matrix a(m, n);
    for (Index j = 0; j < n; ++j) a.col(j) = gaussian_vector(m, rng) / std::sqrt(double(m));
    const Vec y = gaussian_vector(m, rng);
    const OperatorSpec op = OperatorSpec::dense(a);
    for (double alpha : alphas) {
      const Matrix normal = a.transpose() * a + alpha * Matrix::Identity(n, n);
      const Vec expected = normal.ldlt().solve(a.transpose() * y);
      const PrimalDualSolution sol = solve_primal(op, y, alpha, 2.0, RegSpec::power_norm(2.0, 2.0), opts);
      worst = std::max(worst, (sol.x - expected).norm() / expected.norm());
    }
  }
  out.push_back(check("oracle equivalence (A^T A + alpha I)^{-1} A^T y", worst, override_tol.value_or(1e-8)));
}

void duality_suite(std::vector<SelftestCheck>& out, std::optional<double> override_tol) {
  const double rs[] = {1.5, 2.0, 3.0, 4.0};
  const double qs[] = {1.5, 2.0, 3.0};
  const int nvec = 1000;
  const Index dim = 6;
  double identity = 0.0;
  double homogeneity = 0.0;
  double gradient = 0.0;
  double roundtrip = 0.0;
  Rng rng(7);
  std::uniform_real_distribution<double> lambda_dist(-3.0, 3.0);
  for (double r : rs) {
    const SpaceSpec space(dim, r);
    for (double q : qs) {
      const double qs_dual = conjugate_exponent(q);
      for (int k = 0; k < nvec; ++k) {
        const Vec v = gaussian_vector(dim, rng);
        const double nv = norm(v, space);
        const Vec j = duality_map(v, space, q);
        // <J_q v, v> = ||v||^q and ||J_q v||_* = ||v||^{q-1}.
        identity = std::max(identity, std::abs(pairing(j, v) - std::pow(nv, q)) / std::pow(nv, q));
        identity = std::max(identity, std::abs(norm(j, space.dual()) - std::pow(nv, q - 1.0)) /
                                          std::pow(nv, q - 1.0));
        const double lambda = lambda_dist(rng);
        const Vec scaled = duality_map(lambda * v, space, q);
        const Vec expect = std::copysign(std::pow(std::abs(lambda), q - 1.0), lambda) * j;
        homogeneity = std::max(homogeneity, (scaled - expect).cwiseAbs().maxCoeff() /
                                                std::max(expect.cwiseAbs().maxCoeff(), 1e-300));
        // Five-point differences of S_q = ||.||^q / q with a step relative to
        // |v_i|, so the stencil never straddles the kink of |t|^r at 0.
        Vec fd(dim);
        for (Index i = 0; i < dim; ++i) {
          const double h = 1e-3 * std::abs(v[i]);
          auto s_at = [&](double shift) {
            Vec w = v;
            w[i] += shift;
            return std::pow(norm(w, space), q) / q;
          };
          fd[i] = (8.0 * (s_at(h) - s_at(-h)) - (s_at(2.0 * h) - s_at(-2.0 * h))) / (12.0 * h);
        }
        gradient = std::max(gradient, (fd - j).cwiseAbs().maxCoeff() / j.cwiseAbs().maxCoeff());
        const Vec back = adjoint_duality_map(j, space.dual(), qs_dual);
        roundtrip = std::max(roundtrip, (back - v).cwiseAbs().maxCoeff() / v.cwiseAbs().maxCoeff());
      }
    }
  }
  out.push_back(check("duality identities <Jv,v> = ||v||^q, ||Jv|| = ||v||^{q-1}", identity,
                      override_tol.value_or(1e-10)));
  out.push_back(check("(q-1)-homogeneity", homogeneity, override_tol.value_or(1e-10)));
  out.push_back(check("gradient of S_q by central differences", gradient, override_tol.value_or(1e-6)));
  out.push_back(check("inverse roundtrip J*_{q*}(J_q v) = v", roundtrip, override_tol.value_or(1e-10)));
}

}  // namespace

bool SelftestReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const SelftestCheck& c) { return c.passed; });
}

SelftestReport run_selftest(std::optional<double> tolerance) {
  SelftestReport report;
  oracle_suite(report.checks, tolerance);
  duality_suite(report.checks, tolerance);
  return report;
}

}  // namespace tikreg
