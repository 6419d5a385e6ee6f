#include "tikreg/banach.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "tikreg/error.hpp"
#include "tikreg/random.hpp"

namespace tikreg {

namespace {

void require_gauge(double q, const char* what) {
  if (!(q > 1.0) || !std::isfinite(q)) {
    throw DomainError(std::string(what) + " must be a finite exponent > 1, got " + std::to_string(q));
  }
}

void require_dim(const Vec& v, const SpaceSpec& space, const char* what) {
  if (v.size() != space.dim()) {
    throw DimensionError(std::string(what) + ": vector has " + std::to_string(v.size()) +
                         " coordinates, space has dimension " + std::to_string(space.dim()));
  }
}

bool is_hilbert_quadratic(const SpaceSpec& space, double gauge) {
  return space.r() == 2.0 && gauge == 2.0;
}

}  // namespace

bool Tolerance::close(double a, double b) const {
  return std::abs(a - b) <= abs + rel * std::max(std::abs(a), std::abs(b));
}

double conjugate_exponent(double q) {
  require_gauge(q, "exponent");
  return q / (q - 1.0);
}

void require_finite(const Vec& v, const char* what) {
  if (!v.allFinite()) throw DomainError(std::string(what) + " has a non-finite coordinate");
}

SpaceSpec::SpaceSpec(Index dim, double r) : dim_(dim), r_(r) {
  if (dim <= 0) throw DomainError("space dimension must be positive");
  require_gauge(r, "space exponent r");
}

double SpaceSpec::conjugate_r() const { return conjugate_exponent(r_); }

SpaceSpec SpaceSpec::dual() const { return SpaceSpec(dim_, conjugate_r()); }

double SpaceSpec::convexity_power() const { return std::max(r_, 2.0); }

double SpaceSpec::smoothness_power() const { return std::min(r_, 2.0); }

double pairing(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) {
    throw DimensionError("pairing of vectors with " + std::to_string(a.size()) + " and " +
                         std::to_string(b.size()) + " coordinates");
  }
  return a.dot(b);
}

double norm(const Vec& v, const SpaceSpec& space) {
  require_dim(v, space, "norm");
  require_finite(v, "norm argument");
  const double scale = v.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  if (space.r() == 2.0) return v.norm();
  double sum = 0.0;
  for (Index i = 0; i < v.size(); ++i) sum += std::pow(std::abs(v[i]) / scale, space.r());
  return scale * std::pow(sum, 1.0 / space.r());
}

Vec duality_map(const Vec& v, const SpaceSpec& space, double gauge) {
  require_gauge(gauge, "duality map gauge q");
  const double nv = norm(v, space);
  Vec out = Vec::Zero(v.size());
  if (nv == 0.0) return out;
  const double r = space.r();
  const double lead = std::pow(nv, gauge - 1.0);
  if (r == 2.0) return (lead / nv) * v;
  for (Index i = 0; i < v.size(); ++i) {
    if (v[i] == 0.0) continue;
    out[i] = lead * std::copysign(std::pow(std::abs(v[i]) / nv, r - 1.0), v[i]);
  }
  return out;
}

Vec adjoint_duality_map(const Vec& omega, const SpaceSpec& dual_space, double dual_gauge) {
  return duality_map(omega, dual_space, dual_gauge);
}

double bregman_power(const Vec& y_tilde, const Vec& y, const SpaceSpec& space, double gauge) {
  require_gauge(gauge, "Bregman gauge q");
  require_dim(y_tilde, space, "bregman_power");
  require_dim(y, space, "bregman_power");
  if (is_hilbert_quadratic(space, gauge)) return 0.5 * (y_tilde - y).squaredNorm();
  const double value = (std::pow(norm(y_tilde, space), gauge) - std::pow(norm(y, space), gauge)) / gauge -
                       pairing(duality_map(y, space, gauge), y_tilde - y);
  return std::max(value, 0.0);
}

double sym_bregman_power(const Vec& y_tilde, const Vec& y, const SpaceSpec& space, double gauge) {
  require_dim(y_tilde, space, "sym_bregman_power");
  require_dim(y, space, "sym_bregman_power");
  if (is_hilbert_quadratic(space, gauge)) return (y_tilde - y).squaredNorm();
  const double value =
      pairing(duality_map(y_tilde, space, gauge) - duality_map(y, space, gauge), y_tilde - y);
  return std::max(value, 0.0);
}

double qconvexity_constant(const SpaceSpec& space, double gauge, int nsamples, std::uint64_t seed) {
  require_gauge(gauge, "q-convexity gauge");
  if (nsamples <= 0) throw DomainError("qconvexity_constant needs at least one sample");
  if (gauge < space.convexity_power() - 1e-12) {
    throw DomainError("gauge " + std::to_string(gauge) + " is below the convexity power " +
                      std::to_string(space.convexity_power()) + " of l^" +
                      std::to_string(space.r()) + "; no positive constant exists");
  }
  Rng rng(seed);
  std::uniform_real_distribution<double> log_scale(-3.0, 3.0);
  double best = std::numeric_limits<double>::infinity();
  for (int s = 0; s < nsamples; ++s) {
    const Vec y = gaussian_vector(space.dim(), rng);
    const Vec dir = gaussian_vector(space.dim(), rng);
    const Vec y_tilde = y + std::pow(10.0, log_scale(rng)) * dir;
    const double dist = norm(y_tilde - y, space);
    if (dist == 0.0) continue;
    best = std::min(best, bregman_power(y_tilde, y, space, gauge) / std::pow(dist, gauge));
  }
  return best;
}

double convexity_modulus_probe(const SpaceSpec& space, double eps, int nsamples,
                               std::uint64_t seed) {
  if (!(eps > 0.0 && eps <= 2.0)) throw DomainError("modulus of convexity is defined for eps in (0, 2]");
  if (nsamples <= 0) throw DomainError("convexity_modulus_probe needs at least one sample");
  if (space.dim() < 2) throw DomainError("convexity modulus probe needs dimension >= 2");

  Rng rng(seed);
  double best = 1.0;
  for (int s = 0; s < nsamples; ++s) {
    Vec y = gaussian_vector(space.dim(), rng);
    y /= norm(y, space);
    const Vec dir = gaussian_vector(space.dim(), rng);
    // Walk the unit sphere of span{y, dir} from y (distance 0) to -y (distance 2).
    auto point = [&](double theta) {
      Vec p = std::cos(theta) * y + std::sin(theta) * dir;
      return Vec(p / norm(p, space));
    };
    double theta = std::numbers::pi;
    if (eps < 2.0) {
      double lo = 0.0, hi = std::numbers::pi;
      for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        (norm(y - point(mid), space) < eps ? lo : hi) = mid;
      }
      theta = 0.5 * (lo + hi);
    }
    const Vec y_tilde = eps < 2.0 ? point(theta) : Vec(-y);
    best = std::min(best, 1.0 - 0.5 * norm(y + y_tilde, space));
  }
  return std::clamp(best, 0.0, 1.0);
}

SmoothnessProfile estimate_profile(const SpaceSpec& space, int nsamples, std::uint64_t seed) {
  SmoothnessProfile profile;
  profile.convexity_power = space.convexity_power();
  profile.smoothness_power = space.smoothness_power();
  profile.qconvexity_constant = qconvexity_constant(space, profile.convexity_power, nsamples, seed);
  if (space.dim() >= 2) {
    double k = std::numeric_limits<double>::infinity();
    for (double eps = 0.2; eps <= 2.0 + 1e-12; eps += 0.2) {
      const double delta = convexity_modulus_probe(space, std::min(eps, 2.0), nsamples, seed + 1);
      k = std::min(k, delta / std::pow(eps, profile.convexity_power));
    }
    profile.convexity_constant = k;
  }
  return profile;
}

}  // namespace tikreg
