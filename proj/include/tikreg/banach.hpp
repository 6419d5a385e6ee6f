#pragma once

// Finite-dimensional l^r geometry: norms, duality mappings J_q, Bregman
// distances of S_q = (1/q)||.||^q, and sampled convexity constants.

#include <cstdint>

#include <Eigen/Core>

namespace tikreg {

using Vec = Eigen::VectorXd;
using Index = Eigen::Index;

/// Absolute/relative tolerance pair used by the numerical checks.
struct Tolerance {
  double abs = 1e-10;
  double rel = 1e-8;

  bool close(double a, double b) const;
};

/// Conjugate exponent q* with 1/q + 1/q* = 1. Throws DomainError for q <= 1.
double conjugate_exponent(double q);

/// Throws DomainError if any coordinate is NaN or infinite.
void require_finite(const Vec& v, const char* what);

/// Power-type profile of an l^r space; the constants are sampled estimates.
struct SmoothnessProfile {
  double convexity_power = 2.0;
  double convexity_constant = 0.0;   // K in delta(eps) >= K eps^q
  double smoothness_power = 2.0;
  double qconvexity_constant = 0.0;  // C in C||y - y~||^q <= D_q(y~; y)
};

/// The space l^r of dimension dim, 1 < r < infinity.
class SpaceSpec {
 public:
  SpaceSpec(Index dim, double r);

  Index dim() const { return dim_; }
  double r() const { return r_; }
  double conjugate_r() const;

  /// The dual space l^{r*} of the same dimension.
  SpaceSpec dual() const;

  double convexity_power() const;
  double smoothness_power() const;

  bool operator==(const SpaceSpec&) const = default;

 private:
  Index dim_;
  double r_;
};

double pairing(const Vec& a, const Vec& b);

double norm(const Vec& v, const SpaceSpec& space);

/// J_q(v) on l^r: omega_i = ||v||^{q-r} sgn(v_i) |v_i|^{r-1}, J_q(0) = 0.
Vec duality_map(const Vec& v, const SpaceSpec& space, double gauge);

/// J*_{q*} on the dual space; inverse of duality_map(., dual_space.dual(), q).
Vec adjoint_duality_map(const Vec& omega, const SpaceSpec& dual_space, double dual_gauge);

/// D_q(y~; y) = S_q(y~) - S_q(y) - <J_q(y), y~ - y>.
double bregman_power(const Vec& y_tilde, const Vec& y, const SpaceSpec& space, double gauge);

/// <J_q(y~) - J_q(y), y~ - y>.
double sym_bregman_power(const Vec& y_tilde, const Vec& y, const SpaceSpec& space, double gauge);

/// Sampled infimum of D_q(y~; y) / ||y~ - y||^q over nsamples random pairs.
/// An upper estimate of the best constant C. Requires gauge >= convexity power.
double qconvexity_constant(const SpaceSpec& space, double gauge, int nsamples, std::uint64_t seed);

/// Sampled estimate (from above) of the modulus of convexity
/// delta(eps) = inf{1 - ||y + y~||/2 : ||y|| = ||y~|| = 1, ||y - y~|| = eps}.
double convexity_modulus_probe(const SpaceSpec& space, double eps, int nsamples,
                               std::uint64_t seed);

/// Powers from the space, K and C from the probes above.
SmoothnessProfile estimate_profile(const SpaceSpec& space, int nsamples, std::uint64_t seed);

}  // namespace tikreg
