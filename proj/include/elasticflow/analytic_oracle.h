#pragma once

#include <functional>
#include <span>
#include <vector>

#include "elasticflow/tensor.h"

// Closed-form ground truth for the linear flow z_t = (1 − t)·x + t·ε when
// the data law is a mixture of isotropic Gaussians (variance 0 = Dirac).
namespace elasticflow::oracle {

using Vector = std::vector<Real>;

struct GMMComponent {
  Real weight = 1;
  Vector mean;
  Real variance = 0;  // isotropic; 0 means a point mass
};

struct GMMSpec {
  std::vector<GMMComponent> components;

  std::size_t dims() const { return components.empty() ? 0 : components.front().mean.size(); }
  bool has_dirac() const;
  // Weights positive and summing to 1 (to 1e-12), variances >= 0, equal dims.
  void validate() const;

  static GMMSpec dirac(Vector x0);
  static GMMSpec gaussian(Vector mean, Real variance);
};

// Smallest time reached when integrating toward a point mass.
inline constexpr Real kDiracMinTime = Real(1e-4);

// v(z, t) = E[ε − x | z_t = z], via posterior responsibilities. t must lie in
// (0, 1]; t = 0 is allowed only without point-mass components.
Vector marginal_velocity(const GMMSpec& spec, std::span<const Real> z, Real t);

struct CharacteristicPoint {
  Real tau;
  Vector z;
};

// RK4 on dz/dτ = v(z, τ) from τ = t down to τ = r in n_steps equal steps.
// For specs with point masses the lower end is clamped to kDiracMinTime.
std::vector<CharacteristicPoint> integrate_characteristic(const GMMSpec& spec, std::span<const Real> z_t,
                                                          Real t, Real r, std::size_t n_steps);

struct AverageVelocity {
  Vector displacement;  // (z_t − z_r)/(t − r)
  Vector path_average;  // (1/(t − r))·∫ v dτ along the characteristic
};

// Both routes to u(z_t, r, t). When t − r < 1e-9 both equal v(z_t, t).
AverageVelocity oracle_average_velocity_both(const GMMSpec& spec, std::span<const Real> z_t, Real r, Real t,
                                             std::size_t n_steps);
Vector oracle_average_velocity(const GMMSpec& spec, std::span<const Real> z_t, Real r, Real t,
                               std::size_t n_steps);

using AverageField = std::function<Vector(std::span<const Real> z, Real r, Real t)>;

// u(z, r, t) = (z − x₀)/t, the exact average velocity for a point mass at x₀.
AverageField dirac_average_field(Vector x0);
AverageField brute_force_average_field(GMMSpec spec, std::size_t n_steps);

// || u − v + (t − r)·(v·∇_z u + ∂_t u) || with the derivatives of `field`
// taken by central differences of step h ∈ (0, 1e-2]; the directional
// derivative along v uses one pair of evaluations. The field is evaluated at
// t ± h, so t + h must stay inside its domain.
Real identity_residual(const AverageField& field, const GMMSpec& spec, std::span<const Real> z, Real r, Real t,
                       Real h);

}  // namespace elasticflow::oracle
