#include "elasticflow/analytic_oracle.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "elasticflow/error.h"

namespace elasticflow::oracle {

bool GMMSpec::has_dirac() const {
  return std::any_of(components.begin(), components.end(), [](const GMMComponent& c) { return c.variance == 0; });
}

void GMMSpec::validate() const {
  if (components.empty()) throw PreconditionError("GMMSpec: no components");
  Real total = 0;
  for (const auto& c : components) {
    if (!(c.weight > 0)) throw PreconditionError("GMMSpec: weights must be positive");
    if (!(c.variance >= 0)) throw PreconditionError("GMMSpec: variances must be >= 0");
    if (c.mean.size() != dims() || c.mean.empty()) throw PreconditionError("GMMSpec: inconsistent dimensions");
    total += c.weight;
  }
  if (std::abs(total - Real(1)) > Real(1e-12)) throw PreconditionError("GMMSpec: weights must sum to 1");
}

GMMSpec GMMSpec::dirac(Vector x0) { return GMMSpec{{GMMComponent{1, std::move(x0), 0}}}; }

GMMSpec GMMSpec::gaussian(Vector mean, Real variance) {
  return GMMSpec{{GMMComponent{1, std::move(mean), variance}}};
}

Vector marginal_velocity(const GMMSpec& spec, std::span<const Real> z, Real t) {
  spec.validate();
  const std::size_t d = spec.dims();
  if (z.size() != d) throw ShapeError("marginal_velocity", "z has " + std::to_string(z.size()) + " entries, spec has " + std::to_string(d));
  if (!(t >= 0 && t <= 1)) throw PreconditionError("marginal_velocity: t must lie in [0,1], got " + std::to_string(t));
  if (t == 0 && spec.has_dirac()) throw PreconditionError("marginal_velocity: singular at t = 0 for point-mass data");

  // Given component k: z ~ N((1−t)μ_k, σ²_k(t) I), σ²_k(t) = (1−t)² s²_k + t².
  //   E[ε | z, k] = t (z − (1−t)μ_k) / σ²_k(t)
  //   E[x | z, k] = μ_k + (1−t) s²_k (z − (1−t)μ_k) / σ²_k(t)
  const std::size_t k_count = spec.components.size();
  std::vector<Real> log_resp(k_count);
  std::vector<Vector> cond_v(k_count, Vector(d));
  for (std::size_t k = 0; k < k_count; ++k) {
    const GMMComponent& c = spec.components[k];
    const Real a = Real(1) - t;
    const Real var = a * a * c.variance + t * t;
    Real sq = 0;
    for (std::size_t j = 0; j < d; ++j) {
      const Real centered = z[j] - a * c.mean[j];
      sq += centered * centered;
      const Real e_noise = t * centered / var;
      const Real e_data = c.mean[j] + a * c.variance * centered / var;
      cond_v[k][j] = e_noise - e_data;
    }
    log_resp[k] = std::log(c.weight) - Real(0.5) * (sq / var + Real(d) * std::log(var));
  }
  const Real peak = *std::max_element(log_resp.begin(), log_resp.end());
  Real norm = 0;
  for (auto& lr : log_resp) {
    lr = std::exp(lr - peak);
    norm += lr;
  }
  Vector v(d, Real(0));
  for (std::size_t k = 0; k < k_count; ++k) {
    const Real w = log_resp[k] / norm;
    for (std::size_t j = 0; j < d; ++j) v[j] += w * cond_v[k][j];
  }
  return v;
}

namespace {

Vector axpy(std::span<const Real> x, Real a, const Vector& y) {
  Vector out(x.begin(), x.end());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] += a * y[j];
  return out;
}

Real effective_lower(const GMMSpec& spec, Real r) {
  return spec.has_dirac() ? std::max(r, kDiracMinTime) : r;
}

}  // namespace

std::vector<CharacteristicPoint> integrate_characteristic(const GMMSpec& spec, std::span<const Real> z_t,
                                                          Real t, Real r, std::size_t n_steps) {
  if (n_steps == 0) throw PreconditionError("integrate_characteristic: n_steps must be >= 1");
  if (!(r >= 0 && r <= t && t <= 1)) {
    throw PreconditionError("integrate_characteristic: need 0 <= r <= t <= 1");
  }
  const Real lower = effective_lower(spec, r);
  if (lower > t) throw PreconditionError("integrate_characteristic: t below the point-mass cutoff");
  const Real h = (lower - t) / Real(n_steps);
  if (h == 0 && lower != t) throw NumericError("integrate_characteristic: step underflow");

  std::vector<CharacteristicPoint> path;
  path.reserve(n_steps + 1);
  path.push_back({t, Vector(z_t.begin(), z_t.end())});
  Vector z(z_t.begin(), z_t.end());
  for (std::size_t i = 0; i < n_steps; ++i) {
    const Real tau = t + Real(i) * h;
    const Vector k1 = marginal_velocity(spec, z, tau);
    const Vector k2 = marginal_velocity(spec, axpy(z, h / 2, k1), tau + h / 2);
    const Vector k3 = marginal_velocity(spec, axpy(z, h / 2, k2), tau + h / 2);
    const Real next = (i + 1 == n_steps) ? lower : t + Real(i + 1) * h;
    const Vector k4 = marginal_velocity(spec, axpy(z, h, k3), next);
    for (std::size_t j = 0; j < z.size(); ++j) z[j] += h / 6 * (k1[j] + 2 * k2[j] + 2 * k3[j] + k4[j]);
    path.push_back({next, z});
  }
  return path;
}

AverageVelocity oracle_average_velocity_both(const GMMSpec& spec, std::span<const Real> z_t, Real r, Real t,
                                             std::size_t n_steps) {
  if (t - r < Real(1e-9)) {
    Vector v = marginal_velocity(spec, z_t, t);
    return {v, v};
  }
  const auto path = integrate_characteristic(spec, z_t, t, r, n_steps);
  const Real lower = path.back().tau;
  const Real span = t - lower;
  const std::size_t d = z_t.size();
  AverageVelocity out{Vector(d), Vector(d, Real(0))};
  for (std::size_t j = 0; j < d; ++j) out.displacement[j] = (z_t[j] - path.back().z[j]) / span;

  // Composite Simpson over the RK4 nodes (trapezoid on a trailing odd step).
  const std::size_t n = path.size() - 1;
  const Real h = span / Real(n);
  std::vector<Vector> v(path.size());
  for (std::size_t i = 0; i < path.size(); ++i) v[i] = marginal_velocity(spec, path[i].z, path[i].tau);
  const std::size_t simpson_end = n - (n % 2);
  for (std::size_t i = 0; i + 2 <= simpson_end; i += 2) {
    for (std::size_t j = 0; j < d; ++j) out.path_average[j] += h / 3 * (v[i][j] + 4 * v[i + 1][j] + v[i + 2][j]);
  }
  if (simpson_end != n) {
    for (std::size_t j = 0; j < d; ++j) out.path_average[j] += h / 2 * (v[n - 1][j] + v[n][j]);
  }
  for (auto& x : out.path_average) x /= span;
  return out;
}

Vector oracle_average_velocity(const GMMSpec& spec, std::span<const Real> z_t, Real r, Real t,
                               std::size_t n_steps) {
  if (t - r < Real(1e-9)) return marginal_velocity(spec, z_t, t);
  const auto path = integrate_characteristic(spec, z_t, t, r, n_steps);
  const Real span = t - path.back().tau;
  Vector u(z_t.size());
  for (std::size_t j = 0; j < u.size(); ++j) u[j] = (z_t[j] - path.back().z[j]) / span;
  return u;
}

AverageField dirac_average_field(Vector x0) {
  return [x0 = std::move(x0)](std::span<const Real> z, Real, Real t) {
    if (!(t > 0)) throw PreconditionError("dirac_average_field: t must be > 0");
    if (z.size() != x0.size()) throw ShapeError("dirac_average_field", "dimension mismatch");
    Vector u(z.size());
    for (std::size_t j = 0; j < u.size(); ++j) u[j] = (z[j] - x0[j]) / t;
    return u;
  };
}

AverageField brute_force_average_field(GMMSpec spec, std::size_t n_steps) {
  return [spec = std::move(spec), n_steps](std::span<const Real> z, Real r, Real t) {
    return oracle_average_velocity(spec, z, r, t, n_steps);
  };
}

Real identity_residual(const AverageField& field, const GMMSpec& spec, std::span<const Real> z, Real r, Real t,
                       Real h) {
  if (!(h > 0 && h <= Real(1e-2))) throw PreconditionError("identity_residual: h must lie in (0, 1e-2]");
  if (!(r <= t)) throw PreconditionError("identity_residual: need r <= t");
  const Vector u = field(z, r, t);
  const Vector v = marginal_velocity(spec, z, t);
  const std::size_t d = z.size();
  Vector residual(d);
  for (std::size_t j = 0; j < d; ++j) residual[j] = u[j] - v[j];
  if (t > r) {
    if (t + h > Real(1) || t - h < r) {
      throw PreconditionError("identity_residual: t ± h leaves the field domain");
    }
    const Vector u_zp = field(axpy(z, h, v), r, t);
    const Vector u_zm = field(axpy(z, -h, v), r, t);
    const Vector u_tp = field(z, r, t + h);
    const Vector u_tm = field(z, r, t - h);
    for (std::size_t j = 0; j < d; ++j) {
      const Real convective = (u_zp[j] - u_zm[j]) / (2 * h);
      const Real unsteady = (u_tp[j] - u_tm[j]) / (2 * h);
      residual[j] += (t - r) * (convective + unsteady);
    }
  }
  Real sq = 0;
  for (Real x : residual) sq += x * x;
  return std::sqrt(sq);
}

}  // namespace elasticflow::oracle
