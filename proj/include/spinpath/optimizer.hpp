#pragma once

// Greedy Hessian descent. The radial variant builds a path from the origin to
// the sphere of radius sqrt(N) out of k orthogonal increments, each along a
// direction whose Rayleigh quotient under the projected Hessian is within
// epsilon of the spectral edge -2 sqrt(nu''(q)). The sphere variant runs the
// same direction search on the sphere itself, renormalizing after each step.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "spinpath/hamiltonian.hpp"

namespace spinpath {

struct AlgorithmParams {
  int k = 50;
  double epsilon = 0.1;
  /// Spectral shift for power iteration; when unset, 3 sqrt(nu''(q)) + 1 at each step.
  std::optional<double> power_shift_L;
  int power_iters_max = 500;
  /// Dense eigensolve fallback when power iteration stalls.
  bool rayleigh_check = true;
  std::uint64_t rng_seed = 0;
  /// Start the radial path along a random unit vector instead of e_1.
  bool random_v0 = false;
  /// Measure third directional derivatives along each segment.
  bool measure_third_derivative = true;
  /// When false, a step whose dense fallback still misses the Rayleigh target
  /// takes the most negative eigenvector anyway and is marked missed_target.
  bool stop_on_spectral_failure = true;
};

struct DirectionResult {
  Vector v;
  double rayleigh = 0.0;
  double grad_dot = 0.0;
  int iterations = 0;
  bool used_fallback = false;
  bool missed_target = false;
};

/// Rayleigh target -2 sqrt(nu2_q) + epsilon.
double rayleigh_target(double nu2_q, double epsilon);

/// Shifted power iteration on the projected Hessian, restricted to the
/// orthogonal complement of sigma, stopping at the first iterate that meets the
/// Rayleigh target. Sign is chosen so that v . grad <= 0 (+v on a tie).
/// Throws SpectralFailure if neither power iteration nor the fallback succeeds,
/// unless params.stop_on_spectral_failure is off.
DirectionResult find_direction(const Matrix& hess, const Vector& grad, const Vector& sigma,
                               const AlgorithmParams& params, double nu2_q, std::mt19937_64& rng);
DirectionResult find_direction(const Matrix& hess, const Vector& grad, const Vector& sigma,
                               const AlgorithmParams& params, double nu2_q);

struct PathStep {
  int step = 0;
  double q = 0.0;
  Vector point;
  Vector direction;  // empty on the final step
  double energy_per_spin = 0.0;
  /// NaN where no condition was checked (step 0 and the endpoint).
  double rayleigh = 0.0;
  double grad_dot = 0.0;
  double benchmark = 0.0;  // -E_H(q)
  double gap = 0.0;        // energy_per_spin + E_H(q)
  bool used_fallback = false;
  bool missed_target = false;
  int power_iterations = 0;
  /// max |third directional derivative| * sqrt(N) sampled along the outgoing segment
  double third_derivative = 0.0;
};

struct PathTrace {
  std::string mixture;
  int n = 0;
  std::uint64_t disorder_seed = 0;
  int k = 0;
  double epsilon = 0.0;
  std::vector<PathStep> steps;
  /// Set when a step failed; steps then holds the partial path.
  std::optional<std::string> failure;

  bool complete() const { return !failure && static_cast<int>(steps.size()) == k + 1; }
  double final_energy() const;
  double sup_gap() const;
  int fallback_count() const;
  int miss_count() const;
  double max_third_derivative() const;
};

PathTrace run_radial_path(const Disorder& d, const AlgorithmParams& params);

/// Energy per spin on the interpolated path at q: sigma_{j/k} + sqrt(N t) v_j.
double interpolate_energy(const PathTrace& trace, const Disorder& d, double q);

struct SphereStep {
  int step = 0;
  double energy_per_spin = 0.0;
  double rayleigh = 0.0;
  double grad_dot = 0.0;
  bool used_fallback = false;
  bool missed_target = false;
  double third_derivative = 0.0;
};

struct SphereTrace {
  int p = 0;
  int n = 0;
  double tau = 0.0;
  double epsilon = 0.0;
  std::vector<SphereStep> steps;  // steps[i] holds the state sigma_i; last entry has no direction
  Vector final_point;
  double max_norm_error = 0.0;  // max | |sigma_i|^2 / N - 1 |
  std::optional<std::string> failure;

  double final_energy() const { return steps.back().energy_per_spin; }
  int miss_count() const;
};

SphereTrace run_pure_sphere(const Disorder& d, int p, double tau, int steps, const AlgorithmParams& params);

/// Upper bound on H(sigma_k)/N after `steps` sphere iterations started at h0:
/// (1+tau)^{-pk/2} h0 - (tau sqrt(nu''(1)) - cushion_per_step) S_k,
/// S_k = (1 - (1+tau)^{-pk/2}) / ((1+tau)^{p/2} - 1).
double sphere_recursion_bound(double h0, int p, double tau, int steps, double nu2_one, double cushion_per_step);

/// Per-step slack of the sphere recursion: tau epsilon / 2 + C3 tau^{3/2} / 6.
double sphere_step_cushion(double tau, double epsilon, double c3);

}  // namespace spinpath
