#include "spinpath/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "spinpath/errors.hpp"

namespace spinpath {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Vector random_unit_orthogonal(const Vector& sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int attempt = 0; attempt < 16; ++attempt) {
    Vector u(sigma.size());
    for (auto& c : u) c = gauss(rng);
    u = project_vector(u, sigma);
    const double norm = u.norm();
    if (norm > 0.0) return u / norm;
  }
  throw NumericalError("could not draw a direction orthogonal to sigma");
}

Vector normalized_orthogonal(const Vector& v, const Vector& sigma) {
  Vector w = project_vector(v, sigma);
  w /= w.norm();
  w = project_vector(w, sigma);
  return w / w.norm();
}

// max |d^3/dt^3 H(x + t v)| sampled at the ends (and midpoint for degree >= 5)
// of the segment x + t v, t in [0, length], scaled by sqrt(N).
double segment_third_derivative(const Disorder& d, const Vector& x, const Vector& v, double length) {
  std::vector<double> samples{0.0, length};
  if (d.mixture().degree() >= 5) samples.push_back(0.5 * length);
  double worst = 0.0;
  for (double t : samples) {
    const Vector at = x + t * v;
    worst = std::max(worst, std::abs(directional_jet(d, at, v).d3));
  }
  return worst * std::sqrt(static_cast<double>(d.n()));
}

}  // namespace

double rayleigh_target(double nu2_q, double epsilon) { return -2.0 * std::sqrt(nu2_q) + epsilon; }

DirectionResult find_direction(const Matrix& hess, const Vector& grad, const Vector& sigma,
                               const AlgorithmParams& params, double nu2_q, std::mt19937_64& rng) {
  const auto n = sigma.size();
  if (hess.rows() != n || hess.cols() != n || grad.size() != n) {
    throw ArgumentError("find_direction: dimension mismatch");
  }
  if (sigma.squaredNorm() == 0.0) throw DomainError("find_direction: sigma must be nonzero");
  if (!(nu2_q >= 0.0)) throw ArgumentError("find_direction: nu''(q) must be non-negative");
  if (params.power_iters_max < 1) throw ArgumentError("find_direction: power_iters_max must be >= 1");

  const double target = rayleigh_target(nu2_q, params.epsilon);
  const double shift = params.power_shift_L.value_or(3.0 * std::sqrt(nu2_q) + 1.0);

  DirectionResult out;
  Vector v = random_unit_orthogonal(sigma, rng);
  double rayleigh = std::numeric_limits<double>::infinity();
  bool met = false;
  for (int it = 0;; ++it) {
    const Vector hv = hess * v;
    rayleigh = v.dot(hv);
    if (rayleigh <= target) {
      met = true;
      out.iterations = it;
      break;
    }
    if (it == params.power_iters_max) {
      out.iterations = it;
      break;
    }
    v = normalized_orthogonal(hv - shift * v, sigma);
  }

  if (!met) {
    if (!params.rayleigh_check) throw SpectralFailure(rayleigh, target);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(hess);
    if (eig.info() != Eigen::Success) throw NumericalError("find_direction: eigensolver failed");
    // lowest eigenvector not aligned with sigma
    const Vector u = sigma.normalized();
    Eigen::Index col = 0;
    while (col + 1 < n && std::abs(eig.eigenvectors().col(col).dot(u)) > 0.5) ++col;
    Vector w = normalized_orthogonal(eig.eigenvectors().col(col), sigma);
    const double fallback = w.dot(hess * w);
    if (!(fallback <= target)) {
      if (params.stop_on_spectral_failure) throw SpectralFailure(std::min(fallback, rayleigh), target);
      out.missed_target = true;
    }
    v = std::move(w);
    out.used_fallback = true;
  }

  v = normalized_orthogonal(v, sigma);
  double gd = v.dot(grad);
  if (gd > 0.0) {
    v = -v;
    gd = -gd;
  }
  out.rayleigh = v.dot(hess * v);
  out.grad_dot = gd;
  out.v = std::move(v);
  return out;
}

DirectionResult find_direction(const Matrix& hess, const Vector& grad, const Vector& sigma,
                               const AlgorithmParams& params, double nu2_q) {
  std::mt19937_64 rng(params.rng_seed);
  return find_direction(hess, grad, sigma, params, nu2_q, rng);
}

double PathTrace::final_energy() const { return steps.empty() ? kNaN : steps.back().energy_per_spin; }

double PathTrace::sup_gap() const {
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& s : steps) worst = std::max(worst, s.gap);
  return worst;
}

int PathTrace::fallback_count() const {
  return static_cast<int>(std::count_if(steps.begin(), steps.end(), [](const PathStep& s) { return s.used_fallback; }));
}

int PathTrace::miss_count() const {
  return static_cast<int>(std::count_if(steps.begin(), steps.end(), [](const PathStep& s) { return s.missed_target; }));
}

int SphereTrace::miss_count() const {
  return static_cast<int>(std::count_if(steps.begin(), steps.end(), [](const SphereStep& s) { return s.missed_target; }));
}

double PathTrace::max_third_derivative() const {
  double worst = 0.0;
  for (const auto& s : steps) worst = std::max(worst, s.third_derivative);
  return worst;
}

PathTrace run_radial_path(const Disorder& d, const AlgorithmParams& params) {
  if (params.k < 2) throw ArgumentError("run_radial_path: k must be >= 2");
  if (!(params.epsilon > 0.0)) throw ArgumentError("run_radial_path: epsilon must be positive");
  const int n = d.n();
  const int k = params.k;
  const double nd = static_cast<double>(n);
  const double stride = std::sqrt(nd / k);
  const Mixture& mix = d.mixture();

  PathTrace trace;
  trace.mixture = mix.to_string();
  trace.n = n;
  trace.disorder_seed = d.seed();
  trace.k = k;
  trace.epsilon = params.epsilon;
  trace.steps.reserve(static_cast<std::size_t>(k) + 1);

  std::mt19937_64 rng(params.rng_seed);

  PathStep first;
  first.step = 0;
  first.q = 0.0;
  first.point = Vector::Zero(n);
  if (params.random_v0) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    first.direction = Vector(n);
    for (auto& c : first.direction) c = gauss(rng);
    first.direction.normalize();
  } else {
    first.direction = Vector::Unit(n, 0);
  }
  first.rayleigh = kNaN;
  first.grad_dot = kNaN;
  if (params.measure_third_derivative) {
    first.third_derivative = segment_third_derivative(d, first.point, first.direction, stride);
  }
  Vector sigma = stride * first.direction;
  trace.steps.push_back(std::move(first));

  for (int j = 1; j < k; ++j) {
    const ProjectedDerivatives pd = projected_derivatives(d, sigma);
    const double q_label = static_cast<double>(j) / k;
    PathStep step;
    step.step = j;
    step.q = q_label;
    step.point = sigma;
    step.energy_per_spin = pd.energy / nd;
    step.benchmark = -energy_benchmark(mix, q_label);
    step.gap = step.energy_per_spin - step.benchmark;
    try {
      const DirectionResult dir =
          find_direction(pd.hessian, pd.gradient, sigma, params, mix.eval(std::min(pd.q, 1.0), 2), rng);
      step.direction = dir.v;
      step.rayleigh = dir.rayleigh;
      step.grad_dot = dir.grad_dot;
      step.used_fallback = dir.used_fallback;
      step.missed_target = dir.missed_target;
      step.power_iterations = dir.iterations;
    } catch (const SpectralFailure& e) {
      step.rayleigh = e.achieved_rayleigh();
      step.grad_dot = kNaN;
      trace.steps.push_back(std::move(step));
      trace.failure = "step " + std::to_string(j) + ": " + e.what();
      return trace;
    }
    if (params.measure_third_derivative) {
      step.third_derivative = segment_third_derivative(d, sigma, step.direction, stride);
    }
    sigma += stride * step.direction;
    trace.steps.push_back(std::move(step));
  }

  PathStep last;
  last.step = k;
  last.q = 1.0;
  last.point = sigma;
  last.energy_per_spin = energy(d, sigma) / nd;
  last.rayleigh = kNaN;
  last.grad_dot = kNaN;
  last.benchmark = -energy_benchmark(mix, 1.0);
  last.gap = last.energy_per_spin - last.benchmark;
  trace.steps.push_back(std::move(last));
  return trace;
}

double interpolate_energy(const PathTrace& trace, const Disorder& d, double q) {
  if (!(q >= 0.0 && q <= 1.0)) throw DomainError("interpolate_energy: q must lie in [0, 1]");
  if (trace.k < 1 || trace.steps.empty()) throw DomainError("interpolate_energy: empty trace");
  const int j = std::min(trace.k, static_cast<int>(std::floor(q * trace.k + 1e-12)));
  const double t = std::max(0.0, q - static_cast<double>(j) / trace.k);
  if (j >= static_cast<int>(trace.steps.size())) throw DomainError("interpolate_energy: q lies beyond the trace");
  const PathStep& s = trace.steps[j];
  const double nd = static_cast<double>(d.n());
  if (t == 0.0) return energy(d, s.point) / nd;
  if (s.direction.size() != d.n()) throw DomainError("interpolate_energy: no direction recorded at step " + std::to_string(j));
  const Vector at = s.point + std::sqrt(nd * t) * s.direction;
  return energy(d, at) / nd;
}

SphereTrace run_pure_sphere(const Disorder& d, int p, double tau, int steps, const AlgorithmParams& params) {
  const Mixture& mix = d.mixture();
  if (!mix.is_pure() || mix.degree() != p) {
    throw ArgumentError("run_pure_sphere: disorder must be the pure degree-" + std::to_string(p) + " model");
  }
  if (!(tau > 0.0 && tau <= 0.5)) throw ArgumentError("run_pure_sphere: tau must lie in (0, 0.5]");
  if (steps < 1) throw ArgumentError("run_pure_sphere: steps must be >= 1");
  const int n = d.n();
  const double nd = static_cast<double>(n);
  const double radius = std::sqrt(nd);
  const double stride = std::sqrt(nd * tau);

  SphereTrace trace;
  trace.p = p;
  trace.n = n;
  trace.tau = tau;
  trace.epsilon = params.epsilon;

  std::mt19937_64 rng(params.rng_seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector sigma(n);
  for (auto& c : sigma) c = gauss(rng);
  sigma *= radius / sigma.norm();

  for (int i = 0; i < steps; ++i) {
    trace.max_norm_error = std::max(trace.max_norm_error, std::abs(overlap_q(sigma) - 1.0));
    const ProjectedDerivatives pd = projected_derivatives(d, sigma);
    SphereStep step;
    step.step = i;
    step.energy_per_spin = pd.energy / nd;
    try {
      const DirectionResult dir =
          find_direction(pd.hessian, pd.gradient, sigma, params, mix.derivative_unchecked(pd.q, 2), rng);
      step.rayleigh = dir.rayleigh;
      step.grad_dot = dir.grad_dot;
      step.used_fallback = dir.used_fallback;
      step.missed_target = dir.missed_target;
      if (params.measure_third_derivative) step.third_derivative = segment_third_derivative(d, sigma, dir.v, stride);
      sigma += stride * dir.v;
      sigma *= radius / sigma.norm();
    } catch (const SpectralFailure& e) {
      step.rayleigh = e.achieved_rayleigh();
      step.grad_dot = kNaN;
      trace.steps.push_back(step);
      trace.final_point = sigma;
      trace.failure = "step " + std::to_string(i) + ": " + e.what();
      return trace;
    }
    trace.steps.push_back(step);
  }
  trace.max_norm_error = std::max(trace.max_norm_error, std::abs(overlap_q(sigma) - 1.0));
  SphereStep last;
  last.step = steps;
  last.energy_per_spin = energy(d, sigma) / nd;
  last.rayleigh = kNaN;
  last.grad_dot = kNaN;
  trace.steps.push_back(last);
  trace.final_point = std::move(sigma);
  return trace;
}

double sphere_recursion_bound(double h0, int p, double tau, int steps, double nu2_one, double cushion_per_step) {
  const double growth = std::pow(1.0 + tau, 0.5 * p);
  const double decay = std::pow(growth, -steps);
  const double sum = (1.0 - decay) / (growth - 1.0);
  return decay * h0 - (tau * std::sqrt(nu2_one) - cushion_per_step) * sum;
}

double sphere_step_cushion(double tau, double epsilon, double c3) {
  return 0.5 * tau * epsilon + c3 * std::pow(tau, 1.5) / 6.0;
}

}  // namespace spinpath
