#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "spinpath/errors.hpp"
#include "spinpath/optimizer.hpp"

using namespace spinpath;

TEST_CASE("direction search on a diagonal matrix") {
  // sigma = e_0; the orthogonal block is diag(-3, 0, 1, ...)
  const int n = 8;
  Matrix h = Matrix::Zero(n, n);
  h(1, 1) = -3.0;
  for (int i = 3; i < n; ++i) h(i, i) = 1.0;
  Vector sigma = Vector::Zero(n);
  sigma[0] = 1.0;
  Vector grad = Vector::Zero(n);
  grad[1] = 0.5;
  AlgorithmParams p;
  p.epsilon = 0.5;
  p.rng_seed = 3;
  const DirectionResult r = find_direction(h, grad, sigma, p, 1.0);
  CHECK(r.rayleigh <= -1.5);
  CHECK(std::abs(r.v.dot(sigma)) < 1e-12);
  CHECK(r.v.norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.grad_dot <= 0.0);
  // -3 v1^2 + (rest >= 0) <= -1.5
  CHECK(r.v[1] * r.v[1] >= 0.5 - 1e-12);
  CHECK(r.v[1] < 0.0);
}

TEST_CASE("unreachable target") {
  const int n = 6;
  const Matrix h = Matrix::Identity(n, n);
  Vector sigma = Vector::Zero(n);
  sigma[0] = 1.0;
  AlgorithmParams p;
  p.epsilon = 0.1;
  p.power_iters_max = 5;
  CHECK_THROWS_AS(find_direction(h, Vector::Zero(n), sigma, p, 1.0), SpectralFailure);
  try {
    find_direction(h, Vector::Zero(n), sigma, p, 1.0);
  } catch (const SpectralFailure& e) {
    CHECK(e.achieved_rayleigh() == doctest::Approx(1.0));
    CHECK(e.target_rayleigh() == doctest::Approx(-1.9));
  }
  p.rayleigh_check = false;
  CHECK_THROWS_AS(find_direction(h, Vector::Zero(n), sigma, p, 1.0), SpectralFailure);
  p.rayleigh_check = true;
  p.stop_on_spectral_failure = false;
  const DirectionResult r = find_direction(h, Vector::Zero(n), sigma, p, 1.0);
  CHECK(r.missed_target);
  CHECK(r.used_fallback);
  CHECK(std::abs(r.v.dot(sigma)) < 1e-12);
}

TEST_CASE("gradient tie keeps +v") {
  const int n = 4;
  Matrix h = Matrix::Zero(n, n);
  h(1, 1) = -5.0;
  Vector sigma = Vector::Zero(n);
  sigma[0] = 1.0;
  AlgorithmParams p;
  p.epsilon = 0.5;
  p.rng_seed = 11;
  const DirectionResult a = find_direction(h, Vector::Zero(n), sigma, p, 1.0);
  const DirectionResult b = find_direction(h, Vector::Zero(n), sigma, p, 1.0);
  CHECK(a.grad_dot == 0.0);
  CHECK(a.v == b.v);
}

TEST_CASE("sampled Hessian reaches the edge by power iteration") {
  const int n = 300;
  const Disorder d = sample_disorder(Mixture::pure(3), n, 1);
  const Vector x = Vector::Constant(n, std::sqrt(0.5));
  const ProjectedDerivatives pd = projected_derivatives(d, x);
  AlgorithmParams p;
  p.epsilon = 0.1;
  p.power_iters_max = 200;
  p.rayleigh_check = false;
  const DirectionResult r = find_direction(pd.hessian, pd.gradient, x, p, 3.0);
  CHECK(r.rayleigh <= -2.0 * std::sqrt(3.0) + 0.1);
  CHECK(r.iterations <= 200);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(pd.hessian, Eigen::EigenvaluesOnly);
  CHECK(std::abs(r.rayleigh - eig.eigenvalues()[0]) <= 0.05);
}

TEST_CASE("hand-checkable two-step path") {
  const Disorder d = sample_disorder(Mixture::pure(2), 3, 5);
  AlgorithmParams p;
  p.k = 2;
  p.epsilon = 10.0;
  const PathTrace t = run_radial_path(d, p);
  REQUIRE(t.complete());
  CHECK(t.steps[1].point[0] == doctest::Approx(std::sqrt(1.5)).epsilon(1e-15));
  CHECK(t.steps[1].point[1] == 0.0);
  CHECK(t.steps[1].point[2] == 0.0);
  CHECK(overlap_q(t.steps[1].point) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(overlap_q(t.steps[2].point) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::isnan(t.steps[0].rayleigh));
  CHECK(std::isnan(t.steps[2].rayleigh));
  CHECK(t.steps[2].direction.size() == 0);
}

TEST_CASE("radial path invariants") {
  const int n = 80;
  const Disorder d = sample_disorder(Mixture::parse("2:1,3:0.5"), n, 3);
  AlgorithmParams p;
  p.k = 12;
  p.epsilon = 0.4;
  p.rng_seed = 9;
  p.stop_on_spectral_failure = false;
  const PathTrace t = run_radial_path(d, p);
  REQUIRE(t.steps.size() == 13);
  for (int j = 0; j <= p.k; ++j) {
    const auto& s = t.steps[j];
    CHECK(std::abs(overlap_q(s.point) - static_cast<double>(j) / p.k) <= 1e-12);
    CHECK(s.q == static_cast<double>(j) / p.k);
    CHECK(s.gap == doctest::Approx(s.energy_per_spin + energy_benchmark(d.mixture(), s.q)));
    if (j > 0 && j < p.k) {
      CHECK(std::abs(s.direction.dot(s.point)) <= 1e-10 * s.point.norm());
      CHECK(std::abs(s.direction.norm() - 1.0) <= 1e-12);
      CHECK(s.grad_dot <= 0.0);
      if (!s.missed_target) CHECK(s.rayleigh <= rayleigh_target(d.mixture().eval(s.q, 2), p.epsilon));
    }
  }
  CHECK(t.sup_gap() >= t.steps.back().gap);

  // per-step second-order model with the measured third-derivative constant
  const double c3 = t.max_third_derivative();
  const double nd = n;
  for (int j = 1; j < p.k; ++j) {
    const auto& s = t.steps[j];
    const double dh = nd * (t.steps[j + 1].energy_per_spin - s.energy_per_spin);
    const double model = std::sqrt(nd / p.k) * s.grad_dot + nd / (2.0 * p.k) * s.rayleigh + c3 * nd / (6.0 * std::pow(p.k, 1.5));
    CHECK(dh <= model + 1e-9);
  }

  // same inputs, same path
  const PathTrace again = run_radial_path(d, p);
  CHECK(again.steps.back().point == t.steps.back().point);
}

TEST_CASE("interpolated energies") {
  const int n = 60;
  const Disorder d = sample_disorder(Mixture::pure(3), n, 4);
  AlgorithmParams p;
  p.k = 10;
  p.epsilon = 0.5;
  p.stop_on_spectral_failure = false;
  const PathTrace t = run_radial_path(d, p);
  CHECK(interpolate_energy(t, d, 0.0) == 0.0);
  for (int j = 0; j <= p.k; ++j) {
    CHECK(interpolate_energy(t, d, static_cast<double>(j) / p.k) ==
          doctest::Approx(t.steps[j].energy_per_spin).epsilon(1e-12));
  }
  // midpoints against a second-order Taylor bound with the measured cushion
  const double c3 = t.max_third_derivative();
  for (int j = 1; j < p.k; ++j) {
    const auto& s = t.steps[j];
    const double len = std::sqrt(n * 0.5 / p.k);
    const double mid = interpolate_energy(t, d, (j + 0.5) / p.k);
    const double taylor = s.energy_per_spin + (len * s.grad_dot + 0.5 * len * len * s.rayleigh) / n;
    CHECK(std::abs(mid - taylor) <= c3 / std::sqrt(static_cast<double>(n)) * len * len * len / 6.0 / n + 1e-12);
  }
  CHECK_THROWS_AS(interpolate_energy(t, d, 1.5), DomainError);
}

TEST_CASE("sphere variant") {
  const int n = 60;
  const Disorder d = sample_disorder(Mixture::pure(3), n, 2);
  AlgorithmParams p;
  p.epsilon = 0.5;
  p.rng_seed = 1;
  p.stop_on_spectral_failure = false;
  const SphereTrace t = run_pure_sphere(d, 3, 0.05, 40, p);
  REQUIRE(t.steps.size() == 41);
  CHECK(t.max_norm_error <= 1e-12);
  CHECK(overlap_q(t.final_point) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(t.final_energy() < t.steps.front().energy_per_spin);
  CHECK_THROWS_AS(run_pure_sphere(d, 3, 0.6, 10, p), ArgumentError);
  CHECK_THROWS_AS(run_pure_sphere(d, 2, 0.05, 10, p), ArgumentError);
}

TEST_CASE("sphere recursion bound") {
  // zero steps leaves h0
  CHECK(sphere_recursion_bound(-0.5, 3, 0.05, 0, 6.0, 0.0) == doctest::Approx(-0.5));
  // fixed point -(tau sqrt(nu'') - c) / ((1+tau)^{p/2} - 1)
  const double fp = -(0.05 * std::sqrt(6.0)) / (std::pow(1.05, 1.5) - 1.0);
  CHECK(sphere_recursion_bound(fp, 3, 0.05, 50, 6.0, 0.0) == doctest::Approx(fp).epsilon(1e-12));
  CHECK(sphere_recursion_bound(0.0, 3, 0.05, 10000, 6.0, 0.0) == doctest::Approx(fp).epsilon(1e-9));
  CHECK(sphere_step_cushion(0.04, 0.1, 6.0) == doctest::Approx(0.002 + 6.0 * 0.008 / 6.0));
}
