#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <Eigen/Eigenvalues>

#include "spinpath/errors.hpp"
#include "spinpath/hamiltonian.hpp"

using namespace spinpath;

namespace {

Vector random_point(int n, double q, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Vector x(n);
  for (auto& c : x) c = g(rng);
  return x * std::sqrt(q * n) / x.norm();
}

// brute force over all ordered tuples from the sorted coefficients, p = 3
double brute_force_cubic(const Disorder& d, const Vector& x) {
  const int n = d.n();
  const auto& c = d.block(3)->coeffs;
  double sum = 0.0;
  std::size_t idx = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      for (int k = j; k < n; ++k) sum += c[idx++] * x[i] * x[j] * x[k];
  return d.block(3)->gamma * sum / n;
}

}  // namespace

TEST_CASE("counting") {
  CHECK(tuple_count(3, 2) == 6);
  CHECK(tuple_count(10, 3) == 220);
  CHECK(tuple_count(300, 3) == 4545100);
  const int a[] = {1, 1, 2};
  const int b[] = {0, 1, 2, 3};
  const int c[] = {5, 5, 5, 5};
  CHECK(ordering_count(a) == 3);
  CHECK(ordering_count(b) == 24);
  CHECK(ordering_count(c) == 1);
  CHECK(disorder_bytes(Mixture::parse("2:1,3:1"), 10) == 8 * (55 + 220));
  CHECK_THROWS_AS(tuple_count(1000000, 12), CapacityError);
}

TEST_CASE("sampling is deterministic and budgeted") {
  const Mixture m = Mixture::parse("2:1,3:0.5");
  const Disorder a = sample_disorder(m, 20, 42);
  const Disorder b = sample_disorder(m, 20, 42);
  const Disorder c = sample_disorder(m, 20, 43);
  CHECK(a.block(3)->coeffs == b.block(3)->coeffs);
  CHECK(a.block(2)->coeffs != c.block(2)->coeffs);
  CHECK(a.block(4) == nullptr);
  CHECK_THROWS_AS(sample_disorder(Mixture::pure(4), 200, 1, 1024), CapacityError);
  CHECK_THROWS_AS(sample_disorder(m, 0, 1), ArgumentError);
}

TEST_CASE("energy against brute force") {
  const Disorder d = sample_disorder(Mixture::pure(3, 0.7), 12, 5);
  const Vector x = random_point(12, 0.6, 9);
  CHECK(energy(d, x) == doctest::Approx(brute_force_cubic(d, x)).epsilon(1e-12));
}

TEST_CASE("homogeneity and Euler identity") {
  const Disorder pure = sample_disorder(Mixture::pure(4), 15, 3);
  const Vector x = random_point(15, 0.5, 1);
  CHECK(energy(pure, 2.0 * x) == doctest::Approx(16.0 * energy(pure, x)).epsilon(1e-12));

  // x . grad H = sum_p p H_p
  const Mixture m = Mixture::parse("2:1,3:0.5");
  const Disorder d = sample_disorder(m, 15, 3);
  const Disorder only2(Mixture::pure(2), 15, 3, {*d.block(2)});
  DegreeBlock b3 = *d.block(3);
  const Disorder only3(Mixture::pure(3, 0.5), 15, 3, {b3});
  CHECK(energy(d, x) == doctest::Approx(energy(only2, x) + energy(only3, x)).epsilon(1e-13));
  CHECK(x.dot(euclidean_gradient(d, x)) == doctest::Approx(2 * energy(only2, x) + 3 * energy(only3, x)).epsilon(1e-12));
  // x^T hess x = sum_p p(p-1) H_p
  CHECK(x.dot(euclidean_hessian(d, x) * x) == doctest::Approx(2 * energy(only2, x) + 6 * energy(only3, x)).epsilon(1e-12));
}

TEST_CASE("finite differences") {
  for (const char* text : {"2:1", "2:0.5,3:1", "2:0.3,3:0.5,4:1"}) {
    const Disorder d = sample_disorder(Mixture::parse(text), 25, 17);
    const Vector x = random_point(25, 0.7, 4);
    const Evaluation ev = evaluate(d, x, 2);
    CHECK(ev.energy == doctest::Approx(energy(d, x)));
    const double h = 1e-5;
    Vector fg(25);
    Matrix fh(25, 25);
    for (int i = 0; i < 25; ++i) {
      Vector xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      fg[i] = (energy(d, xp) - energy(d, xm)) / (2 * h);
      fh.col(i) = (euclidean_gradient(d, xp) - euclidean_gradient(d, xm)) / (2 * h);
    }
    CHECK((fg - ev.gradient).norm() / ev.gradient.norm() < 1e-7);
    CHECK((fh - ev.hessian).norm() / ev.hessian.norm() < 1e-7);
    CHECK((ev.hessian - ev.hessian.transpose()).norm() == 0.0);
  }
}

TEST_CASE("projections") {
  const Disorder d = sample_disorder(Mixture::parse("2:1,3:1"), 20, 8);
  const Vector x = random_point(20, 0.4, 2);
  const ProjectedDerivatives pd = projected_derivatives(d, x);
  CHECK(pd.q == doctest::Approx(0.4));
  CHECK(std::abs(pd.gradient.dot(x)) < 1e-10);
  CHECK((pd.hessian * x).norm() < 1e-10);
  CHECK((pd.hessian - pd.hessian.transpose()).norm() == 0.0);
  const Matrix mproj = Matrix::Identity(20, 20) - x * x.transpose() / x.squaredNorm();
  CHECK((pd.hessian - mproj * euclidean_hessian(d, x) * mproj).norm() < 1e-10);
  CHECK((projected_gradient(d, x) - mproj * euclidean_gradient(d, x)).norm() < 1e-12);
  CHECK_THROWS_AS(projected_hessian(d, Vector::Zero(20)), DomainError);
}

TEST_CASE("interlacing of projected and Euclidean spectra") {
  const Disorder d = sample_disorder(Mixture::pure(3), 30, 4);
  const Vector x = random_point(30, 0.5, 6);
  Eigen::SelfAdjointEigenSolver<Matrix> full(euclidean_hessian(d, x), Eigen::EigenvaluesOnly);
  // compress to the orthogonal complement of x
  Eigen::HouseholderQR<Matrix> qr(x);
  const Matrix basis = Matrix(qr.householderQ()).rightCols(29);
  Eigen::SelfAdjointEigenSolver<Matrix> comp(basis.transpose() * euclidean_hessian(d, x) * basis,
                                             Eigen::EigenvaluesOnly);
  for (int i = 0; i < 29; ++i) {
    CHECK(full.eigenvalues()[i] <= comp.eigenvalues()[i] + 1e-10);
    CHECK(comp.eigenvalues()[i] <= full.eigenvalues()[i + 1] + 1e-10);
  }
}

TEST_CASE("directional jet") {
  const Disorder d = sample_disorder(Mixture::parse("2:1,3:0.5,5:0.3"), 12, 2);
  const Vector x = random_point(12, 0.5, 3);
  Vector v = random_point(12, 1.0, 4);
  v.normalize();
  const DirectionalJet jet = directional_jet(d, x, v);
  CHECK(jet.value == doctest::Approx(energy(d, x)).epsilon(1e-12));
  CHECK(jet.d1 == doctest::Approx(v.dot(euclidean_gradient(d, x))).epsilon(1e-12));
  CHECK(jet.d2 == doctest::Approx(v.dot(euclidean_hessian(d, x) * v)).epsilon(1e-12));
  const double h = 1e-3;
  auto d2 = [&](double t) { return v.dot(euclidean_hessian(d, x + t * v) * v); };
  CHECK(jet.d3 == doctest::Approx((d2(h) - d2(-h)) / (2 * h)).epsilon(1e-5));
}

TEST_CASE("thread count does not change results") {
  const Disorder d = sample_disorder(Mixture::parse("2:1,3:1,4:0.5"), 30, 21);
  const Vector x = random_point(30, 0.8, 1);
  set_evaluation_threads(1);
  const Evaluation one = evaluate(d, x, 2);
  set_evaluation_threads(4);
  CHECK(evaluation_threads() == 4);
  const Evaluation four = evaluate(d, x, 2);
  set_evaluation_threads(0);
  CHECK(one.energy == four.energy);
  CHECK(one.gradient == four.gradient);
  CHECK(one.hessian == four.hessian);
}

TEST_CASE("covariance expectation") {
  const Mixture m = Mixture::parse("2:1,3:0.5");
  const Vector x = random_point(10, 1.0, 1);
  CHECK(covariance_expectation(m, x, x) == doctest::Approx(10 * m.eval(1.0)));
  CHECK(covariance_expectation(m, x, Vector::Zero(10)) == 0.0);
}

TEST_CASE("disorder dump round trip") {
  const Mixture m = Mixture::parse("2:1,3:0.5");
  const Disorder d = sample_disorder(m, 9, 77);
  const auto path = std::filesystem::temp_directory_path() / "spinpath-test-dump.bin";
  save_disorder(d, path);
  const Disorder back = load_disorder(path, m, 9, 77);
  CHECK(back.block(2)->coeffs == d.block(2)->coeffs);
  CHECK(back.block(3)->coeffs == d.block(3)->coeffs);
  CHECK_THROWS_AS(load_disorder(path, m, 9, 78), ArgumentError);
  CHECK_THROWS_AS(load_disorder(path, m, 8, 77), ArgumentError);
  CHECK_THROWS_AS(load_disorder(path, Mixture::pure(2), 9, 77), ArgumentError);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_disorder(path, m, 9, 77), IoError);
}
