#include <doctest.h>

#include <cmath>
#include <functional>
#include <numbers>

#include "spinpath/errors.hpp"
#include "spinpath/mixture.hpp"

using namespace spinpath;

namespace {

double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// plain bisection, independent of the library's root finder
double bisect(const std::function<double(double)>& f, double lo, double hi) {
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(lo) * f(mid) <= 0.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

const Mixture kMixed = Mixture::parse("2:1,4:0.25");

}  // namespace

TEST_CASE("parse and print") {
  const Mixture m = Mixture::parse("2:1.0,4:0.25");
  CHECK(m.gamma(2) == 1.0);
  CHECK(m.gamma(4) == 0.25);
  CHECK(m.gamma(3) == 0.0);
  CHECK(m.degree() == 4);
  CHECK_FALSE(m.is_pure());
  CHECK(Mixture::parse(m.to_string()) == m);
  CHECK(Mixture::parse(" 3 : 0.1 ") == Mixture::pure(3, 0.1));

  const Mixture odd = Mixture::parse("2:0.1,3:0.30000000000000004");
  CHECK(Mixture::parse(odd.to_string()) == odd);
}

TEST_CASE("parse errors") {
  CHECK_THROWS_WITH_AS(Mixture::parse("1:1.0"), doctest::Contains("p must be >= 2"), ArgumentError);
  CHECK_THROWS_AS(Mixture::parse("2:1,2:0.5"), ArgumentError);
  CHECK_THROWS_AS(Mixture::parse("2:nan"), ArgumentError);
  CHECK_THROWS_AS(Mixture::parse("2:inf"), ArgumentError);
  CHECK_THROWS_AS(Mixture::parse("2:-1"), ArgumentError);
  CHECK_THROWS_AS(Mixture::parse("2:0"), ArgumentError);
  CHECK_THROWS_AS(Mixture::parse(""), ArgumentError);
  CHECK_THROWS_AS(Mixture::parse("2"), ArgumentError);
  CHECK_THROWS_AS(Mixture::parse("x:1"), ArgumentError);
}

TEST_CASE("derivatives of nu") {
  // nu = x^2 + x^4 / 16
  const double q = 0.3;
  CHECK(kMixed.eval(q, 0) == doctest::Approx(q * q + std::pow(q, 4) / 16).epsilon(1e-15));
  CHECK(kMixed.eval(q, 1) == doctest::Approx(2 * q + std::pow(q, 3) / 4).epsilon(1e-15));
  CHECK(kMixed.eval(q, 2) == doctest::Approx(2 + 0.75 * q * q).epsilon(1e-15));
  CHECK(kMixed.eval(q, 3) == doctest::Approx(1.5 * q).epsilon(1e-15));
  CHECK(kMixed.eval(q, 4) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(kMixed.eval(0.0, 0) == 0.0);
  CHECK_THROWS_AS(kMixed.eval(1.5, 0), ArgumentError);
  CHECK_THROWS_AS(kMixed.eval(0.5, 5), ArgumentError);
  CHECK(eval_nu(kMixed, 1.0, 0) == doctest::Approx(1.0625));
}

TEST_CASE("full-RSB classification") {
  CHECK(classify_full_rsb(kMixed).is_full_rsb);
  CHECK(classify_full_rsb(Mixture::pure(2)).is_full_rsb);
  CHECK_FALSE(classify_full_rsb(Mixture::pure(3)).is_full_rsb);
  CHECK_FALSE(classify_full_rsb(Mixture::parse("2:1,3:1")).is_full_rsb);

  // closed-form f'' against second differences of nu''^{-1/2}
  const auto f = [](double q) { return std::pow(kMixed.eval(q, 2), -0.5); };
  for (double q : {0.1, 0.5, 0.9}) {
    const double h = 1e-3;
    const double fd = (f(q + h) - 2 * f(q) + f(q - h)) / (h * h);
    CHECK(inverse_sqrt_curvature_second_derivative(kMixed, q) == doctest::Approx(fd).epsilon(1e-5));
  }
  CHECK_THROWS_AS(inverse_sqrt_curvature_second_derivative(Mixture::pure(3), 0.0), SingularityError);
}

TEST_CASE("ground-state curve") {
  // pure models: E_H(1) = E_inf
  for (int p = 2; p <= 6; ++p) {
    CHECK(energy_benchmark(Mixture::pure(p), 1.0) == doctest::Approx(e_infinity(p)).epsilon(1e-12));
  }
  CHECK(e_infinity(3) == doctest::Approx(1.6329931618554516).epsilon(1e-15));
  // frozen scipy quad value
  CHECK(energy_benchmark(kMixed, 1.0) == doctest::Approx(1.498195671122807).epsilon(1e-12));
  const double oracle = simpson([](double t) { return std::sqrt(2.0 + 0.75 * t * t); }, 0.0, 0.4);
  CHECK(energy_benchmark(kMixed, 0.4) == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(energy_benchmark(kMixed, 0.0) == 0.0);
  CHECK_THROWS_AS(energy_benchmark(kMixed, 1.1), ArgumentError);
}

TEST_CASE("Parisi endpoint and density") {
  // frozen scipy brentq value
  CHECK(q_parisi(kMixed, 2.0).q_p == doctest::Approx(0.6731275912521519).epsilon(1e-11));
  const double oracle = bisect([](double q) { return 1.0 / std::sqrt(2.0 + 0.75 * q * q) - 3.0 * (1.0 - q); }, 0.0, 1.0);
  CHECK(q_parisi(kMixed, 3.0).q_p == doctest::Approx(oracle).epsilon(1e-11));
  // nu = x^2: closed form 1 - 1/(sqrt(2) beta)
  CHECK(q_parisi(Mixture::pure(2), 2.0).q_p == doctest::Approx(1.0 - 1.0 / (2.0 * std::sqrt(2.0))).epsilon(1e-11));
  // beta^2 nu''(0) <= 1
  CHECK(q_parisi(Mixture::pure(2), 0.5).q_p == 0.0);
  CHECK(q_parisi(Mixture::pure(3), 5.0).q_p == 0.0);
  CHECK_THROWS_AS(q_parisi(Mixture::pure(2), 1e12), DomainError);
  CHECK_THROWS_AS(q_parisi(kMixed, -1.0), ArgumentError);

  CHECK(parisi_density(kMixed, 2.0, 0.5) == doctest::Approx(0.057953434609955425).epsilon(1e-12));
  CHECK_THROWS_AS(parisi_density(kMixed, 2.0, 0.9), DomainError);
}

TEST_CASE("shifted mixture") {
  const double q = 0.4;
  const ShiftedMixture nu_q(kMixed, q);
  for (double s : {0.0, 0.2, 0.7, 1.0}) {
    const double direct = kMixed.eval(q + (1 - q) * s) - kMixed.eval(q) - (1 - q) * kMixed.eval(q, 1) * s;
    CHECK(nu_q(s) == doctest::Approx(direct).epsilon(1e-13));
  }
  CHECK(nu_q(0.0) == 0.0);
  CHECK(nu_q(0.0, 1) == 0.0);
  CHECK(nu_q(0.5, 2) == doctest::Approx((1 - q) * (1 - q) * kMixed.eval(q + (1 - q) * 0.5, 2)).epsilon(1e-13));
  CHECK(shifted_mixture(kMixed, q).base_overlap() == q);
  CHECK_THROWS_AS(ShiftedMixture(kMixed, 1.0), ArgumentError);
}

TEST_CASE("free-energy identity") {
  for (const Mixture& m : {Mixture::pure(2), kMixed}) {
    for (double beta : {1.0, 2.0, 4.0}) {
      CHECK(std::abs(crisanti_sommers_at_xp(m, beta) - tap_rhs(m, beta)) <= 1e-6);
      CHECK(rs_condition(m, beta).holds);
    }
  }
  // nu = x^2: tap rhs = sqrt(2) beta - 3/4 - log(sqrt(2) beta) / 2
  for (double beta : {1.0, 2.0, 4.0}) {
    const double b = std::sqrt(2.0) * beta;
    CHECK(tap_rhs(Mixture::pure(2), beta) == doctest::Approx(b - 0.75 - 0.5 * std::log(b)).epsilon(1e-10));
  }
  // replica-symmetric branch
  CHECK(crisanti_sommers_at_xp(Mixture::pure(2), 0.5) == doctest::Approx(0.125));
}

TEST_CASE("RS condition detects violations") {
  // pure p=3 at large beta has q_P = 0 and g(s) = beta^2 s^3 + log(1-s) + s > 0 somewhere
  const auto r = rs_condition(Mixture::pure(3), 3.0);
  CHECK_FALSE(r.holds);
  CHECK(r.worst > 0.0);
  const double s = r.argmax_s;
  CHECK(r.worst == doctest::Approx(9.0 * s * s * s + std::log(1 - s) + s));
}

TEST_CASE("semicircle and LDP rate") {
  CHECK(semicircle_cdf(-2.0) == 0.0);
  CHECK(semicircle_cdf(2.0) == 1.0);
  CHECK(semicircle_cdf(0.0) == doctest::Approx(0.5));
  CHECK(semicircle_cdf(-1.0) == doctest::Approx(0.1955011094778853).epsilon(1e-13));
  const double density_oracle =
      simpson([](double x) { return std::sqrt(4 - x * x) / (2 * std::numbers::pi); }, -2.0, 0.7, 200000);
  CHECK(semicircle_cdf(0.7) == doctest::Approx(density_oracle).epsilon(1e-8));

  CHECK(is_ldp_infinite(ldp_rate(-1.0)));
  CHECK(ldp_rate(-2.0) == doctest::Approx(0.0));
  const double j3 = simpson([](double s) { return std::sqrt(s * s / 4 - 1); }, -3.0, -2.0, 200000);
  CHECK(ldp_rate(-3.0) == doctest::Approx(j3).epsilon(1e-7));
}

TEST_CASE("sphere contraction constant") {
  CHECK(std::abs(sphere_contraction_constant(3, 1e-6) - 2.0 / 3.0) <= 1e-5);
  CHECK(sphere_contraction_constant(4, 1e-9) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(sphere_contraction_constant(3, 0.05) == doctest::Approx(0.05 / (std::pow(1.05, 1.5) - 1)).epsilon(1e-13));
}
