#pragma once

// Analytic layer for the mixture nu(x) = sum_p gamma_p^2 x^p: derivatives,
// full-RSB classification, ground-state energy curve, Parisi endpoint and
// density, TAP/Crisanti-Sommers free-energy expressions, and semicircle
// statistics used to calibrate the Hessian diagnostics.

#include <functional>
#include <limits>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace spinpath {

class Mixture {
 public:
  /// Throws ArgumentError unless every p >= 2, every gamma_p is finite and
  /// non-negative, and at least one gamma_p is positive. Zero entries are dropped.
  explicit Mixture(std::map<int, double> gammas);

  /// Parses the text form `p:gamma_p[,p:gamma_p...]`, e.g. `2:1.0,4:0.25`.
  static Mixture parse(std::string_view text);

  /// Pure model gamma * x^p (nu = gamma^2 x^p).
  static Mixture pure(int p, double gamma = 1.0);

  /// Canonical text form; round-trips through parse() exactly.
  std::string to_string() const;

  const std::map<int, double>& gammas() const noexcept { return gammas_; }
  double gamma(int p) const;
  int degree() const noexcept { return gammas_.rbegin()->first; }
  bool is_pure() const noexcept { return gammas_.size() == 1; }

  /// d^order/dq^order nu(q) for order in [0, 4]. Throws ArgumentError for q outside
  /// [0, 1] or order outside [0, 4].
  double eval(double q, int order = 0) const;

  /// Same polynomial, any order >= 0 and any real q (used internally, e.g. for
  /// Taylor coefficients of the shifted mixture).
  double derivative_unchecked(double q, int order) const;

  friend bool operator==(const Mixture&, const Mixture&) = default;

 private:
  std::map<int, double> gammas_;
};

double eval_nu(const Mixture& mixture, double q, int order);

struct RsbClassification {
  bool is_full_rsb = false;
  /// min over the grid of -f''(q), f = nu''^{-1/2}
  double margin = 0.0;
  int grid_size = 0;
};

inline constexpr double kConcavityTolerance = 1e-12;

/// f''(q) for f = nu''(q)^{-1/2}, in closed form. Throws SingularityError when nu''(q) = 0.
double inverse_sqrt_curvature_second_derivative(const Mixture& mixture, double q);

/// Concavity test of nu''^{-1/2} on a uniform grid of (0, 1]. grid_size >= 100.
RsbClassification classify_full_rsb(const Mixture& mixture, int grid_size = 10000);

/// E_H(q) = int_0^q sqrt(nu''(t)) dt.
double energy_benchmark(const Mixture& mixture, double q);

/// 2 sqrt((p-1)/p).
double e_infinity(int p);

struct ParisiData {
  double beta = 0.0;
  double q_p = 0.0;
  /// x_P(q) on [0, q_P); throws DomainError outside.
  std::function<double(double)> density_at;
};

inline constexpr double kMaxParisiEndpoint = 1.0 - 1e-9;

ParisiData q_parisi(const Mixture& mixture, double beta);

/// nu'''(q) / (2 beta nu''(q)^{3/2}) for q in [0, q_P).
double parisi_density(const Mixture& mixture, double beta, double q);

/// The mixture seen from a point at overlap q:
/// nu_q(s) = nu(q + (1-q)s) - nu(q) - (1-q) nu'(q) s.
class ShiftedMixture {
 public:
  ShiftedMixture(const Mixture& mixture, double q);

  /// order in {0, 1, 2}
  double operator()(double s, int order = 0) const;
  double base_overlap() const noexcept { return q_; }

 private:
  // Taylor coefficients in s: nu_q(s) = sum_k coeffs_[k] s^k, coeffs_[0] = coeffs_[1] = 0.
  std::vector<double> coeffs_;
  double q_;
};

ShiftedMixture shifted_mixture(const Mixture& mixture, double q);

struct RsCondition {
  bool holds = false;
  double worst = 0.0;
  double argmax_s = 0.0;
};

/// max over s in (0, 1 - 1/grid_size] of beta^2 nu_{q_P}(s) + log(1-s) + s.
RsCondition rs_condition(const Mixture& mixture, double beta, int grid_size = 10000);

/// Crisanti-Sommers functional at the Parisi minimizer, full-RSB form.
double crisanti_sommers_at_xp(const Mixture& mixture, double beta);

/// beta E_H(q_P) + log(1-q_P)/2 + beta^2 nu_{q_P}(1)/2.
double tap_rhs(const Mixture& mixture, double beta);

/// CDF of the semicircle law on [-2, 2].
double semicircle_cdf(double t);

/// J(t) = int_t^{-2} sqrt(s^2/4 - 1) ds for t <= -2; +infinity for t > -2.
double ldp_rate(double t);

inline bool is_ldp_infinite(double j) { return j == std::numeric_limits<double>::infinity(); }

/// tau / ((1+tau)^{p/2} - 1), which tends to 2/p as tau -> 0.
double sphere_contraction_constant(int p, double tau);

/// Adaptive Gauss-Kronrod integration of f on [a, b] to absolute tolerance tol.
double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-10);

}  // namespace spinpath
