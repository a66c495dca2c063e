#include "spinpath/mixture.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include "spinpath/errors.hpp"

namespace spinpath {

namespace {

double falling_factorial(int n, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= static_cast<double>(n - i);
  return r;
}

double factorial(int n) { return falling_factorial(n, n); }

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Mixture::Mixture(std::map<int, double> gammas) {
  for (const auto& [p, g] : gammas) {
    if (p < 2) throw ArgumentError("mixture: p must be >= 2 (got p=" + std::to_string(p) + ")");
    if (!std::isfinite(g)) throw ArgumentError("mixture: gamma_" + std::to_string(p) + " is not finite");
    if (g < 0.0) throw ArgumentError("mixture: gamma_" + std::to_string(p) + " must be >= 0");
    if (g > 0.0) gammas_.emplace(p, g);
  }
  if (gammas_.empty()) throw ArgumentError("mixture: at least one gamma_p must be positive");
}

Mixture Mixture::parse(std::string_view text) {
  std::map<int, double> gammas;
  const std::string body = trim(text);
  if (body.empty()) throw ArgumentError("mixture: empty specification");
  std::size_t pos = 0;
  while (pos <= body.size()) {
    const auto comma = body.find(',', pos);
    const std::string item = trim(std::string_view(body).substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ArgumentError("mixture: expected p:gamma, got '" + item + "'");
    const std::string ps = trim(item.substr(0, colon));
    const std::string gs = trim(item.substr(colon + 1));
    int p = 0;
    auto [pend, perr] = std::from_chars(ps.data(), ps.data() + ps.size(), p);
    if (perr != std::errc() || pend != ps.data() + ps.size()) {
      throw ArgumentError("mixture: invalid degree '" + ps + "'");
    }
    if (p < 2) throw ArgumentError("mixture: p must be >= 2 (got p=" + ps + ")");
    double g = 0.0;
    try {
      std::size_t used = 0;
      g = std::stod(gs, &used);
      if (used != gs.size()) throw std::invalid_argument(gs);
    } catch (const std::exception&) {
      throw ArgumentError("mixture: invalid gamma '" + gs + "'");
    }
    if (!std::isfinite(g)) throw ArgumentError("mixture: gamma_" + ps + " is not finite");
    if (!gammas.emplace(p, g).second) throw ArgumentError("mixture: duplicate degree p=" + ps);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return Mixture(std::move(gammas));
}

Mixture Mixture::pure(int p, double gamma) { return Mixture({{p, gamma}}); }

std::string Mixture::to_string() const {
  std::string out;
  for (const auto& [p, g] : gammas_) {
    if (!out.empty()) out += ',';
    out += std::to_string(p) + ':' + format_double(g);
  }
  return out;
}

double Mixture::gamma(int p) const {
  const auto it = gammas_.find(p);
  return it == gammas_.end() ? 0.0 : it->second;
}

double Mixture::derivative_unchecked(double q, int order) const {
  double sum = 0.0;
  for (const auto& [p, g] : gammas_) {
    if (p < order) continue;
    sum += g * g * falling_factorial(p, order) * std::pow(q, p - order);
  }
  return sum;
}

double Mixture::eval(double q, int order) const {
  if (!(q >= 0.0 && q <= 1.0)) throw ArgumentError("eval_nu: q must lie in [0, 1]");
  if (order < 0 || order > 4) throw ArgumentError("eval_nu: order must lie in [0, 4]");
  return derivative_unchecked(q, order);
}

double eval_nu(const Mixture& mixture, double q, int order) { return mixture.eval(q, order); }

double inverse_sqrt_curvature_second_derivative(const Mixture& mixture, double q) {
  const double d2 = mixture.derivative_unchecked(q, 2);
  if (d2 <= 0.0) {
    throw SingularityError("nu''(q) = 0 at q = " + format_double(q) + "; nu''^{-1/2} is undefined");
  }
  const double d3 = mixture.derivative_unchecked(q, 3);
  const double d4 = mixture.derivative_unchecked(q, 4);
  return 0.5 * std::pow(d2, -2.5) * (1.5 * d3 * d3 - d2 * d4);
}

RsbClassification classify_full_rsb(const Mixture& mixture, int grid_size) {
  if (grid_size < 100) throw ArgumentError("classify_full_rsb: grid_size must be >= 100");
  RsbClassification out;
  out.grid_size = grid_size;
  out.margin = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= grid_size; ++i) {
    const double q = static_cast<double>(i) / grid_size;
    out.margin = std::min(out.margin, -inverse_sqrt_curvature_second_derivative(mixture, q));
  }
  out.is_full_rsb = out.margin >= -kConcavityTolerance;
  return out;
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  if (b <= a) return 0.0;
  double error = 0.0;
  double l1 = 0.0;
  const double value =
      boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, tol, &error, &l1);
  if (!std::isfinite(value)) throw NumericalError("integrate: non-finite result");
  return value;
}

double energy_benchmark(const Mixture& mixture, double q) {
  if (!(q >= 0.0 && q <= 1.0)) throw ArgumentError("energy_benchmark: q must lie in [0, 1]");
  // t = u^2 removes the sqrt(t) behaviour at the origin when nu''(0) = 0
  return integrate(
      [&](double u) { return 2.0 * u * std::sqrt(mixture.derivative_unchecked(u * u, 2)); }, 0.0, std::sqrt(q), 1e-13);
}

double e_infinity(int p) {
  if (p < 2) throw ArgumentError("e_infinity: p must be >= 2");
  return 2.0 * std::sqrt(static_cast<double>(p - 1) / p);
}

namespace {

// beta <= nu''(0)^{-1/2}, written so that nu''(0) = 0 needs no special case.
bool replica_symmetric(const Mixture& mixture, double beta) {
  return beta * beta * mixture.derivative_unchecked(0.0, 2) <= 1.0;
}

double solve_parisi_endpoint(const Mixture& mixture, double beta) {
  auto phi = [&](double q) { return 1.0 / std::sqrt(mixture.derivative_unchecked(q, 2)) - beta * (1.0 - q); };
  const double lo = phi(0.0);
  const double hi = phi(1.0);
  if (!(lo < 0.0 && hi > 0.0)) {
    throw InconsistencyError("q_parisi: nu''(q)^{-1/2} - beta(1-q) has no sign change on (0,1)");
  }
  auto within = [](double a, double b) { return std::abs(b - a) <= 1e-12; };
  const auto [a, b] = boost::math::tools::bisect(phi, 0.0, 1.0, within);
  const double root = 0.5 * (a + b);
  if (root > kMaxParisiEndpoint) {
    throw DomainError("q_parisi: q_P exceeds 1 - 1e-9; beta is outside the supported range");
  }
  return root;
}

}  // namespace

ParisiData q_parisi(const Mixture& mixture, double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ArgumentError("q_parisi: beta must be positive");
  ParisiData out;
  out.beta = beta;
  out.q_p = replica_symmetric(mixture, beta) ? 0.0 : solve_parisi_endpoint(mixture, beta);
  out.density_at = [mixture, beta, qp = out.q_p](double q) {
    if (!(q >= 0.0 && q < qp)) throw DomainError("parisi density: q must lie in [0, q_P)");
    return mixture.derivative_unchecked(q, 3) / (2.0 * beta * std::pow(mixture.derivative_unchecked(q, 2), 1.5));
  };
  return out;
}

double parisi_density(const Mixture& mixture, double beta, double q) {
  return q_parisi(mixture, beta).density_at(q);
}

ShiftedMixture::ShiftedMixture(const Mixture& mixture, double q) : q_(q) {
  if (!(q >= 0.0 && q < 1.0)) throw ArgumentError("shifted_mixture: q must lie in [0, 1)");
  const int deg = mixture.degree();
  coeffs_.assign(static_cast<std::size_t>(deg) + 1, 0.0);
  double scale = 1.0 - q;
  double power = scale * scale;
  for (int k = 2; k <= deg; ++k) {
    coeffs_[k] = mixture.derivative_unchecked(q, k) * power / factorial(k);
    power *= scale;
  }
}

double ShiftedMixture::operator()(double s, int order) const {
  if (order < 0 || order > 2) throw ArgumentError("shifted_mixture: order must lie in [0, 2]");
  double sum = 0.0;
  for (std::size_t k = static_cast<std::size_t>(order); k < coeffs_.size(); ++k) {
    sum += coeffs_[k] * falling_factorial(static_cast<int>(k), order) * std::pow(s, static_cast<int>(k) - order);
  }
  return sum;
}

ShiftedMixture shifted_mixture(const Mixture& mixture, double q) { return ShiftedMixture(mixture, q); }

RsCondition rs_condition(const Mixture& mixture, double beta, int grid_size) {
  if (grid_size < 1000) throw ArgumentError("rs_condition: grid_size must be >= 1000");
  const double qp = q_parisi(mixture, beta).q_p;
  const ShiftedMixture shifted(mixture, qp);
  RsCondition out;
  out.worst = -std::numeric_limits<double>::infinity();
  for (int i = 1; i < grid_size; ++i) {
    const double s = static_cast<double>(i) / grid_size;
    const double g = beta * beta * shifted(s) + std::log1p(-s) + s;
    if (g > out.worst) {
      out.worst = g;
      out.argmax_s = s;
    }
  }
  out.holds = out.worst < 0.0;
  return out;
}

double crisanti_sommers_at_xp(const Mixture& mixture, double beta) {
  const double qp = q_parisi(mixture, beta).q_p;
  const double nu1 = mixture.derivative_unchecked(1.0, 0);
  if (qp == 0.0) return 0.5 * beta * beta * nu1;

  const double eta_nu1 = integrate(
      [&](double q) {
        const double d2 = mixture.derivative_unchecked(q, 2);
        const double eta = mixture.derivative_unchecked(q, 3) / (2.0 * std::pow(d2, 1.5));
        return eta * mixture.derivative_unchecked(q, 1);
      },
      0.0, qp, 1e-12);
  const double ground = energy_benchmark(mixture, qp);
  return 0.5 * (beta * eta_nu1 + beta * beta * (nu1 - mixture.derivative_unchecked(qp, 0)) + beta * ground +
                std::log1p(-qp));
}

double tap_rhs(const Mixture& mixture, double beta) {
  const double qp = q_parisi(mixture, beta).q_p;
  const ShiftedMixture shifted(mixture, qp);
  return beta * energy_benchmark(mixture, qp) + 0.5 * std::log1p(-qp) + 0.5 * beta * beta * shifted(1.0);
}

double semicircle_cdf(double t) {
  if (t <= -2.0) return 0.0;
  if (t >= 2.0) return 1.0;
  const double v = 0.5 + t * std::sqrt(4.0 - t * t) / (4.0 * std::numbers::pi) + std::asin(0.5 * t) / std::numbers::pi;
  return std::clamp(v, 0.0, 1.0);
}

double ldp_rate(double t) {
  if (t > -2.0) return std::numeric_limits<double>::infinity();
  const double u = -t;
  const double root = std::sqrt(u * u - 4.0);
  // 0.5 * int_2^u sqrt(x^2 - 4) dx
  return 0.5 * (0.5 * u * root - 2.0 * std::log((u + root) / 2.0));
}

double sphere_contraction_constant(int p, double tau) {
  if (p < 2) throw ArgumentError("sphere_contraction_constant: p must be >= 2");
  if (!(tau > 0.0)) throw ArgumentError("sphere_contraction_constant: tau must be positive");
  return tau / std::expm1(0.5 * p * std::log1p(tau));
}

}  // namespace spinpath
