#include "spinpath/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "spinpath/errors.hpp"

namespace spinpath {

double ks_distance(std::span<const double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw ArgumentError("ks_distance: no samples");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double m = static_cast<double>(sorted.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    worst = std::max({worst, static_cast<double>(i + 1) / m - f, f - static_cast<double>(i) / m});
  }
  return std::clamp(worst, 0.0, 1.0);
}

double ks_distance_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ArgumentError("ks_distance_two_sample: empty sample");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  std::size_t i = 0;
  std::size_t j = 0;
  double worst = 0.0;
  while (i < x.size() && j < y.size()) {
    const double t = std::min(x[i], y[j]);
    while (i < x.size() && x[i] <= t) ++i;
    while (j < y.size() && y[j] <= t) ++j;
    worst = std::max(worst, std::abs(static_cast<double>(i) / x.size() - static_cast<double>(j) / y.size()));
  }
  return worst;
}

std::vector<double> rescale_to_goe(std::span<const double> eigenvalues, int n, double nu2_q) {
  if (!(nu2_q > 0.0)) throw SingularityError("rescale_to_goe: nu''(q) must be positive");
  const double scale = std::sqrt(static_cast<double>(n) / (n - 1)) / std::sqrt(nu2_q);
  std::vector<double> out(eigenvalues.begin(), eigenvalues.end());
  for (auto& v : out) v *= scale;
  return out;
}

SpectrumReport analyze_projected_hessian(const Matrix& projected, const Vector& x, const Mixture& mixture,
                                         double epsilon) {
  const auto n = x.size();
  if (projected.rows() != n || projected.cols() != n) throw ArgumentError("analyze_hessian: dimension mismatch");
  const double norm = x.norm();
  if (norm == 0.0) throw DomainError("analyze_hessian: x must be nonzero");

  Eigen::SelfAdjointEigenSolver<Matrix> eig(projected);
  if (eig.info() != Eigen::Success) throw NumericalError("analyze_hessian: eigensolver failed");
  const Vector u = x / norm;
  const Vector overlaps = (eig.eigenvectors().transpose() * u).cwiseAbs();

  Eigen::Index zero_mode = -1;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (overlaps[i] <= kZeroModeOverlap) continue;
    if (zero_mode < 0 || std::abs(eig.eigenvalues()[i]) < std::abs(eig.eigenvalues()[zero_mode])) zero_mode = i;
  }
  if (zero_mode < 0) throw InconsistencyError("analyze_hessian: no eigenvector aligned with sigma");

  SpectrumReport report;
  report.q = overlap_q(x);
  report.epsilon = epsilon;
  report.n = static_cast<int>(n);
  report.eigenvalues.reserve(static_cast<std::size_t>(n) - 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i != zero_mode) report.eigenvalues.push_back(eig.eigenvalues()[i]);
  }
  std::sort(report.eigenvalues.begin(), report.eigenvalues.end());

  const double nu2 = mixture.derivative_unchecked(report.q, 2);
  const double edge = -2.0 * std::sqrt(nu2);
  for (double l : report.eigenvalues) {
    if (l <= edge + epsilon) ++report.count_below_soft;
    if (l <= edge - epsilon) ++report.count_below_hard;
  }
  report.lambda_min = report.eigenvalues.front();
  const auto rescaled = rescale_to_goe(report.eigenvalues, report.n, nu2);
  report.ks_distance = ks_distance(rescaled, semicircle_cdf);
  return report;
}

SpectrumReport analyze_hessian(const Disorder& d, const Vector& x, double epsilon) {
  return analyze_projected_hessian(projected_hessian(d, x), x, d.mixture(), epsilon);
}

std::vector<double> goe_reference(int n, std::uint64_t seed) {
  if (n < 2) throw ArgumentError("goe_reference: n must be >= 2");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double off = std::sqrt(1.0 / n);
  const double diag = std::sqrt(2.0 / n);
  Matrix g(n, n);
  for (int j = 0; j < n; ++j) {
    g(j, j) = diag * gauss(rng);
    for (int i = j + 1; i < n; ++i) {
      g(i, j) = off * gauss(rng);
      g(j, i) = g(i, j);
    }
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(g, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericalError("goe_reference: eigensolver failed");
  std::vector<double> out(eig.eigenvalues().data(), eig.eigenvalues().data() + n);
  std::sort(out.begin(), out.end());
  return out;
}

bool interlaces(std::span<const double> projected, std::span<const double> euclidean, double tol) {
  if (euclidean.size() != projected.size() + 1) throw ArgumentError("interlaces: expected N and N-1 eigenvalues");
  for (std::size_t i = 0; i < projected.size(); ++i) {
    if (euclidean[i] > projected[i] + tol || projected[i] > euclidean[i + 1] + tol) return false;
  }
  return true;
}

nlohmann::json to_json(const SpectrumReport& r, bool include_eigenvalues) {
  nlohmann::json j{{"q", r.q},
                   {"epsilon", r.epsilon},
                   {"n", r.n},
                   {"count_below_soft", r.count_below_soft},
                   {"count_below_hard", r.count_below_hard},
                   {"lambda_min", r.lambda_min},
                   {"ks_distance", r.ks_distance}};
  if (include_eigenvalues) j["eigenvalues"] = r.eigenvalues;
  return j;
}

}  // namespace spinpath
