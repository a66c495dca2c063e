#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "spinpath/hamiltonian.hpp"

namespace spinpath {

struct SpectrumReport {
  double q = 0.0;
  double epsilon = 0.0;
  int n = 0;
  /// Projected-Hessian spectrum with the zero mode along sigma removed, sorted ascending (N-1 values).
  std::vector<double> eigenvalues;
  int count_below_soft = 0;  // #{lambda <= -2 sqrt(nu''(q)) + epsilon}
  int count_below_hard = 0;  // #{lambda <= -2 sqrt(nu''(q)) - epsilon}
  double ks_distance = 0.0;  // rescaled spectrum vs semicircle
  double lambda_min = 0.0;
};

inline constexpr double kZeroModeOverlap = 0.99;

/// Kolmogorov-Smirnov distance between the empirical distribution of `samples` and `cdf`.
double ks_distance(std::span<const double> samples, const std::function<double(double)>& cdf);

/// Two-sample Kolmogorov-Smirnov distance.
double ks_distance_two_sample(std::span<const double> a, std::span<const double> b);

/// sqrt(N/(N-1)) nu''(q)^{-1/2} lambda, the normalization under which the spectrum is GOE-distributed.
std::vector<double> rescale_to_goe(std::span<const double> eigenvalues, int n, double nu2_q);

SpectrumReport analyze_projected_hessian(const Matrix& projected, const Vector& x, const Mixture& mixture,
                                         double epsilon);
SpectrumReport analyze_hessian(const Disorder& d, const Vector& x, double epsilon);

/// Spectrum of a GOE matrix of dimension n: variance 2/n on the diagonal, 1/n off it.
std::vector<double> goe_reference(int n, std::uint64_t seed);

/// The Cauchy interlacing check between the projected spectrum (zero mode removed) and the Euclidean one.
bool interlaces(std::span<const double> projected_sorted, std::span<const double> euclidean_sorted, double tol);

nlohmann::json to_json(const SpectrumReport& report, bool include_eigenvalues);

}  // namespace spinpath
