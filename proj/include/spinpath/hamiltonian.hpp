#pragma once

// Gaussian disorder for a finite mixture and exact evaluation of the
// Hamiltonian, its Euclidean derivatives and their projections onto the
// tangent space of the sphere through the evaluation point.
//
// Coefficients are stored once per sorted multi-index i_1 <= ... <= i_p. The
// stored value is the sum of the i.i.d. couplings over all distinct orderings
// of the multi-index, so it is Gaussian with variance equal to the number of
// such orderings.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "spinpath/mixture.hpp"

namespace spinpath {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr std::uint64_t kDefaultMemoryBudget = std::uint64_t{2} << 30;
inline constexpr int kMaxSupportedDegree = 12;

/// C(n + p - 1, p): number of sorted p-tuples over n indices. Throws CapacityError on overflow.
std::uint64_t tuple_count(int n, int p);

/// Bytes needed to store the symmetrized coefficients of every active degree.
std::uint64_t disorder_bytes(const Mixture& mixture, int n);

/// p! / prod(multiplicity!) for a sorted multi-index.
std::uint64_t ordering_count(std::span<const int> sorted_indices);

struct DegreeBlock {
  int p = 0;
  double gamma = 0.0;
  std::vector<double> coeffs;  // lexicographic order of sorted tuples
};

class Disorder {
 public:
  /// Assemble from explicit coefficient arrays (restore path, tests).
  Disorder(Mixture mixture, int n, std::uint64_t seed, std::vector<DegreeBlock> blocks);

  const Mixture& mixture() const noexcept { return mixture_; }
  int n() const noexcept { return n_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const std::vector<DegreeBlock>& blocks() const noexcept { return blocks_; }
  const DegreeBlock* block(int p) const;

 private:
  Mixture mixture_;
  int n_;
  std::uint64_t seed_;
  std::vector<DegreeBlock> blocks_;
};

/// Deterministic single-pass sampling: degrees ascending, tuples in
/// lexicographic order, one standard Gaussian per tuple scaled by sqrt(r).
Disorder sample_disorder(const Mixture& mixture, int n, std::uint64_t seed,
                         std::uint64_t memory_budget = kDefaultMemoryBudget);

/// Squared norm over N.
double overlap_q(const Vector& x);

struct Evaluation {
  double energy = 0.0;
  Vector gradient;  // filled when order >= 1
  Matrix hessian;   // filled when order >= 2
};

/// Energy and Euclidean derivatives up to `order` (0, 1 or 2) in one pass over the coefficients.
Evaluation evaluate(const Disorder& d, const Vector& x, int order);

double energy(const Disorder& d, const Vector& x);
Vector euclidean_gradient(const Disorder& d, const Vector& x);
Matrix euclidean_hessian(const Disorder& d, const Vector& x);

struct ProjectedDerivatives {
  double energy = 0.0;
  double q = 0.0;
  Vector gradient;
  Matrix hessian;
};

/// M grad_E and M hess_E M with M = I - x x^T / |x|^2. Throws DomainError at x = 0.
ProjectedDerivatives projected_derivatives(const Disorder& d, const Vector& x);
Vector projected_gradient(const Disorder& d, const Vector& x);
Matrix projected_hessian(const Disorder& d, const Vector& x);

/// Projection of an already computed Euclidean Hessian onto the tangent space at x.
Matrix project_hessian(const Matrix& euclidean, const Vector& x);
Vector project_vector(const Vector& v, const Vector& x);

/// H(x + t v) and its first three t-derivatives at t = 0.
struct DirectionalJet {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
  double d3 = 0.0;
};

DirectionalJet directional_jet(const Disorder& d, const Vector& x, const Vector& v);

/// N nu(x.y / N).
double covariance_expectation(const Mixture& mixture, const Vector& x, const Vector& y);

/// Number of worker threads used for evaluation. Results do not depend on it.
void set_evaluation_threads(int threads);
int evaluation_threads();

void save_disorder(const Disorder& d, const std::filesystem::path& path);

/// Restores a dump and checks its header against the requested parameters.
Disorder load_disorder(const std::filesystem::path& path, const Mixture& mixture, int n, std::uint64_t seed);

}  // namespace spinpath
