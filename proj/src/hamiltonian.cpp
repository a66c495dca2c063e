#include "spinpath/hamiltonian.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <thread>

#include "spinpath/errors.hpp"

namespace spinpath {

namespace {

// Partition count is a function of N only, so the floating-point summation
// order (and hence every result bit) is independent of the thread count.
constexpr int kMaxChunks = 8;
constexpr std::uint64_t kHessianScratchBudget = std::uint64_t{512} << 20;

std::atomic<int> g_eval_threads{static_cast<int>(std::max(1u, std::thread::hardware_concurrency()))};

void check_dimension(const Disorder& d, const Vector& x, const char* what) {
  if (x.size() != d.n()) {
    throw ArgumentError(std::string(what) + ": point has dimension " + std::to_string(x.size()) +
                        ", disorder has N=" + std::to_string(d.n()));
  }
}

double degree_scale(int n, const DegreeBlock& b) {
  return b.gamma / std::pow(static_cast<double>(n), 0.5 * (b.p - 1));
}

// Tuples whose first index is `first`: C(n - first + p - 2, p - 1).
std::vector<std::uint64_t> first_index_offsets(int n, int p) {
  std::vector<std::uint64_t> offsets(static_cast<std::size_t>(n) + 1, 0);
  for (int a = 0; a < n; ++a) {
    offsets[a + 1] = offsets[a] + (p == 1 ? 1 : tuple_count(n - a, p - 1));
  }
  return offsets;
}

struct Range {
  int begin = 0;
  int end = 0;
  std::uint64_t offset = 0;
};

// Split first indices into `chunks` ranges of roughly equal tuple counts.
std::vector<Range> partition(int n, int p, int chunks) {
  const auto offsets = first_index_offsets(n, p);
  const std::uint64_t total = offsets.back();
  std::vector<Range> out;
  int a = 0;
  for (int c = 0; c < chunks; ++c) {
    Range r;
    r.begin = a;
    r.offset = offsets[a];
    const std::uint64_t target = total * static_cast<std::uint64_t>(c + 1) / chunks;
    while (a < n && (c == chunks - 1 || offsets[a + 1] <= target)) ++a;
    if (a == r.begin && a < n && c < chunks - 1 && offsets[a] < target) ++a;
    r.end = a;
    out.push_back(r);
  }
  out.back().end = n;
  return out;
}

struct Accumulator {
  double energy = 0.0;
  std::vector<double> grad;
  std::vector<double> hess;  // column-major N x N, lower triangle only
  DirectionalJet jet;
};

enum class Mode { Energy, Gradient, Hessian, Jet };

template <int P, Mode M>
struct Walker {
  const double* coef;
  const double* x;
  const double* w;  // direction, Jet mode only
  int n;
  double scale;
  Accumulator* acc;
  std::array<int, P> idx{};
  std::array<double, P> s{};

  void leaf() {
    const double c = scale * *coef++;
    if constexpr (M == Mode::Jet) {
      std::array<double, 4> poly{1.0, 0.0, 0.0, 0.0};
      for (int m = 0; m < P; ++m) {
        const double a = s[m];
        const double b = w[idx[m]];
        for (int k = 3; k >= 1; --k) poly[k] = poly[k] * a + poly[k - 1] * b;
        poly[0] *= a;
      }
      acc->jet.value += c * poly[0];
      acc->jet.d1 += c * poly[1];
      acc->jet.d2 += 2.0 * c * poly[2];
      acc->jet.d3 += 6.0 * c * poly[3];
      return;
    } else {
      std::array<double, P + 1> pre;
      std::array<double, P + 1> suf;
      pre[0] = 1.0;
      suf[P] = 1.0;
      for (int m = 0; m < P; ++m) pre[m + 1] = pre[m] * s[m];
      for (int m = P - 1; m >= 0; --m) suf[m] = suf[m + 1] * s[m];
      acc->energy += c * pre[P];
      if constexpr (M == Mode::Gradient || M == Mode::Hessian) {
        double* g = acc->grad.data();
        for (int u = 0; u < P; ++u) g[idx[u]] += c * pre[u] * suf[u + 1];
      }
      if constexpr (M == Mode::Hessian) {
        double* h = acc->hess.data();
        for (int u = 0; u < P; ++u) {
          double mid = 1.0;
          const std::size_t col = static_cast<std::size_t>(idx[u]) * n;
          for (int v = u + 1; v < P; ++v) {
            const double term = c * pre[u] * mid * suf[v + 1];
            h[col + idx[v]] += idx[u] == idx[v] ? 2.0 * term : term;
            mid *= s[v];
          }
        }
      }
    }
  }

  template <int D>
  void descend(int start, int stop) {
    for (int i = start; i < stop; ++i) {
      idx[D] = i;
      s[D] = x[i];
      if constexpr (D + 1 == P) {
        leaf();
      } else {
        descend<D + 1>(i, n);
      }
    }
  }
};

template <Mode M, int P>
void run_walker(const DegreeBlock& b, int n, const Range& r, const double* x, const double* w, Accumulator& acc) {
  Walker<P, M> walker{b.coeffs.data() + r.offset, x, w, n, degree_scale(n, b), &acc};
  walker.template descend<0>(r.begin, r.end);
}

template <Mode M, int P = 2>
void dispatch(int p, const DegreeBlock& b, int n, const Range& r, const double* x, const double* w,
              Accumulator& acc) {
  if constexpr (P > kMaxSupportedDegree) {
    throw ArgumentError("degree " + std::to_string(p) + " exceeds the supported maximum");
  } else {
    if (p == P) {
      run_walker<M, P>(b, n, r, x, w, acc);
    } else {
      dispatch<M, P + 1>(p, b, n, r, x, w, acc);
    }
  }
}

template <Mode M>
std::vector<Accumulator> accumulate(const Disorder& d, const double* x, const double* w) {
  const int n = d.n();
  int chunks = kMaxChunks;
  if constexpr (M == Mode::Hessian) {
    const std::uint64_t per = static_cast<std::uint64_t>(n) * n * sizeof(double);
    chunks = static_cast<int>(std::clamp<std::uint64_t>(kHessianScratchBudget / std::max<std::uint64_t>(per, 1), 1,
                                                         kMaxChunks));
  }
  chunks = std::min(chunks, n);

  std::vector<std::vector<Range>> ranges;
  for (const auto& b : d.blocks()) ranges.push_back(partition(n, b.p, chunks));

  std::vector<Accumulator> accs(static_cast<std::size_t>(chunks));
  auto work = [&](int c) {
    Accumulator& acc = accs[c];
    if constexpr (M == Mode::Gradient || M == Mode::Hessian) acc.grad.assign(n, 0.0);
    if constexpr (M == Mode::Hessian) acc.hess.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (std::size_t bi = 0; bi < d.blocks().size(); ++bi) {
      const auto& b = d.blocks()[bi];
      dispatch<M>(b.p, b, n, ranges[bi][c], x, w, acc);
    }
  };

  const int threads = std::min(chunks, evaluation_threads());
  if (threads <= 1) {
    for (int c = 0; c < chunks; ++c) work(c);
  } else {
    std::vector<std::jthread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (int c = t; c < chunks; c += threads) work(c);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    pool.clear();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  return accs;
}

void write_u64(std::ostream& os, std::uint64_t v) {
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(bytes), 8);
}

void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char bytes[4];
  for (int i = 0; i < 4; ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(bytes), 4);
}

std::uint64_t read_u64(std::istream& is) {
  unsigned char bytes[8];
  if (!is.read(reinterpret_cast<char*>(bytes), 8)) throw IoError("disorder dump: truncated");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | bytes[i];
  return v;
}

std::uint32_t read_u32(std::istream& is) {
  unsigned char bytes[4];
  if (!is.read(reinterpret_cast<char*>(bytes), 4)) throw IoError("disorder dump: truncated");
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | bytes[i];
  return v;
}

constexpr char kMagic[8] = {'S', 'P', 'N', 'P', 'D', 'I', 'S', 'O'};
constexpr std::uint32_t kDumpVersion = 1;

}  // namespace

CapacityError::CapacityError(std::uint64_t bytes, std::uint64_t budget)
    : std::runtime_error("disorder needs " + std::to_string(bytes) + " bytes, budget is " + std::to_string(budget)),
      bytes_(bytes),
      budget_(budget) {}

SpectralFailure::SpectralFailure(double achieved, double target)
    : std::runtime_error("no direction reached the Rayleigh target " + std::to_string(target) + " (best " +
                         std::to_string(achieved) + ")"),
      achieved_(achieved),
      target_(target) {}

namespace {
std::string join_problems(const std::vector<std::string>& problems) {
  std::string out = "invalid configuration:";
  for (const auto& p : problems) out += "\n  - " + p;
  return out;
}
}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::invalid_argument(join_problems(problems)), problems_(std::move(problems)) {}

std::uint64_t tuple_count(int n, int p) {
  if (n < 0 || p < 0) throw ArgumentError("tuple_count: negative argument");
  unsigned __int128 r = 1;
  for (int i = 0; i < p; ++i) {
    r = r * static_cast<unsigned __int128>(n + p - 1 - i) / static_cast<unsigned __int128>(i + 1);
    if (r > std::numeric_limits<std::uint64_t>::max()) throw CapacityError(std::numeric_limits<std::uint64_t>::max(), 0);
  }
  return static_cast<std::uint64_t>(r);
}

std::uint64_t disorder_bytes(const Mixture& mixture, int n) {
  unsigned __int128 total = 0;
  for (const auto& [p, g] : mixture.gammas()) total += static_cast<unsigned __int128>(tuple_count(n, p)) * sizeof(double);
  if (total > std::numeric_limits<std::uint64_t>::max()) return std::numeric_limits<std::uint64_t>::max();
  return static_cast<std::uint64_t>(total);
}

std::uint64_t ordering_count(std::span<const int> sorted) {
  std::uint64_t r = 1;
  int run = 0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    run = (i > 0 && sorted[i] == sorted[i - 1]) ? run + 1 : 1;
    // multiply by (i+1) / run keeps r an integer at every step
    r = r * (i + 1) / run;
  }
  return r;
}

Disorder::Disorder(Mixture mixture, int n, std::uint64_t seed, std::vector<DegreeBlock> blocks)
    : mixture_(std::move(mixture)), n_(n), seed_(seed), blocks_(std::move(blocks)) {
  if (n_ < 2) throw ArgumentError("disorder: N must be >= 2");
  if (mixture_.degree() > kMaxSupportedDegree) {
    throw ArgumentError("disorder: degree " + std::to_string(mixture_.degree()) + " exceeds the supported maximum " +
                        std::to_string(kMaxSupportedDegree));
  }
  if (blocks_.size() != mixture_.gammas().size()) throw ArgumentError("disorder: block count does not match mixture");
  std::size_t i = 0;
  for (const auto& [p, g] : mixture_.gammas()) {
    auto& b = blocks_[i++];
    if (b.p != p) throw ArgumentError("disorder: blocks must follow the mixture's degrees in ascending order");
    b.gamma = g;
    if (b.coeffs.size() != tuple_count(n_, p)) {
      throw ArgumentError("disorder: degree " + std::to_string(p) + " needs " + std::to_string(tuple_count(n_, p)) +
                          " coefficients, got " + std::to_string(b.coeffs.size()));
    }
  }
}

const DegreeBlock* Disorder::block(int p) const {
  for (const auto& b : blocks_) {
    if (b.p == p) return &b;
  }
  return nullptr;
}

namespace {

template <int P>
struct SamplerWalk {
  int n;
  double* out;
  std::mt19937_64* rng;
  std::normal_distribution<double>* gauss;
  std::array<int, P> idx{};

  template <int D>
  void descend(int start) {
    for (int i = start; i < n; ++i) {
      idx[D] = i;
      if constexpr (D + 1 == P) {
        const double r = static_cast<double>(ordering_count(idx));
        *out++ = std::sqrt(r) * (*gauss)(*rng);
      } else {
        descend<D + 1>(i);
      }
    }
  }
};

template <int P = 2>
void sample_block(int p, int n, double* out, std::mt19937_64& rng, std::normal_distribution<double>& gauss) {
  if constexpr (P > kMaxSupportedDegree) {
    throw ArgumentError("degree " + std::to_string(p) + " exceeds the supported maximum");
  } else {
    if (p == P) {
      SamplerWalk<P> w{n, out, &rng, &gauss};
      w.template descend<0>(0);
    } else {
      sample_block<P + 1>(p, n, out, rng, gauss);
    }
  }
}

}  // namespace

Disorder sample_disorder(const Mixture& mixture, int n, std::uint64_t seed, std::uint64_t memory_budget) {
  if (n < 2) throw ArgumentError("sample_disorder: N must be >= 2");
  if (mixture.degree() > kMaxSupportedDegree) {
    throw ArgumentError("sample_disorder: degree exceeds the supported maximum " + std::to_string(kMaxSupportedDegree));
  }
  const std::uint64_t bytes = disorder_bytes(mixture, n);
  if (bytes > memory_budget) throw CapacityError(bytes, memory_budget);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<DegreeBlock> blocks;
  for (const auto& [p, g] : mixture.gammas()) {
    DegreeBlock b;
    b.p = p;
    b.gamma = g;
    b.coeffs.resize(tuple_count(n, p));
    sample_block(p, n, b.coeffs.data(), rng, gauss);
    blocks.push_back(std::move(b));
  }
  return Disorder(mixture, n, seed, std::move(blocks));
}

double overlap_q(const Vector& x) { return x.squaredNorm() / static_cast<double>(x.size()); }

Evaluation evaluate(const Disorder& d, const Vector& x, int order) {
  check_dimension(d, x, "evaluate");
  if (order < 0 || order > 2) throw ArgumentError("evaluate: order must be 0, 1 or 2");
  const int n = d.n();
  Evaluation out;
  std::vector<Accumulator> accs;
  switch (order) {
    case 0: accs = accumulate<Mode::Energy>(d, x.data(), nullptr); break;
    case 1: accs = accumulate<Mode::Gradient>(d, x.data(), nullptr); break;
    default: accs = accumulate<Mode::Hessian>(d, x.data(), nullptr); break;
  }
  for (const auto& a : accs) out.energy += a.energy;
  if (order >= 1) {
    out.gradient = Vector::Zero(n);
    for (const auto& a : accs) out.gradient += Eigen::Map<const Vector>(a.grad.data(), n);
  }
  if (order >= 2) {
    out.hessian = Matrix::Zero(n, n);
    for (const auto& a : accs) out.hessian += Eigen::Map<const Matrix>(a.hess.data(), n, n);
    out.hessian.triangularView<Eigen::StrictlyUpper>() = out.hessian.transpose().triangularView<Eigen::StrictlyUpper>();
  }
  return out;
}

double energy(const Disorder& d, const Vector& x) { return evaluate(d, x, 0).energy; }
Vector euclidean_gradient(const Disorder& d, const Vector& x) { return evaluate(d, x, 1).gradient; }
Matrix euclidean_hessian(const Disorder& d, const Vector& x) { return evaluate(d, x, 2).hessian; }

Vector project_vector(const Vector& v, const Vector& x) {
  const double norm2 = x.squaredNorm();
  if (norm2 == 0.0) throw DomainError("projection onto the tangent space is undefined at the origin");
  return v - (x.dot(v) / norm2) * x;
}

Matrix project_hessian(const Matrix& h, const Vector& x) {
  const double norm = x.norm();
  if (norm == 0.0) throw DomainError("projection onto the tangent space is undefined at the origin");
  const Vector u = x / norm;
  const Vector hu = h * u;
  const double uhu = u.dot(hu);
  Matrix out = h;
  out.noalias() -= u * hu.transpose();
  out.noalias() -= hu * u.transpose();
  out.noalias() += (uhu * u) * u.transpose();
  // exact symmetry; the rank-one updates above are symmetric only up to rounding
  out = 0.5 * (out + out.transpose()).eval();
  return out;
}

ProjectedDerivatives projected_derivatives(const Disorder& d, const Vector& x) {
  check_dimension(d, x, "projected_derivatives");
  if (x.squaredNorm() == 0.0) throw DomainError("projected derivatives are undefined at the origin");
  Evaluation e = evaluate(d, x, 2);
  ProjectedDerivatives out;
  out.energy = e.energy;
  out.q = overlap_q(x);
  out.gradient = project_vector(e.gradient, x);
  out.hessian = project_hessian(e.hessian, x);
  return out;
}

Vector projected_gradient(const Disorder& d, const Vector& x) {
  check_dimension(d, x, "projected_gradient");
  if (x.squaredNorm() == 0.0) throw DomainError("projected gradient is undefined at the origin");
  return project_vector(evaluate(d, x, 1).gradient, x);
}

Matrix projected_hessian(const Disorder& d, const Vector& x) { return projected_derivatives(d, x).hessian; }

DirectionalJet directional_jet(const Disorder& d, const Vector& x, const Vector& v) {
  check_dimension(d, x, "directional_jet");
  check_dimension(d, v, "directional_jet");
  DirectionalJet out;
  for (const auto& a : accumulate<Mode::Jet>(d, x.data(), v.data())) {
    out.value += a.jet.value;
    out.d1 += a.jet.d1;
    out.d2 += a.jet.d2;
    out.d3 += a.jet.d3;
  }
  return out;
}

double covariance_expectation(const Mixture& mixture, const Vector& x, const Vector& y) {
  if (x.size() != y.size()) throw ArgumentError("covariance_expectation: dimension mismatch");
  const double n = static_cast<double>(x.size());
  return n * mixture.derivative_unchecked(x.dot(y) / n, 0);
}

void set_evaluation_threads(int threads) { g_eval_threads.store(std::max(1, threads)); }
int evaluation_threads() { return g_eval_threads.load(); }

void save_disorder(const Disorder& d, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os.write(kMagic, sizeof kMagic);
  write_u32(os, kDumpVersion);
  const std::string mix = d.mixture().to_string();
  write_u32(os, static_cast<std::uint32_t>(mix.size()));
  os.write(mix.data(), static_cast<std::streamsize>(mix.size()));
  write_u64(os, static_cast<std::uint64_t>(d.n()));
  write_u64(os, d.seed());
  for (const auto& b : d.blocks()) {
    write_u64(os, b.coeffs.size());
    for (double c : b.coeffs) write_u64(os, std::bit_cast<std::uint64_t>(c));
  }
  if (!os) throw IoError("write failed for " + path.string());
}

Disorder load_disorder(const std::filesystem::path& path, const Mixture& mixture, int n, std::uint64_t seed) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  char magic[sizeof kMagic];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw IoError(path.string() + " is not a disorder dump");
  }
  if (read_u32(is) != kDumpVersion) throw IoError("unsupported disorder dump version");
  std::string mix(read_u32(is), '\0');
  if (!is.read(mix.data(), static_cast<std::streamsize>(mix.size()))) throw IoError("disorder dump: truncated");
  const auto stored_n = read_u64(is);
  const auto stored_seed = read_u64(is);
  if (!(Mixture::parse(mix) == mixture) || stored_n != static_cast<std::uint64_t>(n) || stored_seed != seed) {
    throw ArgumentError("disorder dump header (mixture=" + mix + ", N=" + std::to_string(stored_n) + ", seed=" +
                        std::to_string(stored_seed) + ") does not match the requested parameters");
  }
  std::vector<DegreeBlock> blocks;
  for (const auto& [p, g] : mixture.gammas()) {
    DegreeBlock b;
    b.p = p;
    b.gamma = g;
    const auto count = read_u64(is);
    if (count != tuple_count(n, p)) throw IoError("disorder dump: wrong coefficient count for degree " + std::to_string(p));
    b.coeffs.resize(count);
    for (auto& c : b.coeffs) c = std::bit_cast<double>(read_u64(is));
    blocks.push_back(std::move(b));
  }
  return Disorder(mixture, n, seed, std::move(blocks));
}

}  // namespace spinpath
