#include "markovpca/offline.hpp"

#include <cmath>

#include "markovpca/error.hpp"
#include "markovpca/rng.hpp"

namespace markovpca {

namespace {
constexpr double kSinTol = 1e-10;
constexpr int kMaxIter = 100'000;
constexpr std::uint64_t kStartSeedA = 0x6f66666c696e6561ULL;
constexpr std::uint64_t kStartSeedB = 0x706f776572697465ULL;
constexpr double kTieSin2 = 1e-8;

struct PowerResult {
  Vector v;
  bool hit_cap = true;
  int iterations = 0;
};

PowerResult power_iterate(const Matrix& m, std::uint64_t seed) {
  Rng rng(seed);
  Vector v(m.rows());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.normal();
  v.normalize();
  PowerResult out;
  for (int it = 1; it <= kMaxIter; ++it) {
    Vector next = m * v;
    const double n = next.norm();
    if (!(n > 0.0)) {
      // v lies in the null space; the top eigenvector is undetermined.
      out.v = v;
      out.iterations = it;
      return out;
    }
    next /= n;
    const double sin = (next - next.dot(v) * v).norm();
    v = std::move(next);
    if (sin < kSinTol) {
      out.hit_cap = false;
      out.iterations = it;
      break;
    }
    out.iterations = it;
  }
  out.v = std::move(v);
  return out;
}

}  // namespace

EmpiricalCovariance::EmpiricalCovariance(int dim)
    : sum_(Matrix::Zero(dim, dim)) {
  require(dim >= 1, "dimension must be positive");
}

void EmpiricalCovariance::add(const Vector& x) {
  require(x.size() == sum_.rows(), "sample dimension mismatch");
  sum_.selfadjointView<Eigen::Lower>().rankUpdate(x);
  ++n_;
}

void EmpiricalCovariance::merge(const EmpiricalCovariance& other) {
  require(other.dim() == dim(), "accumulator dimension mismatch");
  sum_ += other.sum_;
  n_ += other.n_;
}

Matrix EmpiricalCovariance::sigma_hat() const {
  require(n_ >= 1, "empirical covariance needs at least one sample");
  Matrix full = sum_.selfadjointView<Eigen::Lower>();
  return full / static_cast<double>(n_);
}

EmpiricalCovariance accumulate(std::span<const Vector> samples) {
  require(!samples.empty(), "need at least one sample");
  EmpiricalCovariance acc(static_cast<int>(samples.front().size()));
  for (const auto& x : samples) acc.add(x);
  return acc;
}

LeadingEigen leading_eigenvector(const Matrix& symmetric) {
  require(symmetric.rows() == symmetric.cols() && symmetric.rows() >= 1,
          "matrix must be square");
  require(symmetric.cwiseAbs().maxCoeff() > 0.0, "matrix must be non-zero");
  const PowerResult a = power_iterate(symmetric, kStartSeedA);
  LeadingEigen out;
  out.v = a.v;
  out.lambda = a.v.dot(symmetric * a.v);
  out.iterations = a.iterations;
  out.converged = !a.hit_cap;
  if (out.converged && symmetric.rows() > 1) {
    const PowerResult b = power_iterate(symmetric, kStartSeedB);
    if (b.hit_cap || sin2(a.v, b.v) > kTieSin2) out.converged = false;
  }
  return out;
}

LeadingEigen leading_eigenvector(const EmpiricalCovariance& emp) {
  return leading_eigenvector(emp.sigma_hat());
}

ErrorTrace run_offline(const StateDistributionSet& dist,
                       std::span<const int> path,
                       std::span<const std::size_t> checkpoints,
                       const EnsembleCovariance& truth, std::uint64_t seed) {
  validate_checkpoints(checkpoints, path.size());
  SampleStream stream(dist, path, derive_seed(seed, stream::kNoise));
  EmpiricalCovariance acc(dist.dim());
  ErrorTrace trace;
  trace.algorithm = kAlgoOffline;
  trace.seed = seed;
  trace.checkpoints.assign(checkpoints.begin(), checkpoints.end());
  std::size_t next_cp = 0;
  while (!stream.done()) {
    const Vector& x = stream.next();
    if (next_cp < checkpoints.size()) {
      acc.add(x);
      if (stream.position() == checkpoints[next_cp]) {
        trace.errors.push_back(sin2(leading_eigenvector(acc).v, truth.v1));
        ++next_cp;
      }
    }
  }
  trace.updates = acc.count();
  trace.stream_checksum = stream.checksum();
  return trace;
}

}  // namespace markovpca
