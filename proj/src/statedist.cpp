#include "markovpca/statedist.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "markovpca/error.hpp"

namespace markovpca {

namespace {
constexpr double kSqrt3 = 1.7320508075688772;
constexpr double kSafetyMargin = 1.2;
constexpr double kDegenerateGap = 1e-10;
constexpr double kBernoulliQuantile = 1.0 - 1e-6;
}  // namespace

const char* to_string(NoiseKind kind) noexcept {
  switch (kind) {
    case NoiseKind::Bernoulli:
      return "bernoulli";
    case NoiseKind::Uniform:
      return "uniform";
  }
  return "?";
}

NoiseKind parse_noise_kind(std::string_view name) {
  if (name == "bernoulli") return NoiseKind::Bernoulli;
  if (name == "uniform") return NoiseKind::Uniform;
  fail(ErrorCode::InvalidArgument,
       "unknown noise kind '" + std::string(name) + "'");
}

BaseNoise BaseNoise::bernoulli(double p) {
  require(p > 0.0 && p < 1.0, "Bernoulli parameter must lie in (0, 1)");
  return BaseNoise{NoiseKind::Bernoulli, p};
}

BaseNoise BaseNoise::uniform() { return BaseNoise{NoiseKind::Uniform, 0.0}; }

double BaseNoise::draw(Rng& rng) const {
  if (kind == NoiseKind::Uniform) return kSqrt3 * (2.0 * rng.uniform() - 1.0);
  const double b = rng.uniform() < p ? 1.0 : 0.0;
  return (b - p) / std::sqrt(p * (1.0 - p));
}

double BaseNoise::fourth_moment() const {
  if (kind == NoiseKind::Uniform) return 9.0 / 5.0;
  return (1.0 - 3.0 * p + 3.0 * p * p) / (p * (1.0 - p));
}

std::vector<double> BaseNoise::support_extremes() const {
  if (kind == NoiseKind::Uniform) return {-kSqrt3, kSqrt3};
  const double s = std::sqrt(p * (1.0 - p));
  return {-p / s, (1.0 - p) / s};
}

StateDistributionSet::StateDistributionSet(std::vector<Matrix> covariances,
                                           BaseNoise noise)
    : cov_(std::move(covariances)), noise_(noise) {
  require(!cov_.empty(), "at least one state distribution is required");
  dim_ = static_cast<int>(cov_.front().rows());
  require(dim_ >= 1, "dimension must be positive");
  factor_.reserve(cov_.size());
  for (auto& c : cov_) {
    require(c.rows() == dim_ && c.cols() == dim_,
            "state covariances must all be dim x dim");
    c = 0.5 * (c + c.transpose());
    factor_.push_back(psd_sqrt(c));
  }
}

void StateDistributionSet::draw_sample(int state, Rng& rng, Vector& scratch,
                                       Vector& out) const {
  for (int i = 0; i < dim_; ++i) scratch(i) = noise_.draw(rng);
  out.noalias() = factor(state) * scratch;
}

Vector StateDistributionSet::draw_sample(int state, Rng& rng) const {
  Vector scratch(dim_);
  Vector out(dim_);
  draw_sample(state, rng, scratch, out);
  return out;
}

double paper_decay_rate(int state_one_based, int n_states) {
  return 1.0 + 9.0 * static_cast<double>(state_one_based - 1) /
                   static_cast<double>(n_states - 1);
}

StateDistributionSet make_paper_states(int n_states, int dim, double sigma_beta,
                                       NoiseKind noise, std::uint64_t seed) {
  require(n_states >= 2, "need at least 2 states");
  require(dim >= 2, "need dimension at least 2");
  require(sigma_beta > 0.0, "sigma_beta must be positive");

  Vector sigma(dim);
  for (int i = 0; i < dim; ++i) {
    sigma(i) = 5.0 * std::pow(static_cast<double>(i + 1), -sigma_beta);
  }
  std::vector<Matrix> covs;
  covs.reserve(static_cast<std::size_t>(n_states));
  for (int s = 1; s <= n_states; ++s) {
    const double c = paper_decay_rate(s, n_states);
    Matrix m(dim, dim);
    for (int i = 0; i < dim; ++i) {
      for (int j = 0; j < dim; ++j) {
        m(i, j) = std::exp(-std::abs(i - j) * c) * sigma(i) * sigma(j);
      }
    }
    covs.push_back(std::move(m));
  }

  BaseNoise base = BaseNoise::uniform();
  if (noise == NoiseKind::Bernoulli) {
    Rng rng(derive_seed(seed, stream::kBernoulliP));
    base = BaseNoise::bernoulli(0.05 * rng.uniform_open());
  }
  return StateDistributionSet(std::move(covs), base);
}

Matrix mixture_covariance(const StateDistributionSet& dist, const Vector& pi) {
  require(pi.size() == dist.n_states(),
          "stationary vector length must match the number of states");
  Matrix sigma = Matrix::Zero(dist.dim(), dist.dim());
  for (int s = 0; s < dist.n_states(); ++s) {
    sigma += pi(s) * dist.covariance(s);
  }
  return sigma;
}

EnsembleCovariance eigen_summary(Matrix sigma) {
  EnsembleCovariance out;
  out.sigma = 0.5 * (sigma + sigma.transpose());
  const auto d = out.sigma.rows();
  Eigen::SelfAdjointEigenSolver<Matrix> es(out.sigma);
  out.eigenvalues = es.eigenvalues().reverse();
  const Matrix vecs = es.eigenvectors().rowwise().reverse();
  out.lambda1 = out.eigenvalues(0);
  out.lambda2 = d > 1 ? out.eigenvalues(1) : 0.0;
  out.gap = out.lambda1 - out.lambda2;
  out.v1 = vecs.col(0);
  Eigen::Index arg = 0;
  out.v1.cwiseAbs().maxCoeff(&arg);
  if (out.v1(arg) < 0.0) out.v1 = -out.v1;
  out.v_perp = vecs.rightCols(d - 1);
  return out;
}

EnsembleCovariance total_covariance(const StateDistributionSet& dist,
                                    const Vector& pi) {
  EnsembleCovariance out = eigen_summary(mixture_covariance(dist, pi));
  if (!(out.gap >= kDegenerateGap)) {
    fail(ErrorCode::DegenerateGap,
         "top eigenvalues of the ensemble covariance are tied");
  }
  return out;
}

AssumptionBounds estimate_assumption_bounds(const StateDistributionSet& dist,
                                            const Vector& pi,
                                            std::size_t n_probe,
                                            std::uint64_t seed) {
  require(n_probe >= 1000, "need at least 1000 probes");
  const Matrix sigma = mixture_covariance(dist, pi);
  const int d = dist.dim();

  std::vector<double> cdf(static_cast<std::size_t>(pi.size()));
  double acc = 0.0;
  for (Eigen::Index s = 0; s < pi.size(); ++s) {
    acc += pi(s);
    cdf[static_cast<std::size_t>(s)] = acc;
  }

  Rng rng(derive_seed(seed, stream::kProbe));
  Vector scratch(d);
  Vector x(d);
  // mean (XX^T - Sigma)^2 = E[|X|^2 XX^T] - E[XX^T] Sigma - Sigma E[XX^T] + Sigma^2
  Matrix fourth = Matrix::Zero(d, d);
  Matrix second = Matrix::Zero(d, d);
  std::vector<double> deviations;
  deviations.reserve(n_probe);
  for (std::size_t i = 0; i < n_probe; ++i) {
    const double u = rng.uniform() * cdf.back();
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    const int s = static_cast<int>(
        std::min<std::ptrdiff_t>(it - cdf.begin(), pi.size() - 1));
    dist.draw_sample(s, rng, scratch, x);
    const Matrix outer = x * x.transpose();
    fourth += x.squaredNorm() * outer;
    second += outer;
    deviations.push_back(symmetric_norm(outer - sigma));
  }
  const double inv_n = 1.0 / static_cast<double>(n_probe);
  fourth *= inv_n;
  second *= inv_n;
  const Matrix mean_sq =
      fourth - second * sigma - sigma * second + sigma * sigma;

  AssumptionBounds out;
  out.v_raw = symmetric_norm(mean_sq);
  if (dist.noise().kind == NoiseKind::Bernoulli) {
    std::sort(deviations.begin(), deviations.end());
    const auto idx = static_cast<std::size_t>(
        std::ceil(kBernoulliQuantile * static_cast<double>(n_probe))) - 1;
    out.m_raw = deviations[std::min(idx, deviations.size() - 1)];
  } else {
    out.m_raw = *std::max_element(deviations.begin(), deviations.end());
  }
  const double lambda1 = symmetric_norm(sigma);
  out.v_bound = kSafetyMargin * out.v_raw;
  out.m_bound = std::max({kSafetyMargin * out.m_raw, std::sqrt(out.v_bound),
                          1.0 - lambda1});
  return out;
}

SampleStream::SampleStream(const StateDistributionSet& dist,
                           std::span<const int> path, std::uint64_t noise_seed)
    : dist_(&dist),
      path_(path),
      rng_(noise_seed),
      scratch_(dist.dim()),
      x_(dist.dim()) {
  for (int s : path_) {
    require(s >= 0 && s < dist.n_states(), "path state out of range");
  }
}

const Vector& SampleStream::next() {
  require(!done(), "sample stream exhausted");
  dist_->draw_sample(path_[pos_], rng_, scratch_, x_);
  ++pos_;
  const auto* bytes = reinterpret_cast<const unsigned char*>(x_.data());
  const std::size_t n = static_cast<std::size_t>(x_.size()) * sizeof(double);
  for (std::size_t i = 0; i < n; ++i) {
    hash_ ^= bytes[i];
    hash_ *= 0x100000001b3ULL;
  }
  return x_;
}

}  // namespace markovpca
