#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "markovpca/linalg.hpp"
#include "markovpca/rng.hpp"

namespace markovpca {

enum class NoiseKind { Bernoulli, Uniform };

const char* to_string(NoiseKind kind) noexcept;
NoiseKind parse_noise_kind(std::string_view name);

// Per-coordinate law of Z, standardised to mean 0 and variance 1.
//   Bernoulli(p):        (B - p) / sqrt(p (1 - p))
//   Uniform(-√3, √3):    already standard
struct BaseNoise {
  NoiseKind kind = NoiseKind::Uniform;
  double p = 0.0;  // Bernoulli only

  static BaseNoise bernoulli(double p);
  static BaseNoise uniform();

  double draw(Rng& rng) const;
  double fourth_moment() const;
  // Extreme points of the per-coordinate support: the two atoms for
  // Bernoulli, the interval endpoints for Uniform.
  std::vector<double> support_extremes() const;
};

class StateDistributionSet {
 public:
  // One covariance per state; factors are the symmetric square roots.
  StateDistributionSet(std::vector<Matrix> covariances, BaseNoise noise);

  int n_states() const noexcept { return static_cast<int>(cov_.size()); }
  int dim() const noexcept { return dim_; }
  const Matrix& covariance(int state) const { return cov_.at(static_cast<std::size_t>(state)); }
  const Matrix& factor(int state) const { return factor_.at(static_cast<std::size_t>(state)); }
  const BaseNoise& noise() const noexcept { return noise_; }

  // X = L_s Z. `scratch` must have length dim().
  void draw_sample(int state, Rng& rng, Vector& scratch, Vector& out) const;
  Vector draw_sample(int state, Rng& rng) const;

 private:
  int dim_ = 0;
  std::vector<Matrix> cov_;
  std::vector<Matrix> factor_;
  BaseNoise noise_;
};

// c_s = 1 + 9 (s - 1) / (n_states - 1), with s 1-based.
double paper_decay_rate(int state_one_based, int n_states);

// Sigma_s(i, j) = exp(-|i - j| c_s) sigma_i sigma_j, sigma_i = 5 i^(-sigma_beta).
// Bernoulli p ~ U(0, 0.05) is drawn once from `seed` and shared by every
// state and coordinate.
StateDistributionSet make_paper_states(int n_states, int dim, double sigma_beta,
                                       NoiseKind noise, std::uint64_t seed);

// sum_s pi(s) Sigma_s
Matrix mixture_covariance(const StateDistributionSet& dist, const Vector& pi);

struct EnsembleCovariance {
  Matrix sigma;
  Vector eigenvalues;  // descending
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double gap = 0.0;
  Vector v1;
  Matrix v_perp;  // d x (d - 1)
};

// Throws DegenerateGap when lambda1 - lambda2 < 1e-10.
EnsembleCovariance total_covariance(const StateDistributionSet& dist,
                                    const Vector& pi);
EnsembleCovariance eigen_summary(Matrix sigma);

struct AssumptionBounds {
  double v_bound = 0.0;  // with 20% margin
  double m_bound = 0.0;  // with 20% margin, floored so m_bound + lambda1 >= 1
  double v_raw = 0.0;
  double m_raw = 0.0;
};

// Monte-Carlo estimate from n_probe stationary probes (state ~ pi, X ~ D(s)).
// For Bernoulli noise the almost-sure bound is replaced by the 1 - 1e-6
// empirical quantile of ||XX^T - Sigma||, which for n_probe < 1e6 is the max.
AssumptionBounds estimate_assumption_bounds(const StateDistributionSet& dist,
                                            const Vector& pi,
                                            std::size_t n_probe,
                                            std::uint64_t seed);

// Deterministic sample generator X_1, X_2, ... along a state path.
class SampleStream {
 public:
  SampleStream(const StateDistributionSet& dist, std::span<const int> path,
               std::uint64_t noise_seed);

  bool done() const noexcept { return pos_ >= path_.size(); }
  std::size_t size() const noexcept { return path_.size(); }
  // 1-based index of the sample most recently returned by next().
  std::size_t position() const noexcept { return pos_; }
  const Vector& next();
  // FNV-1a over the bytes of every sample produced so far.
  std::uint64_t checksum() const noexcept { return hash_; }

 private:
  const StateDistributionSet* dist_;
  std::span<const int> path_;
  Rng rng_;
  std::size_t pos_ = 0;
  Vector scratch_;
  Vector x_;
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

}  // namespace markovpca
