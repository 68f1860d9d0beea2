#pragma once

#include <cstdint>
#include <vector>

#include "markovpca/linalg.hpp"

namespace markovpca {

// Row-stochastic matrix over a finite state space {0, ..., n-1}.
class TransitionMatrix {
 public:
  // Throws InvalidArgument unless every entry is in [0, 1] and every row
  // sums to 1 within 1e-12.
  explicit TransitionMatrix(Matrix probs);

  // Stays put with probability 1 - rho, otherwise jumps uniformly to one of
  // the other n - 1 states.
  static TransitionMatrix rho_chain(int n_states, double rho);

  int n_states() const noexcept { return static_cast<int>(probs_.rows()); }
  const Matrix& probs() const noexcept { return probs_; }
  double operator()(int from, int to) const { return probs_(from, to); }

 private:
  Matrix probs_;
};

struct ChainSpectrum {
  Vector stationary;  // pi, left eigenvector for eigenvalue 1, sums to 1
  double lambda2_abs = 0.0;
  bool reversible = false;
  double pi_min = 0.0;
};

// Throws Ergodicity for reducible, periodic or numerically non-mixing chains.
ChainSpectrum analyze_spectrum(const TransitionMatrix& chain);

// (1/2) max_x sum_y |rows(x, y) - pi(y)|
double sup_tv_distance(const Matrix& rows, const Vector& pi);

// Worst-start total-variation distance to stationarity after t steps.
double d_mix(const TransitionMatrix& chain, const ChainSpectrum& spectrum,
             std::uint64_t t);

// Smallest t >= 1 with d_mix(t) <= eps.
std::uint64_t tau_mix(const TransitionMatrix& chain,
                      const ChainSpectrum& spectrum, double eps);

// Chain plus its tau_mix(1/4). Immutable.
class MixingProfile {
 public:
  MixingProfile(TransitionMatrix chain, ChainSpectrum spectrum);

  double d_mix(std::uint64_t t) const;
  std::uint64_t tau_mix(double eps) const;
  std::uint64_t tau_mix_quarter() const noexcept { return tau_quarter_; }

  const TransitionMatrix& chain() const noexcept { return chain_; }
  const ChainSpectrum& spectrum() const noexcept { return spectrum_; }

 private:
  TransitionMatrix chain_;
  ChainSpectrum spectrum_;
  std::uint64_t tau_quarter_;
};

// Random walk s_1..s_length with s_1 ~ pi. Deterministic in seed.
std::vector<int> sample_path(const TransitionMatrix& chain,
                             const ChainSpectrum& spectrum,
                             std::size_t length, std::uint64_t seed);

// R(u, s) = P(Z_t = s | Z_{t+k} = u) for the stationary chain, by Bayes rule
// pi(s) P^k(s, u) / pi(u). Rows are indexed by the conditioning future state.
// Throws Reversibility for non-reversible chains.
Matrix reversed_conditional(const TransitionMatrix& chain,
                            const ChainSpectrum& spectrum, std::uint64_t k);

}  // namespace markovpca
