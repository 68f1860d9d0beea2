#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "markovpca/linalg.hpp"
#include "markovpca/markov.hpp"
#include "markovpca/rng.hpp"
#include "markovpca/statedist.hpp"
#include "markovpca/streaming.hpp"

namespace markovpca::oracle {

// A chain with at most 8 states and distributions in dimension at most 6,
// together with exact assumption constants.
struct SmallInstance {
  TransitionMatrix chain;
  ChainSpectrum spectrum;
  StateDistributionSet dist;
  Matrix sigma;
  double lambda1 = 0.0;
  std::vector<Matrix> g;  // G(s) = Sigma_s - Sigma (zero means)
  double v_exact = 0.0;   // ||E[(XX^T - Sigma)^2]||
  double m_exact = 0.0;   // ess sup ||XX^T - Sigma||
};

SmallInstance make_instance(TransitionMatrix chain, StateDistributionSet dist);

// E[(XX^T)^2 | s] from the fourth moment of the base noise:
//   L (2A + tr(A) I + (kappa - 3) diag(A)) L^T,  A = L^T L.
Matrix conditional_fourth_moment(const StateDistributionSet& dist, int state);

// ||sum_s pi(s) E[(XX^T)^2 | s] - Sigma^2||
double exact_variance_bound(const StateDistributionSet& dist, const Vector& pi,
                            const Matrix& sigma);
// Max of ||xx^T - Sigma|| over the noise support. lambda_max(xx^T - Sigma) is
// convex in x, so the box vertices suffice; the other side is at most
// ||Sigma||, attained at x = 0 for uniform noise.
double exact_norm_bound(const StateDistributionSet& dist, const Matrix& sigma);

// P(x, y) = W(x, y) / sum_z W(x, z) for a random symmetric positive W.
TransitionMatrix random_reversible_chain(int n_states, Rng& rng);
// Symmetric doubly stochastic chain (uniform pi).
TransitionMatrix random_symmetric_chain(int n_states, Rng& rng);
Matrix random_psd(int dim, Rng& rng);

SmallInstance random_instance(Rng& rng);
std::vector<SmallInstance> make_corpus(std::uint64_t seed, std::size_t count);

// ||sum_s pi(s) G(s)||
double stationarity_residual(const SmallInstance& inst);

struct Violation {
  std::string suite;
  std::size_t instance = 0;
  std::string where;
  double lhs = 0.0;
  double rhs = 0.0;
};

struct Report {
  std::size_t checks = 0;
  std::vector<Violation> violations;
  // Largest share of a check's budget used: lhs / (bound + tolerance) for
  // inequalities, |lhs - rhs| / tolerance for equalities. Above 1 = violated.
  double worst_ratio = 0.0;

  bool ok() const noexcept { return violations.empty(); }
  void merge(const Report& other);
  // One line per violation: suite, instance, where, lhs, rhs (tab-separated).
  std::string format() const;
};

// Pi^(1/2) (P^t - 1 pi^T) Pi^(-1/2)
Matrix q_matrix(const TransitionMatrix& chain, const ChainSpectrum& spectrum,
                std::uint64_t t);

struct QNormRow {
  std::uint64_t t = 0;
  double q_norm = 0.0;
  double bound = 0.0;  // |lambda2(P)|^t
};

std::vector<QNormRow> q_norms(const TransitionMatrix& chain,
                              const ChainSpectrum& spectrum,
                              std::uint64_t t_max);

// ||Q_t|| <= |lambda2|^t + 1e-10 for t = 1..t_max.
Report check_q_norm(const SmallInstance& inst, std::uint64_t t_max,
                    std::size_t id = 0);

// E[(X_i X_i^T - Sigma) S X_j X_j^T | s_{i+k} = x0] with j = i + lag,
// 1 <= lag <= k, by exact enumeration of (s_i, s_j).
Matrix conditional_cross_covariance(const SmallInstance& inst,
                                    std::uint64_t lag, std::uint64_t k, int x0,
                                    const Matrix& s);

// (|lambda2|^lag V + 8 eta^2 M (M + lambda1)) ||S||
double covariance_decay_bound(const SmallInstance& inst, std::uint64_t lag,
                              const Matrix& s, double eta);

// Every lag in 1..k and every conditioning state; k = 0 means
// tau_mix(eta^2).
Report check_covariance_decay(const SmallInstance& inst, std::uint64_t k,
                              const Matrix& s, double eta, std::size_t id = 0);

struct WindowDeviation {
  double first_order = 0.0;   // ||B - I||
  double second_order = 0.0;  // ||B - I - sum eta_t X_t X_t^T||
};

// B = (I + eta_{m+k-1} X X^T) ... (I + eta_m X_m X_m^T)
WindowDeviation window_deviation(std::span<const Vector> samples,
                                 std::span<const double> etas);

// Random stationary windows of length k starting at step m. Requires
// eta_m k (M + lambda1) <= 1/100.
Report check_matrix_product_approx(const SmallInstance& inst, std::uint64_t m,
                                   std::uint64_t k,
                                   const StepSchedule& schedule,
                                   std::size_t n_windows, std::uint64_t seed,
                                   std::size_t id = 0);

// sup-TV of the reversed conditional equals d_mix(k) within 1e-12.
Report check_reverse_mixing(const SmallInstance& inst, std::uint64_t k,
                            std::size_t id = 0);

// tau_mix(eps) inside the eigengap sandwich, plus d_mix(l tau) <= 2^-l.
Report check_mixing_bounds(const SmallInstance& inst, std::size_t id = 0);

inline constexpr std::size_t kCorpusSize = 100;
inline constexpr std::uint64_t kDefaultSeed = 20240611;

// Suites: qnorm, covdecay, prodapprox, revmix, mixing, all.
Report run_suite(std::string_view suite, std::uint64_t seed = kDefaultSeed);
bool is_known_suite(std::string_view suite);

}  // namespace markovpca::oracle
