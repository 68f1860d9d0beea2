#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "markovpca/linalg.hpp"
#include "markovpca/statedist.hpp"

namespace markovpca {

enum class ScheduleMode { Practical, TheoremFaithful };

const char* to_string(ScheduleMode mode) noexcept;

// eta_i = alpha / (gap * (beta + i))
struct StepSchedule {
  double alpha = 5.0;
  double beta = 1.0;
  double gap = 1.0;
  ScheduleMode mode = ScheduleMode::Practical;

  double eta(double i) const { return alpha / (gap * (beta + i)); }
  double eta0() const { return eta(0.0); }
  // Practical schedules may start above 1; harness metadata reports it.
  bool eta0_above_one() const { return eta0() > 1.0; }

  // alpha = 5, beta = 5 / (1 - |lambda2(P)|) unless overridden.
  static StepSchedule practical(double gap, double lambda2_abs,
                                double alpha = 5.0);
  // Same schedule on a stream thinned by k: beta / k.
  StepSchedule thinned(std::uint64_t k) const;
};

struct TheoremInputs {
  double alpha = 3.0;
  double gap = 1.0;
  double delta = 0.1;
  double tau_mix = 1.0;  // tau_mix(1/4)
  double v_bound = 1.0;
  double m_bound = 1.0;
  double lambda1 = 1.0;
  double lambda2_abs = 0.0;
};

// beta = 1000 a^2 max{ tau ln(1/eta0) (M + l1)^2, (V/(1 - |l2(P)|) + l1^2) / 100 }
//        / (gap^2 ln(1 + delta/200))
double theorem_beta(double alpha, double gap, double delta, double tau_mix,
                    double eta0, double v_bound, double m_bound,
                    double lambda1, double lambda2_abs);

// Solves beta = theorem_beta(..., eta0 = alpha / (gap beta), ...) by
// fixed-point iteration and checks eta0 <= 1/e.
StepSchedule theorem_schedule(const TheoremInputs& in);

class OjaEstimator {
 public:
  explicit OjaEstimator(Vector w0);
  // w0 uniform on the unit sphere.
  static OjaEstimator random_start(int dim, std::uint64_t seed);

  // w <- (w + eta x (x^T w)) / ||.||
  void step(const Vector& x, double eta);

  const Vector& w() const noexcept { return w_; }
  std::uint64_t steps() const noexcept { return t_; }

 private:
  Vector w_;
  std::uint64_t t_ = 0;
};

// Drives one estimator over a stream, updating on positions k, 2k, 3k, ...
// with eta indexed by the number of updates so far.
class OjaRunner {
 public:
  OjaRunner(int dim, StepSchedule schedule, std::uint64_t skip,
            std::uint64_t init_seed);

  // position is the 1-based index of x in the full stream.
  void observe(std::size_t position, const Vector& x);

  const OjaEstimator& estimator() const noexcept { return est_; }
  std::uint64_t updates() const noexcept { return est_.steps(); }

 private:
  OjaEstimator est_;
  StepSchedule schedule_;
  std::uint64_t skip_;
};

struct ErrorTrace {
  std::string algorithm;
  std::uint64_t seed = 0;
  std::vector<std::size_t> checkpoints;
  std::vector<double> errors;
  std::uint64_t updates = 0;
  std::uint64_t stream_checksum = 0;
};

inline constexpr const char* kAlgoOja = "oja";
inline constexpr const char* kAlgoDownsampled = "oja_downsampled";
inline constexpr const char* kAlgoOffline = "offline";

// Throws InvalidArgument unless strictly increasing within [1, n].
void validate_checkpoints(std::span<const std::size_t> checkpoints,
                          std::size_t n);

// Geometric grid from `start` to n_max with the given ratio, plus n_max.
std::vector<std::size_t> geometric_checkpoints(std::size_t n_max,
                                               std::size_t start = 100,
                                               double ratio = 1.25);

// Noise is drawn from derive_seed(seed, stream::kNoise) and w0 from
// derive_seed(seed, stream::kInit), so runs sharing a seed see the same data.
ErrorTrace run_oja(const StateDistributionSet& dist, std::span<const int> path,
                   const StepSchedule& schedule,
                   std::span<const std::size_t> checkpoints,
                   const EnsembleCovariance& truth, std::uint64_t seed);

// Checkpoints refer to positions in the full stream. Throws EmptyTrace when
// k exceeds the path length.
ErrorTrace run_downsampled_oja(const StateDistributionSet& dist,
                               std::span<const int> path,
                               const StepSchedule& schedule, std::uint64_t k,
                               std::span<const std::size_t> checkpoints,
                               const EnsembleCovariance& truth,
                               std::uint64_t seed);

}  // namespace markovpca
