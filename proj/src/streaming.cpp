#include "markovpca/streaming.hpp"

#include <algorithm>
#include <cmath>

#include "markovpca/error.hpp"
#include "markovpca/rng.hpp"

namespace markovpca {

const char* to_string(ScheduleMode mode) noexcept {
  switch (mode) {
    case ScheduleMode::Practical:
      return "practical";
    case ScheduleMode::TheoremFaithful:
      return "theorem";
  }
  return "?";
}

StepSchedule StepSchedule::practical(double gap, double lambda2_abs,
                                     double alpha) {
  if (!(gap > 0.0)) fail(ErrorCode::DegenerateGap, "eigengap must be positive");
  require(lambda2_abs >= 0.0 && lambda2_abs < 1.0, "|lambda2(P)| must lie in [0, 1)");
  require(alpha > 0.0, "alpha must be positive");
  return StepSchedule{alpha, 5.0 / (1.0 - lambda2_abs), gap,
                      ScheduleMode::Practical};
}

StepSchedule StepSchedule::thinned(std::uint64_t k) const {
  require(k >= 1, "thinning factor must be positive");
  StepSchedule out = *this;
  out.beta = beta / static_cast<double>(k);
  return out;
}

double theorem_beta(double alpha, double gap, double delta, double tau_mix,
                    double eta0, double v_bound, double m_bound,
                    double lambda1, double lambda2_abs) {
  if (!(gap > 0.0)) fail(ErrorCode::DegenerateGap, "eigengap must be positive");
  require(alpha > 2.0, "theorem schedule needs alpha > 2");
  require(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
  require(eta0 > 0.0, "eta0 must be positive");
  require(lambda2_abs >= 0.0 && lambda2_abs < 1.0, "|lambda2(P)| must lie in [0, 1)");

  const double mixing_term =
      tau_mix * std::log(1.0 / eta0) * (m_bound + lambda1) * (m_bound + lambda1);
  const double variance_term =
      (v_bound / (1.0 - lambda2_abs) + lambda1 * lambda1) / 100.0;
  return 1000.0 * alpha * alpha * std::max(mixing_term, variance_term) /
         (gap * gap * std::log1p(delta / 200.0));
}

StepSchedule theorem_schedule(const TheoremInputs& in) {
  const double e_inv = std::exp(-1.0);
  double beta = in.alpha / (in.gap * e_inv);
  for (int it = 0; it < 200; ++it) {
    const double eta0 = std::min(in.alpha / (in.gap * beta), e_inv);
    const double next =
        theorem_beta(in.alpha, in.gap, in.delta, in.tau_mix, eta0, in.v_bound,
                     in.m_bound, in.lambda1, in.lambda2_abs);
    const bool settled = std::abs(next - beta) <= 1e-13 * next;
    beta = next;
    if (settled) break;
  }
  StepSchedule out{in.alpha, beta, in.gap, ScheduleMode::TheoremFaithful};
  if (out.eta0() > e_inv) {
    fail(ErrorCode::InvalidArgument, "theorem schedule violates eta0 <= 1/e");
  }
  return out;
}

OjaEstimator::OjaEstimator(Vector w0) : w_(std::move(w0)) {
  const double n = w_.norm();
  require(w_.size() >= 1 && n > 0.0 && std::isfinite(n),
          "initial vector must be non-zero");
  w_ /= n;
}

OjaEstimator OjaEstimator::random_start(int dim, std::uint64_t seed) {
  Rng rng(seed);
  Vector g(dim);
  do {
    for (int i = 0; i < dim; ++i) g(i) = rng.normal();
  } while (g.norm() == 0.0);
  return OjaEstimator(std::move(g));
}

void OjaEstimator::step(const Vector& x, double eta) {
  require(eta >= 0.0, "step size must be non-negative");
  const double proj = x.dot(w_);
  w_ += (eta * proj) * x;
  const double n = w_.norm();
  if (!(n > 1e-300) || !std::isfinite(n)) {
    fail(ErrorCode::NumericalCollapse, "Oja iterate collapsed");
  }
  w_ /= n;
  ++t_;
}

OjaRunner::OjaRunner(int dim, StepSchedule schedule, std::uint64_t skip,
                     std::uint64_t init_seed)
    : est_(OjaEstimator::random_start(dim, init_seed)),
      schedule_(schedule),
      skip_(skip) {
  require(skip >= 1, "skip factor must be positive");
}

void OjaRunner::observe(std::size_t position, const Vector& x) {
  if (position % skip_ != 0) return;
  est_.step(x, schedule_.eta(static_cast<double>(est_.steps() + 1)));
}

void validate_checkpoints(std::span<const std::size_t> checkpoints,
                          std::size_t n) {
  require(!checkpoints.empty(), "at least one checkpoint is required");
  std::size_t prev = 0;
  for (std::size_t c : checkpoints) {
    require(c > prev && c <= n,
            "checkpoints must be strictly increasing within [1, n]");
    prev = c;
  }
}

std::vector<std::size_t> geometric_checkpoints(std::size_t n_max,
                                               std::size_t start,
                                               double ratio) {
  require(n_max >= 1, "n_max must be positive");
  require(ratio > 1.0, "ratio must exceed 1");
  std::vector<std::size_t> out;
  double v = static_cast<double>(std::max<std::size_t>(start, 1));
  while (v < static_cast<double>(n_max)) {
    const auto c = static_cast<std::size_t>(std::llround(v));
    if (out.empty() || c > out.back()) out.push_back(c);
    v *= ratio;
  }
  if (out.empty() || out.back() != n_max) out.push_back(n_max);
  return out;
}

namespace {

ErrorTrace drive(const StateDistributionSet& dist, std::span<const int> path,
                 const StepSchedule& schedule, std::uint64_t k,
                 std::span<const std::size_t> checkpoints,
                 const EnsembleCovariance& truth, std::uint64_t seed,
                 const char* algorithm) {
  validate_checkpoints(checkpoints, path.size());
  require(truth.v1.size() == dist.dim(), "truth dimension mismatch");

  SampleStream stream(dist, path, derive_seed(seed, stream::kNoise));
  OjaRunner runner(dist.dim(), schedule, k, derive_seed(seed, stream::kInit));

  ErrorTrace trace;
  trace.algorithm = algorithm;
  trace.seed = seed;
  trace.checkpoints.assign(checkpoints.begin(), checkpoints.end());
  trace.errors.reserve(checkpoints.size());
  std::size_t next_cp = 0;
  while (!stream.done() && next_cp < checkpoints.size()) {
    const Vector& x = stream.next();
    runner.observe(stream.position(), x);
    if (stream.position() == checkpoints[next_cp]) {
      trace.errors.push_back(sin2(runner.estimator().w(), truth.v1));
      ++next_cp;
    }
  }
  while (!stream.done()) stream.next();
  trace.updates = runner.updates();
  trace.stream_checksum = stream.checksum();
  return trace;
}

}  // namespace

ErrorTrace run_oja(const StateDistributionSet& dist, std::span<const int> path,
                   const StepSchedule& schedule,
                   std::span<const std::size_t> checkpoints,
                   const EnsembleCovariance& truth, std::uint64_t seed) {
  return drive(dist, path, schedule, 1, checkpoints, truth, seed, kAlgoOja);
}

ErrorTrace run_downsampled_oja(const StateDistributionSet& dist,
                               std::span<const int> path,
                               const StepSchedule& schedule, std::uint64_t k,
                               std::span<const std::size_t> checkpoints,
                               const EnsembleCovariance& truth,
                               std::uint64_t seed) {
  require(k >= 1, "downsampling factor must be positive");
  if (k > path.size()) {
    fail(ErrorCode::EmptyTrace, "downsampling factor exceeds the path length");
  }
  return drive(dist, path, schedule, k, checkpoints, truth, seed,
               kAlgoDownsampled);
}

}  // namespace markovpca
