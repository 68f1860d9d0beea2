// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria (0 = all passed).
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "markovpca/harness.hpp"
#include "markovpca/linalg.hpp"
#include "markovpca/markov.hpp"
#include "markovpca/oracle.hpp"
#include "markovpca/rng.hpp"
#include "markovpca/statedist.hpp"
#include "markovpca/streaming.hpp"

using namespace markovpca;

namespace {

// Pinned thresholds.
constexpr double kOfflineRatioMax = 1.5;
constexpr double kDownsampledRatioMin = 2.0;
constexpr double kSlopeLo = -1.4;
constexpr double kSlopeHi = -0.6;
constexpr double kSlopeWindowLo = 1e4;
constexpr double kSlopeWindowHi = 1e5;
constexpr double kSignTestAlpha = 0.05;
constexpr double kUnitNormTol = 1e-12;
constexpr double kRank1Tol = 1e-12;
constexpr double kProductSin2Tol = 1e-8;
constexpr std::uint64_t kExpectedTauQuarter = 6;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto m = v.size();
  return m % 2 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// One-sided exact sign test: P(Bin(n, 1/2) >= wins).
double sign_test_p(std::size_t wins, std::size_t n) {
  double p = 0.0;
  for (std::size_t k = wins; k <= n; ++k) {
    p += std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) -
                  std::lgamma(n - k + 1.0) - static_cast<double>(n) * std::log(2.0));
  }
  return p;
}

ExperimentConfig desk_config() {
  ExperimentConfig cfg;  // d=50, |Omega|=10, rho=0.2, n=1e5, 20 trials, k=10
  cfg.noise = NoiseKind::Bernoulli;
  return cfg;
}

const ResultTable& desk_table() {
  static const ResultTable t = run_experiment(desk_config());
  return t;
}

Outcome three_way_ordering() {
  const auto& t = desk_table();
  const double oja = median(final_errors(t, kAlgoOja));
  const double off = median(final_errors(t, kAlgoOffline));
  const double down = median(final_errors(t, kAlgoDownsampled));
  Outcome o;
  o.pass = off <= kOfflineRatioMax * oja && down >= kDownsampledRatioMin * oja;
  o.detail = "median final sin2: offline=" + fmt(off) + " oja=" + fmt(oja) +
             " downsampled=" + fmt(down) + " (offline/oja=" + fmt(off / oja) +
             ", downsampled/oja=" + fmt(down / oja) + ")";
  return o;
}

Outcome rate_slope() {
  const auto curves = aggregate(desk_table());
  std::vector<double> xs, ys;
  for (const auto& p : curves.at(kAlgoOja)) {
    const double n = static_cast<double>(p.n);
    if (n >= kSlopeWindowLo && n <= kSlopeWindowHi) {
      xs.push_back(std::log(n));
      ys.push_back(std::log(p.mean));
    }
  }
  const double mx = mean(xs), my = mean(ys);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  const double slope = sxy / sxx;
  Outcome o;
  o.pass = xs.size() >= 3 && slope >= kSlopeLo && slope <= kSlopeHi;
  o.detail = "slope=" + fmt(slope) + " over " + std::to_string(xs.size()) +
             " checkpoints in [1e4, 1e5]";
  return o;
}

// Paired comparison of final full-Oja errors: `harder` should exceed `easier`.
Outcome paired_trend(const SweepResult& s, double harder, double easier,
                     const std::string& label) {
  const auto idx = [&](double v) {
    return static_cast<std::size_t>(
        std::find(s.values.begin(), s.values.end(), v) - s.values.begin());
  };
  const auto hard = final_errors(s.tables[idx(harder)], kAlgoOja);
  const auto easy = final_errors(s.tables[idx(easier)], kAlgoOja);
  std::size_t wins = 0;
  for (std::size_t i = 0; i < hard.size(); ++i) wins += hard[i] > easy[i];
  const double p = sign_test_p(wins, hard.size());
  Outcome o;
  o.pass = mean(hard) > mean(easy) && p < kSignTestAlpha;
  o.detail = "mean final sin2 " + label + "=" + fmt(harder) + ": " +
             fmt(mean(hard)) + " vs " + fmt(easier) + ": " + fmt(mean(easy)) +
             "; wins " + std::to_string(wins) + "/" +
             std::to_string(hard.size()) + ", sign-test p=" + fmt(p);
  return o;
}

Outcome rho_trend() {
  auto cfg = desk_config();
  cfg.rho = {0.8, 0.1};
  return paired_trend(sweep(cfg), 0.1, 0.8, "rho");
}

Outcome gap_trend() {
  auto cfg = desk_config();
  cfg.sigma_beta = {0.6, 1.0};
  cfg.n_samples = 10'000;
  return paired_trend(sweep(cfg), 0.6, 1.0, "sigma_beta");
}

Outcome oracle_suite(const char* suite) {
  const auto r = oracle::run_suite(suite);
  std::size_t own = 0;
  for (const auto& v : r.violations) own += v.suite == suite;
  Outcome o;
  o.pass = r.ok();
  o.detail = std::to_string(r.checks) + " checks over " +
             std::to_string(oracle::kCorpusSize) + " instances, " +
             std::to_string(r.violations.size()) + " violations (" +
             std::to_string(own) + " in " + suite + "), worst budget use " +
             fmt(r.worst_ratio);
  if (!r.ok()) {
    std::istringstream lines(r.format());
    std::string first;
    std::getline(lines, first);
    o.detail += "; first: " + first;
  }
  return o;
}

Outcome mixing_sandwich() {
  Outcome o = oracle_suite("mixing");
  const auto chain = TransitionMatrix::rho_chain(10, 0.2);
  const auto tau = tau_mix(chain, analyze_spectrum(chain), 0.25);
  o.pass = o.pass && tau == kExpectedTauQuarter;
  o.detail += "; tau_mix(1/4) of rho-chain(10, 0.2) = " + std::to_string(tau);
  return o;
}

Outcome mechanical() {
  // Unit norm and rank-1 vs materialised update along a desk-scale stream.
  const auto chain = TransitionMatrix::rho_chain(10, 0.2);
  const auto spec = analyze_spectrum(chain);
  const auto dist = make_paper_states(10, 50, 1.0, NoiseKind::Bernoulli, 1);
  const auto truth = total_covariance(dist, spec.stationary);
  const auto sched = StepSchedule::practical(truth.gap, spec.lambda2_abs);
  const auto path = sample_path(chain, spec, 20'000, 3);
  SampleStream stream(dist, path, 4);
  OjaEstimator est = OjaEstimator::random_start(50, 5);
  double worst_norm = 0.0, worst_rank1 = 0.0;
  while (!stream.done()) {
    const Vector& x = stream.next();
    const double eta = sched.eta(static_cast<double>(stream.position()));
    Vector ref = (Matrix::Identity(50, 50) + eta * x * x.transpose()) * est.w();
    ref.normalize();
    est.step(x, eta);
    worst_norm = std::max(worst_norm, std::abs(est.w().norm() - 1.0));
    worst_rank1 = std::max(worst_rank1, (est.w() - ref).norm());
  }

  // Product form at d <= 10, n <= 100.
  Rng rng(6);
  double worst_product = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 2 + trial % 9;
    OjaEstimator o = OjaEstimator::random_start(d, rng.next_u64());
    const Vector w0 = o.w();
    Matrix b = Matrix::Identity(d, d);
    const StepSchedule s{5.0, 5.0, 1.0, ScheduleMode::Practical};
    for (int i = 1; i <= 100; ++i) {
      Vector x(d);
      for (int j = 0; j < d; ++j) x(j) = rng.normal();
      o.step(x, s.eta(i));
      b = (Matrix::Identity(d, d) + s.eta(i) * x * x.transpose()) * b;
    }
    worst_product = std::max(worst_product, sin2(o.w(), (b * w0).normalized()));
  }

  // Byte-identical CSV for the desk configuration, also across thread counts.
  auto cfg = desk_config();
  const std::string first = to_csv(desk_table());
  const std::string again = to_csv(run_experiment(cfg));
  cfg.threads = 3;
  const std::string threaded = to_csv(run_experiment(cfg));
  const bool identical = first == again && first == threaded;

  Outcome o;
  o.pass = worst_norm <= kUnitNormTol && worst_rank1 <= kRank1Tol &&
           worst_product <= kProductSin2Tol && identical;
  o.detail = "max | ||w|| - 1 | = " + fmt(worst_norm) +
             ", rank-1 vs materialised = " + fmt(worst_rank1) +
             ", product-form sin2 = " + fmt(worst_product) +
             ", CSV byte-identical (repeat, 3 threads): " +
             (identical ? "yes" : "no");
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"three-way ordering", three_way_ordering},
      {"O(1/n) rate", rate_slope},
      {"mixing trend", rho_trend},
      {"eigengap trend", gap_trend},
      {"oracle qnorm", [] { return oracle_suite("qnorm"); }},
      {"oracle covdecay", [] { return oracle_suite("covdecay"); }},
      {"oracle revmix", [] { return oracle_suite("revmix"); }},
      {"oracle prodapprox", [] { return oracle_suite("prodapprox"); }},
      {"mixing sandwich", mixing_sandwich},
      {"mechanical invariants", mechanical},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - start)
                            .count();
    failed += !o.pass;
    std::printf("[%s] %2zu %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed;
}
