#include "markovpca/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "markovpca/error.hpp"
#include "markovpca/markov.hpp"
#include "markovpca/offline.hpp"
#include "markovpca/rng.hpp"

namespace markovpca {

namespace {

struct Setup {
  TransitionMatrix chain;
  ChainSpectrum spectrum;
  StateDistributionSet dist;
  EnsembleCovariance truth;
  ExperimentMetadata meta;
};

StepSchedule theorem_for(const ExperimentConfig& cfg, const Setup& s,
                         const AssumptionBounds& bounds, double tau,
                         double lambda2_abs) {
  TheoremInputs in;
  in.alpha = cfg.alpha.value_or(3.0);
  in.gap = s.truth.gap;
  in.delta = cfg.delta;
  in.tau_mix = tau;
  in.v_bound = bounds.v_bound;
  in.m_bound = bounds.m_bound;
  in.lambda1 = s.truth.lambda1;
  in.lambda2_abs = lambda2_abs;
  StepSchedule out = theorem_schedule(in);
  if (cfg.beta) out.beta = *cfg.beta;
  return out;
}

Setup build_setup(const ExperimentConfig& cfg, double rho, double sigma_beta) {
  TransitionMatrix chain = TransitionMatrix::rho_chain(cfg.n_states, rho);
  ChainSpectrum spectrum = analyze_spectrum(chain);
  StateDistributionSet dist = make_paper_states(
      cfg.n_states, cfg.dim, sigma_beta, cfg.noise, cfg.master_seed);
  EnsembleCovariance truth = total_covariance(dist, spectrum.stationary);

  Setup s{chain, spectrum, std::move(dist), std::move(truth), {}};
  auto& m = s.meta;
  m.rho = rho;
  m.sigma_beta = sigma_beta;
  m.bernoulli_p = s.dist.noise().kind == NoiseKind::Bernoulli ? s.dist.noise().p : 0.0;
  m.lambda1 = s.truth.lambda1;
  m.lambda2 = s.truth.lambda2;
  m.gap = s.truth.gap;
  m.chain_lambda2_abs = spectrum.lambda2_abs;
  m.tau_mix = tau_mix(chain, spectrum, 0.25);

  if (cfg.schedule == ScheduleMode::Practical) {
    m.schedule = StepSchedule::practical(s.truth.gap, spectrum.lambda2_abs,
                                         cfg.alpha.value_or(5.0));
    if (cfg.beta) m.schedule.beta = *cfg.beta;
  } else {
    const auto bounds = estimate_assumption_bounds(
        s.dist, spectrum.stationary, cfg.probe_samples,
        derive_seed(cfg.master_seed, stream::kProbe));
    m.schedule = theorem_for(cfg, s, bounds, static_cast<double>(m.tau_mix),
                             spectrum.lambda2_abs);
  }

  m.downsample_k = cfg.downsample_k;
  if (cfg.downsample_auto) {
    const double eta_n = m.schedule.eta(static_cast<double>(cfg.n_samples));
    m.downsample_k = tau_mix(chain, spectrum, std::min(eta_n * eta_n, 0.5));
  }
  if (cfg.schedule == ScheduleMode::Practical) {
    m.downsampled_schedule = m.schedule.thinned(m.downsample_k);
  } else {
    // The thinned stream is a chain with kernel P^k.
    const TransitionMatrix thinned(matrix_power(chain.probs(), m.downsample_k));
    const ChainSpectrum thin_spec = analyze_spectrum(thinned);
    const auto bounds = estimate_assumption_bounds(
        s.dist, spectrum.stationary, cfg.probe_samples,
        derive_seed(cfg.master_seed, stream::kProbe));
    m.downsampled_schedule = theorem_for(
        cfg, s, bounds, static_cast<double>(tau_mix(thinned, thin_spec, 0.25)),
        thin_spec.lambda2_abs);
  }
  return s;
}

bool wants(const ExperimentConfig& cfg, std::string_view algo) {
  return std::find(cfg.algorithms.begin(), cfg.algorithms.end(), algo) !=
         cfg.algorithms.end();
}

struct TrialResult {
  std::vector<ResultRow> rows;
  std::uint64_t checksum = 0;
};

TrialResult run_trial(const ExperimentConfig& cfg, const Setup& s,
                      std::span<const std::size_t> checkpoints,
                      std::size_t trial) {
  const std::uint64_t seed = derive_seed(cfg.master_seed, trial);
  const auto path = sample_path(s.chain, s.spectrum, cfg.n_samples,
                                derive_seed(seed, stream::kPath));
  const bool do_oja = wants(cfg, kAlgoOja);
  const bool do_down = wants(cfg, kAlgoDownsampled);
  const bool do_off = wants(cfg, kAlgoOffline);
  if (do_down && s.meta.downsample_k > cfg.n_samples) {
    fail(ErrorCode::EmptyTrace, "downsampling factor exceeds the path length");
  }

  SampleStream stream(s.dist, path, derive_seed(seed, stream::kNoise));
  const std::uint64_t init = derive_seed(seed, stream::kInit);
  OjaRunner oja(s.dist.dim(), s.meta.schedule, 1, init);
  OjaRunner down(s.dist.dim(), s.meta.downsampled_schedule,
                 s.meta.downsample_k, init);
  EmpiricalCovariance acc(s.dist.dim());

  TrialResult out;
  auto push = [&](const char* algo, std::size_t n, double err) {
    out.rows.push_back({trial, algo, n, err, seed});
  };
  std::size_t next_cp = 0;
  while (!stream.done()) {
    const Vector& x = stream.next();
    const std::size_t pos = stream.position();
    if (do_oja) oja.observe(pos, x);
    if (do_down) down.observe(pos, x);
    if (do_off) acc.add(x);
    if (next_cp < checkpoints.size() && pos == checkpoints[next_cp]) {
      if (do_oja) push(kAlgoOja, pos, sin2(oja.estimator().w(), s.truth.v1));
      if (do_down) push(kAlgoDownsampled, pos, sin2(down.estimator().w(), s.truth.v1));
      if (do_off) push(kAlgoOffline, pos, sin2(leading_eigenvector(acc).v, s.truth.v1));
      ++next_cp;
    }
  }
  out.checksum = stream.checksum();
  std::sort(out.rows.begin(), out.rows.end(), [](const auto& a, const auto& b) {
    return std::tie(a.algorithm, a.checkpoint_n) <
           std::tie(b.algorithm, b.checkpoint_n);
  });
  return out;
}

ResultTable run_single(const ExperimentConfig& cfg, double rho,
                       double sigma_beta) {
  const Setup setup = build_setup(cfg, rho, sigma_beta);
  const auto checkpoints = cfg.checkpoint_grid();
  std::vector<TrialResult> results(cfg.n_trials);

  unsigned threads = cfg.threads ? cfg.threads : std::thread::hardware_concurrency();
  threads = std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(cfg.n_trials)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < cfg.n_trials; i = next++) {
      try {
        results[i] = run_trial(cfg, setup, checkpoints, i);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);

  ResultTable table;
  table.meta = setup.meta;
  for (auto& r : results) {
    table.rows.insert(table.rows.end(), r.rows.begin(), r.rows.end());
    table.meta.stream_checksums.push_back(r.checksum);
  }
  return table;
}

}  // namespace

ResultTable run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  if (swept_field(cfg)) {
    fail(ErrorCode::Config, "list-valued field given; use sweep()");
  }
  return run_single(cfg, cfg.rho.front(), cfg.sigma_beta.front());
}

SweepResult sweep(const ExperimentConfig& cfg) {
  validate(cfg);
  const auto field = swept_field(cfg);
  if (!field) fail(ErrorCode::Config, "sweep needs one list-valued field");
  SweepResult out;
  out.field = *field;
  out.values = *field == "rho" ? cfg.rho : cfg.sigma_beta;
  for (double v : out.values) {
    const double rho = *field == "rho" ? v : cfg.rho.front();
    const double sb = *field == "sigma_beta" ? v : cfg.sigma_beta.front();
    out.tables.push_back(run_single(cfg, rho, sb));
  }
  return out;
}

std::map<std::string, std::vector<CurvePoint>> aggregate(const ResultTable& t) {
  std::map<std::string, std::map<std::size_t, std::vector<double>>> buckets;
  for (const auto& r : t.rows) buckets[r.algorithm][r.checkpoint_n].push_back(r.sin2_error);
  std::map<std::string, std::vector<CurvePoint>> out;
  for (auto& [algo, by_n] : buckets) {
    auto& curve = out[algo];
    for (auto& [n, errs] : by_n) {
      double sum = 0.0;
      for (double e : errs) sum += e;
      std::sort(errs.begin(), errs.end());
      const std::size_t m = errs.size();
      const double median =
          m % 2 ? errs[m / 2] : 0.5 * (errs[m / 2 - 1] + errs[m / 2]);
      curve.push_back({n, sum / static_cast<double>(m), median});
    }
  }
  return out;
}

std::vector<double> final_errors(const ResultTable& t,
                                 std::string_view algorithm) {
  std::map<std::size_t, std::pair<std::size_t, double>> last;  // trial -> (n, err)
  for (const auto& r : t.rows) {
    if (r.algorithm != algorithm) continue;
    auto& slot = last[r.trial_id];
    if (r.checkpoint_n >= slot.first) slot = {r.checkpoint_n, r.sin2_error};
  }
  std::vector<double> out;
  for (const auto& [trial, v] : last) out.push_back(v.second);
  return out;
}

}  // namespace markovpca
