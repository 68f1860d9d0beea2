#include "markovpca/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "markovpca/error.hpp"

namespace markovpca::oracle {

namespace {

constexpr double kQNormTol = 1e-10;
constexpr double kRevMixTol = 1e-12;
constexpr double kStationarityTol = 1e-12;
constexpr double kProductEps = 0.01;
constexpr double kRelSlack = 1e-12;

std::string where(std::initializer_list<std::pair<const char*, double>> kv) {
  std::ostringstream os;
  bool first = true;
  for (const auto& [k, v] : kv) {
    if (!first) os << ',';
    os << k << '=' << v;
    first = false;
  }
  return os.str();
}

// lhs <= allowed, where allowed already includes any tolerance.
void record_upper(Report& r, const char* suite, std::size_t id, std::string at,
                  double lhs, double rhs, double allowed) {
  ++r.checks;
  const double ratio = allowed > 0.0 ? lhs / allowed
                                     : (lhs > 0.0 ? HUGE_VAL : 0.0);
  r.worst_ratio = std::max(r.worst_ratio, ratio);
  if (!(lhs <= allowed)) {
    r.violations.push_back({suite, id, std::move(at), lhs, rhs});
  }
}

// |lhs - rhs| <= tol.
void record_equal(Report& r, const char* suite, std::size_t id, std::string at,
                  double lhs, double rhs, double tol) {
  ++r.checks;
  const double ratio = std::abs(lhs - rhs) / tol;
  r.worst_ratio = std::max(r.worst_ratio, ratio);
  if (!(ratio <= 1.0)) {
    r.violations.push_back({suite, id, std::move(at), lhs, rhs});
  }
}

int uniform_int(Rng& rng, int lo, int hi) {
  return lo + static_cast<int>(rng.next_u64() %
                               static_cast<std::uint64_t>(hi - lo + 1));
}

std::vector<int> random_permutation(int n, Rng& rng) {
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = n - 1; i > 0; --i) {
    std::swap(perm[static_cast<std::size_t>(i)],
              perm[static_cast<std::size_t>(uniform_int(rng, 0, i))]);
  }
  return perm;
}

}  // namespace

void Report::merge(const Report& other) {
  checks += other.checks;
  violations.insert(violations.end(), other.violations.begin(),
                    other.violations.end());
  worst_ratio = std::max(worst_ratio, other.worst_ratio);
}

std::string Report::format() const {
  std::ostringstream os;
  os.precision(17);
  for (const auto& v : violations) {
    os << v.suite << '\t' << v.instance << '\t' << v.where << '\t' << v.lhs
       << '\t' << v.rhs << '\n';
  }
  return os.str();
}

Matrix conditional_fourth_moment(const StateDistributionSet& dist, int state) {
  const Matrix& l = dist.factor(state);
  const Matrix a = l.transpose() * l;
  const double kappa = dist.noise().fourth_moment();
  Matrix inner = 2.0 * a;
  inner.diagonal().array() += a.trace();
  inner.diagonal() += (kappa - 3.0) * a.diagonal();
  return l * inner * l.transpose();
}

double exact_variance_bound(const StateDistributionSet& dist, const Vector& pi,
                            const Matrix& sigma) {
  Matrix m = -sigma * sigma;
  for (int s = 0; s < dist.n_states(); ++s) {
    m += pi(s) * conditional_fourth_moment(dist, s);
  }
  return symmetric_norm(0.5 * (m + m.transpose()));
}

double exact_norm_bound(const StateDistributionSet& dist, const Matrix& sigma) {
  const int d = dist.dim();
  require(d <= 16, "exact norm bound enumerates 2^d vertices; d too large");
  const auto ext = dist.noise().support_extremes();
  double best = dist.noise().kind == NoiseKind::Uniform ? symmetric_norm(sigma)
                                                        : 0.0;
  Vector z(d);
  for (int s = 0; s < dist.n_states(); ++s) {
    const Matrix& l = dist.factor(s);
    for (std::uint32_t mask = 0; mask < (1U << d); ++mask) {
      for (int i = 0; i < d; ++i) z(i) = ext[(mask >> i) & 1U];
      const Vector x = l * z;
      best = std::max(best, symmetric_norm(x * x.transpose() - sigma));
    }
  }
  return best;
}

SmallInstance make_instance(TransitionMatrix chain, StateDistributionSet dist) {
  require(chain.n_states() == dist.n_states(),
          "chain and distributions disagree on the state count");
  ChainSpectrum spectrum = analyze_spectrum(chain);
  const Matrix sigma = mixture_covariance(dist, spectrum.stationary);
  std::vector<Matrix> g;
  for (int s = 0; s < dist.n_states(); ++s) {
    g.push_back(dist.covariance(s) - sigma);
  }
  const double lambda1 = symmetric_norm(sigma);
  const double v = exact_variance_bound(dist, spectrum.stationary, sigma);
  const double m = exact_norm_bound(dist, sigma);
  return SmallInstance{std::move(chain), std::move(spectrum), std::move(dist),
                       sigma, lambda1, std::move(g), v, m};
}

TransitionMatrix random_reversible_chain(int n_states, Rng& rng) {
  const double spread = rng.uniform(0.0, 3.0);
  const double laziness = rng.uniform(0.0, 4.0);
  Matrix w(n_states, n_states);
  for (int x = 0; x < n_states; ++x) {
    for (int y = x; y < n_states; ++y) {
      double v = std::exp(spread * rng.normal());
      if (x == y) v *= laziness;
      w(x, y) = w(y, x) = v;
    }
  }
  Matrix p = w.array().colwise() / w.rowwise().sum().array();
  // Exact renormalisation so rows sum to 1 within 1e-12.
  for (int x = 0; x < n_states; ++x) p.row(x) /= p.row(x).sum();
  return TransitionMatrix(std::move(p));
}

TransitionMatrix random_symmetric_chain(int n_states, Rng& rng) {
  Matrix p = Matrix::Identity(n_states, n_states) * rng.uniform(0.05, 0.5);
  double total = p(0, 0);
  const int terms = uniform_int(rng, 2, 4);
  for (int k = 0; k < terms; ++k) {
    const auto perm = random_permutation(n_states, rng);
    const double w = rng.uniform(0.1, 1.0);
    for (int x = 0; x < n_states; ++x) {
      const int y = perm[static_cast<std::size_t>(x)];
      p(x, y) += 0.5 * w;
      p(y, x) += 0.5 * w;
    }
    total += w;
  }
  p /= total;
  return TransitionMatrix(std::move(p));
}

Matrix random_psd(int dim, Rng& rng) {
  Matrix r(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) r(i, j) = rng.normal();
  }
  return r * r.transpose() / static_cast<double>(dim);
}

SmallInstance random_instance(Rng& rng) {
  for (;;) {
    const int n = uniform_int(rng, 2, 8);
    const int d = uniform_int(rng, 2, 6);
    const bool symmetric = rng.uniform() < 0.25;
    TransitionMatrix chain = symmetric ? random_symmetric_chain(n, rng)
                                       : random_reversible_chain(n, rng);
    std::vector<Matrix> covs;
    for (int s = 0; s < n; ++s) {
      covs.push_back(std::exp(rng.normal()) * random_psd(d, rng));
    }
    const BaseNoise noise = rng.uniform() < 0.5
                                ? BaseNoise::uniform()
                                : BaseNoise::bernoulli(rng.uniform(0.05, 0.5));
    try {
      return make_instance(std::move(chain),
                           StateDistributionSet(std::move(covs), noise));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Ergodicity) throw;
    }
  }
}

std::vector<SmallInstance> make_corpus(std::uint64_t seed, std::size_t count) {
  Rng rng(seed);
  std::vector<SmallInstance> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(random_instance(rng));
  return out;
}

double stationarity_residual(const SmallInstance& inst) {
  Matrix acc = Matrix::Zero(inst.dist.dim(), inst.dist.dim());
  for (int s = 0; s < inst.dist.n_states(); ++s) {
    acc += inst.spectrum.stationary(s) * inst.g[static_cast<std::size_t>(s)];
  }
  return spectral_norm(acc);
}

Matrix q_matrix(const TransitionMatrix& chain, const ChainSpectrum& spectrum,
                std::uint64_t t) {
  const Vector& pi = spectrum.stationary;
  const auto n = pi.size();
  const Matrix centered =
      matrix_power(chain.probs(), t) - Vector::Ones(n) * pi.transpose();
  const Vector sq = pi.array().sqrt();
  return sq.asDiagonal() * centered * sq.cwiseInverse().asDiagonal();
}

std::vector<QNormRow> q_norms(const TransitionMatrix& chain,
                              const ChainSpectrum& spectrum,
                              std::uint64_t t_max) {
  std::vector<QNormRow> rows;
  for (std::uint64_t t = 1; t <= t_max; ++t) {
    rows.push_back({t, spectral_norm(q_matrix(chain, spectrum, t)),
                    std::pow(spectrum.lambda2_abs, static_cast<double>(t))});
  }
  return rows;
}

Report check_q_norm(const SmallInstance& inst, std::uint64_t t_max,
                    std::size_t id) {
  if (!inst.spectrum.reversible) {
    fail(ErrorCode::Reversibility, "qnorm check needs a reversible chain");
  }
  Report r;
  for (const auto& row : q_norms(inst.chain, inst.spectrum, t_max)) {
    record_upper(r, "qnorm", id, where({{"t", static_cast<double>(row.t)}}),
           row.q_norm, row.bound, row.bound + kQNormTol);
  }
  return r;
}

Matrix conditional_cross_covariance(const SmallInstance& inst,
                                    std::uint64_t lag, std::uint64_t k, int x0,
                                    const Matrix& s) {
  require(lag >= 1 && lag <= k, "need 1 <= j - i <= k");
  const int n = inst.chain.n_states();
  require(x0 >= 0 && x0 < n, "conditioning state out of range");
  const Vector& pi = inst.spectrum.stationary;
  const Matrix p_lag = matrix_power(inst.chain.probs(), lag);
  const Matrix p_rest = matrix_power(inst.chain.probs(), k - lag);
  const int d = inst.dist.dim();
  Matrix out = Matrix::Zero(d, d);
  for (int si = 0; si < n; ++si) {
    for (int sj = 0; sj < n; ++sj) {
      // P(s_i, s_j | s_{i+k} = x0) = pi(s_i) P^lag(s_i, s_j) P^(k-lag)(s_j, x0) / pi(x0)
      const double w = pi(si) * p_lag(si, sj) * p_rest(sj, x0) / pi(x0);
      if (w == 0.0) continue;
      out += w * inst.g[static_cast<std::size_t>(si)] * s *
             inst.dist.covariance(sj);
    }
  }
  return out;
}

double covariance_decay_bound(const SmallInstance& inst, std::uint64_t lag,
                              const Matrix& s, double eta) {
  const double m = inst.m_exact;
  return (std::pow(inst.spectrum.lambda2_abs, static_cast<double>(lag)) *
              inst.v_exact +
          8.0 * eta * eta * m * (m + inst.lambda1)) *
         spectral_norm(s);
}

Report check_covariance_decay(const SmallInstance& inst, std::uint64_t k,
                              const Matrix& s, double eta, std::size_t id) {
  require(eta > 0.0 && eta < 1.0, "eta must lie in (0, 1)");
  if (k == 0) k = tau_mix(inst.chain, inst.spectrum, eta * eta);
  require(d_mix(inst.chain, inst.spectrum, k) <= eta * eta,
          "covariance decay check needs d_mix(k) <= eta^2");
  Report r;
  for (std::uint64_t lag = 1; lag <= k; ++lag) {
    const double bound = covariance_decay_bound(inst, lag, s, eta);
    for (int x0 = 0; x0 < inst.chain.n_states(); ++x0) {
      const double lhs =
          spectral_norm(conditional_cross_covariance(inst, lag, k, x0, s));
      record_upper(r, "covdecay", id,
             where({{"lag", static_cast<double>(lag)},
                    {"k", static_cast<double>(k)},
                    {"x0", static_cast<double>(x0)},
                    {"eta", eta}}),
             lhs, bound, bound * (1.0 + kRelSlack));
    }
  }
  return r;
}

WindowDeviation window_deviation(std::span<const Vector> samples,
                                 std::span<const double> etas) {
  require(samples.size() == etas.size() && !samples.empty(),
          "window needs one step size per sample");
  const auto d = samples.front().size();
  Matrix product = Matrix::Identity(d, d);
  Matrix linear = Matrix::Zero(d, d);
  for (std::size_t t = 0; t < samples.size(); ++t) {
    const Matrix a = etas[t] * samples[t] * samples[t].transpose();
    product = (Matrix::Identity(d, d) + a) * product;
    linear += a;
  }
  const Matrix dev = product - Matrix::Identity(d, d);
  return {spectral_norm(dev), spectral_norm(dev - linear)};
}

Report check_matrix_product_approx(const SmallInstance& inst, std::uint64_t m,
                                   std::uint64_t k,
                                   const StepSchedule& schedule,
                                   std::size_t n_windows, std::uint64_t seed,
                                   std::size_t id) {
  require(m >= 1 && k >= 1, "window start and length must be positive");
  const double scale = inst.m_exact + inst.lambda1;
  const double eta_m = schedule.eta(static_cast<double>(m));
  require(eta_m * static_cast<double>(k) * scale <= kProductEps,
          "window violates eta_m k (M + lambda1) <= 1/100");
  std::vector<double> etas(k);
  for (std::uint64_t t = 0; t < k; ++t) {
    etas[t] = schedule.eta(static_cast<double>(m + t));
  }
  const double kd = static_cast<double>(k);
  const double bound1 = (1.0 + kProductEps) * kd * eta_m * scale;
  const double bound2 = kd * kd * eta_m * eta_m * scale * scale;

  Report r;
  Rng rng(seed);
  for (std::size_t w = 0; w < n_windows; ++w) {
    const auto path = sample_path(inst.chain, inst.spectrum, k, rng.next_u64());
    SampleStream stream(inst.dist, path, rng.next_u64());
    std::vector<Vector> xs;
    while (!stream.done()) xs.push_back(stream.next());
    const auto dev = window_deviation(xs, etas);
    const auto at = where({{"window", static_cast<double>(w)},
                           {"m", static_cast<double>(m)},
                           {"k", kd}});
    record_upper(r, "prodapprox", id, at + ",bound=first", dev.first_order,
                 bound1, bound1 * (1.0 + kRelSlack));
    record_upper(r, "prodapprox", id, at + ",bound=second", dev.second_order,
                 bound2, bound2 * (1.0 + kRelSlack));
  }
  return r;
}

Report check_reverse_mixing(const SmallInstance& inst, std::uint64_t k,
                            std::size_t id) {
  const Matrix rev = reversed_conditional(inst.chain, inst.spectrum, k);
  const double lhs = sup_tv_distance(rev, inst.spectrum.stationary);
  const double rhs = d_mix(inst.chain, inst.spectrum, k);
  Report r;
  record_equal(r, "revmix", id, where({{"k", static_cast<double>(k)}}), lhs,
               rhs, kRevMixTol);
  return r;
}

Report check_mixing_bounds(const SmallInstance& inst, std::size_t id) {
  Report r;
  const double lam = inst.spectrum.lambda2_abs;
  const double gap = 1.0 - lam;
  for (double eps : {0.25, 1.0 / 16.0, 1e-4}) {
    const double tau =
        static_cast<double>(tau_mix(inst.chain, inst.spectrum, eps));
    const double lower = lam / gap * std::log(1.0 / (2.0 * eps));
    const double upper =
        std::log(1.0 / (eps * inst.spectrum.pi_min)) / gap;
    record_upper(r, "mixing", id, where({{"eps", eps}, {"side", -1}}), lower,
                 tau, tau + 1e-9);
    record_upper(r, "mixing", id, where({{"eps", eps}, {"side", 1}}), tau,
                 upper, upper + 1e-9);
  }
  const auto tq = tau_mix(inst.chain, inst.spectrum, 0.25);
  double prev = 1.0;
  for (int l = 1; l <= 5; ++l) {
    const double dm = d_mix(inst.chain, inst.spectrum,
                            static_cast<std::uint64_t>(l) * tq);
    const double bound = std::ldexp(1.0, -l);
    record_upper(r, "mixing", id,
                 where({{"geometric_l", static_cast<double>(l)}}), dm, bound,
                 std::min(bound, prev) + 1e-15);
    prev = dm;
  }
  return r;
}

bool is_known_suite(std::string_view suite) {
  return suite == "qnorm" || suite == "covdecay" || suite == "prodapprox" ||
         suite == "revmix" || suite == "mixing" || suite == "all";
}

Report run_suite(std::string_view suite, std::uint64_t seed) {
  require(is_known_suite(suite), "unknown suite '" + std::string(suite) + "'");
  const bool all = suite == "all";
  const auto corpus = make_corpus(seed, kCorpusSize);
  Rng rng(derive_seed(seed, 0x5eed));
  Report total;
  for (std::size_t id = 0; id < corpus.size(); ++id) {
    const auto& inst = corpus[id];
    // Per-instance draws are made unconditionally so every suite sees the
    // same S matrices and windows regardless of which suites run.
    const Matrix s_rand = random_psd(inst.dist.dim(), rng);
    const std::uint64_t window_seed = rng.next_u64();

    {
      Report r;
      const double res = stationarity_residual(inst);
      record_upper(r, "stationarity", id, "", res, kStationarityTol,
                   kStationarityTol);
      total.merge(r);
    }
    if (all || suite == "qnorm") {
      total.merge(check_q_norm(inst, 20, id));
      Report eq;
      const double q1 = spectral_norm(q_matrix(inst.chain, inst.spectrum, 1));
      record_equal(eq, "qnorm", id, "t=1,equality", q1,
                   inst.spectrum.lambda2_abs, kQNormTol);
      total.merge(eq);
    }
    if (all || suite == "covdecay") {
      const Matrix eye = Matrix::Identity(inst.dist.dim(), inst.dist.dim());
      for (double eta : {0.1, 0.03}) {
        total.merge(check_covariance_decay(inst, 0, eye, eta, id));
        total.merge(check_covariance_decay(inst, 0, s_rand, eta, id));
      }
    }
    if (all || suite == "prodapprox") {
      Rng wrng(window_seed);
      const double scale = inst.m_exact + inst.lambda1;
      for (int w = 0; w < 10; ++w) {
        const auto k = static_cast<std::uint64_t>(uniform_int(wrng, 1, 16));
        const auto m = static_cast<std::uint64_t>(uniform_int(wrng, 1, 1000));
        const double target =
            kProductEps * wrng.uniform(0.1, 1.0) / (static_cast<double>(k) * scale);
        StepSchedule sched;
        sched.alpha = 3.0;
        sched.gap = 1.0;
        sched.beta = sched.alpha / (sched.gap * target) - static_cast<double>(m);
        total.merge(check_matrix_product_approx(inst, m, k, sched, 1,
                                                wrng.next_u64(), id));
      }
    }
    if (all || suite == "revmix") {
      for (std::uint64_t k = 0; k <= 10; ++k) {
        total.merge(check_reverse_mixing(inst, k, id));
      }
    }
    if (all || suite == "mixing") {
      total.merge(check_mixing_bounds(inst, id));
    }
  }
  return total;
}

}  // namespace markovpca::oracle
