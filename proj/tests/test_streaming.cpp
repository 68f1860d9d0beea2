#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "markovpca/error.hpp"
#include "markovpca/linalg.hpp"
#include "markovpca/markov.hpp"
#include "markovpca/rng.hpp"
#include "markovpca/statedist.hpp"
#include "markovpca/streaming.hpp"

using namespace markovpca;

namespace {

Vector random_vector(int d, Rng& rng) {
  Vector v(d);
  for (int i = 0; i < d; ++i) v(i) = rng.normal();
  return v;
}

struct Fixture {
  TransitionMatrix chain = TransitionMatrix::rho_chain(5, 0.3);
  ChainSpectrum spec = analyze_spectrum(chain);
  StateDistributionSet dist =
      make_paper_states(5, 8, 1.0, NoiseKind::Uniform, 17);
  EnsembleCovariance truth = total_covariance(dist, spec.stationary);
};

}  // namespace

TEST_CASE("single Oja step, hand computed") {
  Vector w(2), x(2);
  w << 1, 0;
  x << 1, 1;
  OjaEstimator est(w);
  est.step(x, 1.0);
  // w + x (x.w) = (2, 1), normalised.
  CHECK(est.w()(0) == doctest::Approx(2.0 / std::sqrt(5.0)).epsilon(1e-15));
  CHECK(est.w()(1) == doctest::Approx(1.0 / std::sqrt(5.0)).epsilon(1e-15));
  CHECK(est.steps() == 1);
}

TEST_CASE("iterate stays unit norm and matches the materialised update") {
  Rng rng(123);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 2 + trial % 9;
    OjaEstimator est = OjaEstimator::random_start(d, rng.next_u64());
    CHECK(std::abs(est.w().norm() - 1.0) <= 1e-12);
    for (int t = 0; t < 200; ++t) {
      const Vector x = random_vector(d, rng);
      const double eta = rng.uniform(0.0, 2.0);
      const Matrix b = Matrix::Identity(d, d) + eta * x * x.transpose();
      Vector expect = b * est.w();
      expect.normalize();
      est.step(x, eta);
      REQUIRE(std::abs(est.w().norm() - 1.0) <= 1e-12);
      REQUIRE((est.w() - expect).norm() <= 1e-12);
    }
  }
}

TEST_CASE("Oja iterate equals the normalised product B_n ... B_1 w0") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 2 + trial % 9;  // d <= 10
    const int n = 100;
    const StepSchedule sched{3.0, 10.0, 1.0 + trial, ScheduleMode::Practical};
    OjaEstimator est = OjaEstimator::random_start(d, rng.next_u64());
    const Vector w0 = est.w();
    Matrix product = Matrix::Identity(d, d);
    for (int i = 1; i <= n; ++i) {
      const Vector x = random_vector(d, rng);
      const double eta = sched.eta(i);
      est.step(x, eta);
      product = (Matrix::Identity(d, d) + eta * x * x.transpose()) * product;
    }
    CHECK(sin2(est.w(), (product * w0).normalized()) <= 1e-8);
  }
}

TEST_CASE("collapse is reported") {
  Vector w(2), x(2);
  w << 1, 1;
  x << 1e200, 1e200;
  OjaEstimator est(w);
  try {
    est.step(x, 1e200);
    FAIL("overflow not detected");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NumericalCollapse);
  }
  CHECK_THROWS_AS(OjaEstimator(Vector::Zero(3)), Error);
  OjaEstimator ok(w);
  CHECK_THROWS_AS(ok.step(x, -1.0), Error);
}

TEST_CASE("practical schedule") {
  const auto s = StepSchedule::practical(2.0, 0.75);
  CHECK(s.alpha == 5.0);
  CHECK(s.beta == doctest::Approx(20.0));
  CHECK(s.eta(10) == doctest::Approx(5.0 / (2.0 * 30.0)));
  CHECK(s.eta0() == doctest::Approx(0.125));
  CHECK_FALSE(s.eta0_above_one());
  const auto t = s.thinned(10);
  CHECK(t.beta == doctest::Approx(2.0));
  CHECK(t.alpha == s.alpha);
  CHECK(t.gap == s.gap);
  CHECK(StepSchedule::practical(0.01, 0.0).eta0_above_one());
}

TEST_CASE("theorem beta, written out independently") {
  // alpha=3, gap=1, delta=0.5, tau=6, eta0=1/e, V=4, M=3, l1=2, |l2|=0.5:
  // max{6 * 1 * 25, (8 + 4)/100} = 150, so beta = 1.35e6 / ln(1.0025).
  const double beta =
      theorem_beta(3.0, 1.0, 0.5, 6.0, std::exp(-1.0), 4.0, 3.0, 2.0, 0.5);
  CHECK(beta == doctest::Approx(540674719.1010069).epsilon(1e-12));

  // Variance-dominated branch: tau tiny, V large.
  const double eta0 = 1e-3;
  const double b2 = theorem_beta(4.0, 2.0, 0.1, 1.0, eta0, 1e6, 1.0, 1.0, 0.9);
  const double expect = 1000.0 * 16.0 *
                        std::max(std::log(1.0 / eta0) * 4.0,
                                 (1e6 / 0.1 + 1.0) / 100.0) /
                        (4.0 * std::log(1.0 + 0.1 / 200.0));
  CHECK(b2 == doctest::Approx(expect).epsilon(1e-12));

  CHECK_THROWS_AS(theorem_beta(2.0, 1, 0.5, 6, 0.1, 4, 3, 2, 0.5), Error);
  CHECK_THROWS_AS(theorem_beta(3.0, 1, 1.0, 6, 0.1, 4, 3, 2, 0.5), Error);
  try {
    theorem_beta(3.0, 0.0, 0.5, 6, 0.1, 4, 3, 2, 0.5);
    FAIL("zero gap accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateGap);
  }
}

TEST_CASE("theorem schedule is a fixed point with eta0 <= 1/e") {
  TheoremInputs in;
  in.alpha = 3.0;
  in.gap = 18.79;
  in.delta = 0.1;
  in.tau_mix = 6;
  in.v_bound = 5000;
  in.m_bound = 400;
  in.lambda1 = 25;
  in.lambda2_abs = 7.0 / 9.0;
  const auto s = theorem_schedule(in);
  CHECK(s.mode == ScheduleMode::TheoremFaithful);
  CHECK(s.eta0() <= std::exp(-1.0));
  const double again =
      theorem_beta(in.alpha, in.gap, in.delta, in.tau_mix, s.eta0(),
                   in.v_bound, in.m_bound, in.lambda1, in.lambda2_abs);
  CHECK(again == doctest::Approx(s.beta).epsilon(1e-12));
}

TEST_CASE("checkpoint grids") {
  const auto g = geometric_checkpoints(100'000);
  CHECK(g.front() == 100);
  CHECK(g.back() == 100'000);
  for (std::size_t i = 1; i < g.size(); ++i) {
    CHECK(g[i] > g[i - 1]);
    if (i + 1 < g.size()) {
      CHECK(static_cast<double>(g[i]) / g[i - 1] ==
            doctest::Approx(1.25).epsilon(0.02));
    }
  }
  CHECK(geometric_checkpoints(50) == std::vector<std::size_t>{50});
  const std::vector<std::size_t> good{1, 5, 10};
  CHECK_NOTHROW(validate_checkpoints(good, 10));
  const std::vector<std::size_t> late{1, 11};
  CHECK_THROWS_AS(validate_checkpoints(late, 10), Error);
  const std::vector<std::size_t> unsorted{5, 3};
  CHECK_THROWS_AS(validate_checkpoints(unsorted, 10), Error);
  const std::vector<std::size_t> zero{0, 3};
  CHECK_THROWS_AS(validate_checkpoints(zero, 10), Error);
  const std::vector<std::size_t> none;
  CHECK_THROWS_AS(validate_checkpoints(none, 10), Error);
}

TEST_CASE("downsampled runner equals Oja on the thinned stream") {
  Fixture f;
  const std::size_t n = 2000;
  const std::uint64_t k = 7;
  const auto path = sample_path(f.chain, f.spec, n, 5);
  const auto sched = StepSchedule::practical(f.truth.gap, f.spec.lambda2_abs);
  const auto thin = sched.thinned(k);

  OjaRunner runner(f.dist.dim(), thin, k, 99);
  OjaEstimator manual = OjaEstimator::random_start(f.dist.dim(), 99);
  SampleStream stream(f.dist, path, 1234);
  std::uint64_t used = 0;
  while (!stream.done()) {
    const Vector& x = stream.next();
    runner.observe(stream.position(), x);
    if (stream.position() % k == 0) manual.step(x, thin.eta(++used));
  }
  CHECK(runner.updates() == n / k);
  CHECK(runner.estimator().w() == manual.w());
}

TEST_CASE("run_oja and run_downsampled_oja share the sample stream") {
  Fixture f;
  const std::size_t n = 5000;
  const auto path = sample_path(f.chain, f.spec, n, 8);
  const auto sched = StepSchedule::practical(f.truth.gap, f.spec.lambda2_abs);
  const auto cps = geometric_checkpoints(n, 10, 1.5);
  const auto a = run_oja(f.dist, path, sched, cps, f.truth, 31);
  const auto b = run_oja(f.dist, path, sched, cps, f.truth, 31);
  const auto c =
      run_downsampled_oja(f.dist, path, sched.thinned(10), 10, cps, f.truth, 31);
  CHECK(a.errors == b.errors);
  CHECK(a.algorithm == kAlgoOja);
  CHECK(c.algorithm == kAlgoDownsampled);
  CHECK(a.stream_checksum == c.stream_checksum);
  CHECK(a.updates == n);
  CHECK(c.updates == n / 10);
  CHECK(a.checkpoints == cps);
  REQUIRE(a.errors.size() == cps.size());
  for (double e : a.errors) {
    CHECK(e >= 0.0);
    CHECK(e <= 1.0);
  }
  CHECK(a.errors.back() < 0.05);
  CHECK(a.errors.back() < a.errors.front());

  try {
    run_downsampled_oja(f.dist, path, sched, n + 1, cps, f.truth, 31);
    FAIL("k larger than the stream accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyTrace);
  }
}
