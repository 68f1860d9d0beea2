#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "markovpca/error.hpp"
#include "markovpca/harness.hpp"
#include "markovpca/markov.hpp"
#include "markovpca/offline.hpp"
#include "markovpca/rng.hpp"

using namespace markovpca;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.dim = 12;
  cfg.n_samples = 3000;
  cfg.n_trials = 4;
  cfg.checkpoint_start = 50;
  cfg.checkpoint_ratio = 2.0;
  cfg.threads = 1;
  return cfg;
}

std::size_t count_of(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = s.find(needle); p != std::string::npos; p = s.find(needle, p + 1)) ++n;
  return n;
}

// Tags open and close in order; self-closing tags and the prolog are skipped.
bool tags_balanced(const std::string& xml) {
  std::vector<std::string> stack;
  for (std::size_t p = xml.find('<'); p != std::string::npos;
       p = xml.find('<', p + 1)) {
    const auto end = xml.find('>', p);
    if (end == std::string::npos) return false;
    const std::string tag = xml.substr(p + 1, end - p - 1);
    if (tag.empty() || tag[0] == '?' || tag[0] == '!' || tag.back() == '/') continue;
    if (tag[0] == '/') {
      if (stack.empty() || stack.back() != tag.substr(1)) return false;
      stack.pop_back();
    } else {
      stack.push_back(tag.substr(0, tag.find_first_of(" \t\n")));
    }
  }
  return stack.empty();
}

}  // namespace

TEST_CASE("one trial, one checkpoint, three algorithms gives three rows") {
  auto cfg = small_config();
  cfg.n_trials = 1;
  cfg.n_samples = 100;
  cfg.checkpoints = {100};
  const auto t = run_experiment(cfg);
  REQUIRE(t.rows.size() == 3);
  std::set<std::string> algos;
  for (const auto& r : t.rows) {
    algos.insert(r.algorithm);
    CHECK(r.checkpoint_n == 100);
    CHECK(r.trial_id == 0);
    CHECK(r.seed == derive_seed(cfg.master_seed, 0));
  }
  CHECK(algos == std::set<std::string>{"offline", "oja", "oja_downsampled"});
  const auto csv = to_csv(t);
  CHECK(count_of(csv, "\n") == 4);
  CHECK(csv.rfind("trial_id\talgorithm\tcheckpoint_n\tsin2_error\tseed\n", 0) == 0);
}

TEST_CASE("row count and canonical order") {
  auto cfg = small_config();
  cfg.algorithms = {"oja", "offline"};
  const auto t = run_experiment(cfg);
  const auto grid = cfg.checkpoint_grid();
  CHECK(t.rows.size() == cfg.n_trials * grid.size() * 2);
  for (std::size_t i = 1; i < t.rows.size(); ++i) {
    const auto& a = t.rows[i - 1];
    const auto& b = t.rows[i];
    CHECK(std::tie(a.trial_id, a.algorithm, a.checkpoint_n) <
          std::tie(b.trial_id, b.algorithm, b.checkpoint_n));
  }
  std::set<std::uint64_t> seeds;
  for (const auto& r : t.rows) seeds.insert(r.seed);
  CHECK(seeds.size() == cfg.n_trials);
}

TEST_CASE("CSV is byte-identical across runs and thread counts") {
  auto cfg = small_config();
  const auto a = to_csv(run_experiment(cfg));
  const auto b = to_csv(run_experiment(cfg));
  cfg.threads = 3;
  const auto c = to_csv(run_experiment(cfg));
  CHECK(a == b);
  CHECK(a == c);
  cfg.master_seed = 2;
  CHECK(a != to_csv(run_experiment(cfg)));
}

TEST_CASE("fused trial equals standalone runs on the same stream") {
  auto cfg = small_config();
  const auto t = run_experiment(cfg);
  const auto chain = TransitionMatrix::rho_chain(cfg.n_states, cfg.rho[0]);
  const auto spec = analyze_spectrum(chain);
  const auto dist = make_paper_states(cfg.n_states, cfg.dim, cfg.sigma_beta[0],
                                      cfg.noise, cfg.master_seed);
  const auto truth = total_covariance(dist, spec.stationary);
  const auto grid = cfg.checkpoint_grid();
  for (std::size_t trial = 0; trial < cfg.n_trials; ++trial) {
    const auto seed = derive_seed(cfg.master_seed, trial);
    const auto path = sample_path(chain, spec, cfg.n_samples,
                                  derive_seed(seed, stream::kPath));
    const auto oja = run_oja(dist, path, t.meta.schedule, grid, truth, seed);
    const auto down =
        run_downsampled_oja(dist, path, t.meta.downsampled_schedule,
                            t.meta.downsample_k, grid, truth, seed);
    const auto off = run_offline(dist, path, grid, truth, seed);
    CHECK(oja.stream_checksum == t.meta.stream_checksums[trial]);
    CHECK(down.stream_checksum == t.meta.stream_checksums[trial]);
    CHECK(off.stream_checksum == t.meta.stream_checksums[trial]);
    for (const auto& r : t.rows) {
      if (r.trial_id != trial) continue;
      const auto idx = static_cast<std::size_t>(
          std::find(grid.begin(), grid.end(), r.checkpoint_n) - grid.begin());
      REQUIRE(idx < grid.size());
      const auto& trace = r.algorithm == "oja"               ? oja
                          : r.algorithm == "oja_downsampled" ? down
                                                             : off;
      CHECK(r.sin2_error == trace.errors[idx]);
    }
  }
}

TEST_CASE("metadata reflects the schedule") {
  const auto t = run_experiment(small_config());
  CHECK(t.meta.schedule.alpha == 5.0);
  CHECK(t.meta.schedule.beta ==
        doctest::Approx(5.0 / (1.0 - t.meta.chain_lambda2_abs)));
  CHECK(t.meta.downsample_k == 10);
  CHECK(t.meta.downsampled_schedule.beta ==
        doctest::Approx(t.meta.schedule.beta / 10.0));
  CHECK(t.meta.tau_mix == 6);
  CHECK(t.meta.bernoulli_p > 0.0);
  CHECK(t.meta.bernoulli_p < 0.05);
  CHECK(t.meta.gap > 0.0);
  const auto md = metadata_tsv(t);
  CHECK(md.find("schedule_mode\tpractical\n") != std::string::npos);
}

TEST_CASE("theorem schedule and automatic downsampling run") {
  auto cfg = small_config();
  cfg.schedule = ScheduleMode::TheoremFaithful;
  cfg.downsample_auto = true;
  cfg.n_trials = 1;
  cfg.probe_samples = 2000;
  const auto t = run_experiment(cfg);
  CHECK(t.meta.schedule.mode == ScheduleMode::TheoremFaithful);
  CHECK(t.meta.schedule.eta0() <= std::exp(-1.0));
  CHECK(t.meta.downsample_k >= 1);
  CHECK(t.meta.downsampled_schedule.mode == ScheduleMode::TheoremFaithful);
  for (const auto& r : t.rows) {
    CHECK(r.sin2_error >= 0.0);
    CHECK(r.sin2_error <= 1.0);
  }
}

TEST_CASE("Oja error shrinks along the trial at desk dimension") {
  ExperimentConfig cfg;
  cfg.n_samples = 20'000;
  cfg.n_trials = 3;
  cfg.algorithms = {"oja"};
  cfg.threads = 1;
  const auto t = run_experiment(cfg);
  for (std::size_t trial = 0; trial < cfg.n_trials; ++trial) {
    std::vector<double> errs;
    for (const auto& r : t.rows) {
      if (r.trial_id == trial) errs.push_back(r.sin2_error);
    }
    REQUIRE(errs.size() >= 6);
    const double first = (errs[0] + errs[1] + errs[2]) / 3.0;
    const auto m = errs.size();
    const double last = (errs[m - 1] + errs[m - 2] + errs[m - 3]) / 3.0;
    CHECK(last <= first);
  }
}

TEST_CASE("sweeps") {
  auto cfg = small_config();
  cfg.n_trials = 2;
  cfg.rho = {0.8, 0.4, 0.2, 0.1};
  const auto s = sweep(cfg);
  CHECK(s.field == "rho");
  REQUIRE(s.tables.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(s.tables[i].meta.rho == cfg.rho[i]);
    auto single = cfg;
    single.rho = {cfg.rho[i]};
    CHECK(to_csv(run_experiment(single)) == to_csv(s.tables[i]));
  }
  CHECK_THROWS_AS(run_experiment(cfg), Error);

  cfg.sigma_beta = {0.6, 1.0};
  try {
    sweep(cfg);
    FAIL("two list-valued fields accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Config);
  }
  cfg.rho = {0.2};
  CHECK(sweep(cfg).field == "sigma_beta");
}

TEST_CASE("config text") {
  const auto cfg = parse_config(
      "# desk run\n"
      "n_states = 6\n"
      "dim=20\n"
      "rho=0.8, 0.1  # sweep\n"
      "noise=uniform\n"
      "n_samples=5000\n"
      "n_trials=3\n"
      "downsample_k=auto\n"
      "algorithms=oja,offline\n"
      "checkpoints=10,100,5000\n"
      "\n");
  CHECK(cfg.n_states == 6);
  CHECK(cfg.dim == 20);
  CHECK(cfg.rho == std::vector<double>{0.8, 0.1});
  CHECK(cfg.noise == NoiseKind::Uniform);
  CHECK(cfg.downsample_auto);
  CHECK(cfg.algorithms == std::vector<std::string>{"oja", "offline"});
  CHECK(cfg.checkpoint_grid() == std::vector<std::size_t>{10, 100, 5000});
  CHECK(swept_field(cfg) == std::optional<std::string>("rho"));

  const auto again = parse_config(format_config(cfg));
  CHECK(format_config(again) == format_config(cfg));

  auto code_of = [](const char* text) {
    try {
      validate(parse_config(text));
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Io;  // sentinel: nothing thrown
  };
  CHECK(code_of("bogus=1\n") == ErrorCode::Config);
  CHECK(code_of("dim=5\ndim=6\n") == ErrorCode::Config);
  CHECK(code_of("dim=five\n") == ErrorCode::Config);
  CHECK(code_of("n_trials=0\n") == ErrorCode::Config);
  CHECK(code_of("n_samples=100\ncheckpoints=50,200\n") == ErrorCode::Config);
  CHECK(code_of("algorithms=oja,pca\n") == ErrorCode::Config);
  CHECK(code_of("noise=gauss\n") == ErrorCode::Config);
  CHECK(code_of("dim=5\n") == ErrorCode::Io);
}

TEST_CASE("CSV round trip and emitters") {
  auto cfg = small_config();
  cfg.n_trials = 2;
  const auto t = run_experiment(cfg);
  const auto csv = to_csv(t);
  const auto back = parse_csv(csv);
  CHECK(back.rows == t.rows);
  CHECK(to_csv(back) == csv);
  CHECK_THROWS_AS(parse_csv("nope\n"), Error);
  CHECK_THROWS_AS(
      parse_csv("trial_id\talgorithm\tcheckpoint_n\tsin2_error\tseed\n0\toja\t5\n"),
      Error);

  const auto svg = to_svg(t, "desk");
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(tags_balanced(svg));
  CHECK(count_of(svg, "<polyline") == 3);
  CHECK(svg.find("samples n") != std::string::npos);

  const auto dir = std::filesystem::temp_directory_path() / "markovpca_test_emit";
  std::filesystem::create_directories(dir);
  emit(t, EmitFormat::Csv, dir / "r.csv");
  CHECK(read_csv(dir / "r.csv").rows == t.rows);
  emit(t, EmitFormat::SvgLines, dir / "r.svg");
  CHECK(std::filesystem::file_size(dir / "r.svg") == to_svg(t).size());
  try {
    emit(t, EmitFormat::Csv, dir / "missing" / "deeper" / "r.csv");
    FAIL("unwritable path accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Io);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("aggregation") {
  ResultTable t;
  t.rows = {{0, "oja", 10, 0.4, 1}, {1, "oja", 10, 0.1, 2},
            {2, "oja", 10, 0.2, 3}, {0, "oja", 20, 0.05, 1},
            {1, "oja", 20, 0.01, 2}, {2, "oja", 20, 0.03, 3}};
  const auto agg = aggregate(t);
  const auto& curve = agg.at("oja");
  REQUIRE(curve.size() == 2);
  CHECK(curve[0].n == 10);
  CHECK(curve[0].mean == doctest::Approx(0.7 / 3));
  CHECK(curve[0].median == 0.2);
  CHECK(curve[1].median == 0.03);
  CHECK(final_errors(t, "oja") == std::vector<double>{0.05, 0.01, 0.03});
  CHECK(summary_tsv(t).rfind("algorithm\tcheckpoint_n\tmean_sin2\tmedian_sin2\n", 0) == 0);
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1e-300) == "1e-300");
}
