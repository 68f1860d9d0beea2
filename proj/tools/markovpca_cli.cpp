// Command-line front end. Talks to the library only through the C API.
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "markovpca/markovpca.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitViolation = 2;
constexpr int kExitNumerical = 3;

struct Failure {
  mpca_status status;
};

int exit_code(mpca_status s) {
  switch (s) {
    case MPCA_OK:
      return kExitOk;
    case MPCA_ERR_ERGODICITY:
    case MPCA_ERR_DEGENERATE_GAP:
    case MPCA_ERR_NUMERICAL:
    case MPCA_ERR_EMPTY_TRACE:
      return kExitNumerical;
    default:
      return kExitUsage;
  }
}

void check(mpca_status s) {
  if (s != MPCA_OK) throw Failure{s};
}

template <typename T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(p); }
};

using Chain = Handle<mpca_chain, mpca_chain_free>;
using States = Handle<mpca_states, mpca_states_free>;
using Config = Handle<mpca_config, mpca_config_free>;
using Results = Handle<mpca_results, mpca_results_free>;
using Report = Handle<mpca_report, mpca_report_free>;

// Shortest form that reads back to the same double.
std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

struct SpectrumArgs {
  double rho = 0.2;
  int states = 10;
  bool covariance = false;
  int dim = 50;
  double sigma_beta = 1.0;
  std::string noise = "bernoulli";
  std::uint64_t seed = 1;
};

int cmd_spectrum(const SpectrumArgs& a) {
  Chain chain;
  check(mpca_chain_create_rho(a.states, a.rho, &chain.p));
  std::vector<double> pi(static_cast<std::size_t>(a.states));
  check(mpca_chain_stationary(chain.p, pi.data(), pi.size()));
  double lambda2 = 0.0;
  check(mpca_chain_lambda2(chain.p, &lambda2));
  std::uint64_t tau = 0;
  check(mpca_chain_tau_mix(chain.p, 0.25, &tau));

  std::cout << "pi";
  for (double v : pi) std::cout << '\t' << fmt(v);
  std::cout << "\nlambda2_abs\t" << fmt(lambda2) << "\ntau_mix\t" << tau
            << '\n';
  for (std::uint64_t t = 1; t <= 20; ++t) {
    double d = 0.0;
    check(mpca_chain_d_mix(chain.p, t, &d));
    std::cout << "d_mix\t" << t << '\t' << fmt(d) << '\n';
  }

  if (a.covariance) {
    States states;
    check(mpca_states_create_paper(a.states, a.dim, a.sigma_beta,
                                   a.noise.c_str(), a.seed, &states.p));
    std::vector<double> ev(static_cast<std::size_t>(a.dim));
    check(mpca_states_total_eigenvalues(states.p, chain.p, ev.data(),
                                        ev.size()));
    std::cout << "eigenvalues";
    for (double v : ev) std::cout << '\t' << fmt(v);
    std::cout << "\ngap\t" << fmt(ev[0] - ev[1]) << '\n';
  }
  return kExitOk;
}

int cmd_verify(const std::string& suite, std::uint64_t seed) {
  Report report;
  check(mpca_verify(suite.c_str(), seed, &report.p));
  std::cout << mpca_report_text(report.p);
  std::cerr << "checks=" << mpca_report_checks(report.p)
            << " violations=" << mpca_report_violations(report.p)
            << " worst_ratio=" << fmt(mpca_report_worst_ratio(report.p))
            << '\n';
  return mpca_report_violations(report.p) == 0 ? kExitOk : kExitViolation;
}

void write_outputs(const mpca_results* results,
                   const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  check(mpca_results_write(results, "csv", (dir / "results.csv").c_str()));
  check(mpca_results_write(results, "summary", (dir / "summary.tsv").c_str()));
  check(mpca_results_write(results, "metadata",
                           (dir / "metadata.tsv").c_str()));
  check(mpca_results_write(results, "svg", (dir / "curves.svg").c_str()));
}

int cmd_simulate(const std::string& config_path, const std::string& out) {
  Config config;
  check(mpca_config_load(config_path.c_str(), &config.p));
  const std::string field = mpca_config_sweep_field(config.p);
  const std::size_t n = mpca_config_sweep_size(config.p);
  for (std::size_t i = 0; i < n; ++i) {
    Results results;
    check(mpca_experiment_run(config.p, i, &results.p));
    std::filesystem::path dir = out;
    if (!field.empty()) {
      double value = 0.0;
      check(mpca_config_sweep_value(config.p, i, &value));
      dir /= field + "_" + fmt(value);
    }
    write_outputs(results.p, dir);
    std::cerr << "wrote " << dir.string() << " ("
              << mpca_results_rows(results.p) << " rows)\n";
  }
  return kExitOk;
}

int cmd_plot(const std::string& csv, const std::string& out) {
  Results results;
  check(mpca_results_read_csv(csv.c_str(), &results.p));
  check(mpca_results_write(results.p, "svg", out.c_str()));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming PCA on Markovian data"};
  app.require_subcommand(1);
  app.set_version_flag("--version", mpca_version());

  SpectrumArgs sa;
  auto* spectrum = app.add_subcommand(
      "spectrum", "Stationary law, |lambda2|, tau_mix(1/4) and d_mix(1..20) of a rho-chain");
  spectrum->add_option("--rho", sa.rho, "Off-diagonal mass")->required();
  spectrum->add_option("--states", sa.states, "Number of states")->required();
  spectrum->add_flag("--covariance", sa.covariance,
                     "Also print eigenvalues of the mixture covariance");
  spectrum->add_option("--dim", sa.dim, "Dimension for --covariance");
  spectrum->add_option("--sigma-beta", sa.sigma_beta,
                       "Covariance decay exponent for --covariance");
  spectrum->add_option("--noise", sa.noise, "bernoulli or uniform")
      ->check(CLI::IsMember({"bernoulli", "uniform"}));
  spectrum->add_option("--seed", sa.seed, "Seed for the Bernoulli parameter");

  std::string suite;
  std::uint64_t verify_seed = 20240611;
  auto* verify = app.add_subcommand("verify", "Run a brute-force oracle suite");
  verify->add_option("--suite", suite, "Suite name")
      ->required()
      ->check(CLI::IsMember(
          {"qnorm", "covdecay", "prodapprox", "revmix", "mixing", "all"}));
  verify->add_option("--seed", verify_seed, "Corpus seed");

  std::string config_path, out_dir;
  auto* simulate =
      app.add_subcommand("simulate", "Run an experiment or sweep from a config");
  simulate->add_option("--config", config_path, "key=value config file")
      ->required();
  simulate->add_option("--out", out_dir, "Output directory")->required();

  std::string csv_path, svg_path;
  auto* plot = app.add_subcommand("plot", "Render an SVG from results CSV");
  plot->add_option("--csv", csv_path, "Results CSV")->required();
  plot->add_option("--out", svg_path, "SVG path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*spectrum) return cmd_spectrum(sa);
    if (*verify) return cmd_verify(suite, verify_seed);
    if (*simulate) return cmd_simulate(config_path, out_dir);
    if (*plot) return cmd_plot(csv_path, svg_path);
  } catch (const Failure& f) {
    std::cerr << "error: " << mpca_status_string(f.status) << ": "
              << mpca_last_error() << '\n';
    return exit_code(f.status);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
