#include "markovpca/markovpca.h"

#include <cstring>
#include <exception>
#include <fstream>
#include <new>
#include <string>

#include "markovpca/error.hpp"
#include "markovpca/harness.hpp"
#include "markovpca/markov.hpp"
#include "markovpca/oracle.hpp"
#include "markovpca/statedist.hpp"

using namespace markovpca;

struct mpca_chain {
  TransitionMatrix chain;
  ChainSpectrum spectrum;
};

struct mpca_states {
  StateDistributionSet dist;
};

struct mpca_config {
  ExperimentConfig cfg;
  std::string field;
};

struct mpca_results {
  ResultTable table;
};

struct mpca_report {
  oracle::Report report;
  std::string text;
};

namespace {

thread_local std::string g_last_error;

mpca_status to_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return MPCA_ERR_INVALID_ARGUMENT;
    case ErrorCode::Ergodicity: return MPCA_ERR_ERGODICITY;
    case ErrorCode::Reversibility: return MPCA_ERR_REVERSIBILITY;
    case ErrorCode::DegenerateGap: return MPCA_ERR_DEGENERATE_GAP;
    case ErrorCode::NumericalCollapse: return MPCA_ERR_NUMERICAL;
    case ErrorCode::EmptyTrace: return MPCA_ERR_EMPTY_TRACE;
    case ErrorCode::Config: return MPCA_ERR_CONFIG;
    case ErrorCode::Io: return MPCA_ERR_IO;
  }
  return MPCA_ERR_INTERNAL;
}

template <typename F>
mpca_status guarded(F&& f) noexcept {
  try {
    return f();
  } catch (const Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return MPCA_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MPCA_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown exception";
    return MPCA_ERR_INTERNAL;
  }
}

mpca_status null_arg(const char* what) {
  g_last_error = std::string("null argument: ") + what;
  return MPCA_ERR_INVALID_ARGUMENT;
}

mpca_status too_small(std::size_t need) {
  g_last_error = "output buffer needs " + std::to_string(need) + " entries";
  return MPCA_ERR_BUFFER_TOO_SMALL;
}

ExperimentConfig config_for_index(const mpca_config& c, std::size_t index) {
  ExperimentConfig cfg = c.cfg;
  if (c.field == "rho") {
    cfg.rho = {c.cfg.rho.at(index)};
  } else if (c.field == "sigma_beta") {
    cfg.sigma_beta = {c.cfg.sigma_beta.at(index)};
  } else if (index != 0) {
    fail(ErrorCode::InvalidArgument, "sweep index out of range");
  }
  return cfg;
}

}  // namespace

extern "C" {

const char* mpca_version(void) { return "1.0.0"; }

const char* mpca_status_string(mpca_status status) {
  switch (status) {
    case MPCA_OK: return "ok";
    case MPCA_ERR_INVALID_ARGUMENT: return "invalid argument";
    case MPCA_ERR_ERGODICITY: return "chain is not ergodic";
    case MPCA_ERR_REVERSIBILITY: return "chain is not reversible";
    case MPCA_ERR_DEGENERATE_GAP: return "degenerate eigengap";
    case MPCA_ERR_NUMERICAL: return "numerical collapse";
    case MPCA_ERR_EMPTY_TRACE: return "empty trace";
    case MPCA_ERR_CONFIG: return "configuration error";
    case MPCA_ERR_IO: return "I/O error";
    case MPCA_ERR_BUFFER_TOO_SMALL: return "buffer too small";
    case MPCA_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* mpca_last_error(void) { return g_last_error.c_str(); }

mpca_status mpca_chain_create(const double* probs, int n_states,
                              mpca_chain** out) {
  if (!probs) return null_arg("probs");
  if (!out) return null_arg("out");
  return guarded([&] {
    require(n_states >= 1, "n_states must be positive");
    Matrix p(n_states, n_states);
    for (int i = 0; i < n_states; ++i) {
      for (int j = 0; j < n_states; ++j) p(i, j) = probs[i * n_states + j];
    }
    TransitionMatrix chain(std::move(p));
    ChainSpectrum spectrum = analyze_spectrum(chain);
    *out = new mpca_chain{std::move(chain), std::move(spectrum)};
    return MPCA_OK;
  });
}

mpca_status mpca_chain_create_rho(int n_states, double rho, mpca_chain** out) {
  if (!out) return null_arg("out");
  return guarded([&] {
    TransitionMatrix chain = TransitionMatrix::rho_chain(n_states, rho);
    ChainSpectrum spectrum = analyze_spectrum(chain);
    *out = new mpca_chain{std::move(chain), std::move(spectrum)};
    return MPCA_OK;
  });
}

void mpca_chain_free(mpca_chain* chain) { delete chain; }

int mpca_chain_states(const mpca_chain* chain) {
  return chain ? chain->chain.n_states() : 0;
}

mpca_status mpca_chain_stationary(const mpca_chain* chain, double* out,
                                  size_t len) {
  if (!chain) return null_arg("chain");
  if (!out) return null_arg("out");
  const auto n = static_cast<std::size_t>(chain->chain.n_states());
  if (len < n) return too_small(n);
  std::memcpy(out, chain->spectrum.stationary.data(), n * sizeof(double));
  return MPCA_OK;
}

mpca_status mpca_chain_lambda2(const mpca_chain* chain, double* out) {
  if (!chain) return null_arg("chain");
  if (!out) return null_arg("out");
  *out = chain->spectrum.lambda2_abs;
  return MPCA_OK;
}

mpca_status mpca_chain_is_reversible(const mpca_chain* chain, int* out) {
  if (!chain) return null_arg("chain");
  if (!out) return null_arg("out");
  *out = chain->spectrum.reversible ? 1 : 0;
  return MPCA_OK;
}

mpca_status mpca_chain_d_mix(const mpca_chain* chain, uint64_t t,
                             double* out) {
  if (!chain) return null_arg("chain");
  if (!out) return null_arg("out");
  return guarded([&] {
    *out = d_mix(chain->chain, chain->spectrum, t);
    return MPCA_OK;
  });
}

mpca_status mpca_chain_tau_mix(const mpca_chain* chain, double eps,
                               uint64_t* out) {
  if (!chain) return null_arg("chain");
  if (!out) return null_arg("out");
  return guarded([&] {
    *out = tau_mix(chain->chain, chain->spectrum, eps);
    return MPCA_OK;
  });
}

mpca_status mpca_chain_sample_path(const mpca_chain* chain, uint64_t seed,
                                   int* out, size_t len) {
  if (!chain) return null_arg("chain");
  if (!out) return null_arg("out");
  return guarded([&] {
    const auto path = sample_path(chain->chain, chain->spectrum, len, seed);
    std::memcpy(out, path.data(), len * sizeof(int));
    return MPCA_OK;
  });
}

mpca_status mpca_states_create_paper(int n_states, int dim, double sigma_beta,
                                     const char* noise, uint64_t seed,
                                     mpca_states** out) {
  if (!noise) return null_arg("noise");
  if (!out) return null_arg("out");
  return guarded([&] {
    *out = new mpca_states{make_paper_states(n_states, dim, sigma_beta,
                                             parse_noise_kind(noise), seed)};
    return MPCA_OK;
  });
}

void mpca_states_free(mpca_states* states) { delete states; }

int mpca_states_dim(const mpca_states* states) {
  return states ? states->dist.dim() : 0;
}

double mpca_states_bernoulli_p(const mpca_states* states) {
  if (!states || states->dist.noise().kind != NoiseKind::Bernoulli) return 0.0;
  return states->dist.noise().p;
}

mpca_status mpca_states_total_eigenvalues(const mpca_states* states,
                                          const mpca_chain* chain, double* out,
                                          size_t len) {
  if (!states) return null_arg("states");
  if (!chain) return null_arg("chain");
  if (!out) return null_arg("out");
  const auto d = static_cast<std::size_t>(states->dist.dim());
  if (len < d) return too_small(d);
  return guarded([&] {
    const auto ens = eigen_summary(
        mixture_covariance(states->dist, chain->spectrum.stationary));
    std::memcpy(out, ens.eigenvalues.data(), d * sizeof(double));
    return MPCA_OK;
  });
}

mpca_status mpca_config_parse(const char* text, mpca_config** out) {
  if (!text) return null_arg("text");
  if (!out) return null_arg("out");
  return guarded([&] {
    ExperimentConfig cfg = parse_config(text);
    std::string field = swept_field(cfg).value_or("");
    *out = new mpca_config{std::move(cfg), std::move(field)};
    return MPCA_OK;
  });
}

mpca_status mpca_config_load(const char* path, mpca_config** out) {
  if (!path) return null_arg("path");
  if (!out) return null_arg("out");
  return guarded([&] {
    ExperimentConfig cfg = load_config(path);
    std::string field = swept_field(cfg).value_or("");
    *out = new mpca_config{std::move(cfg), std::move(field)};
    return MPCA_OK;
  });
}

void mpca_config_free(mpca_config* config) { delete config; }

const char* mpca_config_sweep_field(const mpca_config* config) {
  return config ? config->field.c_str() : "";
}

size_t mpca_config_sweep_size(const mpca_config* config) {
  if (!config) return 0;
  if (config->field == "rho") return config->cfg.rho.size();
  if (config->field == "sigma_beta") return config->cfg.sigma_beta.size();
  return 1;
}

mpca_status mpca_config_sweep_value(const mpca_config* config, size_t index,
                                    double* out) {
  if (!config) return null_arg("config");
  if (!out) return null_arg("out");
  return guarded([&] {
    const auto cfg = config_for_index(*config, index);
    *out = config->field == "sigma_beta" ? cfg.sigma_beta.front()
                                         : cfg.rho.front();
    return MPCA_OK;
  });
}

mpca_status mpca_experiment_run(const mpca_config* config, size_t sweep_index,
                                mpca_results** out) {
  if (!config) return null_arg("config");
  if (!out) return null_arg("out");
  return guarded([&] {
    *out = new mpca_results{run_experiment(config_for_index(*config, sweep_index))};
    return MPCA_OK;
  });
}

mpca_status mpca_results_read_csv(const char* path, mpca_results** out) {
  if (!path) return null_arg("path");
  if (!out) return null_arg("out");
  return guarded([&] {
    *out = new mpca_results{read_csv(path)};
    return MPCA_OK;
  });
}

void mpca_results_free(mpca_results* results) { delete results; }

size_t mpca_results_rows(const mpca_results* results) {
  return results ? results->table.rows.size() : 0;
}

mpca_status mpca_results_row(const mpca_results* results, size_t i,
                             size_t* trial_id, const char** algorithm,
                             size_t* checkpoint_n, double* sin2_error,
                             uint64_t* seed) {
  if (!results) return null_arg("results");
  if (i >= results->table.rows.size()) {
    g_last_error = "row index out of range";
    return MPCA_ERR_INVALID_ARGUMENT;
  }
  const auto& r = results->table.rows[i];
  if (trial_id) *trial_id = r.trial_id;
  if (algorithm) *algorithm = r.algorithm.c_str();
  if (checkpoint_n) *checkpoint_n = r.checkpoint_n;
  if (sin2_error) *sin2_error = r.sin2_error;
  if (seed) *seed = r.seed;
  return MPCA_OK;
}

mpca_status mpca_results_write(const mpca_results* results, const char* format,
                               const char* path) {
  if (!results) return null_arg("results");
  if (!format) return null_arg("format");
  if (!path) return null_arg("path");
  return guarded([&] {
    const std::string f = format;
    if (f == "csv") {
      emit(results->table, EmitFormat::Csv, path);
    } else if (f == "svg") {
      emit(results->table, EmitFormat::SvgLines, path);
    } else if (f == "summary" || f == "metadata") {
      std::ofstream os(path, std::ios::binary | std::ios::trunc);
      if (!os) fail(ErrorCode::Io, std::string("cannot write ") + path);
      os << (f == "summary" ? summary_tsv(results->table)
                            : metadata_tsv(results->table));
      if (!os) fail(ErrorCode::Io, std::string("failed writing ") + path);
    } else {
      fail(ErrorCode::InvalidArgument, "unknown format '" + f + "'");
    }
    return MPCA_OK;
  });
}

mpca_status mpca_verify(const char* suite, uint64_t seed, mpca_report** out) {
  if (!suite) return null_arg("suite");
  if (!out) return null_arg("out");
  return guarded([&] {
    oracle::Report report = oracle::run_suite(suite, seed);
    std::string text = report.format();
    *out = new mpca_report{std::move(report), std::move(text)};
    return MPCA_OK;
  });
}

void mpca_report_free(mpca_report* report) { delete report; }

size_t mpca_report_checks(const mpca_report* report) {
  return report ? report->report.checks : 0;
}

size_t mpca_report_violations(const mpca_report* report) {
  return report ? report->report.violations.size() : 0;
}

double mpca_report_worst_ratio(const mpca_report* report) {
  return report ? report->report.worst_ratio : 0.0;
}

const char* mpca_report_text(const mpca_report* report) {
  return report ? report->text.c_str() : "";
}

}  // extern "C"
