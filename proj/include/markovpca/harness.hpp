#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "markovpca/statedist.hpp"
#include "markovpca/streaming.hpp"

namespace markovpca {

// Declarative description of one experiment (or a one-field sweep).
// Text form is flat `key=value` lines; `#` starts a comment; list values are
// comma-separated. Keys:
//   n_states, dim, rho, sigma_beta, noise (bernoulli|uniform), n_samples,
//   n_trials, schedule (practical|theorem), alpha, beta, delta,
//   downsample_k (integer or auto), master_seed, checkpoint_start,
//   checkpoint_ratio, checkpoints (explicit list), algorithms, threads,
//   probe_samples
struct ExperimentConfig {
  int n_states = 10;
  int dim = 50;
  std::vector<double> rho{0.2};
  std::vector<double> sigma_beta{1.0};
  NoiseKind noise = NoiseKind::Bernoulli;
  std::size_t n_samples = 100'000;
  std::size_t n_trials = 20;
  ScheduleMode schedule = ScheduleMode::Practical;
  std::optional<double> alpha;
  std::optional<double> beta;
  double delta = 0.1;
  std::uint64_t downsample_k = 10;
  bool downsample_auto = false;
  std::uint64_t master_seed = 1;
  std::size_t checkpoint_start = 100;
  double checkpoint_ratio = 1.25;
  std::vector<std::size_t> checkpoints;  // overrides the geometric grid
  std::vector<std::string> algorithms{kAlgoOja, kAlgoDownsampled, kAlgoOffline};
  unsigned threads = 0;  // 0 = hardware concurrency
  std::size_t probe_samples = 20'000;

  std::vector<std::size_t> checkpoint_grid() const;
};

ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string format_config(const ExperimentConfig& cfg);
// Throws Config on any invariant violation.
void validate(const ExperimentConfig& cfg);

struct ResultRow {
  std::size_t trial_id = 0;
  std::string algorithm;
  std::size_t checkpoint_n = 0;
  double sin2_error = 0.0;
  std::uint64_t seed = 0;

  bool operator==(const ResultRow&) const = default;
};

struct ExperimentMetadata {
  double rho = 0.0;
  double sigma_beta = 0.0;
  double bernoulli_p = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double gap = 0.0;
  double chain_lambda2_abs = 0.0;
  std::uint64_t tau_mix = 0;
  StepSchedule schedule;
  StepSchedule downsampled_schedule;
  std::uint64_t downsample_k = 0;
  std::vector<std::uint64_t> stream_checksums;  // per trial
};

struct ResultTable {
  std::vector<ResultRow> rows;  // sorted by trial, algorithm, checkpoint
  ExperimentMetadata meta;
};

// Every trial draws one stationary path and feeds the same samples to all
// requested algorithms. Output does not depend on the thread count.
ResultTable run_experiment(const ExperimentConfig& cfg);

struct SweepResult {
  std::string field;  // "rho" or "sigma_beta"
  std::vector<double> values;
  std::vector<ResultTable> tables;
};

// Exactly one list-valued field; one table per value, shared master seed.
SweepResult sweep(const ExperimentConfig& cfg);
// Name of the list-valued field, if any. Throws Config when both are lists.
std::optional<std::string> swept_field(const ExperimentConfig& cfg);

struct CurvePoint {
  std::size_t n = 0;
  double mean = 0.0;
  double median = 0.0;
};

// Per algorithm, mean and median across trials at each checkpoint.
std::map<std::string, std::vector<CurvePoint>> aggregate(const ResultTable& t);

// Final-checkpoint errors per trial for one algorithm, ordered by trial.
std::vector<double> final_errors(const ResultTable& t,
                                 std::string_view algorithm);

enum class EmitFormat { Csv, SvgLines };

// Header `trial_id\talgorithm\tcheckpoint_n\tsin2_error\tseed`, floats in
// shortest round-trip form.
std::string to_csv(const ResultTable& t);
ResultTable parse_csv(std::string_view text);
ResultTable read_csv(const std::filesystem::path& path);
// Log-log mean-error curves, one polyline per algorithm.
std::string to_svg(const ResultTable& t, std::string_view title = "");
std::string summary_tsv(const ResultTable& t);
std::string metadata_tsv(const ResultTable& t);
void emit(const ResultTable& t, EmitFormat format,
          const std::filesystem::path& path);

std::string format_double(double v);

}  // namespace markovpca
