#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "markovpca/error.hpp"
#include "markovpca/harness.hpp"

namespace markovpca {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = s.find(',', start);
    out.push_back(trim(s.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  fail(ErrorCode::Config, "invalid value '" + std::string(value) +
                              "' for key '" + std::string(key) + "'");
}

double to_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v);
  return out;
}

template <typename Int>
Int to_int(std::string_view key, std::string_view v) {
  Int out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v);
  return out;
}

std::vector<double> to_doubles(std::string_view key, std::string_view v) {
  std::vector<double> out;
  for (auto item : split_list(v)) out.push_back(to_double(key, item));
  return out;
}

std::string join(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += format_double(xs[i]);
  }
  return out;
}

}  // namespace

std::vector<std::size_t> ExperimentConfig::checkpoint_grid() const {
  if (!checkpoints.empty()) return checkpoints;
  return geometric_checkpoints(n_samples, checkpoint_start, checkpoint_ratio);
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  using Setter = std::function<void(std::string_view, std::string_view)>;
  const std::map<std::string_view, Setter> setters{
      {"n_states", [&](auto k, auto v) { cfg.n_states = to_int<int>(k, v); }},
      {"dim", [&](auto k, auto v) { cfg.dim = to_int<int>(k, v); }},
      {"rho", [&](auto k, auto v) { cfg.rho = to_doubles(k, v); }},
      {"sigma_beta", [&](auto k, auto v) { cfg.sigma_beta = to_doubles(k, v); }},
      {"noise",
       [&](auto k, auto v) {
         if (v == "bernoulli") cfg.noise = NoiseKind::Bernoulli;
         else if (v == "uniform") cfg.noise = NoiseKind::Uniform;
         else bad_value(k, v);
       }},
      {"n_samples", [&](auto k, auto v) { cfg.n_samples = to_int<std::size_t>(k, v); }},
      {"n_trials", [&](auto k, auto v) { cfg.n_trials = to_int<std::size_t>(k, v); }},
      {"schedule",
       [&](auto k, auto v) {
         if (v == "practical") cfg.schedule = ScheduleMode::Practical;
         else if (v == "theorem") cfg.schedule = ScheduleMode::TheoremFaithful;
         else bad_value(k, v);
       }},
      {"alpha", [&](auto k, auto v) { cfg.alpha = to_double(k, v); }},
      {"beta", [&](auto k, auto v) { cfg.beta = to_double(k, v); }},
      {"delta", [&](auto k, auto v) { cfg.delta = to_double(k, v); }},
      {"downsample_k",
       [&](auto k, auto v) {
         if (v == "auto") {
           cfg.downsample_auto = true;
         } else {
           cfg.downsample_auto = false;
           cfg.downsample_k = to_int<std::uint64_t>(k, v);
         }
       }},
      {"master_seed", [&](auto k, auto v) { cfg.master_seed = to_int<std::uint64_t>(k, v); }},
      {"checkpoint_start", [&](auto k, auto v) { cfg.checkpoint_start = to_int<std::size_t>(k, v); }},
      {"checkpoint_ratio", [&](auto k, auto v) { cfg.checkpoint_ratio = to_double(k, v); }},
      {"checkpoints",
       [&](auto k, auto v) {
         cfg.checkpoints.clear();
         for (auto item : split_list(v)) {
           cfg.checkpoints.push_back(to_int<std::size_t>(k, item));
         }
       }},
      {"algorithms",
       [&](auto, auto v) {
         cfg.algorithms.clear();
         for (auto item : split_list(v)) cfg.algorithms.emplace_back(item);
       }},
      {"threads", [&](auto k, auto v) { cfg.threads = to_int<unsigned>(k, v); }},
      {"probe_samples", [&](auto k, auto v) { cfg.probe_samples = to_int<std::size_t>(k, v); }},
  };

  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      fail(ErrorCode::Config,
           "line " + std::to_string(line_no) + ": expected key=value");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) {
      fail(ErrorCode::Config, "unknown key '" + std::string(key) + "'");
    }
    if (!seen.insert(std::string(key)).second) {
      fail(ErrorCode::Config, "duplicate key '" + std::string(key) + "'");
    }
    it->second(key, value);
  }
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string format_config(const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << "n_states=" << cfg.n_states << '\n'
     << "dim=" << cfg.dim << '\n'
     << "rho=" << join(cfg.rho) << '\n'
     << "sigma_beta=" << join(cfg.sigma_beta) << '\n'
     << "noise=" << to_string(cfg.noise) << '\n'
     << "n_samples=" << cfg.n_samples << '\n'
     << "n_trials=" << cfg.n_trials << '\n'
     << "schedule=" << to_string(cfg.schedule) << '\n';
  if (cfg.alpha) os << "alpha=" << format_double(*cfg.alpha) << '\n';
  if (cfg.beta) os << "beta=" << format_double(*cfg.beta) << '\n';
  os << "delta=" << format_double(cfg.delta) << '\n';
  if (cfg.downsample_auto) {
    os << "downsample_k=auto\n";
  } else {
    os << "downsample_k=" << cfg.downsample_k << '\n';
  }
  os << "master_seed=" << cfg.master_seed << '\n'
     << "checkpoint_start=" << cfg.checkpoint_start << '\n'
     << "checkpoint_ratio=" << format_double(cfg.checkpoint_ratio) << '\n';
  if (!cfg.checkpoints.empty()) {
    os << "checkpoints=";
    for (std::size_t i = 0; i < cfg.checkpoints.size(); ++i) {
      os << (i ? "," : "") << cfg.checkpoints[i];
    }
    os << '\n';
  }
  os << "algorithms=";
  for (std::size_t i = 0; i < cfg.algorithms.size(); ++i) {
    os << (i ? "," : "") << cfg.algorithms[i];
  }
  os << '\n'
     << "threads=" << cfg.threads << '\n'
     << "probe_samples=" << cfg.probe_samples << '\n';
  return os.str();
}

void validate(const ExperimentConfig& cfg) {
  auto check = [](bool ok, const std::string& what) {
    if (!ok) fail(ErrorCode::Config, what);
  };
  check(cfg.n_states >= 2, "n_states must be at least 2");
  check(cfg.dim >= 2, "dim must be at least 2");
  check(!cfg.rho.empty() && !cfg.sigma_beta.empty(),
        "rho and sigma_beta need at least one value");
  for (double r : cfg.rho) check(r > 0.0 && r < 1.0, "rho must lie in (0, 1)");
  for (double b : cfg.sigma_beta) check(b > 0.0, "sigma_beta must be positive");
  check(cfg.n_trials >= 1, "n_trials must be at least 1");
  check(cfg.n_samples >= 1, "n_samples must be positive");
  check(cfg.checkpoint_ratio > 1.0, "checkpoint_ratio must exceed 1");
  check(cfg.downsample_auto || cfg.downsample_k >= 1,
        "downsample_k must be positive");
  check(cfg.delta > 0.0 && cfg.delta < 1.0, "delta must lie in (0, 1)");
  check(!cfg.alpha || *cfg.alpha > 0.0, "alpha must be positive");
  check(!cfg.beta || *cfg.beta > 0.0, "beta must be positive");
  check(cfg.schedule != ScheduleMode::TheoremFaithful || !cfg.alpha ||
            *cfg.alpha > 2.0,
        "theorem schedule needs alpha > 2");
  check(cfg.probe_samples >= 1000, "probe_samples must be at least 1000");
  check(!cfg.algorithms.empty(), "at least one algorithm is required");
  std::set<std::string> algos;
  for (const auto& a : cfg.algorithms) {
    check(a == kAlgoOja || a == kAlgoDownsampled || a == kAlgoOffline,
          "unknown algorithm '" + a + "'");
    check(algos.insert(a).second, "duplicate algorithm '" + a + "'");
  }
  const auto grid = cfg.checkpoint_grid();
  check(!grid.empty(), "no checkpoints");
  std::size_t prev = 0;
  for (auto c : grid) {
    check(c > prev, "checkpoints must be strictly increasing and positive");
    prev = c;
  }
  check(cfg.n_samples >= grid.back(), "n_samples must cover every checkpoint");
  swept_field(cfg);
}

std::optional<std::string> swept_field(const ExperimentConfig& cfg) {
  const bool rho_list = cfg.rho.size() > 1;
  const bool beta_list = cfg.sigma_beta.size() > 1;
  if (rho_list && beta_list) {
    fail(ErrorCode::Config,
         "ambiguous sweep: both rho and sigma_beta are lists");
  }
  if (rho_list) return "rho";
  if (beta_list) return "sigma_beta";
  return std::nullopt;
}

}  // namespace markovpca
