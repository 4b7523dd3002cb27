#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "quadjump/errors.hpp"
#include "quadjump/rng.hpp"

namespace quadjump {

struct EarlyStop {
  /// Stop as soon as the best value reaches this target.
  std::optional<double> target;
  /// Stop after this many generations without improvement (0 disables).
  int patience = 0;
};

/// Classic mutation strategies. rand/1 explores more evenly; the
/// current-to-best form converges much faster on smooth valleys.
enum class DeStrategy { rand_one, current_to_best_one };

inline const char* to_string(DeStrategy s) {
  return s == DeStrategy::rand_one ? "rand_one" : "current_to_best_one";
}

inline DeStrategy de_strategy_from_string(const std::string& name) {
  if (name == "rand_one") return DeStrategy::rand_one;
  if (name == "current_to_best_one") return DeStrategy::current_to_best_one;
  throw ConfigError("unknown DE strategy: " + name);
}

struct DeConfig {
  int population = 100;
  int max_generations = 500;
  int dims = 12;
  DeStrategy strategy = DeStrategy::rand_one;
  double scale_factor = 0.45;
  double crossover_rate = 0.95;
  std::uint64_t seed = 1;
  std::vector<double> lower;
  std::vector<double> upper;
  EarlyStop early_stop;
  /// Worker threads for candidate evaluation; never changes the result.
  int jobs = 1;

  void validate() const {
    if (population < 4) throw ConfigError("DE population must be at least 4");
    if (max_generations < 1) throw ConfigError("DE needs at least one generation");
    if (dims < 1) throw ConfigError("DE dimension must be positive");
    if (static_cast<int>(lower.size()) != dims || static_cast<int>(upper.size()) != dims)
      throw ConfigError("DE bounds must match the dimension");
    for (int i = 0; i < dims; ++i) {
      if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]) || !(lower[i] < upper[i]))
        throw ConfigError("DE bounds must be finite with lower < upper");
    }
    if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0))
      throw ConfigError("DE crossover rate must lie in [0, 1]");
    if (!(scale_factor > 0.0)) throw ConfigError("DE scale factor must be positive");
    if (jobs < 1) throw ConfigError("DE worker count must be positive");
  }
};

struct DeResult {
  std::vector<double> best_vector;
  double best_value = std::numeric_limits<double>::infinity();
  /// Best value after initialization and after every generation.
  std::vector<double> history;
  long evaluations = 0;
  bool converged = false;
  int generations_run = 0;
};

using Objective = std::function<double(const std::vector<double>&)>;

namespace detail {

inline double sanitize_objective(double v) {
  return std::isfinite(v) ? v : std::numeric_limits<double>::max();
}

/// Chunked parallel for with a deterministic result layout: each index writes
/// only its own slot, so the worker count cannot affect the outcome.
template <typename Fn>
inline void parallel_for(int n, int jobs, Fn&& fn) {
  if (jobs <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  const int workers = std::min(jobs, n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&fn, w, workers, n] {
      for (int i = w; i < n; i += workers) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace detail

/// Classic DE/rand/1/bin with greedy selection. Generation-synchronous:
/// every trial of a generation is built from the same population snapshot and
/// drawn from a per-(seed, generation, member) random stream, so runs are
/// reproducible and independent of the worker count.
inline DeResult optimize(const DeConfig& cfg, const Objective& objective) {
  cfg.validate();
  const int n = cfg.population;
  const int dims = cfg.dims;

  std::vector<std::vector<double>> pop(n, std::vector<double>(dims));
  std::vector<double> value(n);
  DeResult result;

  for (int i = 0; i < n; ++i) {
    SplitMix64 rng(derive_seed(cfg.seed, 0, static_cast<std::uint64_t>(i)));
    for (int j = 0; j < dims; ++j) pop[i][j] = rng.uniform(cfg.lower[j], cfg.upper[j]);
  }
  detail::parallel_for(n, cfg.jobs,
                       [&](int i) { value[i] = detail::sanitize_objective(objective(pop[i])); });
  result.evaluations += n;

  int best_index = 0;
  for (int i = 1; i < n; ++i)
    if (value[i] < value[best_index]) best_index = i;
  result.best_vector = pop[best_index];
  result.best_value = value[best_index];
  result.history.push_back(result.best_value);

  std::vector<std::vector<double>> trial(n, std::vector<double>(dims));
  std::vector<double> trial_value(n);
  int stale_generations = 0;

  for (int g = 1; g <= cfg.max_generations; ++g) {
    if (cfg.early_stop.target && result.best_value <= *cfg.early_stop.target) {
      result.converged = true;
      break;
    }
    if (cfg.early_stop.patience > 0 && stale_generations >= cfg.early_stop.patience) break;

    detail::parallel_for(n, cfg.jobs, [&](int i) {
      SplitMix64 rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(g),
                                 static_cast<std::uint64_t>(i)));
      int r1, r2, r3;
      do { r1 = static_cast<int>(rng.below(n)); } while (r1 == i);
      do { r2 = static_cast<int>(rng.below(n)); } while (r2 == i || r2 == r1);
      do { r3 = static_cast<int>(rng.below(n)); } while (r3 == i || r3 == r1 || r3 == r2);
      const int forced = static_cast<int>(rng.below(dims));
      for (int j = 0; j < dims; ++j) {
        double v;
        if (cfg.strategy == DeStrategy::current_to_best_one) {
          v = pop[i][j] + cfg.scale_factor * (pop[best_index][j] - pop[i][j]) +
              cfg.scale_factor * (pop[r1][j] - pop[r2][j]);
        } else {
          v = pop[r1][j] + cfg.scale_factor * (pop[r2][j] - pop[r3][j]);
        }
        v = std::clamp(v, cfg.lower[j], cfg.upper[j]);
        const bool take = j == forced || rng.uniform01() < cfg.crossover_rate;
        trial[i][j] = take ? v : pop[i][j];
      }
      trial_value[i] = detail::sanitize_objective(objective(trial[i]));
    });
    result.evaluations += n;

    double improved_best = result.best_value;
    for (int i = 0; i < n; ++i) {
      if (trial_value[i] < value[i]) {
        pop[i].swap(trial[i]);
        value[i] = trial_value[i];
        if (value[i] < improved_best) {
          improved_best = value[i];
          result.best_vector = pop[i];
          best_index = i;
        }
      }
    }
    stale_generations = improved_best < result.best_value ? 0 : stale_generations + 1;
    result.best_value = improved_best;
    result.history.push_back(result.best_value);
    result.generations_run = g;
  }

  if (cfg.early_stop.target && result.best_value <= *cfg.early_stop.target)
    result.converged = true;
  return result;
}

/// Same search with candidate evaluation fanned out across `jobs` workers;
/// bit-identical to the serial run for the same seed.
inline DeResult optimize_parallel(const DeConfig& cfg, const Objective& objective, int jobs) {
  DeConfig parallel_cfg = cfg;
  parallel_cfg.jobs = jobs;
  return optimize(parallel_cfg, objective);
}

/// Writes a `generation,best_fitness` CSV of a run's history.
inline void write_history_csv(const std::string& path, const std::vector<double>& history) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw StorageError("cannot open history CSV for writing: " + path);
  out << "generation,best_fitness\n";
  char buf[64];
  for (std::size_t g = 0; g < history.size(); ++g) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", g, history[g]);
    out << buf;
  }
}

}  // namespace quadjump
