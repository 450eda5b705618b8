#include "tamed/convergence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tamed/errors.hpp"
#include "tamed/noise.hpp"
#include "tamed/parallel.hpp"
#include "tamed/summation.hpp"

namespace tamed {

void ConvergenceConfig::validate() const {
  if (levels.empty()) throw ConfigError("convergence: levels must be nonempty");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] < 1) throw ConfigError("convergence: levels must be positive");
    if (i > 0 && levels[i] <= levels[i - 1]) {
      throw ConfigError("convergence: levels must be strictly ascending");
    }
  }
  if (reference_level > kMaxNoiseLevel) {
    throw ConfigError("convergence: reference_level must be <= " + std::to_string(kMaxNoiseLevel));
  }
  if (reference_level < levels.back() + kReferenceSeparation) {
    throw ConfigError("convergence: reference_level " + std::to_string(reference_level) +
                      " must be >= max(levels) + " + std::to_string(kReferenceSeparation));
  }
  if (paths == 0) throw ConfigError("convergence: paths must be positive");
  if (q_list.empty()) throw ConfigError("convergence: q_list must be nonempty");
  for (double q : q_list) {
    if (!(q >= 1.0) || !std::isfinite(q)) throw ConfigError("convergence: every q must be >= 1");
  }
}

const ErrorRow* ErrorTable::find(int level, double q) const {
  for (const auto& row : rows) {
    if (row.level == level && row.q == q) return &row;
  }
  return nullptr;
}

std::vector<ErrorRow> ErrorTable::column(double q) const {
  std::vector<ErrorRow> out;
  for (const auto& row : rows) {
    if (row.q == q) out.push_back(row);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Estimators

namespace {

void require_errors(std::span<const double> values, double q) {
  if (values.empty()) throw DomainError("lq_error: empty error list");
  if (!(q >= 1.0) || !std::isfinite(q)) throw DomainError("lq_error: q must be >= 1");
  for (double v : values) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw DomainError("lq_error: errors must be finite and nonnegative");
    }
  }
}

// Mean taken relative to the first value so identical samples give that
// value back exactly.
double shifted_mean(std::span<const double> values, std::vector<double>& work) {
  const double anchor = values.front();
  work.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) work[i] = values[i] - anchor;
  return anchor + pairwise_sum(work) / static_cast<double>(values.size());
}

double sample_variance(std::span<const double> values, double mean, std::vector<double>& work) {
  if (values.size() < 2) return std::numeric_limits<double>::infinity();
  work.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double dev = values[i] - mean;
    work[i] = dev * dev;
  }
  return pairwise_sum(work) / static_cast<double>(values.size() - 1);
}

}  // namespace

MomentEstimate mean_with_ci(std::span<const double> values) {
  if (values.empty()) throw DomainError("mean_with_ci: empty sample");
  std::vector<double> work;
  MomentEstimate est;
  est.value = shifted_mean(values, work);
  const double var = sample_variance(values, est.value, work);
  est.half_width = kConfidenceZ * std::sqrt(var / static_cast<double>(values.size()));
  return est;
}

MomentEstimate lq_error_with_ci(std::span<const double> absolute_errors, double q) {
  require_errors(absolute_errors, q);
  const double scale = *std::max_element(absolute_errors.begin(), absolute_errors.end());
  if (scale == 0.0) return {0.0, 0.0};

  // Work with (e / max)^q so q = 5 on tiny errors neither underflows nor
  // loses the exact answer for constant samples.
  std::vector<double> powered(absolute_errors.size());
  for (std::size_t i = 0; i < powered.size(); ++i) {
    powered[i] = std::pow(absolute_errors[i] / scale, q);
  }
  const MomentEstimate moment = mean_with_ci(powered);
  MomentEstimate est;
  est.value = scale * std::pow(moment.value, 1.0 / q);
  // d/dm m^(1/q) = (1/q) m^(1/q - 1)
  est.half_width = moment.half_width == 0.0
                       ? 0.0
                       : scale * std::pow(moment.value, 1.0 / q - 1.0) / q * moment.half_width;
  return est;
}

double lq_error(std::span<const double> absolute_errors, double q) {
  return lq_error_with_ci(absolute_errors, q).value;
}

// ---------------------------------------------------------------------------
// Coupled simulation

namespace {

struct CoupledWorker {
  CoupledWorker(const SdeProblem& problem, const ConvergenceConfig& config)
      : reference(problem, SchemeSpec::make(config.reference_kind.value_or(config.kind),
                                            config.reference_level, problem.horizon)) {
    coarse.reserve(config.levels.size());
    for (int level : config.levels) {
      coarse.emplace_back(problem, SchemeSpec::make(config.kind, level, problem.horizon));
    }
  }

  void run(const SdeProblem& problem, const ConvergenceConfig& config, std::uint64_t path,
           std::span<std::optional<double>> errors) {
    sample_noise_into(problem, config.reference_level, config.master_seed, path, noise);
    coarsen_into(noise, config.reference_level, view);
    const PathResult ref = reference.simulate(view, problem.initial_value);
    for (std::size_t l = 0; l < config.levels.size(); ++l) {
      if (ref.diverged) {
        errors[l].reset();
        continue;
      }
      coarsen_into(noise, config.levels[l], view);
      const PathResult res = coarse[l].simulate(view, problem.initial_value);
      if (res.diverged) {
        errors[l].reset();
        continue;
      }
      double sq = 0.0;
      for (std::size_t i = 0; i < problem.dim_state; ++i) {
        const double diff = ref.terminal_value[i] - res.terminal_value[i];
        sq += diff * diff;
      }
      errors[l] = std::sqrt(sq);
    }
  }

  Stepper reference;
  std::vector<Stepper> coarse;
  NoiseRealization noise;
  CoarseView view;
};

}  // namespace

std::vector<std::optional<double>> coupled_path_errors(const SdeProblem& problem,
                                                       const ConvergenceConfig& config,
                                                       std::uint64_t path_index) {
  config.validate();
  CoupledWorker worker(problem, config);
  std::vector<std::optional<double>> errors(config.levels.size());
  worker.run(problem, config, path_index, errors);
  return errors;
}

ErrorTable run_strong_convergence(const SdeProblem& problem, const ConvergenceConfig& config) {
  config.validate();
  problem.validate();
  const std::size_t levels = config.levels.size();
  const std::size_t paths = config.paths;
  const std::size_t workers = std::min(resolve_workers(config.workers), paths);

  std::vector<std::optional<CoupledWorker>> pool(workers);
  // Constructing the first stepper up front surfaces incompatibility errors
  // on the calling thread.
  pool[0].emplace(problem, config);

  std::vector<std::optional<double>> errors(paths * levels);
  parallel_for(paths, workers, [&](std::size_t worker, std::size_t path) {
    if (!pool[worker]) pool[worker].emplace(problem, config);
    pool[worker]->run(problem, config, path,
                      std::span<std::optional<double>>(errors).subspan(path * levels, levels));
  });

  ErrorTable table;
  table.total_paths = paths;
  std::size_t diverged_paths = 0;
  for (std::size_t path = 0; path < paths; ++path) {
    for (std::size_t l = 0; l < levels; ++l) {
      if (!errors[path * levels + l]) {
        ++diverged_paths;
        break;
      }
    }
  }
  const bool tamed = is_tamed(config.kind) && is_tamed(config.reference_kind.value_or(config.kind));
  if (tamed && static_cast<double>(diverged_paths) >
                   kMaxTamedDivergenceFraction * static_cast<double>(paths)) {
    throw DivergenceError(problem.name + ": " + std::to_string(diverged_paths) + " of " +
                          std::to_string(paths) + " paths diverged under a tamed scheme");
  }

  std::vector<double> sample;
  for (std::size_t l = 0; l < levels; ++l) {
    sample.clear();
    for (std::size_t path = 0; path < paths; ++path) {
      if (const auto& e = errors[path * levels + l]) sample.push_back(*e);
    }
    const std::size_t diverged = paths - sample.size();
    for (double q : config.q_list) {
      ErrorRow row;
      row.level = config.levels[l];
      row.h = std::ldexp(problem.horizon, -row.level);
      row.q = q;
      row.paths_used = sample.size();
      row.diverged = diverged;
      if (sample.empty()) {
        row.error = std::numeric_limits<double>::quiet_NaN();
        row.half_width = std::numeric_limits<double>::quiet_NaN();
      } else {
        const MomentEstimate est = lq_error_with_ci(sample, q);
        row.error = est.value;
        row.half_width = est.half_width;
      }
      table.rows.push_back(row);
    }
  }
  return table;
}

RateFit fit_rate(const ErrorTable& table, double q) {
  RateFit fit;
  fit.q = q;
  std::vector<double> xs, ys;
  for (const auto& row : table.column(q)) {
    if (!(row.error > 0.0) || !std::isfinite(row.error)) {
      fit.excluded_levels.push_back(row.level);
      continue;
    }
    fit.levels_used.push_back(row.level);
    xs.push_back(-static_cast<double>(row.level));
    ys.push_back(std::log2(row.error));
  }
  if (xs.size() < 2) {
    throw DomainError("fit_rate: need at least two levels with positive error for q = " +
                      std::to_string(q));
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
    ss_res += r * r;
  }
  fit.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  return fit;
}

std::vector<MomentRow> moment_sweep(const SdeProblem& problem, SchemeKind kind,
                                    const std::vector<int>& levels, double p, std::size_t paths,
                                    std::uint64_t seed, std::size_t workers) {
  problem.validate();
  if (levels.empty()) throw ConfigError("moment_sweep: levels must be nonempty");
  if (!(p >= 1.0) || !std::isfinite(p)) throw ConfigError("moment_sweep: p must be >= 1");
  if (paths == 0) throw ConfigError("moment_sweep: paths must be positive");
  workers = std::min(resolve_workers(workers), paths);

  struct Worker {
    std::optional<Stepper> stepper;
    NoiseRealization noise;
    CoarseView view;
  };

  std::vector<MomentRow> rows;
  for (int level : levels) {
    const SchemeSpec spec = SchemeSpec::make(kind, level, problem.horizon);
    std::vector<Worker> pool(workers);
    pool[0].stepper.emplace(problem, spec);

    std::vector<double> sup(paths);
    std::vector<char> diverged(paths, 0);
    parallel_for(paths, workers, [&](std::size_t w, std::size_t path) {
      Worker& wk = pool[w];
      if (!wk.stepper) wk.stepper.emplace(problem, spec);
      sample_noise_into(problem, level, seed, path, wk.noise);
      coarsen_into(wk.noise, level, wk.view);
      const PathResult res = wk.stepper->simulate(wk.view, problem.initial_value);
      diverged[path] = res.diverged ? 1 : 0;
      sup[path] = res.sup_norm;
    });

    MomentRow row;
    row.level = level;
    row.p = p;
    std::vector<double> powered;
    for (std::size_t path = 0; path < paths; ++path) {
      if (diverged[path]) {
        ++row.diverged;
      } else {
        powered.push_back(std::pow(sup[path], p));
      }
    }
    if (is_tamed(kind) && static_cast<double>(row.diverged) >
                              kMaxTamedDivergenceFraction * static_cast<double>(paths)) {
      throw DivergenceError(problem.name + ": " + std::to_string(row.diverged) + " of " +
                            std::to_string(paths) + " paths diverged under a tamed scheme at level " +
                            std::to_string(level));
    }
    row.paths_used = powered.size();
    if (powered.empty()) {
      row.moment = std::numeric_limits<double>::quiet_NaN();
      row.half_width = std::numeric_limits<double>::quiet_NaN();
    } else {
      const MomentEstimate est = mean_with_ci(powered);
      row.moment = est.value;
      row.half_width = est.half_width;
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace tamed
