#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ppoue/advantage.hpp"
#include "ppoue/checkpoint.hpp"
#include "ppoue/gaussian_policy.hpp"
#include "ppoue/numerics.hpp"
#include "ppoue/ppo.hpp"
#include "ppoue/ue_gate.hpp"

namespace ppoue {

/// Training/evaluation settings. Defaults are the desk-scale profile.
struct ExperimentConfig {
  std::string env = "pendulum";
  std::uint64_t total_steps = 200'000;    // T
  std::size_t train_horizon = 512;        // T_e
  std::size_t test_horizon = 2048;        // T'_e
  std::size_t update_interval = 2048;     // T_u
  double uncertainty = 1.0;               // U
  double initial_uncertainty = 1.0;       // U_0
  double initial_threshold = 0.0;         // tau_0
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  PpoConfig ppo;
  AdvantageConfig advantage;
  double log_std_start = -0.1;
  double log_std_end = -1.6;
  double denom_guard = 1e-8;
  AdamConfig actor_adam;
  AdamConfig critic_adam;
  std::vector<int> hidden{64, 64};
  std::size_t eval_episodes = 100;
  std::string output_dir = "runs";
  unsigned jobs = 1;

  /// Long profile: T = 1e6 and ten seeds.
  static ExperimentConfig full_profile();

  /// Throws std::invalid_argument on a violated invariant.
  void validate() const;

  [[nodiscard]] AnnealSchedule anneal() const { return {log_std_start, log_std_end, total_steps}; }
};

/// One row per closed update interval.
struct MetricsRow {
  std::string env;
  std::uint64_t seed = 0;
  double uncertainty = 1.0;
  std::uint64_t step = 0;        // t_1 at the boundary
  std::size_t update = 0;        // k of the interval just closed
  double train_return = 0.0;     // mean return of episodes finished in the interval (nan if none)
  std::size_t train_episodes = 0;
  double tau = 0.0;              // threshold in force during the interval
  double posterior_uncertainty = 1.0;
  double explore_fraction = 1.0;
  double log_std = 0.0;
  UpdateStats stats;
};

struct EvalReport {
  std::vector<double> returns;
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t horizon = 0;
};

/// Whether the exploration gate is compiled into the rollout loop.
enum class GateMode { kGated, kAblated };

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<MetricsRow> rows;
  std::optional<std::string> fault;  // set when a numerical fault ended the run early
};

/// Called after every update with (k, actor, critic).
using UpdateObserver = std::function<void(std::size_t, const DenseNet&, const DenseNet&)>;

/*!
 * Runs the gated rollout/update loop for `cfg.total_steps` environment steps.
 * Every `update_interval` steps: close the ratio ranking, compute advantages,
 * run the PPO update, replace the snapshot with the pre-update actor, pick the
 * next threshold and emit a MetricsRow. Deterministic in (cfg, seed).
 */
TrainResult train(const ExperimentConfig& cfg, std::uint64_t seed, GateMode mode = GateMode::kGated,
                  const UpdateObserver& observer = {});

using ActionPolicy = std::function<Vec(const Vec& state, Rng& rng)>;

/// Runs `episodes` rollouts of `policy` up to `horizon` steps each.
EvalReport evaluate_policy(const ActionPolicy& policy, const std::string& env, std::size_t horizon,
                           std::size_t episodes, std::uint64_t seed);

/// Deterministic mean-action rollouts of the checkpoint's actor.
EvalReport evaluate(const Checkpoint& ckpt, const std::string& env, std::size_t horizon, std::size_t episodes,
                    std::uint64_t seed);

/// Uniform random actions within the environment bounds.
EvalReport evaluate_random(const std::string& env, std::size_t horizon, std::size_t episodes, std::uint64_t seed);

/// Seed used for the post-training evaluation of a run with training seed `seed`.
std::uint64_t eval_seed_for(std::uint64_t seed);

struct SweepCell {
  double uncertainty = 1.0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double test_return = 0.0;           // mean R_test over eval episodes
  double test_return_std = 0.0;
  double mean_posterior_uncertainty = 0.0;
  double mean_explore_fraction = 0.0;
  double final_train_return = 0.0;
};

struct SweepRow {
  std::string scheme;
  double uncertainty = 1.0;
  std::size_t runs_ok = 0;
  std::size_t runs_failed = 0;
  double test_mean = 0.0;
  double test_std = 0.0;
  double pu_mean = 0.0;
  double pu_std = 0.0;
  double explore_mean = 0.0;
  double final_train_mean = 0.0;
};

struct SweepResult {
  std::vector<SweepCell> cells;  // U-major, then seed order
  std::vector<SweepRow> table;   // one row per U
  std::vector<std::vector<MetricsRow>> metrics;  // parallel to cells
};

/// "PPO" for U = 1, otherwise "PPO-UE_<U>".
std::string scheme_name(double uncertainty);

/*!
 * Trains and evaluates every (U, seed) cell, `cfg.jobs` at a time. A faulted
 * cell is marked failed and the others continue. When `write_outputs` is set
 * each run's metrics CSV and checkpoint go to cfg.output_dir together with
 * sweep.csv and sweep_cells.csv.
 */
SweepResult sweep(const ExperimentConfig& cfg, const std::vector<double>& uncertainties,
                  const std::vector<std::uint64_t>& seeds, bool write_outputs = false);

/// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

/// Mean over finite entries; nan when there are none.
double finite_mean(const std::vector<double>& v);

/// Runs fn(i) for i in [0, count) on up to `jobs` threads.
void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& fn);

}  // namespace ppoue
