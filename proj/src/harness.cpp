#include "ppoue/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "ppoue/envs.hpp"
#include "ppoue/metrics.hpp"

namespace ppoue {
namespace {

// Random stream ids derived from the run seed.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kEpisodeStream = 2;
constexpr std::uint64_t kActionStream = 3;
constexpr std::uint64_t kShuffleStream = 4;
constexpr std::uint64_t kEvalStream = 5;

double population_std(const std::vector<double>& v, double mean) {
  if (v.empty()) return 0.0;
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

template <GateMode Mode>
TrainResult train_impl(const ExperimentConfig& cfg, std::uint64_t seed, const UpdateObserver& observer) {
  cfg.validate();
  auto env = make_environment(cfg.env, cfg.train_horizon);
  const EnvSpec& spec = env->spec();

  Rng init_rng = Rng::stream(seed, kInitStream);
  Rng episode_rng = Rng::stream(seed, kEpisodeStream);
  Rng action_rng = Rng::stream(seed, kActionStream);
  Rng shuffle_rng = Rng::stream(seed, kShuffleStream);

  DenseNet actor = make_mlp(spec.obs_dim, cfg.hidden, spec.action_dim, 0.01, init_rng);
  DenseNet critic = make_mlp(spec.obs_dim, cfg.hidden, 1, 1.0, init_rng);
  AdamState actor_opt(actor, cfg.actor_adam);
  AdamState critic_opt(critic, cfg.critic_adam);
  const AnnealSchedule sched = cfg.anneal();

  GateConfig gate_cfg;
  gate_cfg.uncertainty = cfg.uncertainty;
  gate_cfg.denom_guard = cfg.denom_guard;

  ThresholdState thr;
  thr.tau = cfg.initial_threshold;
  thr.uncertainty = cfg.initial_uncertainty;
  thr.explore_all = cfg.initial_uncertainty >= 1.0;
  std::optional<PolicySnapshot> snapshot;

  RolloutBuffer buf(cfg.update_interval);
  std::vector<double> ratios;
  ratios.reserve(cfg.update_interval);
  std::vector<double> finished_returns;
  std::size_t explored = 0;

  TrainResult result;
  Vec obs = env->reset(episode_rng.next_u64());
  double episode_return = 0.0;

  for (std::uint64_t t1 = 0; t1 < cfg.total_steps;) {
    const double log_std = log_std_at(sched, t1);
    const Vec mu = actor.forward(obs);
    const DiagonalGaussian dist = DiagonalGaussian::with_log_std(mu, log_std);

    bool explore = true;
    double ratio = std::numeric_limits<double>::infinity();
    if constexpr (Mode == GateMode::kGated) {
      if (snapshot)
        ratio = action_distance_ratio(mean_action(snapshot->actor(), obs), mu, gate_cfg.denom_guard);
      explore = gate(ratio, thr) == GateDecision::kExplore;
      ratios.push_back(ratio);
    }
    const Vec action = explore ? sample(dist, action_rng) : mu;
    if (explore) ++explored;

    Transition tr;
    tr.state = obs;
    tr.action = action;
    tr.log_prob_old = log_prob(dist, action);
    tr.value_estimate = critic.forward(obs)[0];
    tr.explored = explore;
    tr.ratio = ratio;

    const StepResult res = env->step(action);
    tr.reward = res.reward;
    tr.done = res.done;
    buf.push(std::move(tr));
    episode_return += res.reward;
    ++t1;

    if (res.done) {
      finished_returns.push_back(episode_return);
      episode_return = 0.0;
      obs = env->reset(episode_rng.next_u64());
    } else {
      obs = res.state;
    }

    if (t1 % cfg.update_interval != 0) continue;

    // Update boundary.
    MetricsRow row;
    row.env = cfg.env;
    row.seed = seed;
    row.uncertainty = cfg.uncertainty;
    row.step = t1;
    row.update = thr.k;
    row.train_episodes = finished_returns.size();
    row.train_return = finished_returns.empty() ? std::nan("")
                                                : std::accumulate(finished_returns.begin(), finished_returns.end(), 0.0) /
                                                      static_cast<double>(finished_returns.size());
    row.tau = thr.tau;
    row.explore_fraction = static_cast<double>(explored) / static_cast<double>(buf.size());
    if constexpr (Mode == GateMode::kGated) {
      thr = close_interval(std::move(thr), ratios);
      row.posterior_uncertainty = posterior_uncertainty(thr);
    } else {
      row.posterior_uncertainty = 1.0;
    }

    const double bootstrap = buf.items().back().done ? 0.0 : critic.forward(obs)[0];
    const AdvantageResult adv = compute_advantages(buf, cfg.advantage, bootstrap);
    const double update_log_std = log_std_at(sched, t1);
    row.log_std = update_log_std;

    DenseNet pre_update = actor;
    try {
      row.stats = ppo_update(actor, critic, actor_opt, critic_opt, buf, adv, update_log_std, cfg.ppo, shuffle_rng);
    } catch (const NumericalFault& e) {
      result.fault = e.what();
      break;
    }
    if (observer) observer(thr.k, actor, critic);

    if constexpr (Mode == GateMode::kGated) {
      snapshot.emplace(std::move(pre_update), thr.k);
      thr = advance_interval(thr, gate_cfg, ratios);
    } else {
      thr.k += 1;
    }
    result.rows.push_back(std::move(row));

    buf.clear();
    ratios.clear();
    finished_returns.clear();
    explored = 0;
  }

  result.checkpoint = Checkpoint{cfg.env, cfg.total_steps, log_std_at(sched, cfg.total_steps), std::move(actor),
                                 std::move(critic)};
  return result;
}

}  // namespace

ExperimentConfig ExperimentConfig::full_profile() {
  ExperimentConfig cfg;
  cfg.total_steps = 1'000'000;
  cfg.seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  return cfg;
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("ExperimentConfig: " + what); };
  if (total_steps == 0) fail("total_steps must be positive");
  if (update_interval == 0) fail("update_interval must be positive");
  if (update_interval > total_steps) fail("update_interval must not exceed total_steps");
  if (train_horizon == 0 || test_horizon == 0) fail("horizons must be positive");
  if (train_horizon > test_horizon) fail("train_horizon must not exceed test_horizon");
  if (seeds.empty()) fail("seeds must be nonempty");
  if (!(uncertainty >= 0.0 && uncertainty <= 1.0)) fail("U must lie in [0, 1]");
  if (!(initial_uncertainty >= 0.0 && initial_uncertainty <= 1.0)) fail("U_0 must lie in [0, 1]");
  if (!(initial_threshold >= 0.0)) fail("tau_0 must be nonnegative");
  if (!(ppo.clip > 0.0)) fail("clip must be positive");
  if (ppo.epochs < 1) fail("epochs must be >= 1");
  if (ppo.minibatch_size == 0) fail("minibatch_size must be positive");
  if (!(advantage.gamma > 0.0 && advantage.gamma <= 1.0)) fail("gamma must lie in (0, 1]");
  if (!(advantage.lambda >= 0.0 && advantage.lambda <= 1.0)) fail("lambda must lie in [0, 1]");
  if (!(denom_guard > 0.0)) fail("denom_guard must be positive");
  if (eval_episodes == 0) fail("eval_episodes must be positive");
  if (std::find(environment_names().begin(), environment_names().end(), env) == environment_names().end())
    fail("unknown environment '" + env + "'");
}

TrainResult train(const ExperimentConfig& cfg, std::uint64_t seed, GateMode mode, const UpdateObserver& observer) {
  return mode == GateMode::kGated ? train_impl<GateMode::kGated>(cfg, seed, observer)
                                  : train_impl<GateMode::kAblated>(cfg, seed, observer);
}

EvalReport evaluate_policy(const ActionPolicy& policy, const std::string& env_name, std::size_t horizon,
                           std::size_t episodes, std::uint64_t seed) {
  auto env = make_environment(env_name, horizon);
  Rng episode_rng = Rng::stream(seed, kEvalStream);
  Rng policy_rng = Rng::stream(seed, kActionStream);
  EvalReport report;
  report.horizon = horizon;
  report.returns.reserve(episodes);
  for (std::size_t ep = 0; ep < episodes; ++ep) {
    Vec obs = env->reset(episode_rng.next_u64());
    double total = 0.0;
    while (!env->done()) {
      const StepResult r = env->step(policy(obs, policy_rng));
      total += r.reward;
      obs = r.state;
    }
    report.returns.push_back(total);
  }
  report.mean = report.returns.empty()
                    ? 0.0
                    : std::accumulate(report.returns.begin(), report.returns.end(), 0.0) / static_cast<double>(episodes);
  report.stddev = population_std(report.returns, report.mean);
  return report;
}

EvalReport evaluate(const Checkpoint& ckpt, const std::string& env_name, std::size_t horizon, std::size_t episodes,
                    std::uint64_t seed) {
  const auto probe = make_environment(env_name, horizon);
  if (ckpt.actor.input_dim() != probe->spec().obs_dim || ckpt.actor.output_dim() != probe->spec().action_dim)
    throw std::invalid_argument("evaluate: checkpoint actor does not match environment '" + env_name + "'");
  const DenseNet& actor = ckpt.actor;
  return evaluate_policy([&](const Vec& s, Rng&) { return mean_action(actor, s); }, env_name, horizon, episodes,
                         seed);
}

EvalReport evaluate_random(const std::string& env_name, std::size_t horizon, std::size_t episodes,
                           std::uint64_t seed) {
  const auto probe = make_environment(env_name, horizon);
  const Vec lo = probe->spec().action_low;
  const Vec hi = probe->spec().action_high;
  return evaluate_policy(
      [&](const Vec&, Rng& rng) {
        Vec a(lo.size());
        for (Eigen::Index i = 0; i < a.size(); ++i) a[i] = rng.uniform(lo[i], hi[i]);
        return a;
      },
      env_name, horizon, episodes, seed);
}

std::uint64_t eval_seed_for(std::uint64_t seed) { return mix_seed(seed ^ 0x6576616c756174ULL); }

std::string scheme_name(double uncertainty) {
  if (uncertainty >= 1.0) return "PPO";
  char buf[32];
  std::snprintf(buf, sizeof buf, "PPO-UE_%g", uncertainty);
  return buf;
}

double finite_mean(const std::vector<double>& v) {
  double acc = 0.0;
  std::size_t n = 0;
  for (double x : v)
    if (std::isfinite(x)) {
      acc += x;
      ++n;
    }
  return n ? acc / static_cast<double>(n) : std::nan("");
}

void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  const unsigned workers = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(count)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
}

SweepResult sweep(const ExperimentConfig& cfg, const std::vector<double>& uncertainties,
                  const std::vector<std::uint64_t>& seeds, bool write_outputs) {
  if (uncertainties.empty() || seeds.empty()) throw std::invalid_argument("sweep: empty U or seed list");
  namespace fs = std::filesystem;
  if (write_outputs) fs::create_directories(cfg.output_dir);

  SweepResult out;
  for (double u : uncertainties)
    for (std::uint64_t s : seeds) {
      SweepCell cell;
      cell.uncertainty = u;
      cell.seed = s;
      out.cells.push_back(std::move(cell));
    }
  out.metrics.resize(out.cells.size());

  std::mutex log_mutex;
  parallel_for(out.cells.size(), cfg.jobs, [&](std::size_t i) {
    SweepCell& cell = out.cells[i];
    try {
      ExperimentConfig run_cfg = cfg;
      run_cfg.uncertainty = cell.uncertainty;
      TrainResult tr = train(run_cfg, cell.seed);
      std::vector<double> pus, explores;
      for (const MetricsRow& r : tr.rows) {
        pus.push_back(r.posterior_uncertainty);
        explores.push_back(r.explore_fraction);
      }
      cell.mean_posterior_uncertainty = finite_mean(pus);
      cell.mean_explore_fraction = finite_mean(explores);
      cell.final_train_return = tr.rows.empty() ? std::nan("") : tr.rows.back().train_return;
      if (write_outputs) {
        const std::string stem = cfg.env + "_" + scheme_name(cell.uncertainty) + "_seed" + std::to_string(cell.seed);
        std::ofstream csv(fs::path(cfg.output_dir) / ("metrics_" + stem + ".csv"));
        write_metrics_csv(csv, tr.rows);
        save_checkpoint(tr.checkpoint, fs::path(cfg.output_dir) / ("checkpoint_" + stem + ".bin"));
      }
      out.metrics[i] = std::move(tr.rows);
      if (tr.fault) throw NumericalFault(*tr.fault);
      const EvalReport ev =
          evaluate(tr.checkpoint, cfg.env, cfg.test_horizon, cfg.eval_episodes, eval_seed_for(cell.seed));
      cell.test_return = ev.mean;
      cell.test_return_std = ev.stddev;
      cell.ok = true;
    } catch (const std::exception& e) {
      cell.ok = false;
      cell.error = e.what();
      std::lock_guard lock(log_mutex);
      std::fprintf(stderr, "sweep: U=%g seed=%llu failed: %s\n", cell.uncertainty,
                   static_cast<unsigned long long>(cell.seed), e.what());
    }
  });

  for (double u : uncertainties) {
    SweepRow row;
    row.scheme = scheme_name(u);
    row.uncertainty = u;
    std::vector<double> tests, pus, explores, finals;
    for (const SweepCell& c : out.cells) {
      if (c.uncertainty != u) continue;
      if (!c.ok) {
        ++row.runs_failed;
        continue;
      }
      ++row.runs_ok;
      tests.push_back(c.test_return);
      pus.push_back(c.mean_posterior_uncertainty);
      explores.push_back(c.mean_explore_fraction);
      finals.push_back(c.final_train_return);
    }
    row.test_mean = finite_mean(tests);
    row.test_std = tests.empty() ? std::nan("") : population_std(tests, row.test_mean);
    row.pu_mean = finite_mean(pus);
    row.pu_std = pus.empty() ? std::nan("") : population_std(pus, row.pu_mean);
    row.explore_mean = finite_mean(explores);
    row.final_train_mean = finite_mean(finals);
    out.table.push_back(std::move(row));
  }

  if (write_outputs) {
    std::ofstream table(fs::path(cfg.output_dir) / "sweep.csv");
    write_sweep_csv(table, out.table);
    std::ofstream cells(fs::path(cfg.output_dir) / "sweep_cells.csv");
    write_sweep_cells_csv(cells, out.cells);
  }
  return out;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("spearman: need two equal-length samples");
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / static_cast<double>(rx.size());
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / static_cast<double>(ry.size());
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace ppoue
