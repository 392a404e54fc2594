// Acceptance checks 1-9. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.
//
//   acceptance [--jobs N] [--out DIR] [--only 1,2,...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "env_golden.hpp"
#include "oracles.hpp"
#include "ppoue/envs.hpp"
#include "ppoue/harness.hpp"
#include "ppoue/metrics.hpp"
#include "ppoue/plot.hpp"

using namespace ppoue;

namespace {

// Pinned tolerances and sizes.
constexpr std::size_t kGradDraws = 1000;
constexpr double kGradStep = 1e-5;
constexpr double kGradRelTol = 1e-4;
constexpr double kGradPercentile = 99.0;
constexpr double kGradScaleFloor = 1e-6;
constexpr double kGradTimeLimitSec = 60.0;

constexpr std::size_t kRankLists = 1000;
constexpr std::size_t kRankMinLen = 10;
constexpr std::size_t kRankMaxLen = 5000;

constexpr std::uint64_t kEquivSteps = 20'480;
constexpr std::size_t kEquivSeeds = 3;

constexpr std::size_t kGaeTrajectories = 10'000;
constexpr std::size_t kGaeMaxLen = 16;
constexpr double kGaeTol = 1e-12;

constexpr double kSpearmanMin = 0.9;
constexpr double kLqrFractionOfOptimal = 0.9;
constexpr std::size_t kLqrSeedsRequired = 4;
constexpr double kRandomSigmas = 3.0;

const std::vector<double> kPuLevels{0.8, 0.9, 0.96, 0.98, 0.99};
const std::vector<double> kSweepLevels{0.8, 0.9, 0.96, 0.98, 0.99, 1.0};
const std::vector<double> kEfficacyLevels{0.9, 0.96, 0.98};
const std::vector<std::uint64_t> kSeeds{1, 2, 3, 4, 5};

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// 1 ------------------------------------------------------------------------

DenseNet random_actor(Rng& rng, int in, int out) {
  std::vector<int> hidden(1 + rng.below(2));
  for (int& h : hidden) h = 2 + static_cast<int>(rng.below(11));
  DenseNet net = make_mlp(in, hidden, out, 1.0, rng);
  for (auto& layer : net.mutable_layers())
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias[i] = rng.uniform(-0.5, 0.5);
  return net;
}

Vec uniform_vec(Rng& rng, int n, double lo, double hi) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.uniform(lo, hi);
  return v;
}

Outcome gradient_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(0xacce55);
  std::vector<double> logp_errs, surr_errs;
  for (std::size_t draw = 0; draw < kGradDraws; ++draw) {
    const int in = 1 + static_cast<int>(rng.below(5));
    const int out = 1 + static_cast<int>(rng.below(3));
    const DenseNet actor = random_actor(rng, in, out);
    const double log_std = rng.uniform(-1.6, -0.1);

    // log_prob of a fixed action under the actor's Gaussian, as a function of the actor parameters.
    const Vec x = uniform_vec(rng, in, -1.0, 1.0);
    const Vec a = actor.forward(x) + uniform_vec(rng, out, -1.0, 1.0);
    const auto dist = DiagonalGaussian::with_log_std(actor.forward(x), log_std);
    const Gradient g_logp = backward(actor, x, log_prob_grad_mean(dist, a));
    const Gradient n_logp = oracle::fd_gradient(
        actor,
        [&](const DenseNet& net) {
          const Vec mu = oracle::forward(net, x);
          const double var = std::exp(2.0 * log_std);
          double lp = 0.0;
          for (int i = 0; i < out; ++i)
            lp += -0.5 * (std::log(2.0 * std::numbers::pi) + std::log(var) + (a[i] - mu[i]) * (a[i] - mu[i]) / var);
          return lp;
        },
        kGradStep);
    const auto e1 = oracle::relative_errors(g_logp, n_logp, kGradScaleFloor);
    logp_errs.insert(logp_errs.end(), e1.begin(), e1.end());

    // Full clipped surrogate over a small buffer with perturbed behaviour log-probs.
    RolloutBuffer buf;
    const std::size_t n = 2 + rng.below(7);
    Vec adv(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      Transition t;
      t.state = uniform_vec(rng, in, -1.0, 1.0);
      const auto d = DiagonalGaussian::with_log_std(actor.forward(t.state), log_std);
      t.action = sample(d, rng);
      t.log_prob_old = log_prob(d, t.action) + rng.uniform(-0.4, 0.4);
      buf.push(t);
      adv[static_cast<Eigen::Index>(i)] = rng.uniform(-2.0, 2.0);
    }
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    const Gradient g_surr = surrogate_gradient(actor, buf, adv, idx, log_std, 0.2);
    const Gradient n_surr = oracle::fd_gradient(
        actor, [&](const DenseNet& net) { return oracle::surrogate(net, buf, adv, log_std, 0.2); }, kGradStep);
    const auto e2 = oracle::relative_errors(g_surr, n_surr, kGradScaleFloor);
    surr_errs.insert(surr_errs.end(), e2.begin(), e2.end());
  }
  const double p_logp = oracle::percentile(logp_errs, kGradPercentile);
  const double p_surr = oracle::percentile(surr_errs, kGradPercentile);
  const double elapsed = seconds_since(t0);
  return {p_logp < kGradRelTol && p_surr < kGradRelTol && elapsed < kGradTimeLimitSec,
          fmt("%zu draws; p99 rel err log_prob %.2e, surrogate %.2e (tol %.0e); %.1f s (limit %.0f s)", kGradDraws,
              p_logp, p_surr, kGradRelTol, elapsed, kGradTimeLimitSec)};
}

// 2 ------------------------------------------------------------------------

Outcome threshold_rank_property() {
  Rng rng(0x7a4c);
  std::size_t violations = 0;
  std::size_t u1_failures = 0;
  double worst_gap_in_units = 0.0;  // |fraction - (1 - U)| * L
  for (std::size_t trial = 0; trial < kRankLists; ++trial) {
    const std::size_t len = kRankMinLen + rng.below(kRankMaxLen - kRankMinLen + 1);
    std::vector<double> ratios(len);
    std::set<double> seen;
    for (auto& r : ratios) {
      do r = rng.uniform() * 2.0;
      while (!seen.insert(r).second);
    }
    const double u = rng.uniform();
    const double tau = select_threshold(ratios, u);
    const double fraction = static_cast<double>(oracle::count_below(ratios, tau)) / static_cast<double>(len);
    const double gap = std::abs(fraction - (1.0 - u));
    worst_gap_in_units = std::max(worst_gap_in_units, gap * static_cast<double>(len));
    if (gap > 1.0 / static_cast<double>(len)) ++violations;
    if (select_threshold(ratios, 1.0) != 0.0) ++u1_failures;
  }
  return {violations == 0 && u1_failures == 0,
          fmt("%zu lists; %zu outside 1/L (worst gap %.3f/L); U=1 nonzero tau in %zu", kRankLists, violations,
              worst_gap_in_units, u1_failures)};
}

// 3 ------------------------------------------------------------------------

struct Trajectory {
  std::vector<DenseNet> actors;
  std::vector<DenseNet> critics;
  std::string csv;
};

Trajectory record_run(const ExperimentConfig& cfg, std::uint64_t seed, GateMode mode) {
  Trajectory t;
  const TrainResult r = train(cfg, seed, mode, [&](std::size_t, const DenseNet& a, const DenseNet& c) {
    t.actors.push_back(a);
    t.critics.push_back(c);
  });
  t.csv = metrics_csv(r.rows);
  return t;
}

Outcome ppo_equivalence(unsigned jobs) {
  ExperimentConfig cfg;
  cfg.total_steps = kEquivSteps;
  cfg.uncertainty = 1.0;
  std::vector<Trajectory> gated(kEquivSeeds), ablated(kEquivSeeds);
  parallel_for(2 * kEquivSeeds, jobs, [&](std::size_t i) {
    const std::uint64_t seed = kSeeds[i / 2];
    if (i % 2 == 0)
      gated[i / 2] = record_run(cfg, seed, GateMode::kGated);
    else
      ablated[i / 2] = record_run(cfg, seed, GateMode::kAblated);
  });
  std::size_t identical = 0;
  std::size_t updates = 0;
  for (std::size_t s = 0; s < kEquivSeeds; ++s) {
    const auto& g = gated[s];
    const auto& a = ablated[s];
    updates += g.actors.size();
    if (g.csv == a.csv && g.actors == a.actors && g.critics == a.critics &&
        g.actors.size() == kEquivSteps / cfg.update_interval)
      ++identical;
  }
  return {identical == kEquivSeeds,
          fmt("%zu/%zu seeds bit-identical (parameters after each of %zu updates + metrics CSV), T=%llu", identical,
              kEquivSeeds, updates, static_cast<unsigned long long>(kEquivSteps))};
}

// 4 ------------------------------------------------------------------------

Outcome gae_oracle() {
  Rng rng(0x6ae);
  double worst = 0.0;
  for (std::size_t trial = 0; trial < kGaeTrajectories; ++trial) {
    const std::size_t len = 1 + rng.below(kGaeMaxLen);
    std::vector<double> rewards(len);
    std::vector<bool> dones(len);
    RolloutBuffer buf;
    for (std::size_t i = 0; i < len; ++i) {
      rewards[i] = rng.uniform(-10.0, 10.0);
      dones[i] = i + 1 == len || rng.uniform() < 0.15;
      Transition t;
      t.state = Vec::Zero(1);
      t.action = Vec::Zero(1);
      t.reward = rewards[i];
      t.value_estimate = 0.0;
      t.done = dones[i];
      buf.push(t);
    }
    const double gamma = rng.uniform(0.5, 1.0);
    const auto out = compute_advantages(buf, AdvantageConfig{gamma, 1.0, false}, 0.0);
    const auto ref = oracle::discounted_returns(rewards, dones, gamma);
    for (std::size_t i = 0; i < len; ++i)
      worst = std::max(worst, std::abs(out.advantages[static_cast<Eigen::Index>(i)] - ref[i]));
  }
  return {worst <= kGaeTol, fmt("%zu trajectories (len <= %zu); max abs error %.2e (tol %.0e)", kGaeTrajectories,
                                kGaeMaxLen, worst, kGaeTol)};
}

// 5-7 ----------------------------------------------------------------------

struct Experiments {
  SweepResult pendulum;
  ExperimentConfig pendulum_cfg;
  std::vector<EvalReport> lqr_trained;
  std::vector<EvalReport> lqr_optimal;
  std::vector<bool> lqr_ok;
  EvalReport pendulum_random;
};

Experiments run_experiments(unsigned jobs, const std::filesystem::path& out) {
  Experiments ex;
  ex.pendulum_cfg.env = "pendulum";
  ex.pendulum_cfg.jobs = jobs;
  ex.pendulum_cfg.output_dir = (out / "pendulum_sweep").string();
  std::fprintf(stderr, "acceptance: pendulum sweep, %zu runs of T=%llu\n", kSweepLevels.size() * kSeeds.size(),
               static_cast<unsigned long long>(ex.pendulum_cfg.total_steps));
  ex.pendulum = sweep(ex.pendulum_cfg, kSweepLevels, kSeeds, true);

  std::vector<MetricsRow> all_rows;
  for (const auto& m : ex.pendulum.metrics) all_rows.insert(all_rows.end(), m.begin(), m.end());
  {
    std::ofstream f(std::filesystem::path(ex.pendulum_cfg.output_dir) / "metrics_all.csv");
    write_metrics_csv(f, all_rows);
  }
  emit_plots(all_rows, ex.pendulum.table, ex.pendulum_cfg.output_dir);

  // Random baseline pooled over the same evaluation seeds as the trained policies.
  for (std::uint64_t seed : kSeeds) {
    const EvalReport r = evaluate_random("pendulum", ex.pendulum_cfg.test_horizon, ex.pendulum_cfg.eval_episodes,
                                         eval_seed_for(seed));
    ex.pendulum_random.returns.insert(ex.pendulum_random.returns.end(), r.returns.begin(), r.returns.end());
  }
  const auto& rr = ex.pendulum_random.returns;
  ex.pendulum_random.mean = std::accumulate(rr.begin(), rr.end(), 0.0) / static_cast<double>(rr.size());
  double acc = 0.0;
  for (double x : rr) acc += (x - ex.pendulum_random.mean) * (x - ex.pendulum_random.mean);
  ex.pendulum_random.stddev = std::sqrt(acc / static_cast<double>(rr.size()));

  ExperimentConfig lqr;
  lqr.env = "lqr";
  lqr.uncertainty = 1.0;
  std::fprintf(stderr, "acceptance: lqr baseline, %zu runs of T=%llu\n", kSeeds.size(),
               static_cast<unsigned long long>(lqr.total_steps));
  const Mat gain = lqr_optimal_policy(LqrSystem::standard());
  ex.lqr_trained.resize(kSeeds.size());
  ex.lqr_optimal.resize(kSeeds.size());
  ex.lqr_ok.resize(kSeeds.size());
  parallel_for(kSeeds.size(), jobs, [&](std::size_t i) {
    const std::uint64_t seed = kSeeds[i];
    const TrainResult r = train(lqr, seed);
    ex.lqr_ok[i] = !r.fault;
    ex.lqr_trained[i] = evaluate(r.checkpoint, "lqr", lqr.test_horizon, lqr.eval_episodes, eval_seed_for(seed));
    ex.lqr_optimal[i] = evaluate_policy([&](const Vec& s, Rng&) { return Vec(-gain * s); }, "lqr", lqr.test_horizon,
                                        lqr.eval_episodes, eval_seed_for(seed));
  });
  return ex;
}

const SweepRow& row_for(const SweepResult& sw, double u) {
  return *std::find_if(sw.table.begin(), sw.table.end(), [&](const SweepRow& r) { return r.uncertainty == u; });
}

Outcome pu_monotonicity(const Experiments& ex) {
  std::vector<double> us, pus;
  std::string pairs;
  for (double u : kPuLevels) {
    const SweepRow& r = row_for(ex.pendulum, u);
    us.push_back(u);
    pus.push_back(r.pu_mean);
    pairs += fmt(" %g:%.4f", u, r.pu_mean);
  }
  const double rho = spearman(us, pus);
  bool complete = true;
  for (double u : kPuLevels) complete = complete && row_for(ex.pendulum, u).runs_failed == 0;
  return {complete && rho >= kSpearmanMin,
          fmt("Spearman(U, mean PU) = %.3f (min %.1f); U:PU", rho, kSpearmanMin) + pairs};
}

Outcome learning_works(const Experiments& ex) {
  std::size_t good = 0;
  std::string per_seed;
  for (std::size_t i = 0; i < kSeeds.size(); ++i) {
    // Returns are negative costs: the trained policy reaches fraction R_opt / R_trained of optimal.
    const double frac = ex.lqr_optimal[i].mean / ex.lqr_trained[i].mean;
    const bool ok = ex.lqr_ok[i] && ex.lqr_trained[i].mean < 0.0 && frac >= kLqrFractionOfOptimal;
    good += ok ? 1 : 0;
    per_seed += fmt(" %.3f", frac);
  }
  const SweepRow& ppo = row_for(ex.pendulum, 1.0);
  const double bar = ex.pendulum_random.mean + kRandomSigmas * ex.pendulum_random.stddev;
  const bool pend_ok = ppo.runs_failed == 0 && ppo.test_mean > bar;
  return {good >= kLqrSeedsRequired && pend_ok,
          fmt("LQR: %zu/%zu seeds >= %.0f%% of optimal (fractions:", good, kSeeds.size(),
              100.0 * kLqrFractionOfOptimal) +
              per_seed +
              fmt("); pendulum R_test %.1f vs random %.1f + %.0f sd %.1f = %.1f", ppo.test_mean,
                  ex.pendulum_random.mean, kRandomSigmas, ex.pendulum_random.stddev, bar)};
}

Outcome gate_efficacy(const Experiments& ex) {
  const SweepRow& ppo = row_for(ex.pendulum, 1.0);
  bool any = false;
  std::string best;
  for (double u : kEfficacyLevels) {
    const SweepRow& r = row_for(ex.pendulum, u);
    if (r.runs_failed == 0 && ppo.runs_failed == 0 && r.test_mean >= ppo.test_mean) {
      any = true;
      best += " " + r.scheme;
    }
  }
  return {any, fmt("PPO R_test %.1f; schemes at or above it among U in {0.9, 0.96, 0.98}:%s", ppo.test_mean,
                   best.empty() ? " none" : best.c_str())};
}

void print_ordering(const SweepResult& sw) {
  std::vector<SweepRow> rows = sw.table;
  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) { return a.test_mean > b.test_mean; });
  std::printf("\nPendulum ordering by mean R_test (5 seeds):\n");
  std::printf("  %-12s %10s %10s %8s %8s %8s %12s\n", "scheme", "R_test", "sd", "PU", "PU sd", "explore", "R_train");
  for (const auto& r : rows)
    std::printf("  %-12s %10.1f %10.1f %8.4f %8.4f %8.4f %12.1f\n", r.scheme.c_str(), r.test_mean, r.test_std,
                r.pu_mean, r.pu_std, r.explore_mean, r.final_train_mean);
  std::printf("\n");
}

// 8 ------------------------------------------------------------------------

Outcome determinism(const Experiments* ex, unsigned jobs) {
  std::size_t checked = 0, identical = 0;
  std::string detail;
  // Small runs repeated twice, for every environment.
  std::vector<std::pair<ExperimentConfig, std::uint64_t>> pairs;
  for (const auto& env : environment_names()) {
    ExperimentConfig cfg;
    cfg.env = env;
    cfg.total_steps = 3 * 2048;
    cfg.uncertainty = 0.9;
    pairs.emplace_back(cfg, 11);
  }
  std::vector<std::string> first(pairs.size()), second(pairs.size());
  parallel_for(2 * pairs.size(), jobs, [&](std::size_t i) {
    const auto& [cfg, seed] = pairs[i / 2];
    (i % 2 == 0 ? first : second)[i / 2] = metrics_csv(train(cfg, seed).rows);
  });
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    ++checked;
    identical += first[i] == second[i] ? 1 : 0;
  }
  // A full-length sweep cell (run concurrently with others) rerun on its own.
  if (ex) {
    ExperimentConfig cfg = ex->pendulum_cfg;
    cfg.uncertainty = 0.96;
    const auto it = std::find_if(ex->pendulum.cells.begin(), ex->pendulum.cells.end(),
                                 [](const SweepCell& c) { return c.uncertainty == 0.96 && c.seed == 1; });
    const auto& sweep_rows = ex->pendulum.metrics[static_cast<std::size_t>(it - ex->pendulum.cells.begin())];
    ++checked;
    identical += metrics_csv(train(cfg, 1).rows) == metrics_csv(sweep_rows) ? 1 : 0;
    detail = " incl. pendulum U=0.96 seed 1 at full length against its sweep run";
  }
  return {identical == checked, fmt("%zu/%zu reruns byte-identical", identical, checked) + detail};
}

// 9 ------------------------------------------------------------------------

Outcome golden_environments() {
  const auto stored = golden::read(std::string(PPOUE_FIXTURE_DIR) + "/env_golden.txt");
  std::size_t steps = 0;
  std::string first_error;
  std::size_t ok = 0;
  for (const auto& t : stored) {
    steps += t.steps.size();
    const std::string err = golden::replay_mismatch(t);
    if (err.empty())
      ++ok;
    else if (first_error.empty())
      first_error = err;
  }
  return {!stored.empty() && ok == stored.size(),
          fmt("%zu/%zu stored trajectories (%zu steps) reproduced bit-exactly", ok, stored.size(), steps) +
              (first_error.empty() ? "" : "; " + first_error)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  unsigned jobs = 0;
  std::string out = "acceptance_runs";
  std::vector<int> only;
  app.add_option("-j,--jobs", jobs, "parallel runs; 0 = hardware threads");
  app.add_option("-o,--out", out, "directory for sweep outputs and figures");
  app.add_option("--only", only, "run a subset of criteria")->delimiter(',')->check(CLI::Range(1, 9));
  CLI11_PARSE(app, argc, argv);
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  auto wanted = [&](int c) { return only.empty() || std::find(only.begin(), only.end(), c) != only.end(); };

  std::map<int, Outcome> results;
  auto run = [&](int c, const std::function<Outcome()>& fn) {
    if (!wanted(c)) return;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      results[c] = fn();
    } catch (const std::exception& e) {
      results[c] = {false, std::string("exception: ") + e.what()};
    }
    std::fprintf(stderr, "acceptance: criterion %d done in %.1f s\n", c, seconds_since(t0));
  };

  run(1, gradient_correctness);
  run(2, threshold_rank_property);
  run(3, [&] { return ppo_equivalence(jobs); });
  run(4, gae_oracle);

  std::optional<Experiments> ex;
  if (wanted(5) || wanted(6) || wanted(7)) {
    try {
      ex = run_experiments(jobs, out);
      print_ordering(ex->pendulum);
    } catch (const std::exception& e) {
      for (int c : {5, 6, 7})
        if (wanted(c)) results[c] = {false, std::string("experiment failed: ") + e.what()};
    }
  }
  if (ex) {
    run(5, [&] { return pu_monotonicity(*ex); });
    run(6, [&] { return learning_works(*ex); });
    run(7, [&] { return gate_efficacy(*ex); });
  }
  run(8, [&] { return determinism(ex ? &*ex : nullptr, jobs); });
  run(9, golden_environments);

  static const char* names[] = {"",
                                "gradient correctness",
                                "threshold-rank property",
                                "PPO equivalence at U=1",
                                "GAE oracle",
                                "PU-vs-U monotonicity",
                                "learning works",
                                "gate efficacy",
                                "determinism",
                                "golden environments"};
  bool all = true;
  for (const auto& [c, o] : results) {
    std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", c, names[c], o.detail.c_str());
    all = all && o.pass;
  }
  std::fflush(stdout);
  return all ? 0 : 1;
}
