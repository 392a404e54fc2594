// Command line front end: train, eval, sweep and plot.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "ppoue/checkpoint.hpp"
#include "ppoue/envs.hpp"
#include "ppoue/harness.hpp"
#include "ppoue/metrics.hpp"
#include "ppoue/plot.hpp"

namespace fs = std::filesystem;
using namespace ppoue;

namespace {

struct CliState {
  ExperimentConfig cfg;
  std::string profile = "desk";
  double max_grad_norm = 0.5;
  CLI::Option* total_steps_opt = nullptr;
  CLI::Option* seeds_opt = nullptr;
};

void add_experiment_options(CLI::App& app, CliState& st) {
  ExperimentConfig& c = st.cfg;
  app.add_option("--profile", st.profile, "desk (T=2e5, 5 seeds) or full (T=1e6, 10 seeds)")
      ->check(CLI::IsMember({"desk", "full"}))
      ->capture_default_str();
  app.add_option("--env", c.env, "pendulum | point-mass | lqr")->check(CLI::IsMember(environment_names()))->capture_default_str();
  st.total_steps_opt = app.add_option("--total-steps", c.total_steps, "T: total training steps")->capture_default_str();
  app.add_option("--train-horizon", c.train_horizon, "T_e: maximum training episode length")->capture_default_str();
  app.add_option("--test-horizon", c.test_horizon, "T'_e: maximum test episode length")->capture_default_str();
  app.add_option("--update-interval", c.update_interval, "T_u: policy update interval")->capture_default_str();
  app.add_option("--uncertainty,-U", c.uncertainty, "ratio uncertainty level U")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  app.add_option("--initial-uncertainty", c.initial_uncertainty, "U_0")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  app.add_option("--initial-threshold", c.initial_threshold, "tau_0")->capture_default_str();
  st.seeds_opt = app.add_option("--seeds", c.seeds, "comma separated seeds")->delimiter(',')->capture_default_str();
  app.add_option("--clip", c.ppo.clip, "PPO clipping parameter epsilon")->capture_default_str();
  app.add_option("--epochs", c.ppo.epochs, "K: PPO epochs per update")->capture_default_str();
  app.add_option("--minibatch-size", c.ppo.minibatch_size)->capture_default_str();
  app.add_option("--value-loss-coeff", c.ppo.value_loss_coeff)->capture_default_str();
  app.add_option("--max-grad-norm", st.max_grad_norm, "gradient norm clip; <= 0 disables")->capture_default_str();
  app.add_flag("--mask-exploit", c.ppo.mask_exploit, "drop exploit-branch transitions from the surrogate");
  app.add_option("--gamma", c.advantage.gamma)->capture_default_str();
  app.add_option("--lambda", c.advantage.lambda)->capture_default_str();
  app.add_option("--normalize-advantages", c.advantage.normalize)->capture_default_str();
  app.add_option("--log-std-start", c.log_std_start, "annealed log std at step 0")->capture_default_str();
  app.add_option("--log-std-end", c.log_std_end, "annealed log std at step T")->capture_default_str();
  app.add_option("--denom-guard", c.denom_guard)->capture_default_str();
  app.add_option("--actor-lr", c.actor_adam.learning_rate)->capture_default_str();
  app.add_option("--critic-lr", c.critic_adam.learning_rate)->capture_default_str();
  app.add_option("--hidden", c.hidden, "hidden layer widths")->delimiter(',')->capture_default_str();
  app.add_option("--eval-episodes", c.eval_episodes)->capture_default_str();
  app.add_option("--out,-o", c.output_dir, "output directory")->envname("PPOUE_OUTPUT_DIR")->capture_default_str();
  app.add_option("--jobs,-j", c.jobs, "parallel runs")->capture_default_str();
}

void finalize(CliState& st) {
  if (st.profile == "full") {
    const ExperimentConfig full = ExperimentConfig::full_profile();
    if (st.total_steps_opt->count() == 0) st.cfg.total_steps = full.total_steps;
    if (st.seeds_opt->count() == 0) st.cfg.seeds = full.seeds;
  }
  st.cfg.ppo.max_grad_norm = st.max_grad_norm > 0 ? std::optional<double>(st.max_grad_norm) : std::nullopt;
  st.cfg.validate();
}

std::string run_stem(const ExperimentConfig& cfg, std::uint64_t seed) {
  return cfg.env + "_" + scheme_name(cfg.uncertainty) + "_seed" + std::to_string(seed);
}

int cmd_train(CliState& st, bool ablate) {
  finalize(st);
  const ExperimentConfig& cfg = st.cfg;
  fs::create_directories(cfg.output_dir);
  int status = 0;
  for (std::uint64_t seed : cfg.seeds) {
    const TrainResult r = train(cfg, seed, ablate ? GateMode::kAblated : GateMode::kGated);
    const std::string stem = run_stem(cfg, seed);
    const fs::path metrics = fs::path(cfg.output_dir) / ("metrics_" + stem + ".csv");
    std::ofstream(metrics) << metrics_csv(r.rows);
    const fs::path ckpt = fs::path(cfg.output_dir) / ("checkpoint_" + stem + ".bin");
    save_checkpoint(r.checkpoint, ckpt);
    if (r.fault) {
      std::cerr << "seed " << seed << ": numerical fault: " << *r.fault << " (partial metrics in " << metrics << ")\n";
      status = 2;
      continue;
    }
    const double last = r.rows.empty() ? 0.0 : r.rows.back().train_return;
    std::printf("seed %llu: %zu updates, final R_train %.4f -> %s\n", static_cast<unsigned long long>(seed),
                r.rows.size(), last, metrics.string().c_str());
  }
  return status;
}

int cmd_eval(const std::string& ckpt_path, std::string env, std::size_t horizon, std::size_t episodes,
             std::uint64_t seed, const std::string& out_csv) {
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  if (env.empty()) env = ckpt.env_name;
  const EvalReport rep = evaluate(ckpt, env, horizon, episodes, seed);
  std::printf("env %s horizon %zu episodes %zu: mean %.6f std %.6f\n", env.c_str(), rep.horizon, rep.returns.size(),
              rep.mean, rep.stddev);
  if (!out_csv.empty()) {
    std::ofstream out(out_csv);
    write_eval_csv(out, rep);
  }
  return 0;
}

int cmd_sweep(CliState& st, const std::vector<double>& us) {
  finalize(st);
  const ExperimentConfig& cfg = st.cfg;
  const SweepResult res = sweep(cfg, us, cfg.seeds, true);
  {
    std::vector<MetricsRow> all;
    for (const auto& m : res.metrics) all.insert(all.end(), m.begin(), m.end());
    std::ofstream(fs::path(cfg.output_dir) / "metrics_all.csv") << metrics_csv(all);
  }
  std::printf("%-14s %6s %4s %14s %12s %8s %8s\n", "scheme", "U", "ok", "R_test mean", "R_test std", "PU", "PU std");
  std::vector<double> u_col, pu_col;
  for (const SweepRow& r : res.table) {
    std::printf("%-14s %6g %4zu %14.4f %12.4f %8.4f %8.4f\n", r.scheme.c_str(), r.uncertainty, r.runs_ok, r.test_mean,
                r.test_std, r.pu_mean, r.pu_std);
    if (r.runs_ok > 0) {
      u_col.push_back(r.uncertainty);
      pu_col.push_back(r.pu_mean);
    }
  }
  if (u_col.size() >= 2) std::printf("Spearman(U, PU) = %.4f\n", spearman(u_col, pu_col));
  std::size_t failed = 0;
  for (const SweepCell& c : res.cells) failed += c.ok ? 0 : 1;
  return failed ? 2 : 0;
}

int cmd_plot(const std::vector<std::string>& metrics_files, const std::string& sweep_file, const std::string& from,
             const std::string& out_dir) {
  std::vector<std::string> mfiles = metrics_files;
  std::string sfile = sweep_file;
  if (!from.empty()) {
    if (mfiles.empty()) mfiles.push_back((fs::path(from) / "metrics_all.csv").string());
    if (sfile.empty() && fs::exists(fs::path(from) / "sweep.csv")) sfile = (fs::path(from) / "sweep.csv").string();
  }
  std::vector<MetricsRow> metrics;
  for (const std::string& f : mfiles) {
    std::ifstream in(f);
    if (!in) throw std::runtime_error("cannot open " + f);
    auto rows = parse_metrics_csv(in);
    metrics.insert(metrics.end(), rows.begin(), rows.end());
  }
  std::vector<SweepRow> sweep_rows;
  if (!sfile.empty()) {
    std::ifstream in(sfile);
    if (!in) throw std::runtime_error("cannot open " + sfile);
    sweep_rows = parse_sweep_csv(in);
  }
  for (const fs::path& p : emit_plots(metrics, sweep_rows, out_dir)) std::printf("wrote %s\n", p.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PPO with uncertainty-aware exploration: training, evaluation, U sweeps and plots"};
  app.set_config("--config", "", "INI file; options go under [train] or [sweep]");
  app.require_subcommand(1);

  CliState train_st;
  bool ablate = false;
  auto* train_cmd = app.add_subcommand("train", "train one run per seed and write metrics + checkpoints");
  add_experiment_options(*train_cmd, train_st);
  train_cmd->add_flag("--ablate-gate", ablate, "run the rollout loop with the exploration gate compiled out");

  std::string ckpt_path, eval_env, eval_out;
  std::size_t eval_horizon = 2048, eval_episodes = 100;
  std::uint64_t eval_seed = 0;
  auto* eval_cmd = app.add_subcommand("eval", "deterministic mean-action evaluation of a checkpoint");
  eval_cmd->add_option("--checkpoint,-c", ckpt_path)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--env", eval_env, "defaults to the checkpoint's environment");
  eval_cmd->add_option("--horizon", eval_horizon, "T'_e")->capture_default_str();
  eval_cmd->add_option("--episodes", eval_episodes)->capture_default_str();
  eval_cmd->add_option("--seed", eval_seed)->capture_default_str();
  eval_cmd->add_option("--out-csv", eval_out, "per-episode returns");

  CliState sweep_st;
  std::vector<double> us{0.8, 0.9, 0.96, 0.98, 0.99, 1.0};
  auto* sweep_cmd = app.add_subcommand("sweep", "train + evaluate every (U, seed) cell and aggregate");
  add_experiment_options(*sweep_cmd, sweep_st);
  sweep_cmd->add_option("--u-values", us, "ratio uncertainty levels")->delimiter(',')->capture_default_str();

  std::vector<std::string> plot_metrics;
  std::string plot_sweep, plot_from, plot_out = "figures";
  auto* plot_cmd = app.add_subcommand("plot", "render SVG figures from metrics / sweep CSVs");
  plot_cmd->add_option("--metrics", plot_metrics, "metrics CSV files");
  plot_cmd->add_option("--sweep", plot_sweep, "aggregated sweep.csv");
  plot_cmd->add_option("--from", plot_from, "sweep output directory (uses metrics_all.csv and sweep.csv)");
  plot_cmd->add_option("--out,-o", plot_out)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) return cmd_train(train_st, ablate);
    if (*eval_cmd) return cmd_eval(ckpt_path, eval_env, eval_horizon, eval_episodes, eval_seed, eval_out);
    if (*sweep_cmd) return cmd_sweep(sweep_st, us);
    if (*plot_cmd) return cmd_plot(plot_metrics, plot_sweep, plot_from, plot_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
