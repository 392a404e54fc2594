#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ppoue/harness.hpp"

namespace ppoue {

/*
 * Metrics CSV columns, in order:
 *   env,seed,U,step,update,train_return,train_episodes,tau,pu,explore_fraction,
 *   log_std,surrogate,value_loss,mean_ratio,clip_fraction
 * Reals are written with 17 significant digits; missing values as "nan".
 */
extern const std::vector<std::string> kMetricsColumns;

/*
 * Sweep table columns:
 *   scheme,U,runs_ok,runs_failed,test_mean,test_std,pu_mean,pu_std,explore_mean,final_train_mean
 */
extern const std::vector<std::string> kSweepColumns;

/// Per-cell columns: U,seed,status,test_return,test_return_std,mean_pu,mean_explore_fraction,final_train_return,error
extern const std::vector<std::string> kSweepCellColumns;

std::string format_real(double v);

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows, bool header = true);
std::string metrics_csv(const std::vector<MetricsRow>& rows);

/// Throws std::runtime_error naming the 1-based line of the first malformed row.
std::vector<MetricsRow> parse_metrics_csv(std::istream& in);

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);
std::vector<SweepRow> parse_sweep_csv(std::istream& in);

void write_sweep_cells_csv(std::ostream& out, const std::vector<SweepCell>& cells);

void write_eval_csv(std::ostream& out, const EvalReport& report);

}  // namespace ppoue
