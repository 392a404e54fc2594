#include "ppoue/metrics.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace ppoue {

const std::vector<std::string> kMetricsColumns{
    "env",  "seed",          "U",         "step",       "update",     "train_return", "train_episodes", "tau",
    "pu",   "explore_fraction", "log_std", "surrogate", "value_loss", "mean_ratio",   "clip_fraction"};

const std::vector<std::string> kSweepColumns{"scheme",  "U",      "runs_ok", "runs_failed",  "test_mean",
                                             "test_std", "pu_mean", "pu_std", "explore_mean", "final_train_mean"};

const std::vector<std::string> kSweepCellColumns{"U",       "seed",  "status", "test_return", "test_return_std",
                                                 "mean_pu", "mean_explore_fraction", "final_train_return", "error"};

namespace {

void write_header(std::ostream& out, const std::vector<std::string>& cols) {
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

struct LineError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

double parse_real(const std::string& s) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw LineError("not a number: '" + s + "'");
  return v;
}

std::uint64_t parse_uint(const std::string& s) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) throw LineError("not an integer: '" + s + "'");
  return v;
}

// Reads header + rows, handing each row's fields to `fn`.
template <typename Fn>
void read_table(std::istream& in, const std::vector<std::string>& columns, const char* what, Fn fn) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw std::runtime_error(std::string(what) + ": missing header");
  ++line_no;
  if (split(line) != columns) throw std::runtime_error(std::string(what) + ": unexpected header at line 1");
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split(line);
    try {
      if (fields.size() != columns.size())
        throw LineError("expected " + std::to_string(columns.size()) + " fields, got " + std::to_string(fields.size()));
      fn(fields);
    } catch (const LineError& e) {
      throw std::runtime_error(std::string(what) + ": malformed row at line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

}  // namespace

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows, bool header) {
  if (header) write_header(out, kMetricsColumns);
  for (const MetricsRow& r : rows) {
    out << r.env << ',' << r.seed << ',' << format_real(r.uncertainty) << ',' << r.step << ',' << r.update << ','
        << format_real(r.train_return) << ',' << r.train_episodes << ',' << format_real(r.tau) << ','
        << format_real(r.posterior_uncertainty) << ',' << format_real(r.explore_fraction) << ','
        << format_real(r.log_std) << ',' << format_real(r.stats.surrogate) << ',' << format_real(r.stats.value_loss)
        << ',' << format_real(r.stats.mean_ratio) << ',' << format_real(r.stats.clip_fraction) << '\n';
  }
}

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
  std::ostringstream os;
  write_metrics_csv(os, rows);
  return os.str();
}

std::vector<MetricsRow> parse_metrics_csv(std::istream& in) {
  std::vector<MetricsRow> rows;
  read_table(in, kMetricsColumns, "metrics csv", [&](const std::vector<std::string>& f) {
    MetricsRow r;
    r.env = f[0];
    r.seed = parse_uint(f[1]);
    r.uncertainty = parse_real(f[2]);
    r.step = parse_uint(f[3]);
    r.update = parse_uint(f[4]);
    r.train_return = parse_real(f[5]);
    r.train_episodes = parse_uint(f[6]);
    r.tau = parse_real(f[7]);
    r.posterior_uncertainty = parse_real(f[8]);
    r.explore_fraction = parse_real(f[9]);
    r.log_std = parse_real(f[10]);
    r.stats.surrogate = parse_real(f[11]);
    r.stats.value_loss = parse_real(f[12]);
    r.stats.mean_ratio = parse_real(f[13]);
    r.stats.clip_fraction = parse_real(f[14]);
    rows.push_back(std::move(r));
  });
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  write_header(out, kSweepColumns);
  for (const SweepRow& r : rows) {
    out << r.scheme << ',' << format_real(r.uncertainty) << ',' << r.runs_ok << ',' << r.runs_failed << ','
        << format_real(r.test_mean) << ',' << format_real(r.test_std) << ',' << format_real(r.pu_mean) << ','
        << format_real(r.pu_std) << ',' << format_real(r.explore_mean) << ',' << format_real(r.final_train_mean)
        << '\n';
  }
}

std::vector<SweepRow> parse_sweep_csv(std::istream& in) {
  std::vector<SweepRow> rows;
  read_table(in, kSweepColumns, "sweep csv", [&](const std::vector<std::string>& f) {
    SweepRow r;
    r.scheme = f[0];
    r.uncertainty = parse_real(f[1]);
    r.runs_ok = parse_uint(f[2]);
    r.runs_failed = parse_uint(f[3]);
    r.test_mean = parse_real(f[4]);
    r.test_std = parse_real(f[5]);
    r.pu_mean = parse_real(f[6]);
    r.pu_std = parse_real(f[7]);
    r.explore_mean = parse_real(f[8]);
    r.final_train_mean = parse_real(f[9]);
    rows.push_back(std::move(r));
  });
  return rows;
}

void write_sweep_cells_csv(std::ostream& out, const std::vector<SweepCell>& cells) {
  write_header(out, kSweepCellColumns);
  for (const SweepCell& c : cells) {
    std::string err = c.error;
    for (char& ch : err)
      if (ch == ',' || ch == '\n') ch = ';';
    out << format_real(c.uncertainty) << ',' << c.seed << ',' << (c.ok ? "ok" : "failed") << ','
        << format_real(c.test_return) << ',' << format_real(c.test_return_std) << ','
        << format_real(c.mean_posterior_uncertainty) << ',' << format_real(c.mean_explore_fraction) << ','
        << format_real(c.final_train_return) << ',' << err << '\n';
  }
}

void write_eval_csv(std::ostream& out, const EvalReport& report) {
  out << "episode,return\n";
  for (std::size_t i = 0; i < report.returns.size(); ++i) out << i << ',' << format_real(report.returns[i]) << '\n';
}

}  // namespace ppoue
