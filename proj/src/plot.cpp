#include "ppoue/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace ppoue {
namespace {

constexpr double kWidth = 640;
constexpr double kHeight = 420;
constexpr double kLeft = 70;
constexpr double kRight = 170;
constexpr double kTop = 40;
constexpr double kBottom = 55;

const char* const kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo = 0.0;
  double hi = 1.0;
};

Range padded(double lo, double hi) {
  if (!(lo <= hi)) return {0.0, 1.0};
  if (lo == hi) return {lo - 0.5, hi + 0.5};
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

}  // namespace

std::string render_svg(const Figure& fig) {
  double xlo = INFINITY, xhi = -INFINITY, ylo = INFINITY, yhi = -INFINITY;
  for (const Series& s : fig.series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      const double e = i < s.err.size() && std::isfinite(s.err[i]) ? s.err[i] : 0.0;
      xlo = std::min(xlo, s.x[i]);
      xhi = std::max(xhi, s.x[i]);
      ylo = std::min(ylo, s.y[i] - e);
      yhi = std::max(yhi, s.y[i] + e);
    }
  }
  const Range xr = padded(xlo, xhi);
  const Range yr = padded(ylo, yhi);
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto py = [&](double y) { return kTop + ph - (y - yr.lo) / (yr.hi - yr.lo) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(kWidth) << "\" height=\"" << num(kHeight)
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << num(kWidth / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(fig.title)
    << "</text>\n";
  o << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = xr.lo + (xr.hi - xr.lo) * i / 4.0;
    const double yv = yr.lo + (yr.hi - yr.lo) * i / 4.0;
    o << "<text x=\"" << num(px(xv)) << "\" y=\"" << num(kTop + ph + 16) << "\" text-anchor=\"middle\">" << num(xv)
      << "</text>\n";
    o << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(py(yv) + 4) << "\" text-anchor=\"end\">" << num(yv)
      << "</text>\n";
  }
  o << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"" << num(kHeight - 12) << "\" text-anchor=\"middle\">"
    << escape(fig.x_label) << "</text>\n";
  o << "<text x=\"16\" y=\"" << num(kTop + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << num(kTop + ph / 2) << ")\">" << escape(fig.y_label) << "</text>\n";

  for (std::size_t si = 0; si < fig.series.size(); ++si) {
    const Series& s = fig.series[si];
    const char* color = kPalette[si % std::size(kPalette)];
    std::ostringstream pts;
    bool any = false;
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      pts << (any ? " " : "") << num(px(s.x[i])) << ',' << num(py(s.y[i]));
      any = true;
      if (i < s.err.size() && std::isfinite(s.err[i]) && s.err[i] > 0)
        o << "<line x1=\"" << num(px(s.x[i])) << "\" y1=\"" << num(py(s.y[i] - s.err[i])) << "\" x2=\""
          << num(px(s.x[i])) << "\" y2=\"" << num(py(s.y[i] + s.err[i])) << "\" stroke=\"" << color << "\"/>\n";
      if (fig.markers)
        o << "<circle cx=\"" << num(px(s.x[i])) << "\" cy=\"" << num(py(s.y[i])) << "\" r=\"3\" fill=\"" << color
          << "\"/>\n";
    }
    if (any)
      o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"" << pts.str()
        << "\"/>\n";
    const double ly = kTop + 14 + 18 * static_cast<double>(si);
    o << "<line x1=\"" << num(kWidth - kRight + 12) << "\" y1=\"" << num(ly - 4) << "\" x2=\""
      << num(kWidth - kRight + 32) << "\" y2=\"" << num(ly - 4) << "\" stroke=\"" << color
      << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << num(kWidth - kRight + 38) << "\" y=\"" << num(ly) << "\">" << escape(s.label)
      << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::vector<std::filesystem::path> emit_plots(const std::vector<MetricsRow>& metrics,
                                              const std::vector<SweepRow>& sweep_rows,
                                              const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  std::vector<fs::path> written;
  auto write = [&](const fs::path& name, const Figure& fig) {
    const fs::path p = out_dir / name;
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << render_svg(fig);
    written.push_back(p);
  };

  // Training curves: per env, per U, mean over seeds of R_train at each step.
  std::map<std::string, std::map<double, std::map<std::uint64_t, std::vector<double>>>> curves;
  std::set<std::string> envs;
  for (const MetricsRow& r : metrics) {
    envs.insert(r.env);
    curves[r.env][r.uncertainty][r.step].push_back(r.train_return);
  }
  for (const std::string& env : envs) {
    Figure fig{"Training return (" + env + ")", "environment steps", "mean episode return", {}, false};
    for (auto it = curves[env].rbegin(); it != curves[env].rend(); ++it) {
      Series s{scheme_name(it->first), {}, {}, {}};
      for (const auto& [step, vals] : it->second) {
        s.x.push_back(static_cast<double>(step));
        s.y.push_back(finite_mean(vals));
      }
      fig.series.push_back(std::move(s));
    }
    write("training_curves_" + env + ".svg", fig);
  }
  if (envs.empty()) write("training_curves.svg", Figure{"Training return", "environment steps", "mean episode return", {}, false});

  std::vector<SweepRow> rows = sweep_rows;
  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) { return a.uncertainty < b.uncertainty; });
  Figure test{"Test return vs ratio uncertainty level", "U", "mean test return", {}, true};
  Figure pu{"Posterior ratio uncertainty vs U", "U", "mean PU", {}, true};
  Series ts{"R_test", {}, {}, {}};
  Series ps{"PU", {}, {}, {}};
  Series ideal{"PU = U", {}, {}, {}};
  for (const SweepRow& r : rows) {
    ts.x.push_back(r.uncertainty);
    ts.y.push_back(r.test_mean);
    ts.err.push_back(r.test_std);
    ps.x.push_back(r.uncertainty);
    ps.y.push_back(r.pu_mean);
    ps.err.push_back(r.pu_std);
    ideal.x.push_back(r.uncertainty);
    ideal.y.push_back(r.uncertainty);
  }
  test.series.push_back(std::move(ts));
  pu.series.push_back(std::move(ps));
  pu.series.push_back(std::move(ideal));
  write("rtest_vs_u.svg", test);
  write("pu_vs_u.svg", pu);
  return written;
}

}  // namespace ppoue
