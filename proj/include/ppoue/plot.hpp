#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ppoue/harness.hpp"

namespace ppoue {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> err;  // optional symmetric error bars, same length as y
};

struct Figure {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  bool markers = false;
};

/// Fixed-layout SVG; identical input gives identical bytes.
std::string render_svg(const Figure& fig);

/*!
 * Writes training_curves_<env>.svg (mean train return per scheme vs step),
 * rtest_vs_u.svg and pu_vs_u.svg into `out_dir`. Returns the written paths.
 */
std::vector<std::filesystem::path> emit_plots(const std::vector<MetricsRow>& metrics,
                                              const std::vector<SweepRow>& sweep_rows,
                                              const std::filesystem::path& out_dir);

}  // namespace ppoue
