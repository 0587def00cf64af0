#pragma once

#include <string>
#include <vector>

#include "sns/csv.hpp"

namespace sns {

struct PlotSeries {
  std::string name;
  std::vector<double> x, y;
};

// Deterministic log-log SVG: polyline + circle markers per series, decade
// tick labels, and two reference guide lines of slopes 1 and 2 anchored to
// the first series.  Data coordinates ride along in data-* attributes so the
// plot can be checked mechanically.  No timestamps; equal input, equal bytes.
std::string render_loglog_svg(const std::vector<PlotSeries>& series, const std::string& x_label,
                              const std::string& y_label, const std::string& title);

// Plots a rate table (level, tau, h, mean_E, q50, q90, N). The abscissa is
// tau when it varies across rows, otherwise h.
std::string plot_rates_table(const CsvTable& rates);

}  // namespace sns
