#include "sns/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace sns {

namespace {

constexpr double kWidth = 720, kHeight = 480;
constexpr double kLeft = 76, kRight = 26, kTop = 46, kBottom = 58;

const char* series_color(const std::string& name, int index) {
  if (name == "mean_E") return "#1f77b4";
  if (name == "q50") return "#2ca02c";
  if (name == "q90") return "#d62728";
  static const char* palette[] = {"#1f77b4", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};
  return palette[index % 5];
}

std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return std::string(buf);
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

struct LogMap {
  double lmin = 0, lmax = 1;
  double p0 = 0, p1 = 1;  // pixel range
  double to_px(double v) const {
    return p0 + (std::log10(v) - lmin) / (lmax - lmin) * (p1 - p0);
  }
};

}  // namespace

std::string render_loglog_svg(const std::vector<PlotSeries>& series, const std::string& x_label,
                              const std::string& y_label, const std::string& title) {
  double lxmin = 1e300, lxmax = -1e300, lymin = 1e300, lymax = -1e300;
  bool any = false;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size())
      throw std::invalid_argument("render_loglog_svg: series size mismatch");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!(s.x[i] > 0) || !(s.y[i] > 0)) continue;  // log scale drops non-positive points
      any = true;
      lxmin = std::min(lxmin, std::log10(s.x[i]));
      lxmax = std::max(lxmax, std::log10(s.x[i]));
      lymin = std::min(lymin, std::log10(s.y[i]));
      lymax = std::max(lymax, std::log10(s.y[i]));
    }
  }

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
  svg << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"#ffffff\"/>\n";
  svg << "<text class=\"title\" x=\"" << px(kWidth / 2) << "\" y=\"26\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"16\">"
      << xml_escape(title) << "</text>\n";

  if (!any) {
    svg << "<text class=\"empty\" x=\"" << px(kWidth / 2) << "\" y=\"" << px(kHeight / 2)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">no data"
           "</text>\n</svg>\n";
    return svg.str();
  }

  // pad the log ranges so markers stay inside the frame
  auto pad = [](double& lo, double& hi) {
    double span = hi - lo;
    if (span <= 0) span = 1.0;
    lo -= 0.06 * span;
    hi += 0.06 * span;
  };
  // leave headroom above for the guide lines
  lymax += 0.35 * std::max(lymax - lymin, 1e-9);
  pad(lxmin, lxmax);
  pad(lymin, lymax);

  LogMap X{lxmin, lxmax, kLeft, kWidth - kRight};
  LogMap Y{lymin, lymax, kHeight - kBottom, kTop};

  // frame
  svg << "<rect x=\"" << px(kLeft) << "\" y=\"" << px(kTop) << "\" width=\""
      << px(kWidth - kLeft - kRight) << "\" height=\"" << px(kHeight - kTop - kBottom)
      << "\" fill=\"none\" stroke=\"#444444\" stroke-width=\"1\"/>\n";

  // decade ticks
  auto emit_ticks = [&](const LogMap& map, bool x_axis) {
    int k0 = static_cast<int>(std::ceil(map.lmin));
    int k1 = static_cast<int>(std::floor(map.lmax));
    for (int k = k0; k <= k1; ++k) {
      double value = std::pow(10.0, k);
      double p = map.to_px(value);
      char label[24];
      std::snprintf(label, sizeof(label), "1e%d", k);
      if (x_axis) {
        svg << "<line class=\"tick\" x1=\"" << px(p) << "\" y1=\"" << px(kHeight - kBottom)
            << "\" x2=\"" << px(p) << "\" y2=\"" << px(kHeight - kBottom + 6)
            << "\" stroke=\"#444444\"/>\n";
        svg << "<line class=\"grid\" x1=\"" << px(p) << "\" y1=\"" << px(kTop) << "\" x2=\""
            << px(p) << "\" y2=\"" << px(kHeight - kBottom)
            << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
        svg << "<text class=\"tick-label\" data-axis=\"x\" data-value=\"" << format_double(value)
            << "\" x=\"" << px(p) << "\" y=\"" << px(kHeight - kBottom + 20)
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << label
            << "</text>\n";
      } else {
        svg << "<line class=\"tick\" x1=\"" << px(kLeft - 6) << "\" y1=\"" << px(p) << "\" x2=\""
            << px(kLeft) << "\" y2=\"" << px(p) << "\" stroke=\"#444444\"/>\n";
        svg << "<line class=\"grid\" x1=\"" << px(kLeft) << "\" y1=\"" << px(p) << "\" x2=\""
            << px(kWidth - kRight) << "\" y2=\"" << px(p)
            << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
        svg << "<text class=\"tick-label\" data-axis=\"y\" data-value=\"" << format_double(value)
            << "\" x=\"" << px(kLeft - 10) << "\" y=\"" << px(p + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">" << label
            << "</text>\n";
      }
    }
  };
  emit_ticks(X, true);
  emit_ticks(Y, false);

  // guide lines of slopes 1 and 2, anchored below the first series' left end
  const PlotSeries* anchor_series = nullptr;
  for (const auto& s : series) {
    if (!s.x.empty()) {
      anchor_series = &s;
      break;
    }
  }
  if (anchor_series) {
    double ax = anchor_series->x.front(), ay = anchor_series->y.front();
    double bx = anchor_series->x.back();
    if (bx == ax) bx = ax * 2;
    for (int slope = 1; slope <= 2; ++slope) {
      double y0 = ay * 0.45;
      double y1 = y0 * std::pow(bx / ax, slope);
      svg << "<line class=\"guide\" data-slope=\"" << slope << "\" data-x1=\""
          << format_double(ax) << "\" data-y1=\"" << format_double(y0) << "\" data-x2=\""
          << format_double(bx) << "\" data-y2=\"" << format_double(y1) << "\" x1=\""
          << px(X.to_px(ax)) << "\" y1=\"" << px(Y.to_px(y0)) << "\" x2=\"" << px(X.to_px(bx))
          << "\" y2=\"" << px(Y.to_px(y1))
          << "\" stroke=\"#999999\" stroke-width=\"1\" stroke-dasharray=\"6,4\"/>\n";
      svg << "<text class=\"guide-label\" x=\"" << px(X.to_px(bx) + 4) << "\" y=\""
          << px(Y.to_px(y1)) << "\" font-family=\"sans-serif\" font-size=\"11\" "
          << "fill=\"#777777\">slope " << slope << "</text>\n";
    }
  }

  // series
  int index = 0;
  for (const auto& s : series) {
    const char* color = series_color(s.name, index++);
    std::ostringstream pts;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!(s.x[i] > 0) || !(s.y[i] > 0)) continue;
      if (pts.tellp() > 0) pts << " ";
      pts << px(X.to_px(s.x[i])) << "," << px(Y.to_px(s.y[i]));
    }
    svg << "<polyline class=\"series\" data-series=\"" << xml_escape(s.name)
        << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.6\" points=\""
        << pts.str() << "\"/>\n";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!(s.x[i] > 0) || !(s.y[i] > 0)) continue;
      svg << "<circle class=\"marker\" data-series=\"" << xml_escape(s.name) << "\" data-x=\""
          << format_double(s.x[i]) << "\" data-y=\"" << format_double(s.y[i]) << "\" cx=\""
          << px(X.to_px(s.x[i])) << "\" cy=\"" << px(Y.to_px(s.y[i])) << "\" r=\"3.5\" fill=\""
          << color << "\"/>\n";
    }
  }

  // legend, top-right inside the frame
  {
    double lx = kWidth - kRight - 150, ly = kTop + 14;
    int i = 0;
    for (const auto& s : series) {
      const char* color = series_color(s.name, i);
      svg << "<line x1=\"" << px(lx) << "\" y1=\"" << px(ly + 18 * i) << "\" x2=\"" << px(lx + 22)
          << "\" y2=\"" << px(ly + 18 * i) << "\" stroke=\"" << color
          << "\" stroke-width=\"2\"/>\n";
      svg << "<text class=\"legend\" x=\"" << px(lx + 28) << "\" y=\"" << px(ly + 18 * i + 4)
          << "\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(s.name)
          << "</text>\n";
      ++i;
    }
  }

  // axis labels
  svg << "<text class=\"x-label\" x=\"" << px((kLeft + kWidth - kRight) / 2) << "\" y=\""
      << px(kHeight - 14) << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"13\">" << xml_escape(x_label) << "</text>\n";
  svg << "<text class=\"y-label\" x=\"20\" y=\"" << px((kTop + kHeight - kBottom) / 2)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
      << "transform=\"rotate(-90 20 " << px((kTop + kHeight - kBottom) / 2) << ")\">"
      << xml_escape(y_label) << "</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

std::string plot_rates_table(const CsvTable& rates) {
  if (rates.rows.empty())
    return render_loglog_svg({}, "tau", "error", "convergence study");
  std::size_t c_tau = column_index(rates, "tau");
  std::size_t c_h = column_index(rates, "h");
  std::vector<std::size_t> stat_cols = {column_index(rates, "mean_E"), column_index(rates, "q50"),
                                        column_index(rates, "q90")};
  std::vector<std::string> stat_names = {"mean_E", "q50", "q90"};

  std::vector<double> tau, h;
  for (const auto& row : rates.rows) {
    tau.push_back(parse_double(row[c_tau]));
    h.push_back(parse_double(row[c_h]));
  }
  bool tau_varies = *std::max_element(tau.begin(), tau.end()) >
                    *std::min_element(tau.begin(), tau.end());
  const std::vector<double>& xs = tau_varies ? tau : h;
  std::string x_label = tau_varies ? "tau" : "h";

  std::vector<PlotSeries> series;
  for (std::size_t s = 0; s < stat_cols.size(); ++s) {
    PlotSeries ps;
    ps.name = stat_names[s];
    ps.x = xs;
    for (const auto& row : rates.rows) ps.y.push_back(parse_double(row[stat_cols[s]]));
    series.push_back(std::move(ps));
  }
  return render_loglog_svg(series, x_label, "error", "error vs " + x_label);
}

}  // namespace sns
