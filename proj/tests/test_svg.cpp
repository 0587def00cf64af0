#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "sns/csv.hpp"
#include "sns/svg.hpp"

using namespace sns;

namespace {

int count_occurrences(const std::string& text, const std::string& needle) {
  int n = 0;
  for (std::size_t pos = text.find(needle); pos != std::string::npos;
       pos = text.find(needle, pos + needle.size()))
    ++n;
  return n;
}

// pulls attr="..." starting at `from`; empty if absent
std::string attr_after(const std::string& text, std::size_t from, const std::string& attr) {
  std::size_t a = text.find(attr + "=\"", from);
  if (a == std::string::npos) return {};
  a += attr.size() + 2;
  std::size_t b = text.find('"', a);
  return text.substr(a, b - a);
}

}  // namespace

TEST_CASE("two-point series produce exactly two markers each") {
  std::vector<PlotSeries> series = {{"mean_E", {0.1, 0.05}, {1.0, 0.25}},
                                    {"q90", {0.1, 0.05}, {2.0, 0.5}}};
  std::string svg = render_loglog_svg(series, "tau", "error", "demo");
  CHECK(count_occurrences(svg, "class=\"marker\" data-series=\"mean_E\"") == 2);
  CHECK(count_occurrences(svg, "class=\"marker\" data-series=\"q90\"") == 2);
  CHECK(count_occurrences(svg, "<polyline class=\"series\"") == 2);
}

TEST_CASE("guide lines carry slopes 1 and 2 in log-log data coordinates") {
  std::vector<PlotSeries> series = {{"mean_E", {0.2, 0.1, 0.05}, {4.0, 1.0, 0.25}}};
  std::string svg = render_loglog_svg(series, "tau", "error", "guides");
  for (int want = 1; want <= 2; ++want) {
    std::string tag = "class=\"guide\" data-slope=\"" + std::to_string(want) + "\"";
    std::size_t pos = svg.find(tag);
    REQUIRE(pos != std::string::npos);
    double x1 = parse_double(attr_after(svg, pos, "data-x1"));
    double y1 = parse_double(attr_after(svg, pos, "data-y1"));
    double x2 = parse_double(attr_after(svg, pos, "data-x2"));
    double y2 = parse_double(attr_after(svg, pos, "data-y2"));
    double slope = (std::log(y2) - std::log(y1)) / (std::log(x2) - std::log(x1));
    CHECK(slope == doctest::Approx(double(want)).epsilon(1e-12));
  }
}

TEST_CASE("identical input renders byte-identical SVG") {
  std::vector<PlotSeries> series = {{"mean_E", {0.25, 0.125, 0.0625}, {3.0, 0.8, 0.21}},
                                    {"q50", {0.25, 0.125, 0.0625}, {2.7, 0.7, 0.18}}};
  std::string a = render_loglog_svg(series, "tau", "error", "twice");
  std::string b = render_loglog_svg(series, "tau", "error", "twice");
  CHECK(a == b);
  CHECK(a.find("timestamp") == std::string::npos);
}

TEST_CASE("rates table plot picks the varying abscissa and carries tick labels") {
  std::string csv_text =
      "level,tau,h,mean_E,q50,q90,N\n"
      "0,0.125,0.3536,0.9,0.8,1.4,8\n"
      "1,0.0625,0.3536,0.24,0.2,0.4,8\n"
      "2,0.03125,0.3536,0.06,0.05,0.1,8\n";
  std::string svg = plot_rates_table(parse_csv(csv_text));
  CHECK(svg.find(">tau</text>") != std::string::npos);
  CHECK(count_occurrences(svg, "class=\"marker\" data-series=\"mean_E\"") == 3);
  CHECK(svg.find("class=\"tick-label\"") != std::string::npos);

  // h varies, tau fixed -> abscissa h
  std::string csv_space =
      "level,tau,h,mean_E,q50,q90,N\n"
      "0,0.001953125,0.35,0.9,0.8,1.4,8\n"
      "1,0.001953125,0.17,0.2,0.2,0.4,8\n";
  std::string svg2 = plot_rates_table(parse_csv(csv_space));
  CHECK(svg2.find(">h</text>") != std::string::npos);
}

TEST_CASE("header-only rates table renders an empty plot") {
  std::string svg = plot_rates_table(parse_csv("level,tau,h,mean_E,q50,q90,N\n"));
  CHECK(svg.find("no data") != std::string::npos);
  CHECK(svg.find("class=\"marker\"") == std::string::npos);
}

TEST_CASE("non-positive values are dropped rather than breaking the log scale") {
  std::vector<PlotSeries> series = {{"mean_E", {0.1, 0.05, 0.02}, {1.0, 0.0, 0.1}}};
  std::string svg = render_loglog_svg(series, "tau", "error", "zeros");
  CHECK(count_occurrences(svg, "class=\"marker\"") == 2);
}
