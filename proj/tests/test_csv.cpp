#include <stdexcept>
#include <cstdint>
#include <cstring>
#include <random>

#include "doctest.h"
#include "sns/csv.hpp"

using namespace sns;

namespace {

std::uint64_t bits_of(double v) {
  std::uint64_t b;
  std::memcpy(&b, &v, sizeof(b));
  return b;
}

}  // namespace

TEST_CASE("doubles survive a format/parse round trip bitwise") {
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> mant(-1.0, 1.0);
  std::uniform_int_distribution<int> expo(-300, 300);
  int checked = 0;
  for (int i = 0; i < 1000; ++i) {
    double v = std::ldexp(mant(rng), expo(rng) % 60) * std::pow(10.0, expo(rng) / 30);
    if (!std::isfinite(v)) continue;
    double back = parse_double(format_double(v));
    CHECK(bits_of(back) == bits_of(v));
    ++checked;
  }
  CHECK(checked > 950);
  for (double v : {0.0, -0.0, 1.0 / 3.0, 1e-300, -1e300, 0.1, 2.2250738585072014e-308}) {
    CHECK(bits_of(parse_double(format_double(v))) == bits_of(v));
  }
}

TEST_CASE("parse_double rejects trailing garbage and empty input") {
  CHECK_THROWS_AS(parse_double(""), std::invalid_argument);
  CHECK_THROWS_AS(parse_double("1.5x"), std::invalid_argument);
  CHECK_THROWS_AS(parse_double("nope"), std::invalid_argument);
  CHECK(parse_double("-2.5e3") == -2500.0);
}

TEST_CASE("csv escaping quotes commas, quotes, and newlines") {
  CHECK(csv_escape("plain") == "plain");
  CHECK(csv_escape("a,b") == "\"a,b\"");
  CHECK(csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(csv_escape("two\nlines") == "\"two\nlines\"");
}

TEST_CASE("csv emit/parse round trip including quoted fields and CRLF") {
  CsvTable t;
  t.header = {"name", "value", "note"};
  t.rows = {{"a", "1.5", "plain"},
            {"b,c", "2", "has,comma"},
            {"q", "3", "line\nbreak and \"quote\""}};
  CsvTable back = parse_csv(to_csv(t));
  CHECK(back.header == t.header);
  REQUIRE(back.rows.size() == t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) CHECK(back.rows[i] == t.rows[i]);

  CsvTable crlf = parse_csv("a,b\r\n1,2\r\n3,4\r\n");
  REQUIRE(crlf.rows.size() == 2);
  CHECK(crlf.rows[1][1] == "4");
}

TEST_CASE("empty record list produces a header-only file") {
  CsvTable t = make_table({"x", "y"}, {});
  CHECK(to_csv(t) == "x,y\n");
  CsvTable back = parse_csv("x,y\n");
  CHECK(back.header == std::vector<std::string>{"x", "y"});
  CHECK(back.rows.empty());
}

TEST_CASE("make_table fixes column order by schema, not record order") {
  std::vector<std::map<std::string, std::string>> records = {
      {{"z", "3"}, {"a", "1"}, {"m", "2"}}};
  CsvTable t = make_table({"m", "z", "a"}, records);
  CHECK(to_csv(t) == "m,z,a\n2,3,1\n");

  CHECK_THROWS_AS(make_table({"m", "missing"}, records), std::invalid_argument);
  CHECK_THROWS_AS(make_table({"m"}, records), std::invalid_argument);  // extra keys
}

TEST_CASE("parse_csv rejects ragged rows and unterminated quotes") {
  CHECK_THROWS_AS(parse_csv("a,b\n1\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_csv("a,b\n\"open,2\n"), std::invalid_argument);
  CHECK_THROWS_AS(column_index(parse_csv("a,b\n"), "c"), std::invalid_argument);
  CHECK(column_index(parse_csv("a,b\n"), "b") == 1);
}
