#pragma once

#include <map>
#include <string>
#include <vector>

namespace sns {

// Minimal RFC-4180 style CSV: comma separator, double-quote escaping,
// records terminated by \n (parser also accepts \r\n). First record is the
// header. All values travel as strings; numeric columns use format_double
// so that doubles survive a write/parse round trip bit for bit.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// Shortest fixed representation that round-trips IEEE doubles (%.17g).
std::string format_double(double v);
double parse_double(const std::string& s);

std::string csv_escape(const std::string& field);
std::string to_csv(const CsvTable& table);
CsvTable parse_csv(const std::string& text);

// Builds a table with columns in schema order. Every record must supply
// exactly the schema's keys; anything missing or extra is an error.
CsvTable make_table(const std::vector<std::string>& schema,
                    const std::vector<std::map<std::string, std::string>>& records);

// Column lookup helper; throws if absent.
std::size_t column_index(const CsvTable& table, const std::string& name);

}  // namespace sns
