#include "sns/csv.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>

namespace sns {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

double parse_double(const std::string& s) {
  if (s.empty()) throw std::invalid_argument("parse_double: empty field");
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size())
    throw std::invalid_argument("parse_double: trailing characters in '" + s + "'");
  if (errno == ERANGE && v == 0.0)
    throw std::invalid_argument("parse_double: underflow in '" + s + "'");
  return v;
}

std::string csv_escape(const std::string& field) {
  bool needs_quote = false;
  for (char c : field) {
    if (c == ',' || c == '"' || c == '\n' || c == '\r') {
      needs_quote = true;
      break;
    }
  }
  if (!needs_quote) return field;
  std::string out;
  out.reserve(field.size() + 2);
  out.push_back('"');
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

static void emit_record(std::string& out, const std::vector<std::string>& rec) {
  for (std::size_t i = 0; i < rec.size(); ++i) {
    if (i) out.push_back(',');
    out += csv_escape(rec[i]);
  }
  out.push_back('\n');
}

std::string to_csv(const CsvTable& table) {
  std::string out;
  emit_record(out, table.header);
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size())
      throw std::invalid_argument("to_csv: row width does not match header");
    emit_record(out, row);
  }
  return out;
}

CsvTable parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> rec;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;  // distinguishes trailing newline from empty record
  std::size_t i = 0;
  const std::size_t n = text.size();
  auto end_field = [&] {
    rec.push_back(field);
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(rec);
    rec.clear();
  };
  while (i < n) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < n && text[i + 1] == '"') {
          field.push_back('"');
          i += 2;
        } else {
          in_quotes = false;
          ++i;
        }
      } else {
        field.push_back(c);
        ++i;
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        field_started = true;
        ++i;
        break;
      case ',':
        end_field();
        field_started = true;  // a separator implies another field follows
        ++i;
        break;
      case '\r':
        if (i + 1 < n && text[i + 1] == '\n') ++i;
        [[fallthrough]];
      case '\n':
        end_record();
        ++i;
        break;
      default:
        field.push_back(c);
        field_started = true;
        ++i;
    }
  }
  if (in_quotes) throw std::invalid_argument("parse_csv: unterminated quoted field");
  if (field_started || !rec.empty()) end_record();

  CsvTable table;
  if (records.empty()) return table;
  table.header = records.front();
  table.rows.assign(records.begin() + 1, records.end());
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size())
      throw std::invalid_argument("parse_csv: row width does not match header");
  }
  return table;
}

CsvTable make_table(const std::vector<std::string>& schema,
                    const std::vector<std::map<std::string, std::string>>& records) {
  CsvTable table;
  table.header = schema;
  table.rows.reserve(records.size());
  for (const auto& record : records) {
    if (record.size() != schema.size())
      throw std::invalid_argument("make_table: record has wrong number of keys");
    std::vector<std::string> row;
    row.reserve(schema.size());
    for (const auto& key : schema) {
      auto it = record.find(key);
      if (it == record.end()) throw std::invalid_argument("make_table: missing key '" + key + "'");
      row.push_back(it->second);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::size_t column_index(const CsvTable& table, const std::string& name) {
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (table.header[i] == name) return i;
  }
  throw std::invalid_argument("column not found: " + name);
}

}  // namespace sns
