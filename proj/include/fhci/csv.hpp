#pragma once

#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "fhci/dataset.hpp"

namespace fhci::csv {

/// Splits one CSV record. Double-quoted fields may contain commas and "" escapes.
inline std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char c = line[k];
    if (quoted) {
      if (c == '"') {
        if (k + 1 < line.size() && line[k + 1] == '"') {
          cur.push_back('"');
          ++k;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

inline std::string quote(std::string_view field) {
  if (field.find_first_of(",\"\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (const char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

/// Six significant digits, printf %g style.
inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline bool parse_double(std::string_view text, double& out) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
    text.remove_suffix(1);
  }
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

inline Error malformed(std::size_t line, std::size_t column, const std::string& what) {
  return Error(ErrorCode::MalformedInput,
               "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what);
}

/// Reads `area,y,D,x1,...,xp`. Line numbers in diagnostics are 1-based and
/// count the header.
inline std::vector<AreaRecord> read_records(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw malformed(1, 1, "missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // BOM
  const auto header = split_line(line);
  if (header.size() < 4 || header[0] != "area" || header[1] != "y" || header[2] != "D") {
    throw malformed(1, 1, "header must be area,y,D,x1,...,xp");
  }
  const std::size_t p = header.size() - 3;

  std::vector<AreaRecord> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto fields = split_line(line);
    if (fields.size() != header.size()) {
      throw malformed(line_no, std::min(fields.size(), header.size()) + 1,
                      "expected " + std::to_string(header.size()) + " fields, found " +
                          std::to_string(fields.size()));
    }
    AreaRecord rec;
    rec.id = fields[0];
    if (rec.id.empty()) throw malformed(line_no, 1, "empty area id");
    if (!parse_double(fields[1], rec.y)) throw malformed(line_no, 2, "y is not a number");
    if (!parse_double(fields[2], rec.D)) throw malformed(line_no, 3, "D is not a number");
    rec.x.resize(p);
    for (std::size_t k = 0; k < p; ++k) {
      if (!parse_double(fields[3 + k], rec.x[k])) {
        throw malformed(line_no, 4 + k, header[3 + k] + " is not a number");
      }
    }
    rows.push_back(std::move(rec));
  }
  return rows;
}

inline FayHerriotDataset read_dataset(std::istream& in) { return load_dataset(read_records(in)); }

/// Plain table with a header row; used for every CSV the tools emit.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void write(std::ostream& out) const {
    auto emit = [&](const std::vector<std::string>& r) {
      for (std::size_t k = 0; k < r.size(); ++k) {
        if (k) out << ',';
        out << quote(r[k]);
      }
      out << '\n';
    };
    emit(header);
    for (const auto& r : rows) emit(r);
  }

  static Table read(std::istream& in) {
    Table t;
    std::string line;
    if (std::getline(in, line)) t.header = split_line(line);
    while (std::getline(in, line)) {
      if (!line.empty()) t.rows.push_back(split_line(line));
    }
    return t;
  }
};

}  // namespace fhci::csv
