#pragma once

// Minimal RFC 4180 reader/writer: comma separated, double-quote escaping,
// header row required.

#include "artval/core.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace artval::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    return std::nullopt;
  }
};

inline std::vector<std::vector<std::string>> parse_records(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    if (!(record.size() == 1 && record[0].empty())) records.push_back(std::move(record));
    record.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      end_record();
    } else if (c == '\r') {
      // tolerate CRLF
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (in_quotes) fail(ErrorKind::schema, "csv: unterminated quoted field");
  if (!field.empty() || !record.empty()) end_record();
  return records;
}

inline Table read_string(std::string_view text) {
  auto records = parse_records(text);
  if (records.empty()) fail(ErrorKind::schema, "csv: missing header row");
  Table t;
  t.header = std::move(records.front());
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].size() != t.header.size())
      fail(ErrorKind::schema, "csv: row " + std::to_string(i) + " has " +
                                  std::to_string(records[i].size()) + " fields, header has " +
                                  std::to_string(t.header.size()));
    t.rows.push_back(std::move(records[i]));
  }
  return t;
}

inline Table read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::missing_artifact, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return read_string(ss.str());
}

inline std::string escape(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

// Shortest round-trip representation; locale independent.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Fixed precision for human-facing reports.
inline std::string format_fixed(double v, int digits) {
  if (!std::isfinite(v)) return format_number(v);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

class Writer {
 public:
  explicit Writer(std::vector<std::string> header) : header_(std::move(header)) {}

  Writer& row(std::vector<std::string> fields) {
    if (fields.size() != header_.size())
      fail(ErrorKind::invalid_argument, "csv writer: field count mismatch");
    rows_.push_back(std::move(fields));
    return *this;
  }

  std::string str() const {
    std::string out;
    auto emit = [&](const std::vector<std::string>& r) {
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (i) out.push_back(',');
        out += escape(r[i]);
      }
      out.push_back('\n');
    };
    emit(header_);
    for (const auto& r : rows_) emit(r);
    return out;
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::io, "cannot write " + path);
    out << str();
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

inline double parse_double(const std::string& s, const std::string& context) {
  double v = 0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  while (b < e && *b == ' ') ++b;
  auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc() || res.ptr != e)
    fail(ErrorKind::schema, context + ": not a number: '" + s + "'");
  return v;
}

inline long long parse_int(const std::string& s, const std::string& context) {
  long long v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    fail(ErrorKind::schema, context + ": not an integer: '" + s + "'");
  return v;
}

inline bool parse_bool(const std::string& s, const std::string& context) {
  if (s == "1" || s == "true" || s == "TRUE" || s == "True") return true;
  if (s == "0" || s == "false" || s == "FALSE" || s == "False") return false;
  fail(ErrorKind::schema, context + ": not a boolean: '" + s + "'");
}

}  // namespace artval::csv
