#pragma once
// Run reports: ordered JSON summaries and CSV tables with 17 significant digits.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "umix/error.hpp"

namespace umix {

using ojson = nlohmann::ordered_json;

inline std::string format_double(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

using Cell = std::variant<double, long long, std::string>;

struct Table {
  std::string name;
  std::vector<std::string> headers;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row) {
    if (row.size() != headers.size()) throw Error(Errc::LengthMismatch, "row width differs from table '" + name + "'");
    rows.push_back(std::move(row));
  }
};

struct RunReport {
  ojson summary = ojson::object();
  std::vector<Table> tables;
  std::vector<std::string> warnings;
  std::vector<std::pair<std::string, double>> timings;  // seconds; never written to files
};

namespace detail {

inline void json_string(std::ostream& os, const std::string& s) { os << ojson(s).dump(); }

inline void write_json(std::ostream& os, const ojson& j, int indent, int level) {
  const std::string pad(static_cast<size_t>(indent) * (level + 1), ' ');
  const std::string close(static_cast<size_t>(indent) * level, ' ');
  switch (j.type()) {
    case ojson::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << "{\n";
      size_t i = 0;
      for (auto it = j.begin(); it != j.end(); ++it, ++i) {
        os << pad;
        json_string(os, it.key());
        os << ": ";
        write_json(os, it.value(), indent, level + 1);
        os << (i + 1 < j.size() ? ",\n" : "\n");
      }
      os << close << "}";
      return;
    }
    case ojson::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      os << "[\n";
      for (size_t i = 0; i < j.size(); ++i) {
        os << pad;
        write_json(os, j[i], indent, level + 1);
        os << (i + 1 < j.size() ? ",\n" : "\n");
      }
      os << close << "]";
      return;
    }
    case ojson::value_t::number_float: {
      double v = j.get<double>();
      os << (std::isfinite(v) ? format_double(v) : "null");
      return;
    }
    default:
      os << j.dump();
  }
}

inline std::string csv_field(const Cell& c) {
  if (auto d = std::get_if<double>(&c)) return format_double(*d);
  if (auto i = std::get_if<long long>(&c)) return std::to_string(*i);
  const std::string& s = std::get<std::string>(c);
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace detail

/// JSON text with doubles at %.17g and keys in insertion order.
inline std::string to_json_text(const ojson& j, int indent = 2) {
  std::ostringstream os;
  detail::write_json(os, j, indent, 0);
  os << "\n";
  return os.str();
}

/// Header line always present, so an empty table is a headers-only file.
inline std::string to_csv(const Table& t) {
  std::ostringstream os;
  for (size_t i = 0; i < t.headers.size(); ++i) os << (i ? "," : "") << detail::csv_field(t.headers[i]);
  os << "\n";
  for (const auto& row : t.rows) {
    for (size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << detail::csv_field(row[i]);
    os << "\n";
  }
  return os.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error(Errc::IoError, "cannot open " + p.string() + " for writing");
  f << text;
  if (!f) throw Error(Errc::IoError, "write failed for " + p.string());
}

/// summary.json plus one <name>.csv per table; returns the written paths.
inline std::vector<std::string> emit_report(const RunReport& r, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(Errc::IoError, "cannot create " + dir + ": " + ec.message());
  std::vector<std::string> out;
  ojson s = r.summary;
  s["warnings"] = r.warnings;
  auto sp = std::filesystem::path(dir) / "summary.json";
  write_file(sp, to_json_text(s));
  out.push_back(sp.string());
  for (const auto& t : r.tables) {
    auto p = std::filesystem::path(dir) / (t.name + ".csv");
    write_file(p, to_csv(t));
    out.push_back(p.string());
  }
  return out;
}

}  // namespace umix
