#pragma once

// Atomic file output and schema-versioned CSV tables.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mflight/error.hpp"

namespace mflight {

class IoError : public Error {
 public:
  using Error::Error;
};

/// A CSV table whose first line names its schema and version.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Shortest text that reads back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Writes `content` to a sibling temporary file and renames it over `path`;
/// readers see the old file, the new file, or nothing.
inline void atomic_write(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp);
      throw IoError("write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline constexpr int kCsvVersion = 1;

struct CsvTable {
  std::string schema;  // e.g. "episodes"
  int version = kCsvVersion;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string to_string() const {
    std::string out = "# mflight-" + schema + " v" + std::to_string(version) + "\n";
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += cells[i];
      }
      out += '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out;
  }

  std::size_t column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw SchemaError("column '" + std::string(name) + "' missing from " + schema + " table");
  }
};

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    cells.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return cells;
}

/// Parses a table written by CsvTable::to_string; rejects other schemas and versions.
inline CsvTable parse_csv(std::string_view text, std::string_view expected_schema) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty table, expected " + std::string(expected_schema));
  const std::string prefix = "# mflight-" + std::string(expected_schema) + " v";
  if (line.rfind(prefix, 0) != 0) throw SchemaError("unrecognized table header '" + line + "'");
  CsvTable t;
  t.schema = expected_schema;
  try {
    std::size_t used = 0;
    const std::string ver = line.substr(prefix.size());
    t.version = std::stoi(ver, &used);
    if (used != ver.size()) throw SchemaError("malformed version in '" + line + "'");
  } catch (const std::logic_error&) {
    throw SchemaError("malformed version in '" + line + "'");
  }
  if (t.version != kCsvVersion)
    throw SchemaError(std::string(expected_schema) + " table version " + std::to_string(t.version) +
                      " is not supported (expected " + std::to_string(kCsvVersion) + ")");
  if (!std::getline(in, line)) throw SchemaError("table has no header row");
  t.header = split_csv_line(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    t.rows.push_back(split_csv_line(line));
    if (t.rows.back().size() != t.header.size()) throw SchemaError("ragged row in " + t.schema + " table");
  }
  return t;
}

}  // namespace mflight
