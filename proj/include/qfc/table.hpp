#pragma once

// Result tables and their CSV/JSON encodings. Numbers are written in shortest
// round-trip form; non-finite values as nan, inf, -inf.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qfc::table {

inline constexpr std::string_view tool_version = "0.1.0";
inline constexpr int schema_version = 1;

struct Column {
  std::string name;
  std::string unit; // "1" for dimensionless
  friend bool operator==(const Column&, const Column&) = default;
};

struct Row {
  std::vector<double> values;
  std::string error; // empty when the point evaluated cleanly
};

struct Provenance {
  std::string config_hash;
  std::string tool_version{table::tool_version};
  std::optional<std::uint64_t> seed;
  bool calibrated = false;
  std::string operation;
  std::vector<std::pair<std::string, std::string>> config; // resolved "section.key" -> value
  friend bool operator==(const Provenance&, const Provenance&) = default;
};

class ResultTable {
public:
  ResultTable() = default;
  explicit ResultTable(std::vector<Column> columns) : columns_(std::move(columns)) {}

  const std::vector<Column>& columns() const { return columns_; }
  const std::vector<Row>& rows() const { return rows_; }
  Provenance& provenance() { return provenance_; }
  const Provenance& provenance() const { return provenance_; }

  /// Throws InvalidParameter unless values.size() == columns().size().
  void add_row(std::vector<double> values, std::string error = {});
  std::size_t column_index(std::string_view name) const;

  friend bool operator==(const ResultTable& a, const ResultTable& b);

private:
  std::vector<Column> columns_;
  std::vector<Row> rows_;
  Provenance provenance_;
};

enum class Format { csv, json };

std::optional<Format> parse_format(std::string_view s);

std::string to_csv(const ResultTable& t);
std::string to_json(const ResultTable& t);
ResultTable from_csv(std::string_view text);
ResultTable from_json(std::string_view text);

std::string encode(const ResultTable& t, Format f);

/// Writes the encoded table to path; IoError names the path on failure.
void emit(const ResultTable& t, Format f, const std::filesystem::path& path);

std::string format_number(double v);
double parse_number(std::string_view s);

} // namespace qfc::table
