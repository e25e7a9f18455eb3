#include "qfc/table.hpp"

#include "qfc/error.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

namespace qfc::table {

namespace {

using nlohmann::json;

constexpr std::string_view csv_banner = "# qfcsim ";
constexpr std::string_view csv_config = "# config ";

bool same_value(double a, double b) {
  if (std::isnan(a) || std::isnan(b))
    return std::isnan(a) && std::isnan(b);
  return std::memcmp(&a, &b, sizeof a) == 0;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = s.find(sep, pos);
    out.push_back(s.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
    if (next == std::string_view::npos)
      return out;
    pos = next + 1;
  }
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  for (auto line : split(text, '\n')) {
    if (!line.empty() && line.back() == '\r')
      line.remove_suffix(1);
    out.push_back(line);
  }
  while (!out.empty() && out.back().empty())
    out.pop_back();
  return out;
}

json number_json(double v) {
  if (std::isfinite(v))
    return v;
  return format_number(v);
}

double number_from_json(const json& j) {
  if (j.is_number())
    return j.get<double>();
  if (j.is_string())
    return parse_number(j.get<std::string>());
  throw ParseError(0, "expected a number in table JSON");
}

} // namespace

std::string format_number(double v) {
  if (std::isnan(v))
    return "nan";
  if (std::isinf(v))
    return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double parse_number(std::string_view s) {
  if (s == "nan")
    return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf")
    return std::numeric_limits<double>::infinity();
  if (s == "-inf")
    return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw ParseError(0, "bad number '" + std::string(s) + "'");
  return v;
}

void ResultTable::add_row(std::vector<double> values, std::string error) {
  if (values.size() != columns_.size())
    throw InvalidParameter("row has " + std::to_string(values.size()) + " values for " +
                           std::to_string(columns_.size()) + " columns");
  // Error tags live in one CSV cell.
  for (char& c : error)
    if (c == ',' || c == '\n' || c == '\r')
      c = c == ',' ? ';' : ' ';
  rows_.push_back({std::move(values), std::move(error)});
}

std::size_t ResultTable::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i)
    if (columns_[i].name == name)
      return i;
  throw InvalidParameter("no column named '" + std::string(name) + "'");
}

bool operator==(const ResultTable& a, const ResultTable& b) {
  if (a.columns_ != b.columns_ || a.provenance_ != b.provenance_ || a.rows_.size() != b.rows_.size())
    return false;
  for (std::size_t r = 0; r < a.rows_.size(); ++r) {
    const auto &ra = a.rows_[r], &rb = b.rows_[r];
    if (ra.error != rb.error || ra.values.size() != rb.values.size())
      return false;
    for (std::size_t c = 0; c < ra.values.size(); ++c)
      if (!same_value(ra.values[c], rb.values[c]))
        return false;
  }
  return true;
}

std::optional<Format> parse_format(std::string_view s) {
  if (s == "csv")
    return Format::csv;
  if (s == "json")
    return Format::json;
  return std::nullopt;
}

std::string to_csv(const ResultTable& t) {
  const auto& p = t.provenance();
  std::string out(csv_banner);
  out += p.tool_version + "; config_hash=" + p.config_hash + "; seed=" + (p.seed ? std::to_string(*p.seed) : "none") +
         "; calibrated=" + (p.calibrated ? "true" : "false") + "; operation=" + p.operation + "\n";
  for (const auto& [key, value] : p.config)
    out += std::string(csv_config) + key + "=" + value + "\n";

  std::string names, units;
  for (const auto& c : t.columns()) {
    names += c.name + ",";
    units += c.unit + ",";
  }
  out += names + "error,config_hash\n";
  out += units + ",\n";
  for (const auto& row : t.rows()) {
    for (double v : row.values)
      out += format_number(v) + ",";
    out += row.error + "," + p.config_hash + "\n";
  }
  return out;
}

ResultTable from_csv(std::string_view text) {
  const auto lines = lines_of(text);
  std::size_t i = 0;
  Provenance prov;
  if (i >= lines.size() || !lines[i].starts_with(csv_banner))
    throw ParseError(1, "missing '# qfcsim' provenance line");
  for (auto field : split(lines[i].substr(csv_banner.size()), ';')) {
    while (!field.empty() && field.front() == ' ')
      field.remove_prefix(1);
    const auto eq = field.find('=');
    if (eq == std::string_view::npos) {
      prov.tool_version = std::string(field);
      continue;
    }
    const auto key = field.substr(0, eq), value = field.substr(eq + 1);
    if (key == "config_hash")
      prov.config_hash = value;
    else if (key == "seed") {
      if (value != "none") {
        std::uint64_t s = 0;
        auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), s);
        if (ec != std::errc() || ptr != value.data() + value.size())
          throw ParseError(i + 1, "bad seed '" + std::string(value) + "'");
        prov.seed = s;
      }
    } else if (key == "calibrated")
      prov.calibrated = value == "true";
    else if (key == "operation")
      prov.operation = value;
  }
  ++i;
  for (; i < lines.size() && lines[i].starts_with(csv_config); ++i) {
    const auto body = lines[i].substr(csv_config.size());
    const auto eq = body.find('=');
    if (eq == std::string_view::npos)
      throw ParseError(i + 1, "config echo line without '='");
    prov.config.emplace_back(std::string(body.substr(0, eq)), std::string(body.substr(eq + 1)));
  }
  if (i + 1 >= lines.size())
    throw ParseError(i + 1, "missing header or units row");
  const auto names = split(lines[i], ','), units = split(lines[i + 1], ',');
  if (names.size() < 2 || names[names.size() - 2] != "error" || names.back() != "config_hash")
    throw ParseError(i + 1, "header must end with error,config_hash");
  if (units.size() != names.size())
    throw ParseError(i + 2, "units row does not match the header");
  const std::size_t ncols = names.size() - 2;
  std::vector<Column> cols;
  for (std::size_t c = 0; c < ncols; ++c)
    cols.push_back({std::string(names[c]), std::string(units[c])});
  ResultTable t(std::move(cols));
  t.provenance() = prov;
  for (std::size_t r = i + 2; r < lines.size(); ++r) {
    const auto cells = split(lines[r], ',');
    if (cells.size() != names.size())
      throw ParseError(r + 1, "row has " + std::to_string(cells.size()) + " cells, expected " +
                                  std::to_string(names.size()));
    std::vector<double> values(ncols);
    for (std::size_t c = 0; c < ncols; ++c) {
      try {
        values[c] = parse_number(cells[c]);
      } catch (const ParseError&) {
        throw ParseError(r + 1, "bad number '" + std::string(cells[c]) + "'");
      }
    }
    t.add_row(std::move(values), std::string(cells[ncols]));
  }
  return t;
}

std::string to_json(const ResultTable& t) {
  const auto& p = t.provenance();
  json j;
  j["schema_version"] = schema_version;
  json prov;
  prov["tool_version"] = p.tool_version;
  prov["config_hash"] = p.config_hash;
  prov["seed"] = p.seed ? json(*p.seed) : json(nullptr);
  prov["calibrated"] = p.calibrated;
  prov["operation"] = p.operation;
  json cfg = json::array();
  for (const auto& [key, value] : p.config)
    cfg.push_back({key, value});
  prov["config"] = cfg;
  j["provenance"] = prov;
  json cols = json::array();
  for (const auto& c : t.columns())
    cols.push_back({{"name", c.name}, {"unit", c.unit}});
  j["columns"] = cols;
  json rows = json::array();
  for (const auto& r : t.rows()) {
    json values = json::array();
    for (double v : r.values)
      values.push_back(number_json(v));
    rows.push_back({{"values", values}, {"error", r.error}, {"config_hash", p.config_hash}});
  }
  j["rows"] = rows;
  return j.dump(2) + "\n";
}

ResultTable from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(0, std::string("invalid table JSON: ") + e.what());
  }
  try {
    if (j.at("schema_version").get<int>() != schema_version)
      throw ParseError(0, "unsupported table schema_version");
    std::vector<Column> cols;
    for (const auto& c : j.at("columns"))
      cols.push_back({c.at("name").get<std::string>(), c.at("unit").get<std::string>()});
    ResultTable t(std::move(cols));
    const auto& prov = j.at("provenance");
    auto& p = t.provenance();
    p.tool_version = prov.at("tool_version").get<std::string>();
    p.config_hash = prov.at("config_hash").get<std::string>();
    if (!prov.at("seed").is_null())
      p.seed = prov.at("seed").get<std::uint64_t>();
    p.calibrated = prov.at("calibrated").get<bool>();
    p.operation = prov.at("operation").get<std::string>();
    for (const auto& kv : prov.at("config"))
      p.config.emplace_back(kv.at(0).get<std::string>(), kv.at(1).get<std::string>());
    for (const auto& r : j.at("rows")) {
      std::vector<double> values;
      for (const auto& v : r.at("values"))
        values.push_back(number_from_json(v));
      t.add_row(std::move(values), r.at("error").get<std::string>());
    }
    return t;
  } catch (const json::exception& e) {
    throw ParseError(0, std::string("malformed table JSON: ") + e.what());
  }
}

std::string encode(const ResultTable& t, Format f) { return f == Format::csv ? to_csv(t) : to_json(t); }

void emit(const ResultTable& t, Format f, const std::filesystem::path& path) {
  const auto text = encode(t, f);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw IoError(path.string() + ": cannot open for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.flush();
  if (!out)
    throw IoError(path.string() + ": write failed");
}

} // namespace qfc::table
