#pragma once

// Experiment reports: named numeric tables, scalar summaries and pass/fail
// predicates, written as CSV files plus a JSON summary.

#include "viscomem/common.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

namespace viscomem {

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Real>> rows;

  void add_row(std::vector<Real> row) {
    VISCOMEM_REQUIRE(row.size() == columns.size(), InvalidInput,
                     "table '" + name + "': row width does not match the header");
    rows.push_back(std::move(row));
  }

  [[nodiscard]] std::size_t column_index(const std::string& col) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (columns[i] == col) return i;
    }
    throw InvalidInput("table '" + name + "' has no column '" + col + "'");
  }

  [[nodiscard]] std::vector<Real> column(const std::string& col) const {
    const std::size_t i = column_index(col);
    std::vector<Real> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[i]);
    return out;
  }
};

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct Report {
  std::string experiment;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string config_text;  // canonical config, embedded in the summary
  std::vector<Table> tables;
  std::vector<std::pair<std::string, Real>> scalars;
  std::vector<std::string> warnings;
  std::vector<Check> checks;

  [[nodiscard]] bool passed() const {
    for (const auto& c : checks) {
      if (!c.passed) return false;
    }
    return true;
  }

  [[nodiscard]] const Table& table(const std::string& name) const {
    for (const auto& t : tables) {
      if (t.name == name) return t;
    }
    throw InvalidInput("report has no table '" + name + "'");
  }

  [[nodiscard]] Real scalar(const std::string& name) const {
    for (const auto& [k, v] : scalars) {
      if (k == name) return v;
    }
    throw InvalidInput("report has no scalar '" + name + "'");
  }
};

/// Strict decrease along the column and last <= max_ratio * first. A single
/// row makes no monotonicity claim and passes.
inline Check decay_check(const Table& t, const std::string& col, Real max_ratio) {
  const std::vector<Real> v = t.column(col);
  Check c{t.name + "." + col + " decays", true, ""};
  if (v.size() < 2) {
    c.detail = "single row";
    return c;
  }
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] < v[i - 1])) c.passed = false;
  }
  const Real ratio = v.back() / v.front();
  if (!(ratio <= max_ratio)) c.passed = false;
  c.detail = fmt::format("last/first = {:.4g} (limit {:.4g})", ratio, max_ratio);
  return c;
}

namespace detail {

inline std::string csv_number(Real x) { return fmt::format("{:.17g}", x); }

inline void require_finite_report(const Report& r) {
  for (const auto& t : r.tables) {
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      for (std::size_t j = 0; j < t.rows[i].size(); ++j) {
        VISCOMEM_REQUIRE(std::isfinite(t.rows[i][j]), InvalidInput,
                         fmt::format("emit: table '{}' row {} column '{}' is not finite", t.name, i,
                                     t.columns[j]));
      }
    }
  }
  for (const auto& [k, v] : r.scalars) {
    VISCOMEM_REQUIRE(!std::isnan(v), InvalidInput, "emit: scalar '" + k + "' is NaN");
  }
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  VISCOMEM_REQUIRE(out.good(), Error, "emit: cannot open '" + path.string() + "' for writing");
  out << text;
  out.close();
  VISCOMEM_REQUIRE(!out.fail(), Error, "emit: write to '" + path.string() + "' failed");
}

}  // namespace detail

inline std::string table_csv(const Table& t) {
  std::string out;
  for (std::size_t j = 0; j < t.columns.size(); ++j) {
    out += (j ? "," : "") + t.columns[j];
  }
  out += "\n";
  for (const auto& row : t.rows) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      out += (j ? "," : "") + detail::csv_number(row[j]);
    }
    out += "\n";
  }
  return out;
}

inline std::string summary_json(const Report& r) {
  nlohmann::ordered_json j;
  j["experiment"] = r.experiment;
  j["config_hash"] = r.config_hash;
  j["seed"] = r.seed;
  j["passed"] = r.passed();
  auto checks = nlohmann::ordered_json::array();
  for (const auto& c : r.checks) {
    checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  }
  j["checks"] = checks;
  auto scalars = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.scalars) {
    // infinity is legal in a summary (an inactive bound) but not in JSON
    scalars[k] = std::isfinite(v) ? nlohmann::ordered_json(v)
                                  : nlohmann::ordered_json(v > 0 ? "inf" : "-inf");
  }
  j["scalars"] = scalars;
  auto tables = nlohmann::ordered_json::array();
  for (const auto& t : r.tables) tables.push_back(t.name + ".csv");
  j["tables"] = tables;
  j["warnings"] = r.warnings;
  if (!r.config_text.empty()) j["config"] = nlohmann::ordered_json::parse(r.config_text);
  return j.dump(2) + "\n";
}

/// Writes one CSV per table and summary.json into `dir`, creating it if
/// needed. Refuses reports containing NaN or infinite table entries.
inline void emit(const Report& r, const std::filesystem::path& dir) {
  detail::require_finite_report(r);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  VISCOMEM_REQUIRE(!ec && std::filesystem::is_directory(dir), Error,
                   "emit: cannot create directory '" + dir.string() + "'" +
                       (ec ? ": " + ec.message() : ""));
  for (const auto& t : r.tables) detail::write_file(dir / (t.name + ".csv"), table_csv(t));
  detail::write_file(dir / "summary.json", summary_json(r));
}

}  // namespace viscomem
