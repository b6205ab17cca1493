#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cwopo/degenerate.hpp"
#include "cwopo/gaussian_conditioning.hpp"
#include "cwopo/mode_functions.hpp"
#include "cwopo/mode_optimizer.hpp"

namespace cwopo {

inline constexpr int kCsvSchemaVersion = 1;

/// Fixed 12-significant-digit scientific format; "nan" for NaN.
std::string format_number(double v);

/// A CSV document: '#'-prefixed header lines (schema line first), one column
/// line, then rows.
struct CsvTable {
    std::string kind;
    std::vector<std::pair<std::string, std::string>> meta;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    void add_meta(std::string key, std::string value) { meta.emplace_back(std::move(key), std::move(value)); }
    void add_meta(std::string key, double value) { meta.emplace_back(std::move(key), format_number(value)); }
};

void write_csv(std::ostream& out, const CsvTable& table);

/// Parses a table written by write_csv. Throws std::runtime_error on a schema
/// or shape mismatch.
CsvTable read_csv(std::istream& in);

CsvTable mode_table(const ModeGrid& f);
/// Reads a (t, f) table back into a grid; the t column must be uniform.
ModeGrid mode_from_table(const CsvTable& table);

nlohmann::json to_json(const Cov& cov);
nlohmann::json to_json(const RadialWigner& w);
nlohmann::json to_json(const AxialWigner& w);
nlohmann::json to_json(const std::vector<TraceEntry>& trace);

}  // namespace cwopo
