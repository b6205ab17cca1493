#include "cwopo/io.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace cwopo {

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.11e", v);
    return buf;
}

void write_csv(std::ostream& out, const CsvTable& table) {
    out << "# cwopo-csv-schema=" << kCsvSchemaVersion << " kind=" << table.kind << '\n';
    for (const auto& [k, v] : table.meta) out << "# " << k << '=' << v << '\n';
    for (std::size_t i = 0; i < table.columns.size(); ++i) out << (i ? "," : "") << table.columns[i];
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_number(row[i]);
        out << '\n';
    }
}

CsvTable read_csv(std::istream& in) {
    CsvTable t;
    std::string line;
    bool schema = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const std::string body = line.substr(line.find_first_not_of("# "));
            if (body.rfind("cwopo-csv-schema=", 0) == 0) {
                std::istringstream ss(body.substr(17));
                int version = 0;
                ss >> version;
                if (version != kCsvSchemaVersion) throw std::runtime_error("read_csv: unsupported schema version");
                const auto pos = body.find("kind=");
                if (pos != std::string::npos) t.kind = body.substr(pos + 5);
                schema = true;
                continue;
            }
            const auto eq = body.find('=');
            if (eq != std::string::npos) t.add_meta(body.substr(0, eq), body.substr(eq + 1));
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (t.columns.empty()) {
            t.columns = std::move(cells);
            continue;
        }
        if (cells.size() != t.columns.size()) throw std::runtime_error("read_csv: ragged row");
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) row.push_back(std::stod(c));
        t.rows.push_back(std::move(row));
    }
    if (!schema) throw std::runtime_error("read_csv: missing schema line");
    return t;
}

CsvTable mode_table(const ModeGrid& f) {
    CsvTable t;
    t.kind = "mode";
    t.columns = {"t", "f"};
    for (std::size_t i = 0; i < f.size(); ++i) t.rows.push_back({f.time(i), f[i]});
    return t;
}

ModeGrid mode_from_table(const CsvTable& table) {
    if (table.columns.size() < 2 || table.columns[0] != "t" || table.columns[1] != "f")
        throw std::runtime_error("mode table needs columns t,f");
    if (table.rows.size() < 3) throw std::runtime_error("mode table needs at least three rows");
    const double t0 = table.rows.front()[0];
    const double dt = (table.rows.back()[0] - t0) / static_cast<double>(table.rows.size() - 1);
    std::vector<double> values;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const double expect = t0 + dt * static_cast<double>(i);
        if (std::abs(table.rows[i][0] - expect) > 1e-9 * std::max(1.0, std::abs(expect)))
            throw std::runtime_error("mode table: time column is not uniform");
        values.push_back(table.rows[i][1]);
    }
    return ModeGrid(t0, dt, std::move(values));
}

nlohmann::json to_json(const Cov& cov) {
    nlohmann::json rows = nlohmann::json::array();
    const auto& m = cov.matrix();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json r = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
        rows.push_back(std::move(r));
    }
    return {{"labels", cov.labels()}, {"matrix", std::move(rows)}};
}

nlohmann::json to_json(const RadialWigner& w) {
    return {{"form", "(a1 + a2 r^2) exp(-a3 r^2)"}, {"a1", w.a1}, {"a2", w.a2}, {"a3", w.a3},
            {"W00", w(0.0, 0.0)}, {"normalization", w.normalization()}};
}

nlohmann::json to_json(const AxialWigner& w) {
    return {{"form", "(c2 + c3 x^2 + c4 p^2) exp(-c5 x^2 - c6 p^2) / c1"},
            {"c1", w.c1}, {"c2", w.c2}, {"c3", w.c3}, {"c4", w.c4}, {"c5", w.c5}, {"c6", w.c6},
            {"W00", w(0.0, 0.0)}, {"normalization", w.normalization()}};
}

nlohmann::json to_json(const std::vector<TraceEntry>& trace) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& e : trace) out.push_back({{"iteration", e.iteration}, {"fidelity", e.fidelity}, {"residual", e.residual}});
    return out;
}

}  // namespace cwopo
