#pragma once

#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "version.hpp"

namespace ediqkd {

// RFC 4180 quoting: fields containing a comma, quote or newline are quoted
// and embedded quotes doubled.
inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

inline std::string fmt(double v, int precision = 10) {
    std::ostringstream os;
    os.precision(precision);
    os << v;
    return os.str();
}

// CSV table preceded by "# key: value" metadata lines.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

    CsvTable& meta(const std::string& key, const std::string& value) {
        meta_.emplace_back(key, value);
        return *this;
    }
    CsvTable& meta(const std::string& key, double value) { return meta(key, fmt(value, 17)); }

    void row(std::vector<std::string> cells) {
        if (cells.size() != columns_.size()) throw std::invalid_argument("CsvTable: row width mismatch");
        rows_.push_back(std::move(cells));
    }

    void write(std::ostream& os) const {
        os << "# ediqkd: " << version << '\n';
        for (const auto& [k, v] : meta_) os << "# " << k << ": " << v << '\n';
        write_line(os, columns_);
        for (const auto& r : rows_) write_line(os, r);
    }

    const std::vector<std::vector<std::string>>& rows() const { return rows_; }
    const std::vector<std::string>& columns() const { return columns_; }

private:
    static void write_line(std::ostream& os, const std::vector<std::string>& cells) {
        for (std::size_t k = 0; k < cells.size(); ++k) os << (k ? "," : "") << csv_field(cells[k]);
        os << '\n';
    }

    std::vector<std::string> columns_;
    std::vector<std::pair<std::string, std::string>> meta_;
    std::vector<std::vector<std::string>> rows_;
};

} // namespace ediqkd
