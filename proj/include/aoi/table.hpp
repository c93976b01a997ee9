#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "aoi/distribution.hpp"

namespace aoi {

/// Tabular results with deterministic CSV and JSON renderings. Doubles are
/// formatted to 12 significant digits; non-finite values render as "nan"/null.
class ResultTable {
public:
    struct Cell {
        std::string text;
        bool numeric = false;
    };

    explicit ResultTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

    static Cell cell(std::string text) { return {std::move(text), false}; }
    static Cell cell(const char* text) { return {text, false}; }
    static Cell cell(double v) {
        if (!std::isfinite(v)) return {"nan", false};
        return {detail::format_number(v), true};
    }
    static Cell cell(std::size_t v) { return {std::to_string(v), true}; }

    void add_row(std::vector<Cell> cells) {
        if (cells.size() != columns_.size())
            throw std::logic_error("ResultTable: row width does not match column count");
        rows_.push_back(std::move(cells));
    }

    const std::vector<std::string>& columns() const { return columns_; }
    const std::vector<std::vector<Cell>>& rows() const { return rows_; }

    /// Value at (row, column name); throws on unknown column.
    const Cell& at(std::size_t row, std::string_view column) const {
        for (std::size_t c = 0; c < columns_.size(); ++c)
            if (columns_[c] == column) return rows_.at(row).at(c);
        throw std::out_of_range("ResultTable: no column '" + std::string(column) + "'");
    }

    std::string to_csv() const {
        std::string out;
        for (std::size_t c = 0; c < columns_.size(); ++c) {
            if (c) out += ',';
            out += csv_field(columns_[c]);
        }
        out += '\n';
        for (const auto& row : rows_) {
            for (std::size_t c = 0; c < row.size(); ++c) {
                if (c) out += ',';
                out += csv_field(row[c].text);
            }
            out += '\n';
        }
        return out;
    }

    std::string to_json() const {
        std::string out = "[";
        for (std::size_t r = 0; r < rows_.size(); ++r) {
            out += r ? ",\n " : "\n ";
            out += '{';
            for (std::size_t c = 0; c < columns_.size(); ++c) {
                if (c) out += ',';
                out += json_string(columns_[c]);
                out += ':';
                const Cell& cell = rows_[r][c];
                if (cell.numeric)
                    out += cell.text;
                else if (cell.text == "nan")
                    out += "null";
                else
                    out += json_string(cell.text);
            }
            out += '}';
        }
        out += "\n]\n";
        return out;
    }

private:
    static std::string csv_field(const std::string& s) {
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string q = "\"";
        for (char ch : s) {
            if (ch == '"') q += '"';
            q += ch;
        }
        q += '"';
        return q;
    }

    static std::string json_string(const std::string& s) {
        std::string q = "\"";
        for (char ch : s) {
            switch (ch) {
                case '"': q += "\\\""; break;
                case '\\': q += "\\\\"; break;
                case '\n': q += "\\n"; break;
                case '\t': q += "\\t"; break;
                default:
                    if (static_cast<unsigned char>(ch) < 0x20) {
                        char buf[8];
                        std::snprintf(buf, sizeof buf, "\\u%04x", ch);
                        q += buf;
                    } else {
                        q += ch;
                    }
            }
        }
        q += '"';
        return q;
    }

    std::vector<std::string> columns_;
    std::vector<std::vector<Cell>> rows_;
};

}  // namespace aoi
