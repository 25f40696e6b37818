#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace qmcsim {

// Doubles are written with 17 significant digits so every finite value
// round-trips through the file bit-exactly.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

class CsvWriter {
  public:
    explicit CsvWriter(const std::string& path) : out_(path) {
        if (!out_) {
            throw std::runtime_error("cannot open for writing: " + path);
        }
    }

    void header(const std::vector<std::string>& columns) { row_strings(columns); }

    CsvWriter& field(const std::string& s) {
        if (!first_) out_ << ',';
        out_ << s;
        first_ = false;
        return *this;
    }
    CsvWriter& field(double v) { return field(format_double(v)); }
    CsvWriter& field(long long v) { return field(std::to_string(v)); }
    CsvWriter& field(int v) { return field(std::to_string(v)); }
    CsvWriter& field(bool v) { return field(std::string(v ? "1" : "0")); }

    void end_row() {
        out_ << '\n';
        first_ = true;
    }

    void row_strings(const std::vector<std::string>& cells) {
        for (const auto& c : cells) field(c);
        end_row();
    }

  private:
    std::ofstream out_;
    bool first_ = true;
};

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    int column_index(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (columns[i] == name) return static_cast<int>(i);
        }
        throw std::runtime_error("csv: missing column " + name);
    }
};

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open for reading: " + path);
    }
    CsvTable table;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (line.back() == ',') cells.emplace_back();
        if (first) {
            table.columns = std::move(cells);
            first = false;
        } else {
            table.rows.push_back(std::move(cells));
        }
    }
    return table;
}

inline double parse_double(const std::string& s) {
    return std::strtod(s.c_str(), nullptr);
}

inline long long parse_int(const std::string& s) {
    return std::strtoll(s.c_str(), nullptr, 10);
}

}  // namespace qmcsim
