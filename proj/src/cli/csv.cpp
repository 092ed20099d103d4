#include "csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mrh::cli {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path);
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::ostringstream os;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c) os << ',';
        os << header[c];
    }
    os << '\n';
    for (const auto& row : rows) {
        if (row.size() != header.size())
            throw std::runtime_error("csv row width mismatch for " + path);
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) os << ',';
            os << row[c];
        }
        os << '\n';
    }
    write_text_file(path, os.str());
}

namespace {

bool parse_row(const std::string& line, std::vector<double>& out) {
    out.clear();
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        std::size_t pos = 0;
        double v;
        try {
            v = std::stod(cell, &pos);
        } catch (...) {
            return false;
        }
        while (pos < cell.size() && std::isspace(static_cast<unsigned char>(cell[pos]))) ++pos;
        if (pos != cell.size()) return false;
        out.push_back(v);
    }
    return !out.empty();
}

}  // namespace

NumericTable read_numeric_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open csv file: " + path);
    NumericTable table;
    std::string line;
    std::size_t lineno = 0;
    std::vector<double> row;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        bool blank = true;
        for (char ch : line)
            if (!std::isspace(static_cast<unsigned char>(ch))) { blank = false; break; }
        if (blank) continue;
        if (!parse_row(line, row)) {
            if (lineno == 1 && table.rows.empty()) continue;  // header line
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": cannot parse numeric row");
        }
        if (table.columns == 0) table.columns = row.size();
        if (row.size() != table.columns)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected " + std::to_string(table.columns) +
                                     " columns, found " + std::to_string(row.size()));
        table.rows.push_back(row);
    }
    if (table.rows.empty()) throw std::runtime_error(path + ": no data rows");
    return table;
}

}  // namespace mrh::cli
