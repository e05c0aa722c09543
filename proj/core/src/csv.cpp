#include "mskrt/csv.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "mskrt/errors.hpp"

namespace mskrt {

std::optional<std::size_t> CsvTable::find(const std::string& channel) const {
    for (std::size_t c = 0; c < channels.size(); ++c) {
        if (channels[c] == channel) {
            return c;
        }
    }
    return std::nullopt;
}

std::vector<double> CsvTable::column(std::size_t c) const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
        out.push_back(r.at(c));
    }
    return out;
}

void CsvTable::append(double time, std::vector<double> values) {
    if (values.size() != channels.size()) {
        throw DimensionError("csv row width differs from channel count");
    }
    t.push_back(time);
    rows.push_back(std::move(values));
}

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        const auto first = cell.find_first_not_of(' ');
        out.push_back(first == std::string::npos ? std::string() : cell.substr(first));
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

double to_double(const std::string& s, const std::string& where) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw ParseError(where + ": invalid number '" + s + "'");
    }
    return v;
}

} // namespace

CsvTable parse_csv(std::istream& in, const std::string& origin) {
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError(origin + ": empty csv");
    }
    auto header = split(line);
    if (header.empty() || header.front() != "t") {
        throw ParseError(origin + ": first column must be 't'");
    }
    CsvTable table;
    table.channels.assign(header.begin() + 1, header.end());
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") {
            continue;
        }
        const auto cells = split(line);
        const std::string where = origin + ":" + std::to_string(line_no);
        if (cells.size() != header.size()) {
            throw ParseError(where + ": expected " + std::to_string(header.size()) + " columns");
        }
        std::vector<double> values;
        values.reserve(cells.size() - 1);
        for (std::size_t c = 1; c < cells.size(); ++c) {
            values.push_back(to_double(cells[c], where));
        }
        table.append(to_double(cells[0], where), std::move(values));
    }
    return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open csv file '" + path.string() + "'");
    }
    return parse_csv(in, path.string());
}

void write_csv(std::ostream& out, const CsvTable& table) {
    out << 't';
    for (const auto& c : table.channels) {
        out << ',' << c;
    }
    out << '\n' << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (std::size_t i = 0; i < table.t.size(); ++i) {
        out << table.t[i];
        for (double v : table.rows[i]) {
            out << ',' << v;
        }
        out << '\n';
    }
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write csv file '" + path.string() + "'");
    }
    write_csv(out, table);
}

} // namespace mskrt
