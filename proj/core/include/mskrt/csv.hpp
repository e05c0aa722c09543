#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mskrt {

/// Time series table: a `t` column followed by named channels.
struct CsvTable {
    std::vector<std::string> channels;      // without "t"
    std::vector<double> t;
    std::vector<std::vector<double>> rows;  // rows[i][c]

    std::optional<std::size_t> find(const std::string& channel) const;
    std::vector<double> column(std::size_t c) const;
    void append(double time, std::vector<double> values);
};

CsvTable parse_csv(std::istream& in, const std::string& origin = "<stream>");
CsvTable read_csv(const std::filesystem::path& path);
void write_csv(std::ostream& out, const CsvTable& table);
void write_csv(const std::filesystem::path& path, const CsvTable& table);

} // namespace mskrt
