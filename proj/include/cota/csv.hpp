#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace cota {

// Minimal comma-separated reader: no quoting, header row required.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);
std::vector<std::string> split_csv_line(const std::string& line);
double parse_double(const std::string& s, const std::string& where);

}  // namespace cota
