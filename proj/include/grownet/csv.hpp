#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace grownet {

// Minimal CSV: comma-separated, no quoting or escaping, one record per line.
// Field values (firm ids, block labels) must not contain commas.

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;  // all rows sized like header
};

CsvTable read_csv(const std::filesystem::path& path);

// Doubles are printed with "%.17g" so files round-trip exactly.
std::string format_double(double x);

double parse_double(const std::string& s, long line);
long long parse_int(const std::string& s, long line);

}  // namespace grownet
