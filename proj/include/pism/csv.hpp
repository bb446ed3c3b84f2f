#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace pism::csv {

// Minimal CSV: comma-separated, no quoting, UTF-8, header row required by
// every format in this project. Trims trailing \r so CRLF files load.
std::vector<std::vector<std::string>> read(const std::filesystem::path& path);

std::vector<std::string> split_line(const std::string& line);

// Shortest representation that round-trips through binary64.
std::string format_double(double v);

double parse_double(const std::string& s);
long long parse_int(const std::string& s);

}  // namespace pism::csv
