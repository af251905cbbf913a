#include "grownet/csv.hpp"

#include "grownet/common.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>

namespace grownet {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

}  // namespace

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path.string());

  CsvTable table;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_line(line);
    if (line_no == 1) {
      table.header = std::move(fields);
      continue;
    }
    if (fields.size() != table.header.size())
      throw ParseError("row has " + std::to_string(fields.size()) +
                           " fields, header has " +
                           std::to_string(table.header.size()) + " in " +
                           path.string(),
                       line_no);
    table.rows.push_back(std::move(fields));
  }
  if (table.header.empty())
    throw DataError("file has no header row: " + path.string());
  return table;
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

double parse_double(const std::string& s, long line) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE)
    throw ParseError("malformed number '" + s + "'", line);
  return v;
}

long long parse_int(const std::string& s, long line) {
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE)
    throw ParseError("malformed integer '" + s + "'", line);
  return v;
}

}  // namespace grownet
