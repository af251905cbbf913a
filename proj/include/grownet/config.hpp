#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace grownet {

// INI-style run configuration.
//
// Grammar (exact):
//   - lines are independent; trailing '\r' is stripped;
//   - leading/trailing spaces and tabs are trimmed;
//   - empty lines and lines starting with '#' or ';' are skipped;
//   - "[name]" opens a section;
//   - "key = value" assigns within the current section (value runs to end
//     of line, trimmed); keys before any section are an error; a duplicate
//     key within a section is an error.
class Config {
 public:
  static Config load(const std::filesystem::path& path);
  static Config from_string(const std::string& text);

  bool has(const std::string& section, const std::string& key) const;
  bool has_section(const std::string& section) const;

  // Required accessors throw DataError naming the section/key.
  std::string get_string(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key) const;
  long long get_int(const std::string& section, const std::string& key) const;

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key,
                    double fallback) const;
  long long get_int(const std::string& section, const std::string& key,
                    long long fallback) const;

  // Comma-separated list of integers.
  std::vector<int> get_int_list(const std::string& section, const std::string& key,
                                const std::vector<int>& fallback) const;
  std::vector<std::string> get_string_list(const std::string& section,
                                           const std::string& key,
                                           const std::vector<std::string>& fallback) const;

  uint64_t seed() const;  // [run] seed, mandatory

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

}  // namespace grownet
