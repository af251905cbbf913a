#include "grownet/config.hpp"

#include "grownet/common.hpp"
#include "grownet/csv.hpp"

#include <fstream>
#include <sstream>

namespace grownet {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && (s[a] == ' ' || s[a] == '\t')) ++a;
  while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t')) --b;
  return s.substr(a, b - a);
}

}  // namespace

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_string(ss.str());
}

Config Config::from_string(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ParseError("unterminated section header '" + t + "'", line_no);
      section = trim(t.substr(1, t.size() - 2));
      if (section.empty()) throw ParseError("empty section name", line_no);
      cfg.sections_[section];
      continue;
    }
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ParseError("expected 'key = value': '" + t + "'", line_no);
    if (section.empty())
      throw ParseError("key outside any [section]: '" + t + "'", line_no);
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) throw ParseError("empty key", line_no);
    auto& sec = cfg.sections_[section];
    if (sec.count(key))
      throw ConflictError("duplicate key '" + key + "' in section [" + section +
                          "] (line " + std::to_string(line_no) + ")");
    sec[key] = value;
  }
  return cfg;
}

bool Config::has(const std::string& section, const std::string& key) const {
  auto it = sections_.find(section);
  return it != sections_.end() && it->second.count(key) > 0;
}

bool Config::has_section(const std::string& section) const {
  return sections_.count(section) > 0;
}

std::string Config::get_string(const std::string& section, const std::string& key) const {
  auto it = sections_.find(section);
  if (it == sections_.end())
    throw DataError("missing config section [" + section + "]");
  auto kt = it->second.find(key);
  if (kt == it->second.end())
    throw DataError("missing config key '" + key + "' in section [" + section + "]");
  return kt->second;
}

double Config::get_double(const std::string& section, const std::string& key) const {
  return parse_double(get_string(section, key), 0);
}

long long Config::get_int(const std::string& section, const std::string& key) const {
  return parse_int(get_string(section, key), 0);
}

std::string Config::get_string(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
  return has(section, key) ? get_string(section, key) : fallback;
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
  return has(section, key) ? get_double(section, key) : fallback;
}

long long Config::get_int(const std::string& section, const std::string& key,
                          long long fallback) const {
  return has(section, key) ? get_int(section, key) : fallback;
}

std::vector<int> Config::get_int_list(const std::string& section, const std::string& key,
                                      const std::vector<int>& fallback) const {
  if (!has(section, key)) return fallback;
  std::vector<int> out;
  std::istringstream ss(get_string(section, key));
  std::string tok;
  while (std::getline(ss, tok, ','))
    out.push_back(static_cast<int>(parse_int(trim(tok), 0)));
  return out;
}

std::vector<std::string> Config::get_string_list(
    const std::string& section, const std::string& key,
    const std::vector<std::string>& fallback) const {
  if (!has(section, key)) return fallback;
  std::vector<std::string> out;
  std::istringstream ss(get_string(section, key));
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(trim(tok));
  return out;
}

uint64_t Config::seed() const {
  if (!has("run", "seed"))
    throw DataError("missing mandatory [run] seed in config");
  return static_cast<uint64_t>(get_int("run", "seed"));
}

}  // namespace grownet
