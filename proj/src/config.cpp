#include "ddpmlab/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ddpmlab {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(s);
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& key, const std::string& s) {
  size_t pos = 0;
  double v;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "': bad number '" + s + "'");
  }
  if (pos != s.size())
    throw std::invalid_argument("config key '" + key + "': bad number '" + s + "'");
  return v;
}

int parse_int(const std::string& key, const std::string& s) {
  size_t pos = 0;
  long v;
  try {
    v = std::stol(s, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "': bad integer '" + s + "'");
  }
  if (pos != s.size())
    throw std::invalid_argument("config key '" + key + "': bad integer '" + s + "'");
  return static_cast<int>(v);
}

}  // namespace

Config Config::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_string(ss.str());
}

Config Config::from_string(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": empty key");
    if (cfg.values_.count(key))
      throw std::invalid_argument("config: duplicate key '" + key + "'");
    cfg.values_[key] = value;
  }
  return cfg;
}

std::string Config::get_string(const std::string& key,
                               const std::string& dflt) const {
  const auto it = values_.find(key);
  return it == values_.end() ? dflt : it->second;
}

double Config::get_double(const std::string& key, double dflt) const {
  const auto it = values_.find(key);
  return it == values_.end() ? dflt : parse_double(key, it->second);
}

int Config::get_int(const std::string& key, int dflt) const {
  const auto it = values_.find(key);
  return it == values_.end() ? dflt : parse_int(key, it->second);
}

std::vector<double> Config::get_double_list(
    const std::string& key, const std::vector<double>& dflt) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return dflt;
  std::vector<double> out;
  for (const auto& item : split_list(it->second))
    out.push_back(parse_double(key, item));
  return out;
}

std::vector<int> Config::get_int_list(const std::string& key,
                                      const std::vector<int>& dflt) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return dflt;
  std::vector<int> out;
  for (const auto& item : split_list(it->second))
    out.push_back(parse_int(key, item));
  return out;
}

std::vector<std::string> Config::get_string_list(
    const std::string& key, const std::vector<std::string>& dflt) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return dflt;
  return split_list(it->second);
}

void Config::require_known_keys(const std::set<std::string>& known) const {
  for (const auto& [key, value] : values_) {
    if (!known.count(key))
      throw std::invalid_argument("unknown config key '" + key + "'");
  }
}

}  // namespace ddpmlab
