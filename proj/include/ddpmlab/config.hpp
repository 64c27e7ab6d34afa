#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace ddpmlab {

/// Flat key/value experiment configuration. File format: one `key = value`
/// per line, '#' starts a comment, list values are comma-separated. Keys not
/// in the consumer's known set are an error, not a warning.
class Config {
 public:
  Config() = default;

  static Config from_file(const std::string& path);
  static Config from_string(const std::string& text);

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& dflt) const;
  double get_double(const std::string& key, double dflt) const;
  int get_int(const std::string& key, int dflt) const;
  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& dflt) const;
  std::vector<int> get_int_list(const std::string& key,
                                const std::vector<int>& dflt) const;
  std::vector<std::string> get_string_list(
      const std::string& key, const std::vector<std::string>& dflt) const;

  /// Throws std::invalid_argument naming the first unknown key, if any.
  void require_known_keys(const std::set<std::string>& known) const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace ddpmlab
