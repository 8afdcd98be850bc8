#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mtomo {

/// Flat `key = value` text file. `#` starts a comment; blank lines are
/// ignored; `key value` (whitespace separator) is accepted as well.
class KeyValueFile {
 public:
  static KeyValueFile parse(std::string_view text);
  static KeyValueFile load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;
  std::string require(const std::string& key) const;

  double get_double(const std::string& key, double fallback) const;
  double require_double(const std::string& key) const;
  long long get_int(const std::string& key, long long fallback) const;
  long long require_int(const std::string& key) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::string> get_list(const std::string& key) const;

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
  std::map<std::string, int> lines_;
};

std::string read_text_file(const std::string& path);

}  // namespace mtomo
