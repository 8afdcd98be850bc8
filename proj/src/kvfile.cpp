#include "mtomo/kvfile.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "mtomo/errors.hpp"

namespace mtomo {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

KeyValueFile KeyValueFile::parse(std::string_view text) {
  KeyValueFile kv;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = text.find('\n', pos);
    std::string_view line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    ++line_no;
    pos = end == std::string_view::npos ? text.size() + 1 : end + 1;

    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    std::string_view key;
    std::string_view value;
    if (const auto eq = line.find('='); eq != std::string_view::npos) {
      key = trim(line.substr(0, eq));
      value = trim(line.substr(eq + 1));
    } else {
      const auto sp = line.find_first_of(" \t");
      if (sp == std::string_view::npos) throw ParseError(line_no, "expected 'key = value', got '" + std::string(line) + "'");
      key = trim(line.substr(0, sp));
      value = trim(line.substr(sp + 1));
    }
    if (key.empty()) throw ParseError(line_no, "empty key");
    const std::string k(key);
    if (kv.values_.count(k)) throw ParseError(line_no, "duplicate key '" + k + "'");
    kv.values_[k] = std::string(value);
    kv.lines_[k] = line_no;
  }
  return kv;
}

KeyValueFile KeyValueFile::load(const std::string& path) { return parse(read_text_file(path)); }

std::optional<std::string> KeyValueFile::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string KeyValueFile::require(const std::string& key) const {
  auto v = get(key);
  if (!v) throw ValidationError("missing required key '" + key + "'");
  return *v;
}

double KeyValueFile::require_double(const std::string& key) const {
  const std::string v = require(key);
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ParseError(lines_.at(key), "key '" + key + "': '" + v + "' is not a number");
  }
  return out;
}

double KeyValueFile::get_double(const std::string& key, double fallback) const {
  return has(key) ? require_double(key) : fallback;
}

long long KeyValueFile::require_int(const std::string& key) const {
  const std::string v = require(key);
  long long out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ParseError(lines_.at(key), "key '" + key + "': '" + v + "' is not an integer");
  }
  return out;
}

long long KeyValueFile::get_int(const std::string& key, long long fallback) const {
  return has(key) ? require_int(key) : fallback;
}

bool KeyValueFile::get_bool(const std::string& key, bool fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw ParseError(lines_.at(key), "key '" + key + "': '" + *v + "' is not a boolean");
}

std::vector<std::string> KeyValueFile::get_list(const std::string& key) const {
  std::vector<std::string> out;
  const auto v = get(key);
  if (!v) return out;
  std::string item;
  std::istringstream is(*v);
  while (std::getline(is, item, ',')) {
    const auto t = trim(item);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace mtomo
