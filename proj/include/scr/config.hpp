#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace scr {

struct ConfigEntry {
  std::string key;
  std::string value;
  int line;
};

/// Parses `key = value` lines; blank lines and `#` comments are skipped.
/// Throws ParseError (offset = byte offset of the bad line) on malformed lines.
std::vector<ConfigEntry> parse_config_text(const std::string& text);

/// Resolved settings for one run. Known keys and their defaults are fixed at
/// construction; later layers may only set known keys.
class RunConfig {
 public:
  explicit RunConfig(std::vector<std::pair<std::string, std::string>> defaults);

  /// Applies a config file's entries. Unknown keys throw UsageError.
  void apply_file(const std::string& text, const std::string& origin = "config");
  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return values_.contains(key); }

  const std::string& get(const std::string& key) const;
  long get_long(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  double get_double(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }

  /// Canonical `key = value` lines in key order.
  std::string canonical() const;
  /// FNV-1a of the canonical form, as 16 hex digits.
  std::string digest() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace scr
