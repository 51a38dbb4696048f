#include "scr/config.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>

#include "scr/errors.hpp"
#include "scr/rng.hpp"

namespace scr {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty())
    throw DomainError("config: '" + key + "' expects a number, got '" + text + "'");
  return value;
}

}  // namespace

std::vector<ConfigEntry> parse_config_text(const std::string& text) {
  std::vector<ConfigEntry> out;
  std::size_t offset = 0;
  int line_no = 0;
  while (offset <= text.size()) {
    const auto nl = text.find('\n', offset);
    const std::string raw = text.substr(offset, nl == std::string::npos ? std::string::npos : nl - offset);
    ++line_no;
    std::string line = raw.substr(0, raw.find('#'));
    line = trim(line);
    if (!line.empty()) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ParseError("config: line " + std::to_string(line_no) + " lacks '='", offset);
      const std::string key = trim(line.substr(0, eq));
      if (key.empty()) throw ParseError("config: line " + std::to_string(line_no) + " has an empty key", offset);
      out.push_back({key, trim(line.substr(eq + 1)), line_no});
    }
    if (nl == std::string::npos) break;
    offset = nl + 1;
  }
  return out;
}

RunConfig::RunConfig(std::vector<std::pair<std::string, std::string>> defaults) {
  for (auto& [k, v] : defaults) values_[k] = std::move(v);
}

void RunConfig::apply_file(const std::string& text, const std::string& origin) {
  for (const auto& e : parse_config_text(text)) {
    if (!has(e.key))
      throw UsageError("config: unknown key '" + e.key + "' in " + origin + " line " + std::to_string(e.line));
    values_[e.key] = e.value;
  }
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (!has(key)) throw UsageError("config: unknown key '" + key + "'");
  values_[key] = value;
}

const std::string& RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw UsageError("config: unknown key '" + key + "'");
  return it->second;
}

long RunConfig::get_long(const std::string& key) const { return parse_number<long>(key, get(key)); }
std::uint64_t RunConfig::get_u64(const std::string& key) const { return parse_number<std::uint64_t>(key, get(key)); }
double RunConfig::get_double(const std::string& key) const { return parse_number<double>(key, get(key)); }

std::string RunConfig::canonical() const {
  std::ostringstream os;
  for (const auto& [k, v] : values_) os << k << " = " << v << '\n';
  return os.str();
}

std::string RunConfig::digest() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canonical())));
  return buf;
}

}  // namespace scr
