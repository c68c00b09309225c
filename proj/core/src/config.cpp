#include "netdist/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace netdist {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

std::string unquote(std::string v) {
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
  return v;
}

std::vector<std::string> split_list(const std::string& v) {
  std::string body = trim(v);
  if (body.size() >= 2 && body.front() == '[' && body.back() == ']')
    body = body.substr(1, body.size() - 2);
  std::vector<std::string> out;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(unquote(item));
  }
  return out;
}

bool to_double(const std::string& s, double& out) {
  const char* b = s.data();
  const char* e = s.data() + s.size();
  auto [p, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && p == e && !s.empty();
}

}  // namespace

Config Config::parse(const std::string& text, const std::string& origin) {
  Config cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  cfg.order_.push_back("");
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(origin + ": unterminated section header", lineno);
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ParseError(origin + ": empty section name", lineno);
      if (std::find(cfg.order_.begin(), cfg.order_.end(), section) != cfg.order_.end())
        throw ParseError(origin + ": duplicate section [" + section + "]", lineno);
      cfg.order_.push_back(section);
      cfg.data_[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(origin + ": expected key = value", lineno);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = unquote(trim(line.substr(eq + 1)));
    if (key.empty()) throw ParseError(origin + ": missing key", lineno);
    if (cfg.data_[section].count(key))
      throw ParseError(origin + ": duplicate key '" + key + "'", lineno);
    cfg.data_[section][key] = value;
    cfg.lines_[section][key] = lineno;
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

std::filesystem::path Config::base_dir() const {
  if (origin_.empty() || origin_.front() == '<') return std::filesystem::current_path();
  return std::filesystem::path(origin_).parent_path();
}

bool Config::has_section(const std::string& section) const { return data_.count(section) > 0; }

bool Config::has(const std::string& section, const std::string& key) const {
  auto it = data_.find(section);
  return it != data_.end() && it->second.count(key) > 0;
}

std::vector<std::string> Config::sections_with_prefix(const std::string& prefix) const {
  std::vector<std::string> out;
  for (const auto& s : order_)
    if (s.rfind(prefix, 0) == 0 && s.size() > prefix.size()) out.push_back(s);
  return out;
}

std::optional<Config::Slot> Config::find(const std::string& section, const std::string& key) const {
  auto it = data_.find(section);
  if (it == data_.end()) return std::nullopt;
  auto kt = it->second.find(key);
  if (kt == it->second.end()) return std::nullopt;
  used_.insert(section + "." + key);
  Slot slot{kt->second, 0};
  auto lt = lines_.find(section);
  if (lt != lines_.end() && lt->second.count(key)) slot.line = lt->second.at(key);
  return slot;
}

void Config::bad_value(const std::string& section, const std::string& key,
                       const std::string& expected) const {
  auto s = find(section, key);
  std::string where = section.empty() ? key : section + "." + key;
  std::string msg = origin_ + ": " + where + " = '" + (s ? s->value : "") + "' is not " + expected;
  if (s && s->line > 0) msg += " (line " + std::to_string(s->line) + ")";
  throw ConfigError(msg);
}

std::optional<std::string> Config::get(const std::string& section, const std::string& key) const {
  auto s = find(section, key);
  if (!s) return std::nullopt;
  return s->value;
}

std::string Config::get_string(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
  auto v = get(section, key);
  return v ? *v : fallback;
}

std::string Config::require_string(const std::string& section, const std::string& key) const {
  auto v = get(section, key);
  if (!v) throw ConfigError(origin_ + ": missing required key " + section + "." + key);
  return *v;
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
  auto v = get(section, key);
  if (!v) return fallback;
  double x;
  if (!to_double(*v, x)) bad_value(section, key, "a number");
  return x;
}

int Config::get_int(const std::string& section, const std::string& key, int fallback) const {
  auto v = get(section, key);
  if (!v) return fallback;
  int x = 0;
  auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), x);
  if (ec != std::errc() || p != v->data() + v->size() || v->empty()) {
    // accept integral floating literals such as 1e3
    double d;
    if (to_double(*v, d) && d == static_cast<double>(static_cast<long long>(d)) &&
        std::abs(d) < 2e9)
      return static_cast<int>(d);
    bad_value(section, key, "an integer");
  }
  return x;
}

std::uint64_t Config::get_u64(const std::string& section, const std::string& key,
                              std::uint64_t fallback) const {
  auto v = get(section, key);
  if (!v) return fallback;
  std::uint64_t x = 0;
  auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), x);
  if (ec != std::errc() || p != v->data() + v->size() || v->empty())
    bad_value(section, key, "a non-negative integer");
  return x;
}

bool Config::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  auto v = get(section, key);
  if (!v) return fallback;
  if (*v == "true" || *v == "yes" || *v == "1" || *v == "on") return true;
  if (*v == "false" || *v == "no" || *v == "0" || *v == "off") return false;
  bad_value(section, key, "a boolean");
}

std::vector<double> Config::get_doubles(const std::string& section, const std::string& key,
                                        const std::vector<double>& fallback) const {
  auto v = get(section, key);
  if (!v) return fallback;
  std::vector<double> out;
  for (const auto& item : split_list(*v)) {
    double x;
    if (!to_double(item, x)) bad_value(section, key, "a list of numbers");
    out.push_back(x);
  }
  if (out.empty()) bad_value(section, key, "a non-empty list");
  return out;
}

std::vector<int> Config::get_ints(const std::string& section, const std::string& key,
                                  const std::vector<int>& fallback) const {
  auto v = get(section, key);
  if (!v) return fallback;
  std::vector<int> out;
  for (const auto& item : split_list(*v)) {
    int x = 0;
    auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), x);
    if (ec != std::errc() || p != item.data() + item.size()) bad_value(section, key, "a list of integers");
    out.push_back(x);
  }
  if (out.empty()) bad_value(section, key, "a non-empty list");
  return out;
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
  if (!data_.count(section) && std::find(order_.begin(), order_.end(), section) == order_.end())
    order_.push_back(section);
  data_[section][key] = value;
}

std::vector<std::string> Config::unused() const {
  std::vector<std::string> out;
  for (const auto& [section, kv] : data_)
    for (const auto& [key, value] : kv) {
      const std::string id = section + "." + key;
      if (!used_.count(id)) out.push_back(section.empty() ? key : id);
    }
  return out;
}

void Config::reject_unused() const {
  const auto keys = unused();
  if (keys.empty()) return;
  std::string msg = origin_ + ": unknown key";
  msg += keys.size() > 1 ? "s " : " ";
  for (std::size_t i = 0; i < keys.size(); ++i) msg += (i ? ", " : "") + keys[i];
  throw ConfigError(msg);
}

}  // namespace netdist
