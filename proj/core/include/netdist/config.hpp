#pragma once

// Flat key = value configuration with [section] headers.
//
//   # comment
//   seed = 7
//   [problem]
//   m = 200
//   [algorithm.network_dane]
//   mu = 1e-6
//
// Values are strings until read through a typed getter. Keys before the first
// header belong to the "" section. Lists are comma separated.

#include "netdist/common.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace netdist {

class Config {
 public:
  static Config parse(const std::string& text, const std::string& origin = "<string>");
  static Config load(const std::filesystem::path& path);

  bool has_section(const std::string& section) const;
  bool has(const std::string& section, const std::string& key) const;
  /// Sections in file order.
  const std::vector<std::string>& sections() const { return order_; }
  /// Sections whose name starts with `prefix`, in file order.
  std::vector<std::string> sections_with_prefix(const std::string& prefix) const;

  std::optional<std::string> get(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  std::string require_string(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  int get_int(const std::string& section, const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& section, const std::string& key,
                        std::uint64_t fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& section, const std::string& key,
                                  const std::vector<double>& fallback) const;
  std::vector<int> get_ints(const std::string& section, const std::string& key,
                            const std::vector<int>& fallback) const;

  /// Overwrites (or adds) a value; used for command-line overrides.
  void set(const std::string& section, const std::string& key, const std::string& value);

  /// "section.key" for every entry never read by a getter.
  std::vector<std::string> unused() const;
  /// Throws ConfigError listing unused keys.
  void reject_unused() const;

  const std::string& origin() const { return origin_; }
  std::filesystem::path base_dir() const;
  /// Every entry as section -> key -> raw value.
  const std::map<std::string, std::map<std::string, std::string>>& entries() const { return data_; }

 private:
  struct Slot {
    std::string value;
    int line = 0;
  };
  std::optional<Slot> find(const std::string& section, const std::string& key) const;
  [[noreturn]] void bad_value(const std::string& section, const std::string& key,
                              const std::string& expected) const;

  std::string origin_;
  std::map<std::string, std::map<std::string, std::string>> data_;
  std::map<std::string, std::map<std::string, int>> lines_;
  std::vector<std::string> order_;
  mutable std::set<std::string> used_;
};

}  // namespace netdist
