#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace plumewatch {

// Flat `key = value` files (a TOML subset: `#` comments, optional double quotes,
// no tables). Used for the service config and the smoke parameter file.
class FlatConfig {
 public:
  static FlatConfig parse(std::string_view text);
  static FlatConfig load(const std::filesystem::path& path);

  std::optional<std::string> get(const std::string& key) const;
  std::string get_or(const std::string& key, std::string fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  const std::map<std::string, std::string>& entries() const noexcept { return entries_; }
  void set(std::string key, std::string value) { entries_[std::move(key)] = std::move(value); }

 private:
  std::map<std::string, std::string> entries_;
};

}  // namespace plumewatch
