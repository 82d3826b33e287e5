#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace segarena {

/// Flat key=value configuration with a closed key registry.
///
/// Every key has a documented default; unknown keys are rejected so a typo in
/// a config file or a --set flag fails loudly instead of silently using the
/// default. The fully resolved table is echoed into each run manifest, which
/// together with the seed makes a run reproducible from its directory alone.
class Config {
 public:
  struct Entry {
    const char* key;
    const char* value;
    const char* doc;
  };

  /// Full registry: key, default, one-line description.
  static const std::vector<Entry>& registry();

  /// Config populated with every default.
  static Config defaults();

  /// Rebuild a config from an echo() dump (defaults plus the dumped pairs).
  static Config from_echo(const std::string& echo);

  /// Parse `key=value` lines; '#' starts a comment, blank lines are skipped.
  void load_file(const std::filesystem::path& path);

  /// Apply a single `key=value` override.
  void set_pair(const std::string& pair);
  void set(const std::string& key, const std::string& value);

  const std::string& get_str(const std::string& key) const;
  int get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<double> get_list(const std::string& key) const;  // comma-separated
  std::vector<int> get_int_list(const std::string& key) const;

  /// Deterministic full dump, one sorted `key=value` per line.
  std::string echo() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace segarena
