#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace qmcmc {

// Flat "key = value" experiment file. '#' starts a comment, lists are comma separated,
// dotted keys group settings. Every key must appear in the schema (see config_schema()).
enum class ValueType { Int, Real, Bool, String, IntList, RealList, StringList };

struct SchemaEntry {
  ValueType type;
  std::string default_value;  // empty means "no default"
  std::string help;
};

const std::map<std::string, SchemaEntry>& config_schema();

class ExperimentConfig {
 public:
  static ExperimentConfig parse(const std::string& text, const std::string& source = "<string>");
  static ExperimentConfig load(const std::string& path);

  // Sorted "key = value" lines of every explicitly set key.
  std::string serialize() const;
  // FNV-1a 64 of serialize(), as 16 hex digits.
  std::string hash() const;

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  void set(const std::string& key, const std::string& value);
  void erase(const std::string& key) { values_.erase(key); }

  std::int64_t get_int(const std::string& key) const;
  double get_real(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::string get_string(const std::string& key) const;
  std::vector<std::int64_t> get_int_list(const std::string& key) const;
  std::vector<double> get_real_list(const std::string& key) const;
  std::vector<std::string> get_string_list(const std::string& key) const;
  std::vector<std::uint64_t> get_seed_list(const std::string& key) const;

  // Multipliers given as constants.<name> = value.
  std::map<std::string, double> constants() const;

  // Cross-field checks for the selected experiment.
  void validate() const;

  const std::map<std::string, std::string>& values() const { return values_; }
  bool operator==(const ExperimentConfig& o) const { return values_ == o.values_; }

 private:
  std::string raw(const std::string& key) const;
  std::map<std::string, std::string> values_;
};

std::string fnv1a_hex(const std::string& data);

}  // namespace qmcmc
