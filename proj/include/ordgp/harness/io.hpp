#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ordgp/gp.hpp"

namespace ordgp::harness {

/// Reads a dataset CSV with header `t,sigma_t,y,sigma_y` (columns in any
/// order, extra columns ignored). Rows keep their file order. sigma_t == 0 is
/// replaced by `sigma_t_floor`, which defaults to 1e-6 * range(t).
/// Errors: SchemaError (missing header/column), ParseError (names the data
/// row, 1-based, and the column), EmptyDataset.
Dataset load_dataset(const std::filesystem::path& path, std::optional<double> sigma_t_floor = std::nullopt);
Dataset parse_dataset(const std::string& text, std::optional<double> sigma_t_floor = std::nullopt);

void write_dataset(const std::filesystem::path& path, const Dataset& data);

/// Flat `key = value` file; `#` starts a comment. Later keys override earlier ones.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(const std::string& text);
  static KeyValueConfig load(const std::filesystem::path& path);

  [[nodiscard]] bool has(const std::string& key) const { return values_.count(key) != 0; }
  [[nodiscard]] std::string get(const std::string& key, const std::string& fallback) const;
  [[nodiscard]] int get_int(const std::string& key, int fallback) const;
  [[nodiscard]] double get_double(const std::string& key, double fallback) const;
  [[nodiscard]] std::vector<std::string> get_list(const std::string& key,
                                                  const std::vector<std::string>& fallback) const;
  [[nodiscard]] const std::map<std::string, std::string>& values() const noexcept { return values_; }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }

 private:
  std::map<std::string, std::string> values_;
};

double parse_double(const std::string& text, const std::string& context);
int parse_int(const std::string& text, const std::string& context);
std::vector<std::string> split(const std::string& text, char sep);
std::string trim(const std::string& text);

/// Shortest round-trip decimal form, so output files are byte-stable.
std::string format_double(double value);

}  // namespace ordgp::harness
