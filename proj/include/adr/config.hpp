#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "adr/encoder.hpp"
#include "adr/train.hpp"

namespace adr {

// Experiment configuration: `key = value` lines, `#` comments. Only keys that
// were set are stored; typed getters fall back to defaults.
class RunConfig {
 public:
  static const std::vector<std::string>& known_keys();
  static const std::vector<std::string>& architecture_keys();
  static RunConfig from_file(const std::string& path);

  // Throws ConfigError for unknown keys.
  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return values_.count(key) > 0; }
  std::optional<std::string> get(const std::string& key) const;

  std::string require(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  std::size_t get_size(const std::string& key, std::size_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  Task task() const;
  bool multi_task() const { return get_bool("mtl", true); }
  Hyperparams hyperparams() const;
  EncoderConfig encoder(std::size_t vocab_size, std::size_t n_concepts) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace adr
