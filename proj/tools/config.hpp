#pragma once

// Flat "key = value" experiment configuration. Every key is also a CLI flag
// of the same name; flags override the file, the file overrides defaults.

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "anchorrank/dataset.hpp"
#include "anchorrank/synth.hpp"
#include "anchorrank/trainer.hpp"

namespace anchorrank::cli {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct KeySpec {
  std::string name;
  std::string fallback;
  std::string help;
};

/// Every accepted key with its default.
const std::vector<KeySpec>& config_keys();

class Config {
public:
  Config();

  void load_file(const std::filesystem::path& path);
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const;  // non-empty value
  const std::string& str(const std::string& key) const;
  double num(const std::string& key) const;
  std::size_t count(const std::string& key) const;
  std::uint64_t u64(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::vector<std::size_t> count_list(const std::string& key) const;

  TrainConfig train() const;
  ModelConfig model() const;
  SynthSpec synth() const;
  NormConfig norm() const;
  DatasetPaths paths() const;
  TrainMode mode() const;

  /// Resolved values in key order, for logging next to outputs.
  std::string dump() const;

private:
  std::map<std::string, std::string> values_;
};

}  // namespace anchorrank::cli
