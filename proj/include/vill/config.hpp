#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "vill/alignment.hpp"

namespace vill {

struct TrainConfig {
  double alpha = 5.0;
  double beta = 0.05;
  double gamma = 1.0;
  bool enable_reweighting = true;
  bool enable_rebalancing = true;
  AlignmentKind alignment = AlignmentKind::moment;
  std::size_t epochs = 10;
  std::size_t iterations_per_epoch = 100;
  std::size_t batch_size = 32;
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::uint64_t seed = 0;
  std::vector<std::size_t> hidden_dims = {32, 16};
  std::vector<std::size_t> worst_n_values = {5, 10};

  // Throws ArgumentError on out-of-range hyperparameters.
  void validate() const;
};

// Ordered key -> raw value pairs read from a config file.
using Settings = std::map<std::string, std::string>;

// Key-value text: one `key = value` per line, `#` starts a comment, values
// may be double-quoted, lists are comma separated (optionally in [..]).
// A file whose first non-blank character is '{' is read as a flat JSON object.
Settings parse_settings(const std::string& text);
Settings read_settings(const std::filesystem::path& path);

// Applies one setting. Throws UsageError for unknown keys or unparsable values.
void apply_setting(TrainConfig& config, const std::string& key, const std::string& value);

// Applies every key in `settings` that names a TrainConfig field and returns
// the rest (e.g. run-level paths) untouched.
Settings apply_settings(TrainConfig& config, const Settings& settings);

bool is_config_key(const std::string& key);

}  // namespace vill
