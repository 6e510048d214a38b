#pragma once

#include <stdexcept>
#include <string>

#include "satin/eval.hpp"
#include "satin/train.hpp"

namespace satin {

// Invalid key, value, or file; the CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Merged run configuration. Precedence, lowest to highest: preset defaults,
// config file, SATIN_* environment variables, command-line overrides.
struct RunConfig {
  std::string preset = "desk";  // {paper, desk}
  uint64_t seed = 1;
  ModelConfig model;
  TrainConfig train;
  TrackerConfig tracker;

  // Sets one dotted key ("train.steps", "model.dims", "preset", ...).
  // Unknown keys and unparsable values raise ConfigError naming the key.
  void set(const std::string& key, const std::string& value);

  // Applies {paper, desk} defaults; rejects other names.
  void apply_preset(const std::string& name);

  // Derived seeds are plumbed into the sub-configs.
  void finalize();
};

// Flat key-value file: optional [section] headers prefix following keys with
// "section.", "key = value" lines, '#' comments, blank lines ignored.
void load_config_file(RunConfig& cfg, const std::string& path);

// Environment overrides: SATIN_PRESET, SATIN_SEED, and SATIN_<SECTION>_<KEY>
// (e.g. SATIN_TRAIN_STEPS -> train.steps), case-insensitive.
void apply_env_overrides(RunConfig& cfg);

RunConfig make_config(const std::string& preset);

}  // namespace satin
