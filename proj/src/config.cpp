#include "satin/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

extern char** environ;

namespace satin {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw ConfigError("invalid value for key '" + key + "': " + value);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    size_t pos;
    double d = std::stod(v, &pos);
    if (pos != v.size()) bad_value(key, v);
    return d;
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    bad_value(key, v);
  }
}

int64_t to_int(const std::string& key, const std::string& v) {
  try {
    size_t pos;
    long long i = std::stoll(v, &pos);
    if (pos != v.size()) bad_value(key, v);
    return i;
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    bad_value(key, v);
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  std::string s = lower(v);
  if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
  if (s == "0" || s == "false" || s == "no" || s == "off") return false;
  bad_value(key, v);
}

std::vector<int64_t> to_int_list(const std::string& key, const std::string& v) {
  std::vector<int64_t> out;
  std::string item;
  std::istringstream is(v);
  while (std::getline(is, item, ',')) out.push_back(to_int(key, trim(item)));
  if (out.empty()) bad_value(key, v);
  return out;
}

}  // namespace

void RunConfig::apply_preset(const std::string& name) {
  if (name == "paper") {
    model.dims = {256, 512, 512, 256};
    model.exemplar_size = 127;
    model.candidate_size = 255;
  } else if (name == "desk") {
    model.dims = {32, 64, 64, 32};
    model.exemplar_size = 63;
    model.candidate_size = 127;
  } else {
    throw ConfigError("unknown preset '" + name + "' (expected paper or desk)");
  }
  preset = name;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const std::string& k = key;
  const std::string& v = value;
  if (k == "preset") { apply_preset(v); return; }
  if (k == "seed") { seed = uint64_t(to_int(k, v)); return; }

  if (k == "model.dims") { model.dims = to_int_list(k, v); return; }
  if (k == "model.attention_ratio") { model.attention_ratio = to_int(k, v); return; }
  if (k == "model.exemplar_size") { model.exemplar_size = to_int(k, v); return; }
  if (k == "model.candidate_size") { model.candidate_size = to_int(k, v); return; }
  if (k == "model.use_attention") { model.use_attention = to_bool(k, v); return; }
  if (k == "model.use_corner_pool") { model.use_corner_pool = to_bool(k, v); return; }

  if (k == "train.steps") { train.steps = to_int(k, v); return; }
  if (k == "train.batch_size") { train.batch_size = to_int(k, v); return; }
  if (k == "train.lr_start") { train.lr_start = to_double(k, v); return; }
  if (k == "train.lr_end") { train.lr_end = to_double(k, v); return; }
  if (k == "train.momentum") { train.momentum = to_double(k, v); return; }
  if (k == "train.weight_decay") { train.weight_decay = to_double(k, v); return; }
  if (k == "train.clip_norm") { train.clip_norm = to_double(k, v); return; }
  if (k == "train.offset_weight") { train.loss.offset = to_double(k, v); return; }
  if (k == "train.symmetry_weight") { train.loss.symmetry = to_double(k, v); return; }
  if (k == "train.aux") { train.aux = to_bool(k, v); return; }
  if (k == "train.clips") { train.clips = to_int(k, v); return; }
  if (k == "train.jobs") { train.jobs = int(to_int(k, v)); return; }
  if (k == "train.checkpoint_every") { train.checkpoint_every = to_int(k, v); return; }
  if (k == "train.log_every") { train.log_every = to_int(k, v); return; }

  if (k == "synth.frames") { train.synth.frames = to_int(k, v); return; }
  if (k == "synth.width") { train.synth.width = to_int(k, v); return; }
  if (k == "synth.height") { train.synth.height = to_int(k, v); return; }
  if (k == "synth.min_box") { train.synth.min_box = to_double(k, v); return; }
  if (k == "synth.max_box") { train.synth.max_box = to_double(k, v); return; }

  if (k == "tracker.exemplar_factor") { tracker.exemplar_factor = to_double(k, v); return; }
  if (k == "tracker.candidate_factor") { tracker.candidate_factor = to_double(k, v); return; }
  if (k == "tracker.corner_tol") { tracker.corner_tol = to_double(k, v); return; }

  throw ConfigError("unknown config key '" + key + "'");
}

void RunConfig::finalize() {
  model.init_seed = seed;
  train.data_seed = Rng::mix(seed, 0xda7a);
  train.synth.seed = Rng::mix(seed, 0x51d5);
  model.validate();
}

void load_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) throw ConfigError("cannot open config file: " + path);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(path + ":" + std::to_string(lineno) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (!section.empty()) key = section + "." + key;
    cfg.set(key, value);
  }
}

void apply_env_overrides(RunConfig& cfg) {
  for (char** e = environ; e && *e; ++e) {
    std::string entry(*e);
    if (entry.rfind("SATIN_", 0) != 0) continue;
    size_t eq = entry.find('=');
    if (eq == std::string::npos) continue;
    std::string name = lower(entry.substr(6, eq - 6));
    std::string value = entry.substr(eq + 1);
    if (name == "preset" || name == "seed") {
      cfg.set(name, value);
      continue;
    }
    size_t us = name.find('_');
    if (us == std::string::npos) throw ConfigError("unknown config key '" + name + "'");
    cfg.set(name.substr(0, us) + "." + name.substr(us + 1), value);
  }
}

RunConfig make_config(const std::string& preset) {
  RunConfig cfg;
  cfg.apply_preset(preset);
  return cfg;
}

}  // namespace satin
