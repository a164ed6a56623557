#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "lkad/tensor.hpp"

namespace lkad {

/// Flat key=value run configuration with CLI overrides; the canonical dump
/// is hashed into checkpoints so eval can detect incompatible settings.
struct RunConfig {
  int width = 640, height = 192;
  real lr = 1e-4;
  real lr_final = 1e-5;
  int lr_decay_epoch = 15;
  int epochs = 20;
  int batch = 2;
  uint64_t seed = 1;
  bool use_lka = true;
  bool use_offset_upsampler = true;
  real smoothness_weight = 1e-3;
  std::vector<int> channels = {16, 32, 64, 128};
  real min_depth = 0.1, max_depth = 100.0;
  long max_steps = 0;  // 0 = run all epochs
  int checkpoint_every = 1;  // epochs
  // synth subcommand knobs
  int frames = 10;
  real noise_sigma = 0.0;

  void validate() const {
    if (width % 16 || height % 16)
      throw std::invalid_argument("config: resolution must be divisible by 16");
    if (!(lr > lr_final && lr_final > 0))
      throw std::invalid_argument("config: need lr > lr_final > 0");
    if (batch < 1 || epochs < 1)
      throw std::invalid_argument("config: batch and epochs must be >= 1");
    if (channels.size() != 4)
      throw std::invalid_argument("config: channel plan must have 4 entries");
  }

  void set(const std::string& key, const std::string& value) {
    auto as_real = [&] { return std::stod(value); };
    auto as_int = [&] { return std::stoi(value); };
    auto as_bool = [&] {
      if (value == "1" || value == "true" || value == "on") return true;
      if (value == "0" || value == "false" || value == "off") return false;
      throw std::invalid_argument("config: bad boolean for " + key);
    };
    if (key == "width") width = as_int();
    else if (key == "height") height = as_int();
    else if (key == "lr") lr = as_real();
    else if (key == "lr_final") lr_final = as_real();
    else if (key == "lr_decay_epoch") lr_decay_epoch = as_int();
    else if (key == "epochs") epochs = as_int();
    else if (key == "batch") batch = as_int();
    else if (key == "seed") seed = std::stoull(value);
    else if (key == "use_lka") use_lka = as_bool();
    else if (key == "use_offset_upsampler") use_offset_upsampler = as_bool();
    else if (key == "smoothness_weight") smoothness_weight = as_real();
    else if (key == "min_depth") min_depth = as_real();
    else if (key == "max_depth") max_depth = as_real();
    else if (key == "max_steps") max_steps = std::stol(value);
    else if (key == "checkpoint_every") checkpoint_every = as_int();
    else if (key == "frames") frames = as_int();
    else if (key == "noise_sigma") noise_sigma = as_real();
    else if (key == "channels") {
      channels.clear();
      std::istringstream is(value);
      std::string tok;
      while (std::getline(is, tok, ',')) channels.push_back(std::stoi(tok));
    } else {
      throw std::invalid_argument("config: unknown key '" + key + "'");
    }
  }

  std::string canonical() const {
    std::ostringstream os;
    os.precision(17);
    os << "batch=" << batch << "\n";
    os << "channels=";
    for (size_t i = 0; i < channels.size(); ++i)
      os << (i ? "," : "") << channels[i];
    os << "\n";
    os << "checkpoint_every=" << checkpoint_every << "\n";
    os << "epochs=" << epochs << "\n";
    os << "frames=" << frames << "\n";
    os << "height=" << height << "\n";
    os << "lr=" << lr << "\n";
    os << "lr_decay_epoch=" << lr_decay_epoch << "\n";
    os << "lr_final=" << lr_final << "\n";
    os << "max_depth=" << max_depth << "\n";
    os << "max_steps=" << max_steps << "\n";
    os << "min_depth=" << min_depth << "\n";
    os << "noise_sigma=" << noise_sigma << "\n";
    os << "seed=" << seed << "\n";
    os << "smoothness_weight=" << smoothness_weight << "\n";
    os << "use_lka=" << (use_lka ? 1 : 0) << "\n";
    os << "use_offset_upsampler=" << (use_offset_upsampler ? 1 : 0) << "\n";
    os << "width=" << width << "\n";
    return os.str();
  }

  /// Architecture-determining fields only, as key=value pairs, so eval-side
  /// compatibility checks can name the exact field that differs.
  std::string model_signature() const {
    std::ostringstream os;
    os << "channels=";
    for (size_t i = 0; i < channels.size(); ++i)
      os << (i ? "," : "") << channels[i];
    os << ";use_lka=" << use_lka
       << ";use_offset_upsampler=" << use_offset_upsampler;
    return os.str();
  }

  /// FNV-1a of the full canonical dump.
  std::string config_hash() const {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : canonical()) {
      h ^= c;
      h *= 1099511628211ull;
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(h));
    return buf;
  }
};

/// Field-by-field diff of two model signatures; empty when compatible.
inline std::string signature_mismatch(const std::string& have,
                                      const std::string& want) {
  if (have == want) return "";
  auto split = [](const std::string& s) {
    std::map<std::string, std::string> kv;
    std::istringstream is(s);
    std::string item;
    while (std::getline(is, item, ';')) {
      const auto eq = item.find('=');
      if (eq != std::string::npos)
        kv[item.substr(0, eq)] = item.substr(eq + 1);
    }
    return kv;
  };
  auto a = split(have), b = split(want);
  std::ostringstream os;
  for (const auto& [k, v] : b)
    if (!a.count(k) || a[k] != v)
      os << " " << k << ": checkpoint=" << (a.count(k) ? a[k] : "<missing>")
         << " requested=" << v;
  for (const auto& [k, v] : a)
    if (!b.count(k)) os << " " << k << ": checkpoint=" << v << " requested=<missing>";
  std::string d = os.str();
  return d.empty() ? " raw signature differs" : d;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config: " + path);
  RunConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    // trim
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    line = line.substr(b, e - b + 1);
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected key=value");
    auto trim = [](std::string s) {
      const auto b2 = s.find_first_not_of(" \t");
      if (b2 == std::string::npos) return std::string();
      const auto e2 = s.find_last_not_of(" \t");
      return s.substr(b2, e2 - b2 + 1);
    };
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

}  // namespace lkad
