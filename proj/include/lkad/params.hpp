#pragma once

#include <cstdint>
#include <fstream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lkad/io.hpp"
#include "lkad/tensor.hpp"

namespace lkad {

/// Deterministic normal sampler (Box-Muller on a seeded mt19937_64); avoids
/// the implementation-defined draw pattern of std::normal_distribution.
class NormalSampler {
 public:
  explicit NormalSampler(uint64_t seed) : rng_(seed) {}

  real next(real stddev = 1.0) {
    if (have_spare_) {
      have_spare_ = false;
      return spare_ * stddev;
    }
    real u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const real m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    have_spare_ = true;
    return u * m * stddev;
  }

  real uniform() {  // in (0,1)
    return (static_cast<real>(rng_() >> 11) + 0.5) * 0x1.0p-53;
  }

  uint64_t raw() { return rng_(); }

 private:
  std::mt19937_64 rng_;
  bool have_spare_ = false;
  real spare_ = 0;
};

/// Ordered, named collection of trainable tensors. Registration order is the
/// checkpoint and optimizer-state order.
struct ParamStore {
  std::vector<std::pair<std::string, Tensor>> items;

  Tensor add(const std::string& name, Tensor t) {
    if (find(name)) throw std::invalid_argument("duplicate parameter: " + name);
    t.set_requires_grad(true);
    items.emplace_back(name, t);
    return t;
  }

  const Tensor* find(const std::string& name) const {
    for (const auto& [n, t] : items)
      if (n == name) return &t;
    return nullptr;
  }

  long total_count() const {
    long n = 0;
    for (const auto& [name, t] : items) n += t.numel();
    return n;
  }

  void zero_grads() {
    for (auto& [name, t] : items) t.zero_grad();
  }
};

inline Tensor he_normal(NormalSampler& rng, Shape shape, long fan_in) {
  Tensor t = Tensor::zeros(shape);
  const real sd = std::sqrt(2.0 / static_cast<real>(std::max<long>(1, fan_in)));
  for (long i = 0; i < t.numel(); ++i) t.data()[i] = rng.next(sd);
  return t;
}

// ---------------------------------------------------------------------------
// Checkpoint container: "LKCK" magic, u32 manifest length, JSON manifest
// (names, shapes, config hash), then one LKDT blob per tensor in manifest
// order.

inline void save_checkpoint(const std::string& path, const ParamStore& params,
                            const std::string& config_hash) {
  nlohmann::json manifest;
  manifest["format"] = "lkdt-checkpoint-v1";
  manifest["config_hash"] = config_hash;
  manifest["tensors"] = nlohmann::json::array();
  for (const auto& [name, t] : params.items)
    manifest["tensors"].push_back({{"name", name}, {"shape", t.shape()}});
  const std::string mtext = manifest.dump();
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for write: " + path);
  f.write("LKCK", 4);
  detail::write_le<uint32_t>(f, static_cast<uint32_t>(mtext.size()));
  f.write(mtext.data(), mtext.size());
  for (const auto& [name, t] : params.items) write_lkdt(f, t);
  if (!f) throw std::runtime_error("write failed: " + path);
}

struct Checkpoint {
  std::string config_hash;
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor* find(const std::string& name) const {
    for (const auto& [n, t] : tensors)
      if (n == name) return &t;
    return nullptr;
  }
};

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open: " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, "LKCK", 4) != 0)
    throw std::runtime_error("not a checkpoint file: " + path);
  uint32_t mlen = detail::read_le<uint32_t>(f);
  std::string mtext(mlen, '\0');
  f.read(mtext.data(), mlen);
  nlohmann::json manifest = nlohmann::json::parse(mtext);
  Checkpoint ck;
  ck.config_hash = manifest.value("config_hash", "");
  for (const auto& entry : manifest["tensors"]) {
    Tensor t = read_lkdt(f);
    Shape expect = entry["shape"].get<Shape>();
    if (t.shape() != expect)
      throw std::runtime_error("checkpoint tensor shape mismatch for " +
                               entry["name"].get<std::string>());
    ck.tensors.emplace_back(entry["name"].get<std::string>(), t);
  }
  return ck;
}

/// Copies checkpoint values into a freshly built ParamStore. Throws with the
/// offending name on any mismatch.
inline void restore_params(ParamStore& params, const Checkpoint& ck) {
  if (params.items.size() != ck.tensors.size())
    throw std::runtime_error(
        "checkpoint/model mismatch: parameter count " +
        std::to_string(ck.tensors.size()) + " vs expected " +
        std::to_string(params.items.size()));
  for (auto& [name, t] : params.items) {
    const Tensor* src = ck.find(name);
    if (!src) throw std::runtime_error("checkpoint missing parameter: " + name);
    if (src->shape() != t.shape())
      throw std::runtime_error("checkpoint shape mismatch for " + name +
                               ": " + shape_str(src->shape()) + " vs " +
                               shape_str(t.shape()));
    std::copy(src->data(), src->data() + src->numel(), t.data());
  }
}

}  // namespace lkad
