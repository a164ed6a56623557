#pragma once

#include "lkad/params.hpp"

namespace lkad {

/// Adam over one or more parameter stores. Moment buffers are allocated on
/// first step in registration order, so the update is fully deterministic.
struct Adam {
  real beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::vector<std::vector<real>> m, v;
  long t = 0;

  void step(std::vector<ParamStore*>& stores, real lr) {
    size_t slot = 0;
    ++t;
    const real bc1 = 1.0 - std::pow(beta1, static_cast<real>(t));
    const real bc2 = 1.0 - std::pow(beta2, static_cast<real>(t));
    for (ParamStore* store : stores)
      for (auto& [name, p] : store->items) {
        if (slot >= m.size()) {
          m.emplace_back(p.numel(), 0.0);
          v.emplace_back(p.numel(), 0.0);
        }
        std::vector<real>& mi = m[slot];
        std::vector<real>& vi = v[slot];
        ++slot;
        if (!p.has_grad()) continue;  // dead parameter this step
        const real* g = p.grad().data();
        real* w = p.data();
        for (long i = 0; i < p.numel(); ++i) {
          mi[i] = beta1 * mi[i] + (1.0 - beta1) * g[i];
          vi[i] = beta2 * vi[i] + (1.0 - beta2) * g[i] * g[i];
          w[i] -= lr * (mi[i] / bc1) / (std::sqrt(vi[i] / bc2) + eps);
        }
      }
  }
};

/// Step schedule: the base rate until decay_epoch, the final rate after.
inline real lr_at_epoch(int epoch, real lr, real lr_final, int decay_epoch) {
  return epoch < decay_epoch ? lr : lr_final;
}

}  // namespace lkad
