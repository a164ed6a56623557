#pragma once

#include <functional>
#include <random>
#include <vector>

#include "lkad/tensor.hpp"

namespace lkad {

using TensorFn = std::function<Tensor(const std::vector<Tensor>&)>;

struct GradCheckOptions {
  real eps = 1e-5;
  /// Per-input cap on the number of elements probed by central differences;
  /// <= 0 probes every element. Probe positions are drawn deterministically.
  long max_probes_per_input = -1;
  uint64_t probe_seed = 12345;
};

/// Max over probed input elements of
///   |analytic - central_difference| / max(1, |central_difference|).
/// f must be pure and return a scalar tensor.
inline real grad_check(const TensorFn& f, const std::vector<Tensor>& inputs,
                       GradCheckOptions opt = {}) {
  if (opt.eps < 1e-7 || opt.eps > 1e-3)
    throw std::invalid_argument("grad_check: eps out of [1e-7, 1e-3]");
  // Analytic gradients on fresh copies.
  std::vector<Tensor> work;
  work.reserve(inputs.size());
  for (const Tensor& t : inputs) {
    Tensor c = t.detach_copy();
    c.set_requires_grad(true);
    work.push_back(c);
  }
  std::vector<std::vector<real>> analytic(inputs.size());
  {
    Tape tape;
    Tensor loss = f(work);
    if (loss.numel() != 1)
      throw std::invalid_argument("grad_check: f must return a scalar");
    tape.backward(loss);
    for (size_t k = 0; k < work.size(); ++k)
      analytic[k] = work[k].has_grad()
                        ? work[k].grad()
                        : std::vector<real>(work[k].numel(), 0.0);
  }
  // Central differences, no tape active.
  std::mt19937_64 rng(opt.probe_seed);
  real worst = 0;
  for (size_t k = 0; k < work.size(); ++k) {
    Tensor& x = work[k];
    x.set_requires_grad(false);
    const long n = x.numel();
    std::vector<long> probes;
    if (opt.max_probes_per_input > 0 && n > opt.max_probes_per_input) {
      for (long i = 0; i < opt.max_probes_per_input; ++i)
        probes.push_back(static_cast<long>(rng() % static_cast<uint64_t>(n)));
    } else {
      probes.resize(n);
      for (long i = 0; i < n; ++i) probes[i] = i;
    }
    for (long i : probes) {
      const real saved = x.data()[i];
      x.data()[i] = saved + opt.eps;
      const real up = f(work).value();
      x.data()[i] = saved - opt.eps;
      const real dn = f(work).value();
      x.data()[i] = saved;
      const real numeric = (up - dn) / (2 * opt.eps);
      const real err = std::abs(analytic[k][i] - numeric) /
                       std::max<real>(1.0, std::abs(numeric));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace lkad
