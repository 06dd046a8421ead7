#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "rare/common.hpp"

namespace rare {

// Adam with bias correction over a flat parameter array. The caller owns the
// step counter so several arrays can share one logical step.
struct AdamMoments {
  std::vector<double> m, v;

  void ensure(size_t n) {
    if (m.size() != n) {
      m.assign(n, 0.0);
      v.assign(n, 0.0);
    }
  }
};

struct AdamParams {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

inline void adam_step_flat(std::span<double> w, std::span<const double> g, AdamMoments& mom,
                           int64_t step, const AdamParams& p) {
  require_input(w.size() == g.size(), "adam: parameter/gradient size mismatch");
  mom.ensure(w.size());
  double c1 = 1.0 - std::pow(p.beta1, static_cast<double>(step));
  double c2 = 1.0 - std::pow(p.beta2, static_cast<double>(step));
  for (size_t i = 0; i < w.size(); ++i) {
    mom.m[i] = p.beta1 * mom.m[i] + (1.0 - p.beta1) * g[i];
    mom.v[i] = p.beta2 * mom.v[i] + (1.0 - p.beta2) * g[i] * g[i];
    double mhat = mom.m[i] / c1;
    double vhat = mom.v[i] / c2;
    w[i] -= p.learning_rate * mhat / (std::sqrt(vhat) + p.epsilon);
  }
}

}  // namespace rare
