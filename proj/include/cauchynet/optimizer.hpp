#pragma once

// First-order optimizers over the parameter-shaped gradient storage.
// adam_step is the standard bias-corrected form. The variant behind
// legacy_form differs in two ways: the bias-corrected moments are written
// back into the accumulators, and the parameter update carries an extra
// factor of the raw gradient. It is kept selectable so trajectories
// produced by that scheme can be reproduced, not because it is a good idea.

#include <cmath>

#include "cauchynet/adjoint.hpp"
#include "cauchynet/network.hpp"

namespace cauchynet {

struct AdamState {
  ParamGrad m;  // first-moment accumulator
  ParamGrad v;  // second-moment accumulator
  long long n = 1;
  double step = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  bool legacy_form = false;

  static AdamState init(const NetworkParams& p, double step, double beta1 = 0.9,
                        double beta2 = 0.999, double eps = 1e-8,
                        bool legacy_form = false) {
    require(step > 0.0, "adam: step must be positive");
    require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0,
            "adam: betas must lie in [0, 1)");
    require(eps > 0.0, "adam: eps must be positive");
    AdamState st;
    st.m = ParamGrad::zeros_like(p);
    st.v = ParamGrad::zeros_like(p);
    st.step = step;
    st.beta1 = beta1;
    st.beta2 = beta2;
    st.eps = eps;
    st.legacy_form = legacy_form;
    return st;
  }
};

namespace detail {

template <class Fn>
void for_each_slot(NetworkParams& p, const ParamGrad& g, AdamState& st, Fn&& fn) {
  require(g.weights.size() == p.weights.size() &&
              st.m.weights.size() == p.weights.size(),
          "adam: shape mismatch");
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    require(g.weights[l].same_shape(p.weights[l]) &&
                st.m.weights[l].same_shape(p.weights[l]),
            "adam: shape mismatch");
    double* th = p.weights[l].data();
    const double* gr = g.weights[l].data();
    double* mo = st.m.weights[l].data();
    double* va = st.v.weights[l].data();
    for (std::size_t i = 0; i < p.weights[l].size(); ++i)
      fn(th[i], gr[i], mo[i], va[i]);
    double* thb = p.biases[l].data();
    const double* grb = g.biases[l].data();
    double* mob = st.m.biases[l].data();
    double* vab = st.v.biases[l].data();
    for (std::size_t i = 0; i < p.biases[l].size(); ++i)
      fn(thb[i], grb[i], mob[i], vab[i]);
  }
}

}  // namespace detail

inline void adam_step(NetworkParams& p, const ParamGrad& g, AdamState& st) {
  require(st.n >= 1, "adam: step counter must start at 1");
  const double c1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.n));
  const double c2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.n));
  const double dt = st.step, b1 = st.beta1, b2 = st.beta2, eps = st.eps;
  if (!st.legacy_form) {
    detail::for_each_slot(p, g, st, [=](double& th, double gr, double& m, double& v) {
      m = b1 * m + (1.0 - b1) * gr;
      v = b2 * v + (1.0 - b2) * gr * gr;
      const double mh = m / c1;
      const double vh = v / c2;
      th -= dt * mh / (std::sqrt(vh) + eps);
    });
  } else {
    detail::for_each_slot(p, g, st, [=](double& th, double gr, double& m, double& v) {
      m = (b1 * m + (1.0 - b1) * gr) / c1;
      v = (b2 * v + (1.0 - b2) * gr * gr) / c2;
      th -= dt * m / (std::sqrt(v) + eps) * gr;
    });
  }
  ++st.n;
}

// Plain gradient descent; kept for sanity baselines.
inline void gd_step(NetworkParams& p, const ParamGrad& g, double step) {
  require(step > 0.0, "gd: step must be positive");
  require(g.weights.size() == p.weights.size(), "gd: shape mismatch");
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    require(g.weights[l].same_shape(p.weights[l]), "gd: shape mismatch");
    double* th = p.weights[l].data();
    const double* gr = g.weights[l].data();
    for (std::size_t i = 0; i < p.weights[l].size(); ++i) th[i] -= step * gr[i];
    for (std::size_t i = 0; i < p.biases[l].size(); ++i)
      p.biases[l][i] -= step * g.biases[l][i];
  }
}

}  // namespace cauchynet
