#pragma once

// Central finite differences as an independent reference for the analytic
// derivatives. The input-derivative checks only exercise the plain value
// forward pass, and the parameter-gradient checks only exercise the forward
// tape, so each analytic layer is validated against something simpler than
// itself.

#include <cmath>
#include <functional>

#include "cauchynet/adjoint.hpp"
#include "cauchynet/network.hpp"

namespace cauchynet::fd {

inline double value_at(const NetworkParams& p, const Vector& x, bool with_time) {
  ForwardTape t;
  forward_into(p, x, with_time, t);
  return t.value();
}

inline double first(const NetworkParams& p, const Vector& x, bool with_time,
                    std::size_t c, double h) {
  Vector a = x, b = x;
  a[c] += h;
  b[c] -= h;
  return (value_at(p, a, with_time) - value_at(p, b, with_time)) / (2.0 * h);
}

inline double second(const NetworkParams& p, const Vector& x, bool with_time,
                     std::size_t c, double h) {
  Vector a = x, b = x;
  a[c] += h;
  b[c] -= h;
  return (value_at(p, a, with_time) - 2.0 * value_at(p, x, with_time) +
          value_at(p, b, with_time)) /
         (h * h);
}

// Central difference over every weight and bias of a scalar functional of
// the parameters.
template <class F>
ParamGrad param_gradient(const NetworkParams& p, F&& f, double h) {
  NetworkParams q = p;
  ParamGrad g = ParamGrad::zeros_like(p);
  for (std::size_t l = 0; l < q.weights.size(); ++l) {
    for (std::size_t i = 0; i < q.weights[l].size(); ++i) {
      double& slot = q.weights[l].data()[i];
      const double saved = slot;
      slot = saved + h;
      const double fp = f(q);
      slot = saved - h;
      const double fm = f(q);
      slot = saved;
      g.weights[l].data()[i] = (fp - fm) / (2.0 * h);
    }
    for (std::size_t i = 0; i < q.biases[l].size(); ++i) {
      double& slot = q.biases[l][i];
      const double saved = slot;
      slot = saved + h;
      const double fp = f(q);
      slot = saved - h;
      const double fm = f(q);
      slot = saved;
      g.biases[l][i] = (fp - fm) / (2.0 * h);
    }
  }
  return g;
}

// Largest ratio of |a-b| to the mixed tolerance max(abs_tol, rel_tol*scale);
// a result below 1 means every entry agrees within tolerance.
inline double mismatch(double a, double b, double abs_tol, double rel_tol) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return std::abs(a - b) / std::max(abs_tol, rel_tol * scale);
}

inline double max_mismatch(const ParamGrad& a, const ParamGrad& b,
                           double abs_tol, double rel_tol) {
  double worst = 0.0;
  for (std::size_t l = 0; l < a.weights.size(); ++l) {
    for (std::size_t i = 0; i < a.weights[l].size(); ++i)
      worst = std::max(worst, mismatch(a.weights[l].data()[i],
                                       b.weights[l].data()[i], abs_tol, rel_tol));
    for (std::size_t i = 0; i < a.biases[l].size(); ++i)
      worst = std::max(worst,
                       mismatch(a.biases[l][i], b.biases[l][i], abs_tol, rel_tol));
  }
  return worst;
}

}  // namespace cauchynet::fd
