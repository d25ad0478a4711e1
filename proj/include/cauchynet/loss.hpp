#pragma once

// Least-squares training objective for the boundary-completion problems:
// squared PDE residual at interior collocation points plus squared data
// mismatch on the accessible boundary (values and normal derivatives), and
// for time-dependent problems a squared initial-condition mismatch. Terms
// are plain sums over points; see LossOptions::mean for the normalized
// variant. The parameter gradient is assembled point by point from the
// same (U, V) pair builders the single-point gradient routines use.
//
// Evaluation is deterministic for any worker count: points are cut into
// fixed chunks of 256, each chunk accumulates into its own partial, and
// partials are folded in chunk order. The floating-point sum association
// therefore never depends on thread scheduling.

#include <array>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

#include "cauchynet/adjoint.hpp"
#include "cauchynet/network.hpp"

namespace cauchynet {

struct CauchyBatch {
  std::size_t dim = 0;          // spatial coordinates per point
  bool time_dependent = false;  // points carry a trailing time coordinate

  struct ValuePoint {
    Vector x;
    double target = 0.0;    // clean datum
    double observed = 0.0;  // datum actually trained on (noise applied)
  };
  struct FluxPoint {
    Vector x;
    Vector normal;  // unit outward normal, spatial components
    double target = 0.0;
    double observed = 0.0;
  };

  std::vector<Vector> interior;
  std::vector<ValuePoint> dirichlet;
  std::vector<FluxPoint> neumann;
  std::vector<ValuePoint> initial;

  std::size_t input_width() const { return dim + (time_dependent ? 1 : 0); }

  std::size_t size() const {
    return interior.size() + dirichlet.size() + neumann.size() + initial.size();
  }

  void validate() const {
    require(dim >= 1, "batch: dimension must be positive");
    require(size() > 0, "batch: empty");
    require(time_dependent || initial.empty(),
            "batch: initial points require a time coordinate");
    const std::size_t w = input_width();
    for (const Vector& x : interior) require(x.size() == w, "batch: point width mismatch");
    for (const ValuePoint& pt : dirichlet)
      require(pt.x.size() == w, "batch: point width mismatch");
    for (const FluxPoint& pt : neumann) {
      require(pt.x.size() == w, "batch: point width mismatch");
      require(pt.normal.size() == dim, "batch: normal width mismatch");
      double nn = 0.0;
      for (double c : pt.normal) nn += c * c;
      require(std::abs(nn - 1.0) <= 1e-10, "batch: normal must be unit length");
    }
    for (const ValuePoint& pt : initial) {
      require(pt.x.size() == w, "batch: point width mismatch");
      require(pt.x.back() == 0.0, "batch: initial points must sit at t = 0");
    }
  }
};

struct LossReport {
  double total = 0.0;
  double residual = 0.0;   // interior PDE term
  double dirichlet = 0.0;  // boundary value term
  double neumann = 0.0;    // boundary flux term
  double initial = 0.0;    // t = 0 term (parabolic only)
  ParamGrad grad;
};

struct LossOptions {
  bool mean = false;     // divide each term and its gradient by its point count
  unsigned threads = 1;  // worker count; result is identical for any value
};

// Worker count requested through the environment; unset means one worker.
inline unsigned thread_count_from_env() {
  const char* s = std::getenv("CAUCHYNET_THREADS");
  if (s == nullptr || *s == '\0') return 1;
  char* end = nullptr;
  const unsigned long v = std::strtoul(s, &end, 10);
  require(end != s && *end == '\0' && v >= 1 && v <= 4096,
          "CAUCHYNET_THREADS must be a positive integer");
  return static_cast<unsigned>(v);
}

namespace detail {

struct LossScratch {
  ForwardTape tape;
  AdjointTape adj;
  Matrix u, v;
};

struct LossPartial {
  double residual = 0.0, dirichlet = 0.0, neumann = 0.0, initial = 0.0;
  ParamGrad grad;
};

// Jet-slot readers for the scalar output unit (its jet is contiguous).
inline double top_laplacian(const double* top, const JetLayout& lay) {
  double acc = 0.0;
  for (std::size_t i = 0; i < lay.dim; ++i) acc += top[lay.second_row(i)];
  return acc;
}

inline double top_normal_derivative(const double* top, const Vector& n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n.size(); ++i) acc += n[i] * top[1 + i];
  return acc;
}

inline void accumulate_chunk(const NetworkParams& p, const WeightCache& wc,
                             const CauchyBatch& b, bool heat,
                             const std::array<double, 4>& scale,
                             std::size_t begin, std::size_t end,
                             LossScratch& ws, LossPartial& out) {
  const std::size_t ni = b.interior.size();
  const std::size_t nd = ni + b.dirichlet.size();
  const std::size_t nn = nd + b.neumann.size();
  const std::size_t layers = p.weights.size();
  out.grad.resize_like(p);

  for (std::size_t idx = begin; idx < end; ++idx) {
    if (idx < ni) {
      forward_into(p, b.interior[idx], b.time_dependent, ws.tape, 2, &wc);
      const double* top = ws.tape.output_jet().data();
      double r = top_laplacian(top, ws.tape.layout);
      if (heat) r += top[ws.tape.layout.time_row()];
      out.residual += scale[0] * r * r;
      backward_into(p, ws.tape, 2, ws.adj);
      const double coeff = 2.0 * scale[0] * r;
      for (std::size_t l = 1; l <= layers; ++l) {
        if (heat)
          jetops::heat_residual_pairs(ws.tape, ws.adj, l, ws.u, ws.v);
        else
          jetops::laplacian_pairs(ws.tape, ws.adj, l, ws.u, ws.v);
        jetops::apply_pairs(out.grad, l, coeff, ws.u, ws.v);
      }
    } else if (idx < nd) {
      const CauchyBatch::ValuePoint& pt = b.dirichlet[idx - ni];
      forward_into(p, pt.x, b.time_dependent, ws.tape, 0, &wc);
      const double r = ws.tape.value() - pt.observed;
      out.dirichlet += scale[1] * r * r;
      backward_into(p, ws.tape, 0, ws.adj);
      const double coeff = 2.0 * scale[1] * r;
      for (std::size_t l = 1; l <= layers; ++l) {
        jetops::value_pairs(ws.tape, ws.adj, l, ws.u, ws.v);
        jetops::apply_pairs(out.grad, l, coeff, ws.u, ws.v);
      }
    } else if (idx < nn) {
      const CauchyBatch::FluxPoint& pt = b.neumann[idx - nd];
      forward_into(p, pt.x, b.time_dependent, ws.tape, 1, &wc);
      const double* top = ws.tape.output_jet().data();
      const double r = top_normal_derivative(top, pt.normal) - pt.observed;
      out.neumann += scale[2] * r * r;
      backward_into(p, ws.tape, 1, ws.adj);
      const double coeff = 2.0 * scale[2] * r;
      for (std::size_t l = 1; l <= layers; ++l) {
        jetops::neumann_pairs(ws.tape, ws.adj, l, pt.normal, ws.u, ws.v);
        jetops::apply_pairs(out.grad, l, coeff, ws.u, ws.v);
      }
    } else {
      const CauchyBatch::ValuePoint& pt = b.initial[idx - nn];
      forward_into(p, pt.x, b.time_dependent, ws.tape, 0, &wc);
      const double r = ws.tape.value() - pt.observed;
      out.initial += scale[3] * r * r;
      backward_into(p, ws.tape, 0, ws.adj);
      const double coeff = 2.0 * scale[3] * r;
      for (std::size_t l = 1; l <= layers; ++l) {
        jetops::value_pairs(ws.tape, ws.adj, l, ws.u, ws.v);
        jetops::apply_pairs(out.grad, l, coeff, ws.u, ws.v);
      }
    }
  }
}

inline LossReport evaluate_cauchy_loss(const NetworkParams& p,
                                       const CauchyBatch& b, bool heat,
                                       const LossOptions& opts) {
  p.validate();
  b.validate();
  require(p.layer_sizes.front() == b.input_width(),
          "loss: network input width does not match batch");

  std::array<double, 4> scale{1.0, 1.0, 1.0, 1.0};
  if (opts.mean) {
    if (!b.interior.empty()) scale[0] = 1.0 / static_cast<double>(b.interior.size());
    if (!b.dirichlet.empty()) scale[1] = 1.0 / static_cast<double>(b.dirichlet.size());
    if (!b.neumann.empty()) scale[2] = 1.0 / static_cast<double>(b.neumann.size());
    if (!b.initial.empty()) scale[3] = 1.0 / static_cast<double>(b.initial.size());
  }

  WeightCache wc;
  wc.refresh(p);

  constexpr std::size_t kChunk = 256;
  const std::size_t n = b.size();
  const std::size_t nchunks = (n + kChunk - 1) / kChunk;
  std::vector<LossPartial> partials(nchunks);

  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(std::max(opts.threads, 1u), nchunks));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;

  auto work = [&]() {
    LossScratch ws;
    for (;;) {
      const std::size_t c = next.fetch_add(1, std::memory_order_relaxed);
      if (c >= nchunks) break;
      const std::size_t begin = c * kChunk;
      const std::size_t end = std::min(begin + kChunk, n);
      accumulate_chunk(p, wc, b, heat, scale, begin, end, ws, partials[c]);
    }
  };

  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (unsigned t = 0; t + 1 < workers; ++t)
      pool.emplace_back([&]() {
        try {
          work();
        } catch (...) {
          failure = std::current_exception();
        }
      });
    work();
    for (std::thread& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }

  LossReport rep;
  rep.grad = ParamGrad::zeros_like(p);
  for (const LossPartial& part : partials) {
    rep.residual += part.residual;
    rep.dirichlet += part.dirichlet;
    rep.neumann += part.neumann;
    rep.initial += part.initial;
    rep.grad.add_scaled(part.grad, 1.0);
  }
  rep.total = rep.residual + rep.dirichlet + rep.neumann + rep.initial;
  return rep;
}

}  // namespace detail

// Loss for stationary problems: Lap u = 0 inside, Cauchy data on gamma.
inline LossReport elliptic_loss(const NetworkParams& p, const CauchyBatch& b,
                                const LossOptions& opts = {}) {
  require(!b.time_dependent, "elliptic_loss: batch carries a time coordinate");
  return detail::evaluate_cauchy_loss(p, b, false, opts);
}

// Loss for the heat-type problems: du/dt + Lap u = 0 inside, Cauchy data on
// the lateral boundary, value data at t = 0.
inline LossReport parabolic_loss(const NetworkParams& p, const CauchyBatch& b,
                                 const LossOptions& opts = {}) {
  require(b.time_dependent, "parabolic_loss: batch has no time coordinate");
  return detail::evaluate_cauchy_loss(p, b, true, opts);
}

}  // namespace cauchynet
