#pragma once

// Named benchmark problems: a closed-form reference solution paired with a
// domain and accessible boundary. Also the relative-error evaluator used to
// judge a trained network against the reference, and the generators for the
// held-out test and hidden-boundary point sets.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "cauchynet/geometry.hpp"
#include "cauchynet/network.hpp"

namespace cauchynet {

struct ProblemData {
  std::string name;
  std::size_t dim = 0;
  bool time_dependent = false;
  Domain domain;
  ExactSolution exact;

  std::size_t input_width() const { return dim + (time_dependent ? 1 : 0); }
};

inline std::vector<std::string> known_problems() {
  return {"laplace2d-exp",  "laplace2d-log", "laplace2d-star", "laplace3d-sinh",
          "laplace-nd",     "heat2d-exp",    "heat2d-exp-cos"};
}

namespace detail {

inline ExactSolution exp_sine_solution(bool with_cos_t) {
  ExactSolution s;
  s.value = [with_cos_t](const Vector& x, double t) {
    const double u = std::exp(x[0]) * std::sin(x[1]);
    return with_cos_t ? u * std::cos(t) : u;
  };
  s.gradient = [with_cos_t](const Vector& x, double t) -> Vector {
    const double c = with_cos_t ? std::cos(t) : 1.0;
    return {std::exp(x[0]) * std::sin(x[1]) * c, std::exp(x[0]) * std::cos(x[1]) * c};
  };
  return s;
}

inline Domain unit_disk_with_arc(double time_horizon = 0.0) {
  return Domain::ball({0.0, 0.0}, 1.0,
                      GammaSpec::angle_window(0.0, 1.5 * std::numbers::pi),
                      time_horizon);
}

}  // namespace detail

// Looks up a benchmark by name. `dim` is required for "laplace-nd" (any
// spatial dimension >= 2); for every other problem it may be 0 (use the
// problem's own dimension) or must match it.
inline ProblemData catalogue(const std::string& name, std::size_t dim = 0) {
  ProblemData p;
  p.name = name;

  const auto check_dim = [&](std::size_t expected) {
    require(dim == 0 || dim == expected, "catalogue: problem dimension mismatch");
    p.dim = expected;
  };

  if (name == "laplace2d-exp" || name == "laplace2d-star" || name == "heat2d-exp" ||
      name == "heat2d-exp-cos") {
    check_dim(2);
    const bool heat = name.rfind("heat", 0) == 0;
    p.time_dependent = heat;
    const double horizon = heat ? 0.5 * std::numbers::pi : 0.0;
    p.domain = (name == "laplace2d-star") ? Domain::star()
                                          : detail::unit_disk_with_arc(horizon);
    // The "-cos" variant multiplies the spatial solution by cos(t); that
    // function does NOT satisfy the residual the interior term penalizes
    // (tests pin the discrepancy), so the plain heat benchmark drops the
    // factor to keep the data and the operator exactly consistent.
    p.exact = detail::exp_sine_solution(name == "heat2d-exp-cos");
    return p;
  }
  if (name == "laplace2d-log") {
    check_dim(2);
    p.domain = detail::unit_disk_with_arc();
    // Harmonic with a singularity at (1,1), safely outside the closed disk.
    p.exact.value = [](const Vector& x, double) {
      const double dx = x[0] - 1.0, dy = x[1] - 1.0;
      return 0.5 * std::log(dx * dx + dy * dy);
    };
    p.exact.gradient = [](const Vector& x, double) -> Vector {
      const double dx = x[0] - 1.0, dy = x[1] - 1.0;
      const double rr = dx * dx + dy * dy;
      return {dx / rr, dy / rr};
    };
    return p;
  }
  if (name == "laplace3d-sinh") {
    check_dim(3);
    const double rt2 = std::sqrt(2.0);
    p.domain = Domain::ball({0.5, 0.5, 0.5}, 0.5,
                            GammaSpec::coord_bands(2, {{0.0, 0.25}, {0.5, 0.75}}));
    p.exact.value = [rt2](const Vector& x, double) {
      return std::sinh(rt2 * x[0]) * std::sin(x[1]) * std::sin(x[2]);
    };
    p.exact.gradient = [rt2](const Vector& x, double) -> Vector {
      const double sh = std::sinh(rt2 * x[0]), ch = std::cosh(rt2 * x[0]);
      return {rt2 * ch * std::sin(x[1]) * std::sin(x[2]),
              sh * std::cos(x[1]) * std::sin(x[2]),
              sh * std::sin(x[1]) * std::cos(x[2])};
    };
    return p;
  }
  if (name == "laplace-nd") {
    require(dim >= 2, "catalogue: laplace-nd needs an explicit dimension >= 2");
    p.dim = dim;
    Vector c(dim, 0.0);
    p.domain = Domain::ball(std::move(c), 0.5,
                            GammaSpec::coord_bands(dim - 1, {{-0.5, -0.25}, {0.0, 0.25}}));
    p.exact.value = [](const Vector& x, double) {
      double acc = 0.0;
      for (double c2 : x) acc += c2;
      return acc;
    };
    p.exact.gradient = [dim](const Vector&, double) { return Vector(dim, 1.0); };
    return p;
  }

  std::string msg = "catalogue: unknown problem '" + name + "'; available:";
  for (const std::string& n : known_problems()) msg += " " + n;
  throw std::invalid_argument(msg);
}

struct ErrorReport {
  double l2 = 0.0;
  bool absolute = false;  // reference norm vanished; l2 is the RMS error
  std::size_t n_points = 0;
  Vector pointwise;  // signed predicted-minus-reference, one entry per point
};

namespace detail {

// Relative L2 error sqrt(sum (p-r)^2 / sum r^2); if the reference is
// identically zero the report switches to the root-mean-square error and
// says so.
inline ErrorReport relative_l2(const Vector& predicted, const Vector& reference) {
  require(!predicted.empty(), "errors: empty point set");
  require(predicted.size() == reference.size(), "errors: length mismatch");
  ErrorReport rep;
  rep.n_points = predicted.size();
  rep.pointwise.resize(predicted.size());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double d = predicted[i] - reference[i];
    rep.pointwise[i] = d;
    num += d * d;
    den += reference[i] * reference[i];
  }
  if (den > 0.0) {
    rep.l2 = std::sqrt(num / den);
  } else {
    rep.l2 = std::sqrt(num / static_cast<double>(rep.n_points));
    rep.absolute = true;
  }
  return rep;
}

}  // namespace detail

// Compares the network against the reference solution on the given points
// (each point already carries its time coordinate for evolution problems).
inline ErrorReport evaluate_errors(const NetworkParams& params, const ProblemData& prob,
                                   const std::vector<Vector>& points) {
  require(!points.empty(), "errors: empty point set");
  require(params.input_width() == prob.input_width(),
          "errors: network input width does not match the problem");
  WeightCache cache;
  cache.refresh(params);
  ForwardTape tape;
  Vector predicted(points.size()), reference(points.size());
  Vector spatial(prob.dim);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Vector& x = points[i];
    require(x.size() == prob.input_width(), "errors: point width mismatch");
    forward_into(params, x, prob.time_dependent, tape, 0, &cache);
    predicted[i] = tape.value();
    for (std::size_t c = 0; c < prob.dim; ++c) spatial[c] = x[c];
    reference[i] = prob.exact.value(spatial, prob.time_dependent ? x[prob.dim] : 0.0);
  }
  return detail::relative_l2(predicted, reference);
}

// Held-out points uniform in the domain (and in time for cylinders).
inline std::vector<Vector> test_points(const ProblemData& prob, std::size_t n,
                                       std::uint64_t seed) {
  require(n > 0, "test points: count must be positive");
  Rng rng(seed);
  std::vector<Vector> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Vector x = sample_interior_point(prob.domain, rng);
    if (prob.time_dependent) x.push_back(prob.domain.time_horizon * rng.uniform01());
    pts.push_back(std::move(x));
  }
  return pts;
}

// Points on the hidden boundary (the complement of the accessible portion)
// where the completed data is judged.
inline std::vector<Vector> edge_points(const ProblemData& prob, std::size_t n,
                                       std::uint64_t seed) {
  require(n > 0, "edge points: count must be positive");
  Rng rng(seed);
  std::vector<Vector> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Vector x = sample_boundary_point(prob.domain, rng, /*complement=*/true);
    if (prob.time_dependent) x.push_back(prob.domain.time_horizon * rng.uniform01());
    pts.push_back(std::move(x));
  }
  return pts;
}

// Benchmark defaults: 1e5 test points for low dimensions, 49661 for the
// high-dimensional family.
inline std::size_t default_test_count(std::size_t dim) {
  return dim <= 3 ? 100000 : 49661;
}

}  // namespace cauchynet
