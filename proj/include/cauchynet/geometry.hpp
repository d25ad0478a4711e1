#pragma once

// Computational domains for the boundary-completion problems: balls in any
// dimension and simple polygons in the plane, each with a designated
// accessible portion Gamma of the boundary where data is prescribed.
// Provides uniform random collocation sampling (volume, boundary, and
// initial-time points), outward unit normals, and the uniform relative
// noise model applied to boundary data.
//
// Sampling laws: ball volume via normalized Gaussian direction times
// radius * U^(1/d); polygon volume via rejection from the bounding box;
// boundary uniformly in surface measure restricted to Gamma (direct on
// circular arcs and edges, rejection for coordinate bands on spheres).
// A domain with time_horizon > 0 is a space-time cylinder: every sampled
// point gains a trailing time coordinate, uniform in (0, T) except the
// initial-condition points which sit at t = 0 exactly.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include "cauchynet/linalg.hpp"
#include "cauchynet/loss.hpp"
#include "cauchynet/rng.hpp"

namespace cauchynet {

// Which part of the boundary carries prescribed data. Exactly one of the
// three descriptions applies, matched to the domain shape by validate():
//   AngleWindow  — arc theta in [theta_min, theta_max] of a circle (2-D ball)
//   CoordBands   — sphere points whose coordinate `axis` lies in one of the
//                  closed intervals `bands` (absolute coordinates)
//   EdgeSubset   — listed edge indices of a polygon (edge k joins vertex k
//                  to vertex k+1, cyclically)
struct GammaSpec {
  enum class Kind { AngleWindow, CoordBands, EdgeSubset };

  Kind kind = Kind::AngleWindow;
  double theta_min = 0.0;
  double theta_max = 0.0;
  std::size_t axis = 0;
  std::vector<std::array<double, 2>> bands;
  std::vector<std::size_t> edges;

  static GammaSpec angle_window(double theta_min, double theta_max) {
    GammaSpec g;
    g.kind = Kind::AngleWindow;
    g.theta_min = theta_min;
    g.theta_max = theta_max;
    return g;
  }

  static GammaSpec coord_bands(std::size_t axis, std::vector<std::array<double, 2>> bands) {
    GammaSpec g;
    g.kind = Kind::CoordBands;
    g.axis = axis;
    g.bands = std::move(bands);
    return g;
  }

  static GammaSpec edge_subset(std::vector<std::size_t> edges) {
    GammaSpec g;
    g.kind = Kind::EdgeSubset;
    g.edges = std::move(edges);
    return g;
  }
};

struct Domain {
  enum class Shape { Ball, Polygon };

  Shape shape = Shape::Ball;
  std::size_t dim = 0;
  Vector center;                                  // ball
  double radius = 0.0;                            // ball
  std::vector<std::array<double, 2>> vertices;    // polygon, counter-clockwise
  GammaSpec gamma;
  double time_horizon = 0.0;  // 0 = stationary; > 0 = cylinder over (0, T)

  bool time_dependent() const { return time_horizon > 0.0; }

  static Domain ball(Vector center, double radius, GammaSpec gamma,
                     double time_horizon = 0.0) {
    Domain d;
    d.shape = Shape::Ball;
    d.dim = center.size();
    d.center = std::move(center);
    d.radius = radius;
    d.gamma = std::move(gamma);
    d.time_horizon = time_horizon;
    d.validate();
    return d;
  }

  static Domain polygon(std::vector<std::array<double, 2>> vertices, GammaSpec gamma,
                        double time_horizon = 0.0) {
    Domain d;
    d.shape = Shape::Polygon;
    d.dim = 2;
    d.vertices = std::move(vertices);
    d.gamma = std::move(gamma);
    d.time_horizon = time_horizon;
    d.validate();
    return d;
  }

  // Five-pointed star inscribed in the unit circle, one tip pointing up.
  // Tips at radius 1, reentrant vertices at radius sin(pi/10)/sin(3pi/10),
  // listed counter-clockwise starting from the top tip. The accessible
  // boundary is every edge except the two meeting at the top tip.
  static Domain star() {
    const double pi = std::numbers::pi;
    const double inner = std::sin(pi / 10.0) / std::sin(3.0 * pi / 10.0);
    std::vector<std::array<double, 2>> vs;
    vs.reserve(10);
    for (int k = 0; k < 5; ++k) {
      const double tip = pi / 2.0 + k * (2.0 * pi / 5.0);
      vs.push_back({std::cos(tip), std::sin(tip)});
      const double notch = tip + pi / 5.0;
      vs.push_back({inner * std::cos(notch), inner * std::sin(notch)});
    }
    return polygon(std::move(vs), GammaSpec::edge_subset({1, 2, 3, 4, 5, 6, 7, 8}));
  }

  std::size_t edge_count() const { return vertices.size(); }

  void validate() const {
    require(time_horizon >= 0.0, "domain: time horizon must be >= 0");
    if (shape == Shape::Ball) {
      require(dim >= 1, "domain: ball needs dimension >= 1");
      require(center.size() == dim, "domain: center width mismatch");
      require(radius > 0.0 && std::isfinite(radius), "domain: radius must be positive");
      if (gamma.kind == GammaSpec::Kind::AngleWindow) {
        require(dim == 2, "domain: angle window requires a 2-D ball");
        require(gamma.theta_min >= 0.0 && gamma.theta_min < gamma.theta_max &&
                    gamma.theta_max <= 2.0 * std::numbers::pi,
                "domain: angle window must satisfy 0 <= min < max <= 2*pi");
        require(gamma.theta_max - gamma.theta_min < 2.0 * std::numbers::pi,
                "domain: accessible boundary must not cover the whole circle");
      } else if (gamma.kind == GammaSpec::Kind::CoordBands) {
        require(gamma.axis < dim, "domain: band axis out of range");
        require(!gamma.bands.empty(), "domain: empty band list");
        const double lo = center[gamma.axis] - radius;
        const double hi = center[gamma.axis] + radius;
        double covered = 0.0;
        for (const auto& b : gamma.bands) {
          require(b[0] < b[1], "domain: band must have positive width");
          const double clo = std::max(b[0], lo);
          const double chi = std::min(b[1], hi);
          require(clo < chi, "domain: band does not intersect the sphere");
          covered += chi - clo;
        }
        // Overlapping bands would double-count, but they still cannot cover
        // the full coordinate range unless the sum reaches it.
        require(covered < hi - lo,
                "domain: accessible boundary must not cover the whole sphere");
      } else {
        throw std::invalid_argument("domain: edge subset requires a polygon");
      }
    } else {
      require(dim == 2, "domain: polygons are planar");
      const std::size_t n = vertices.size();
      require(n >= 3, "domain: polygon needs at least 3 vertices");
      double area2 = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const auto& p = vertices[k];
        const auto& q = vertices[(k + 1) % n];
        const double dx = q[0] - p[0], dy = q[1] - p[1];
        require(dx * dx + dy * dy > 1e-24, "domain: degenerate polygon edge");
        area2 += p[0] * q[1] - q[0] * p[1];
      }
      require(area2 > 0.0, "domain: polygon vertices must be counter-clockwise");
      require(gamma.kind == GammaSpec::Kind::EdgeSubset,
              "domain: polygon boundary portions are edge subsets");
      require(!gamma.edges.empty(), "domain: empty edge subset");
      require(gamma.edges.size() < n,
              "domain: accessible boundary must not cover every edge");
      std::vector<bool> seen(n, false);
      for (std::size_t e : gamma.edges) {
        require(e < n, "domain: edge index out of range");
        require(!seen[e], "domain: duplicate edge index");
        seen[e] = true;
      }
    }
  }

  // Strict interior membership test on the spatial coordinates.
  bool contains(const Vector& x) const {
    require(x.size() >= dim, "domain: point width mismatch");
    if (shape == Shape::Ball) {
      double rr = 0.0;
      for (std::size_t i = 0; i < dim; ++i) {
        const double d = x[i] - center[i];
        rr += d * d;
      }
      return rr < radius * radius;
    }
    // Even-odd crossing test; boundary points count as outside.
    bool inside = false;
    const std::size_t n = vertices.size();
    for (std::size_t k = 0; k < n; ++k) {
      const auto& p = vertices[k];
      const auto& q = vertices[(k + 1) % n];
      if ((p[1] > x[1]) != (q[1] > x[1])) {
        const double xc = p[0] + (x[1] - p[1]) * (q[0] - p[0]) / (q[1] - p[1]);
        if (x[0] < xc) inside = !inside;
      }
    }
    return inside;
  }

  // Unsigned distance from the boundary level set (|x-c| = r for balls,
  // nearest edge for polygons).
  double boundary_gap(const Vector& x) const {
    require(x.size() >= dim, "domain: point width mismatch");
    if (shape == Shape::Ball) {
      double rr = 0.0;
      for (std::size_t i = 0; i < dim; ++i) {
        const double d = x[i] - center[i];
        rr += d * d;
      }
      return std::abs(std::sqrt(rr) - radius);
    }
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < vertices.size(); ++k)
      best = std::min(best, edge_distance(k, x));
    return best;
  }

  bool on_boundary(const Vector& x, double tol = 1e-9) const {
    return boundary_gap(x) <= tol;
  }

  // Whether a boundary point lies on the accessible portion Gamma. A small
  // angular slack keeps points sampled right at a window end on the correct
  // side of the round trip through atan2.
  bool on_gamma(const Vector& x, double tol = 1e-9) const {
    if (!on_boundary(x, tol)) return false;
    switch (gamma.kind) {
      case GammaSpec::Kind::AngleWindow: {
        double th = std::atan2(x[1] - center[1], x[0] - center[0]);
        if (th < 0.0) th += 2.0 * std::numbers::pi;
        return th >= gamma.theta_min - 1e-12 && th <= gamma.theta_max + 1e-12;
      }
      case GammaSpec::Kind::CoordBands: {
        const double v = x[gamma.axis];
        for (const auto& b : gamma.bands)
          if (v >= b[0] && v <= b[1]) return true;
        return false;
      }
      case GammaSpec::Kind::EdgeSubset: {
        for (std::size_t e : gamma.edges)
          if (edge_distance(e, x) <= tol) return true;
        return false;
      }
    }
    return false;
  }

  // Outward unit normal at a boundary point. Polygon vertices have no
  // normal; asking within 1e-9 of one is an error.
  Vector outward_normal(const Vector& x) const {
    require(on_boundary(x), "normal: point is not on the boundary");
    Vector n(dim, 0.0);
    if (shape == Shape::Ball) {
      double rr = 0.0;
      for (std::size_t i = 0; i < dim; ++i) {
        const double d = x[i] - center[i];
        n[i] = d;
        rr += d * d;
      }
      const double len = std::sqrt(rr);
      require(len > 0.0, "normal: point coincides with the center");
      for (std::size_t i = 0; i < dim; ++i) n[i] /= len;
      return n;
    }
    for (std::size_t k = 0; k < vertices.size(); ++k) {
      const auto& p = vertices[k];
      const double dvx = x[0] - p[0], dvy = x[1] - p[1];
      require(dvx * dvx + dvy * dvy > 1e-18,
              "normal: undefined at a polygon vertex");
    }
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < vertices.size(); ++k) {
      const double d = edge_distance(k, x);
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    const auto& p = vertices[best];
    const auto& q = vertices[(best + 1) % vertices.size()];
    const double ex = q[0] - p[0], ey = q[1] - p[1];
    const double len = std::sqrt(ex * ex + ey * ey);
    n[0] = ey / len;  // interior lies left of a counter-clockwise edge
    n[1] = -ex / len;
    return n;
  }

  // Axis-aligned bounding box of the spatial domain.
  void bounding_box(Vector& lo, Vector& hi) const {
    lo.assign(dim, 0.0);
    hi.assign(dim, 0.0);
    if (shape == Shape::Ball) {
      for (std::size_t i = 0; i < dim; ++i) {
        lo[i] = center[i] - radius;
        hi[i] = center[i] + radius;
      }
      return;
    }
    lo = {vertices[0][0], vertices[0][1]};
    hi = lo;
    for (const auto& v : vertices) {
      lo[0] = std::min(lo[0], v[0]);
      lo[1] = std::min(lo[1], v[1]);
      hi[0] = std::max(hi[0], v[0]);
      hi[1] = std::max(hi[1], v[1]);
    }
  }

  double edge_distance(std::size_t k, const Vector& x) const {
    const auto& p = vertices[k];
    const auto& q = vertices[(k + 1) % vertices.size()];
    const double ex = q[0] - p[0], ey = q[1] - p[1];
    const double wx = x[0] - p[0], wy = x[1] - p[1];
    double t = (wx * ex + wy * ey) / (ex * ex + ey * ey);
    t = std::clamp(t, 0.0, 1.0);
    const double dx = wx - t * ex, dy = wy - t * ey;
    return std::sqrt(dx * dx + dy * dy);
  }
};

namespace detail {

// Rejection loops give up after this many consecutive misses; a correct
// domain spec never comes close (acceptance rates are bounded well away
// from zero for every supported shape).
inline constexpr int kMaxRejects = 1000000;

inline Vector unit_direction(std::size_t dim, Rng& rng) {
  Vector dir(dim);
  for (;;) {
    double rr = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      dir[i] = rng.gaussian();
      rr += dir[i] * dir[i];
    }
    if (rr > 1e-24) {
      const double inv = 1.0 / std::sqrt(rr);
      for (std::size_t i = 0; i < dim; ++i) dir[i] *= inv;
      return dir;
    }
  }
}

}  // namespace detail

// Uniform spatial point strictly inside the domain (no time coordinate).
inline Vector sample_interior_point(const Domain& dom, Rng& rng) {
  if (dom.shape == Domain::Shape::Ball) {
    for (int tries = 0; tries < detail::kMaxRejects; ++tries) {
      const Vector dir = detail::unit_direction(dom.dim, rng);
      const double r =
          dom.radius * std::pow(rng.uniform01(), 1.0 / static_cast<double>(dom.dim));
      Vector x(dom.dim);
      for (std::size_t i = 0; i < dom.dim; ++i) x[i] = dom.center[i] + r * dir[i];
      // The radial law keeps r < radius, but verify strict membership so a
      // rounding tie can never leak a boundary point into the interior set.
      if (dom.contains(x)) return x;
    }
  } else {
    Vector lo, hi;
    dom.bounding_box(lo, hi);
    for (int tries = 0; tries < detail::kMaxRejects; ++tries) {
      Vector x(2);
      x[0] = rng.uniform(lo[0], hi[0]);
      x[1] = rng.uniform(lo[1], hi[1]);
      if (dom.contains(x)) return x;
    }
  }
  throw std::runtime_error("interior sampling stalled; domain spec is degenerate");
}

// Uniform spatial point on the accessible boundary portion Gamma, or on its
// complement (the boundary part the problem recovers) when `complement` is
// set. Points are kept a hair away from polygon vertices so outward normals
// are always defined.
inline Vector sample_boundary_point(const Domain& dom, Rng& rng, bool complement = false) {
  const GammaSpec& g = dom.gamma;
  if (dom.shape == Domain::Shape::Ball) {
    if (g.kind == GammaSpec::Kind::AngleWindow) {
      const double two_pi = 2.0 * std::numbers::pi;
      double th = complement ? rng.uniform(g.theta_max, g.theta_min + two_pi)
                             : rng.uniform(g.theta_min, g.theta_max);
      if (th >= two_pi) th -= two_pi;
      return {dom.center[0] + dom.radius * std::cos(th),
              dom.center[1] + dom.radius * std::sin(th)};
    }
    for (int tries = 0; tries < detail::kMaxRejects; ++tries) {
      const Vector dir = detail::unit_direction(dom.dim, rng);
      Vector x(dom.dim);
      for (std::size_t i = 0; i < dom.dim; ++i)
        x[i] = dom.center[i] + dom.radius * dir[i];
      bool in_band = false;
      for (const auto& b : g.bands)
        if (x[g.axis] >= b[0] && x[g.axis] <= b[1]) {
          in_band = true;
          break;
        }
      if (in_band != complement) return x;
    }
    throw std::runtime_error("boundary sampling stalled; accessible portion is degenerate");
  }
  std::vector<std::size_t> pool;
  if (complement) {
    std::vector<bool> in_gamma(dom.edge_count(), false);
    for (std::size_t e : g.edges) in_gamma[e] = true;
    for (std::size_t k = 0; k < dom.edge_count(); ++k)
      if (!in_gamma[k]) pool.push_back(k);
  } else {
    pool = g.edges;
  }
  require(!pool.empty(), "boundary sampling: empty boundary portion");
  Vector lengths(pool.size());
  double total = 0.0;
  for (std::size_t j = 0; j < pool.size(); ++j) {
    const auto& p = dom.vertices[pool[j]];
    const auto& q = dom.vertices[(pool[j] + 1) % dom.edge_count()];
    const double ex = q[0] - p[0], ey = q[1] - p[1];
    total += std::sqrt(ex * ex + ey * ey);
    lengths[j] = total;
  }
  const double pick = rng.uniform01() * total;
  std::size_t j = 0;
  while (j + 1 < pool.size() && pick > lengths[j]) ++j;
  const auto& p = dom.vertices[pool[j]];
  const auto& q = dom.vertices[(pool[j] + 1) % dom.edge_count()];
  const double len = lengths[j] - (j == 0 ? 0.0 : lengths[j - 1]);
  double t;
  do {
    t = rng.uniform01();
  } while (t * len < 1e-8 || (1.0 - t) * len < 1e-8);
  return {p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])};
}

// Closed-form reference solution: value and spatial gradient, both taking
// the spatial point and a time (ignored by stationary problems).
struct ExactSolution {
  std::function<double(const Vector&, double)> value;
  std::function<Vector(const Vector&, double)> gradient;
};

struct SamplePlan {
  std::size_t n_interior = 0;
  std::size_t n_dirichlet = 0;
  std::size_t n_neumann = 0;
  std::size_t n_initial = 0;
  std::uint64_t seed = 0;
};

// Draws the full collocation batch for one training run: interior points,
// Dirichlet and Neumann points on Gamma with data filled from the exact
// solution, and (for cylinders) initial-condition points at t = 0. The
// observed data equals the clean data; apply_noise perturbs it afterwards.
inline CauchyBatch sample(const Domain& dom, const SamplePlan& plan,
                          const ExactSolution& exact) {
  dom.validate();
  require(static_cast<bool>(exact.value), "sample: exact solution value missing");
  require(plan.n_neumann == 0 || static_cast<bool>(exact.gradient),
          "sample: Neumann data requires the exact gradient");
  require(dom.time_dependent() || plan.n_initial == 0,
          "sample: initial points require a time-dependent domain");
  require(plan.n_interior + plan.n_dirichlet + plan.n_neumann + plan.n_initial > 0,
          "sample: empty plan");

  CauchyBatch b;
  b.dim = dom.dim;
  b.time_dependent = dom.time_dependent();
  Rng rng(plan.seed);
  const auto draw_time = [&]() -> double {
    return dom.time_horizon * rng.uniform01();
  };
  const auto with_time = [&](Vector x, double t) {
    if (b.time_dependent) x.push_back(t);
    return x;
  };

  b.interior.reserve(plan.n_interior);
  for (std::size_t i = 0; i < plan.n_interior; ++i) {
    Vector xs = sample_interior_point(dom, rng);
    const double t = b.time_dependent ? draw_time() : 0.0;
    b.interior.push_back(with_time(std::move(xs), t));
  }
  b.dirichlet.reserve(plan.n_dirichlet);
  for (std::size_t i = 0; i < plan.n_dirichlet; ++i) {
    Vector xs = sample_boundary_point(dom, rng);
    const double t = b.time_dependent ? draw_time() : 0.0;
    const double f = exact.value(xs, t);
    b.dirichlet.push_back({with_time(std::move(xs), t), f, f});
  }
  b.neumann.reserve(plan.n_neumann);
  for (std::size_t i = 0; i < plan.n_neumann; ++i) {
    Vector xs = sample_boundary_point(dom, rng);
    const double t = b.time_dependent ? draw_time() : 0.0;
    const Vector n = dom.outward_normal(xs);
    const Vector gr = exact.gradient(xs, t);
    require(gr.size() == dom.dim, "sample: exact gradient width mismatch");
    double gflux = 0.0;
    for (std::size_t i2 = 0; i2 < dom.dim; ++i2) gflux += gr[i2] * n[i2];
    b.neumann.push_back({with_time(std::move(xs), t), n, gflux, gflux});
  }
  b.initial.reserve(plan.n_initial);
  for (std::size_t i = 0; i < plan.n_initial; ++i) {
    Vector xs = sample_interior_point(dom, rng);
    const double h = exact.value(xs, 0.0);
    b.initial.push_back({with_time(std::move(xs), 0.0), h, h});
  }
  b.validate();
  return b;
}

struct NoiseSpec {
  double delta = 0.0;  // relative level, e.g. 0.01 for one percent
  std::uint64_t seed = 0;
};

// Perturbs the observed boundary/initial data: per class (Dirichlet,
// Neumann, initial) the amplitude is delta times the max |clean datum| of
// the class, and each point moves by an independent uniform (-1, 1) draw
// times that amplitude. |observed - target| <= delta * amplitude holds as a
// hard bound. delta = 0 returns the batch bit-for-bit unchanged.
inline CauchyBatch apply_noise(CauchyBatch batch, const NoiseSpec& spec) {
  require(spec.delta >= 0.0 && std::isfinite(spec.delta),
          "noise: delta must be finite and >= 0");
  if (spec.delta == 0.0) return batch;
  Rng rng(spec.seed);
  const auto amplitude = [&](const auto& points) {
    double amp = 0.0;
    for (const auto& pt : points) amp = std::max(amp, std::abs(pt.target));
    return spec.delta * amp;
  };
  const double amp_d = amplitude(batch.dirichlet);
  for (auto& pt : batch.dirichlet) pt.observed = pt.target + amp_d * rng.symmetric();
  const double amp_n = amplitude(batch.neumann);
  for (auto& pt : batch.neumann) pt.observed = pt.target + amp_n * rng.symmetric();
  const double amp_i = amplitude(batch.initial);
  for (auto& pt : batch.initial) pt.observed = pt.target + amp_i * rng.symmetric();
  return batch;
}

}  // namespace cauchynet
