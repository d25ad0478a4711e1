#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "cauchynet/adjoint.hpp"
#include "cauchynet/gradcheck.hpp"

using namespace cauchynet;

TEST_CASE("adjoint of a one-unit chain has closed form", "[adjoint]") {
  // u(x) = b s(a x + c) + e; the hidden adjoint is b s'(z) and its input
  // derivatives follow by differentiating through z = a x + c.
  const double a = 1.0, c = 0.0, b = 2.5, e = -0.3;
  NetworkParams p;
  p.layer_sizes = {1, 1, 1};
  p.weights = {Matrix(1, 1), Matrix(1, 1)};
  p.weights[0](0, 0) = a;
  p.weights[1](0, 0) = b;
  p.biases = {Vector{c}, Vector{e}};
  p.validate();

  const ForwardTape tape = forward(p, {0.0});
  const AdjointTape adj = backward(p, tape);

  CHECK(adj.delta(2)[0] == 1.0);
  // At z = 0: s' = 1/4, s'' = 0, s''' = -1/8.
  CHECK(adj.delta(1)[0] == Catch::Approx(b * 0.25).margin(1e-15));
  CHECK(adj.delta_jacobian(1)(0, 0) == Catch::Approx(0.0).margin(1e-15));
  CHECK(adj.delta_second(1)(0, 0) == Catch::Approx(b * -0.125 * a * a).margin(1e-15));
}

TEST_CASE("adjoint delta matches finite differences of the value map", "[adjoint]") {
  // delta^l is the derivative of u with respect to the pre-activation z^l,
  // so nudging z^l via the bias of layer l must move u by delta * h.
  const NetworkParams p = NetworkParams::random({2, 6, 5, 1}, 17);
  const Vector x{0.4, -0.2};
  const ForwardTape tape = forward(p, x);
  const AdjointTape adj = backward(p, tape);
  const double h = 1e-6;
  for (std::size_t l = 1; l <= p.depth(); ++l) {
    const Vector d = adj.delta(l);
    for (std::size_t i = 0; i < d.size(); ++i) {
      NetworkParams q = p;
      q.biases[l - 1][i] += h;
      const double up = forward(q, x).value();
      q.biases[l - 1][i] -= 2.0 * h;
      const double dn = forward(q, x).value();
      CHECK(fd::mismatch(d[i], (up - dn) / (2.0 * h), 1e-6, 1e-6) < 1.0);
    }
  }
}

namespace {

struct Case {
  std::vector<std::size_t> sizes;
  bool with_time;
  std::uint64_t seed;
};

const std::vector<Case> kCases = {
    {{1, 4, 1}, false, 31},
    {{2, 6, 5, 1}, false, 32},
    {{3, 5, 4, 4, 1}, false, 33},
    {{4, 6, 3, 1}, false, 34},
    {{3, 6, 4, 1}, true, 35},
    {{2, 7, 7, 1}, true, 36},
};

Vector interior_point(std::size_t width, std::uint64_t seed) {
  Rng rng(seed);
  Vector x(width);
  for (double& c : x) c = rng.uniform(-0.7, 0.7);
  return x;
}

Vector unit_normal(std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  Vector n(d);
  double nn = 0.0;
  for (double& c : n) {
    c = rng.gaussian();
    nn += c * c;
  }
  for (double& c : n) c /= std::sqrt(nn);
  return n;
}

}  // namespace

TEST_CASE("parameter gradient of u matches finite differences", "[adjoint]") {
  for (const Case& tc : kCases) {
    const NetworkParams p = NetworkParams::random(tc.sizes, tc.seed);
    const Vector x = interior_point(tc.sizes[0], tc.seed + 100);
    const ForwardTape tape = forward(p, x, tc.with_time);
    const AdjointTape adj = backward(p, tape, 0);
    const ParamGrad got = grad_value(p, tape, adj);
    const ParamGrad ref = fd::param_gradient(
        p, [&](const NetworkParams& q) { return fd::value_at(q, x, tc.with_time); },
        1e-5);
    CHECK(fd::max_mismatch(got, ref, 1e-6, 1e-6) < 1.0);
  }
}

TEST_CASE("parameter gradient of the normal derivative matches finite differences",
          "[adjoint]") {
  for (const Case& tc : kCases) {
    const NetworkParams p = NetworkParams::random(tc.sizes, tc.seed);
    const Vector x = interior_point(tc.sizes[0], tc.seed + 200);
    const std::size_t d = tc.sizes[0] - (tc.with_time ? 1 : 0);
    const Vector n = unit_normal(d, tc.seed + 300);
    const ForwardTape tape = forward(p, x, tc.with_time);
    const AdjointTape adj = backward(p, tape, 1);
    const ParamGrad got = grad_neumann(p, tape, adj, n);
    const ParamGrad ref = fd::param_gradient(
        p,
        [&](const NetworkParams& q) {
          const Vector g = forward(q, x, tc.with_time).gradient();
          double acc = 0.0;
          for (std::size_t i = 0; i < d; ++i) acc += n[i] * g[i];
          return acc;
        },
        1e-5);
    CHECK(fd::max_mismatch(got, ref, 1e-5, 1e-5) < 1.0);
  }
}

TEST_CASE("parameter gradient of the Laplacian matches finite differences",
          "[adjoint]") {
  for (const Case& tc : kCases) {
    const NetworkParams p = NetworkParams::random(tc.sizes, tc.seed);
    const Vector x = interior_point(tc.sizes[0], tc.seed + 400);
    const ForwardTape tape = forward(p, x, tc.with_time);
    const AdjointTape adj = backward(p, tape, 2);
    const ParamGrad got = grad_laplacian(p, tape, adj);
    const ParamGrad ref = fd::param_gradient(
        p,
        [&](const NetworkParams& q) {
          return forward(q, x, tc.with_time).laplacian();
        },
        1e-5);
    CHECK(fd::max_mismatch(got, ref, 1e-4, 1e-4) < 1.0);
  }
}

TEST_CASE("parameter gradient of du/dt matches finite differences", "[adjoint]") {
  for (const Case& tc : kCases) {
    if (!tc.with_time) continue;
    const NetworkParams p = NetworkParams::random(tc.sizes, tc.seed);
    const Vector x = interior_point(tc.sizes[0], tc.seed + 500);
    const ForwardTape tape = forward(p, x, true);
    const AdjointTape adj = backward(p, tape, 1);
    const ParamGrad got = grad_time(p, tape, adj);
    const ParamGrad ref = fd::param_gradient(
        p,
        [&](const NetworkParams& q) {
          return forward(q, x, true).time_derivative();
        },
        1e-5);
    CHECK(fd::max_mismatch(got, ref, 1e-5, 1e-5) < 1.0);
  }
}

TEST_CASE("normal-derivative gradient respects linear combinations of normals",
          "[adjoint]") {
  const NetworkParams p = NetworkParams::random({3, 8, 6, 1}, 57);
  const Vector x = interior_point(3, 58);
  const ForwardTape tape = forward(p, x);
  const AdjointTape adj = backward(p, tape, 1);

  const Vector e1{1.0, 0.0, 0.0}, e2{0.0, 1.0, 0.0};
  Vector mix{1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0), 0.0};
  const ParamGrad g1 = grad_neumann(p, tape, adj, e1);
  const ParamGrad g2 = grad_neumann(p, tape, adj, e2);
  const ParamGrad gm = grad_neumann(p, tape, adj, mix);

  ParamGrad combo = ParamGrad::zeros_like(p);
  combo.add_scaled(g1, 1.0 / std::sqrt(2.0));
  combo.add_scaled(g2, 1.0 / std::sqrt(2.0));
  combo.add_scaled(gm, -1.0);
  CHECK(combo.max_abs() <= 1e-12);

  CHECK_THROWS_AS(grad_neumann(p, tape, adj, Vector{1.0, 1.0, 0.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(grad_neumann(p, tape, adj, Vector{1.0, 0.0}),
                  std::invalid_argument);
}

TEST_CASE("Laplacian gradient equals the sum over axes", "[adjoint]") {
  for (const Case& tc : kCases) {
    const NetworkParams p = NetworkParams::random(tc.sizes, tc.seed);
    const Vector x = interior_point(tc.sizes[0], tc.seed + 600);
    const std::size_t d = tc.sizes[0] - (tc.with_time ? 1 : 0);
    const ForwardTape tape = forward(p, x, tc.with_time);
    const AdjointTape adj = backward(p, tape, 2);
    const ParamGrad whole = grad_laplacian(p, tape, adj);
    ParamGrad sum = ParamGrad::zeros_like(p);
    for (std::size_t axis = 0; axis < d; ++axis)
      sum.add_scaled(grad_second_axis(p, tape, adj, axis), 1.0);
    sum.add_scaled(whole, -1.0);
    CHECK(sum.max_abs() <= 1e-12);
  }
}

TEST_CASE("order-limited backward agrees with the full pass", "[adjoint]") {
  const NetworkParams p = NetworkParams::random({3, 7, 6, 1}, 71);
  const Vector x = interior_point(3, 72);
  const ForwardTape tape = forward(p, x);
  const AdjointTape full = backward(p, tape, 2);
  const AdjointTape first = backward(p, tape, 1);
  const AdjointTape none = backward(p, tape, 0);

  for (std::size_t l = 1; l <= p.depth(); ++l) {
    const Vector df = full.delta(l);
    const Vector d1 = first.delta(l);
    const Vector d0 = none.delta(l);
    for (std::size_t i = 0; i < df.size(); ++i) {
      CHECK(d1[i] == df[i]);
      CHECK(d0[i] == df[i]);
    }
    const Matrix jf = full.delta_jacobian(l);
    const Matrix j1 = first.delta_jacobian(l);
    for (std::size_t i = 0; i < jf.size(); ++i)
      CHECK(j1.data()[i] == jf.data()[i]);
  }

  CHECK_THROWS_AS(grad_laplacian(p, tape, first), std::invalid_argument);
  CHECK_THROWS_AS(grad_neumann(p, tape, none, Vector{1.0, 0.0, 0.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(backward(p, tape, 3), std::invalid_argument);
}
