#pragma once

// Fully connected network with logistic-sigmoid hidden layers and a single
// identity output unit, evaluated together with its first and second input
// derivatives in one pass.
//
// Derivatives ride along in "jets". A layer of width n carries a jet matrix
// of shape K x n whose rows are derivative slots and whose columns are
// units:
//   row 0                value
//   rows 1 .. C          d/dx_1 .. d/dx_C   (all input coordinates,
//                                            trailing time included)
//   rows C+1 .. C+d      d2/dx_1^2 .. d2/dx_d^2   (spatial only; the PDE
//                                            operators never need d2/dt2
//                                            or mixed terms)
// Keeping units along the contiguous axis makes every per-slot map a dense
// vector loop over the layer width, and the linear layers a small matrix
// product with layer-width inner dimensions. The activation acts row-wise:
//   value:  y = s(z)
//   d/dx:   y' = s'(z) z'
//   d2/dx2: y'' = s''(z) (z')^2 + s'(z) z''
//
// The forward pass can be order-limited: order 0 propagates values only,
// order 1 adds first derivatives, order 2 (default) everything. Accessors
// for slots that were not computed throw.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cauchynet/linalg.hpp"
#include "cauchynet/rng.hpp"

namespace cauchynet {

enum class Activation { logistic, identity };

// Numerically stable logistic value; never exponentiates a positive number.
inline double logistic_value(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// Value and first three derivatives of the logistic function from a single
// exponential: s' = s(1-s), s'' = s'(1-2s), s''' = s''(1-2s) - 2 s'^2.
inline void logistic_jet(double t, double& s0, double& s1, double& s2,
                         double& s3) {
  s0 = logistic_value(t);
  s1 = s0 * (1.0 - s0);
  const double w = 1.0 - 2.0 * s0;
  s2 = s1 * w;
  s3 = s2 * w - 2.0 * s1 * s1;
}

// Elementwise activation derivative of the given order (0 = the function
// itself). Orders above 3 are not needed anywhere and are rejected.
inline Vector sigma(Activation kind, const Vector& z, int order) {
  require(order >= 0 && order <= 3, "sigma: order must be 0..3");
  Vector out(z.size());
  if (kind == Activation::identity) {
    for (std::size_t i = 0; i < z.size(); ++i)
      out[i] = order == 0 ? z[i] : (order == 1 ? 1.0 : 0.0);
    return out;
  }
  for (std::size_t i = 0; i < z.size(); ++i) {
    double s0, s1, s2, s3;
    logistic_jet(z[i], s0, s1, s2, s3);
    out[i] = order == 0 ? s0 : order == 1 ? s1 : order == 2 ? s2 : s3;
  }
  return out;
}

// --- parameters -----------------------------------------------------------

struct NetworkParams {
  std::vector<std::size_t> layer_sizes;  // n_0, n_1, ..., n_{L+1}
  std::vector<Matrix> weights;           // weights[l]: n_{l+1} x n_l
  std::vector<Vector> biases;            // biases[l]: n_{l+1}
  std::uint64_t seed = 0;                // seed the init was drawn from

  std::size_t depth() const { return weights.size(); }  // number of layers
  std::size_t input_width() const { return layer_sizes.front(); }
  std::size_t output_width() const { return layer_sizes.back(); }

  std::size_t param_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l)
      n += weights[l].size() + biases[l].size();
    return n;
  }

  void validate() const {
    require(layer_sizes.size() >= 3, "network: need at least one hidden layer");
    require(layer_sizes.back() == 1, "network: output width must be 1");
    for (std::size_t s : layer_sizes) require(s >= 1, "network: zero-width layer");
    require(weights.size() == layer_sizes.size() - 1 && biases.size() == weights.size(),
            "network: layer count mismatch");
    for (std::size_t l = 0; l < weights.size(); ++l) {
      require(weights[l].rows() == layer_sizes[l + 1] && weights[l].cols() == layer_sizes[l],
              "network: weight shape mismatch");
      require(biases[l].size() == layer_sizes[l + 1], "network: bias shape mismatch");
    }
    for (const Matrix& w : weights)
      for (std::size_t i = 0; i < w.size(); ++i)
        require(std::isfinite(w.data()[i]), "network: non-finite weight");
    for (const Vector& b : biases)
      for (double v : b) require(std::isfinite(v), "network: non-finite bias");
  }

  // Uniform (-1,1) init. Draw order is part of the reproducibility contract:
  // layer by layer, weight rows in order, then that layer's biases.
  static NetworkParams random(std::vector<std::size_t> sizes, std::uint64_t seed) {
    NetworkParams p;
    p.layer_sizes = std::move(sizes);
    p.seed = seed;
    require(p.layer_sizes.size() >= 3, "network: need at least one hidden layer");
    Rng rng(seed);
    for (std::size_t l = 0; l + 1 < p.layer_sizes.size(); ++l) {
      Matrix w(p.layer_sizes[l + 1], p.layer_sizes[l]);
      for (std::size_t i = 0; i < w.size(); ++i) w.data()[i] = rng.symmetric();
      Vector b(p.layer_sizes[l + 1]);
      for (double& v : b) v = rng.symmetric();
      p.weights.push_back(std::move(w));
      p.biases.push_back(std::move(b));
    }
    p.validate();
    return p;
  }
};

inline nlohmann::json to_json(const NetworkParams& p) {
  nlohmann::json j;
  j["layer_sizes"] = p.layer_sizes;
  auto& w = j["weights"] = nlohmann::json::array();
  for (const Matrix& m : p.weights)
    w.push_back(std::vector<double>(m.data(), m.data() + m.size()));
  auto& b = j["biases"] = nlohmann::json::array();
  for (const Vector& v : p.biases) b.push_back(v);
  j["seed"] = p.seed;
  return j;
}

inline NetworkParams params_from_json(const nlohmann::json& j) {
  require(j.is_object(), "params: expected a JSON object");
  for (const char* key : {"layer_sizes", "weights", "biases", "seed"})
    require(j.contains(key), "params: missing field");
  NetworkParams p;
  p.layer_sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
  p.seed = j.at("seed").get<std::uint64_t>();
  require(p.layer_sizes.size() >= 2, "params: bad layer_sizes");
  const auto& jw = j.at("weights");
  const auto& jb = j.at("biases");
  require(jw.is_array() && jb.is_array() && jw.size() == p.layer_sizes.size() - 1 &&
              jb.size() == jw.size(),
          "params: layer count mismatch");
  for (std::size_t l = 0; l + 1 < p.layer_sizes.size(); ++l) {
    const auto flat = jw.at(l).get<std::vector<double>>();
    Matrix w(p.layer_sizes[l + 1], p.layer_sizes[l]);
    require(flat.size() == w.size(), "params: weight block size mismatch");
    std::copy(flat.begin(), flat.end(), w.data());
    p.weights.push_back(std::move(w));
    p.biases.push_back(jb.at(l).get<Vector>());
  }
  p.validate();
  return p;
}

// Transposed copies of the weight matrices. The forward product consumes
// W^T rows; refreshing the cache once per optimizer step keeps the per-point
// cost at a plain tight matrix product.
struct WeightCache {
  std::vector<Matrix> wt;  // wt[l]: n_l x n_{l+1}

  void refresh(const NetworkParams& p) {
    wt.resize(p.weights.size());
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
      const Matrix& w = p.weights[l];
      wt[l].resize(w.cols(), w.rows());
      for (std::size_t i = 0; i < w.rows(); ++i)
        for (std::size_t j = 0; j < w.cols(); ++j) wt[l](j, i) = w(i, j);
    }
  }
};

// --- forward evaluation ---------------------------------------------------

// Row bookkeeping for jet matrices.
struct JetLayout {
  std::size_t dim = 0;     // spatial input coordinates
  bool with_time = false;  // trailing time coordinate present

  std::size_t first_count() const { return dim + (with_time ? 1 : 0); }
  std::size_t rows() const { return 1 + first_count() + dim; }
  static constexpr std::size_t value_row() { return 0; }
  std::size_t first_row(std::size_t c) const { return 1 + c; }
  std::size_t time_row() const { return 1 + dim; }
  std::size_t second_row(std::size_t i) const { return 1 + first_count() + i; }

  // Jet rows carried for a given derivative order.
  std::size_t rows_for(int order) const {
    return order == 0 ? 1 : order == 1 ? 1 + first_count() : rows();
  }

  bool operator==(const JetLayout&) const = default;
};

struct ForwardTape {
  JetLayout layout;
  int order = 2;                   // highest derivative slot computed
  std::vector<std::size_t> sizes;  // layer widths n_0 .. n_{L+1}
  Matrix input;                    // K x n_0 input jet
  std::vector<Matrix> zs;          // zs[l]: pre-activation jet of layer l+1
  std::vector<Matrix> ys;          // ys[l]: activation jet of hidden layer l+1
  std::vector<Vector> s1, s2, s3;  // sigmoid derivatives per hidden layer

  std::size_t depth() const { return zs.size(); }  // number of layers

  // Activation jet feeding layer l (l = 0 is the input itself).
  const Matrix& y_jet(std::size_t l) const { return l == 0 ? input : ys[l - 1]; }

  // Output jet: K x 1, so the slots are contiguous.
  const Matrix& output_jet() const { return zs.back(); }
  double value() const { return output_jet().data()[0]; }

  Vector gradient() const {
    require(order >= 1, "tape: first derivatives not computed");
    const double* top = output_jet().data();
    Vector g(layout.first_count());
    for (std::size_t c = 0; c < g.size(); ++c) g[c] = top[layout.first_row(c)];
    return g;
  }

  double laplacian() const {
    require(order >= 2, "tape: second derivatives not computed");
    const double* top = output_jet().data();
    double acc = 0.0;
    for (std::size_t i = 0; i < layout.dim; ++i) acc += top[layout.second_row(i)];
    return acc;
  }

  double time_derivative() const {
    require(layout.with_time, "tape: no time coordinate");
    require(order >= 1, "tape: first derivatives not computed");
    return output_jet().data()[layout.time_row()];
  }

  // Extraction helpers, layer index l = 1 .. L+1.
  Vector preactivation(std::size_t l) const {
    require(l >= 1 && l <= depth(), "tape: layer out of range");
    const Matrix& m = zs[l - 1];
    Vector v(m.cols());
    for (std::size_t i = 0; i < m.cols(); ++i) v[i] = m(0, i);
    return v;
  }

  Vector activation(std::size_t l) const {
    require(l >= 1 && l <= depth(), "tape: layer out of range");
    if (l == depth()) return preactivation(l);  // identity output
    const Matrix& m = ys[l - 1];
    Vector v(m.cols());
    for (std::size_t i = 0; i < m.cols(); ++i) v[i] = m(0, i);
    return v;
  }

  // d z^l / d x as an n_l x C block.
  Matrix input_jacobian(std::size_t l) const {
    require(order >= 1, "tape: first derivatives not computed");
    require(l >= 1 && l <= depth(), "tape: layer out of range");
    const Matrix& m = zs[l - 1];
    Matrix out(m.cols(), layout.first_count());
    for (std::size_t i = 0; i < m.cols(); ++i)
      for (std::size_t c = 0; c < out.cols(); ++c)
        out(i, c) = m(layout.first_row(c), i);
    return out;
  }

  // d2 z^l / d x_i^2 as an n_l x d block (spatial axes only).
  Matrix input_second(std::size_t l) const {
    require(order >= 2, "tape: second derivatives not computed");
    require(l >= 1 && l <= depth(), "tape: layer out of range");
    const Matrix& m = zs[l - 1];
    Matrix out(m.cols(), layout.dim);
    for (std::size_t i = 0; i < m.cols(); ++i)
      for (std::size_t c = 0; c < layout.dim; ++c)
        out(i, c) = m(layout.second_row(c), i);
    return out;
  }
};

// Evaluates the network and its input derivatives at x, reusing the tape's
// storage. x carries the time coordinate last when with_time is set. A
// caller evaluating many points against fixed parameters should pass a
// refreshed WeightCache; otherwise one is built on the fly.
inline void forward_into(const NetworkParams& p, const Vector& x, bool with_time,
                         ForwardTape& tape, int order = 2,
                         const WeightCache* cache = nullptr) {
  const std::size_t n0 = p.layer_sizes.front();
  require(x.size() == n0, "forward: input width mismatch");
  require(!with_time || n0 >= 2, "forward: time requires at least 2 inputs");
  require(order >= 0 && order <= 2, "forward: order must be 0..2");
  const std::size_t count = p.layer_sizes.size() - 1;

  WeightCache local;
  if (cache == nullptr) {
    local.refresh(p);
    cache = &local;
  }
  require(cache->wt.size() == count, "forward: stale weight cache");

  tape.layout.with_time = with_time;
  tape.layout.dim = n0 - (with_time ? 1 : 0);
  tape.order = order;
  tape.sizes = p.layer_sizes;
  const std::size_t kc = tape.layout.rows();
  const std::size_t used = tape.layout.rows_for(order);
  const std::size_t cc = tape.layout.first_count();
  const std::size_t d = tape.layout.dim;

  tape.input.resize(kc, n0);
  tape.input.zero();
  for (std::size_t j = 0; j < n0; ++j) {
    tape.input(JetLayout::value_row(), j) = x[j];
    tape.input(tape.layout.first_row(j), j) = 1.0;
  }

  tape.zs.resize(count);
  tape.ys.resize(count - 1);
  tape.s1.resize(count - 1);
  tape.s2.resize(count - 1);
  tape.s3.resize(count - 1);

  for (std::size_t l = 0; l < count; ++l) {
    const std::size_t nin = p.layer_sizes[l];
    const std::size_t n = p.layer_sizes[l + 1];
    const Matrix& below = l == 0 ? tape.input : tape.ys[l - 1];
    Matrix& z = tape.zs[l];
    z.resize(kc, n);
    kern::mul_rowjet(z.data(), below.data(), cache->wt[l].data(), used, nin, n);
    {
      double* z0 = z.row(0);
      const double* b = p.biases[l].data();
      for (std::size_t i = 0; i < n; ++i) z0[i] += b[i];
    }
    if (l + 1 == count) break;  // identity output layer

    Matrix& y = tape.ys[l];
    y.resize(kc, n);
    tape.s1[l].resize(n);
    tape.s2[l].resize(n);
    tape.s3[l].resize(n);
    {
      const double* z0 = z.row(0);
      double* y0 = y.row(0);
      double* s1 = tape.s1[l].data();
      double* s2 = tape.s2[l].data();
      double* s3 = tape.s3[l].data();
      for (std::size_t i = 0; i < n; ++i)
        logistic_jet(z0[i], y0[i], s1[i], s2[i], s3[i]);
      if (order >= 1)
        for (std::size_t c = 0; c < cc; ++c) {
          const double* zr = z.row(1 + c);
          double* yr = y.row(1 + c);
          for (std::size_t i = 0; i < n; ++i) yr[i] = s1[i] * zr[i];
        }
      if (order >= 2)
        for (std::size_t a = 0; a < d; ++a) {
          const double* zg = z.row(1 + a);
          const double* zq = z.row(1 + cc + a);
          double* yq = y.row(1 + cc + a);
          for (std::size_t i = 0; i < n; ++i)
            yq[i] = s2[i] * zg[i] * zg[i] + s1[i] * zq[i];
        }
    }
  }
}

inline ForwardTape forward(const NetworkParams& p, const Vector& x,
                           bool with_time = false) {
  ForwardTape tape;
  forward_into(p, x, with_time, tape);
  return tape;
}

struct OutputDerivatives {
  double value = 0.0;
  Vector gradient;  // spatial entries, then time when present
  double laplacian = 0.0;
  std::optional<double> du_dt;
};

inline OutputDerivatives output_derivatives(const ForwardTape& tape) {
  OutputDerivatives out;
  out.value = tape.value();
  out.gradient = tape.gradient();
  out.laplacian = tape.laplacian();
  if (tape.layout.with_time) out.du_dt = tape.time_derivative();
  return out;
}

}  // namespace cauchynet
