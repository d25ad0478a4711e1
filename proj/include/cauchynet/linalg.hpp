#pragma once

// Dense row-major vectors/matrices sized for small fully connected networks
// (widths of a few hundred at most). No BLAS; the handful of multiply
// kernels below are written so the compiler can keep the inner loops in
// vector registers, which is all the performance this project needs.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace cauchynet {

using Vector = std::vector<double>;

inline void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double value = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, value) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double* row(std::size_t i) { return data_.data() + i * cols_; }
  const double* row(std::size_t i) const { return data_.data() + i * cols_; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  // Changes the shape without preserving or clearing contents; reuses the
  // allocation when capacity allows. Callers that accumulate must zero().
  void resize(std::size_t rows, std::size_t cols) {
    rows_ = rows;
    cols_ = cols;
    data_.resize(rows * cols);
  }

  void zero() { std::fill(data_.begin(), data_.end(), 0.0); }

  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

// --- shape-checked operations used by tests and cold paths ---------------

inline Vector matvec(const Matrix& a, const Vector& x) {
  require(a.cols() == x.size(), "matvec: dimension mismatch");
  Vector y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* ai = a.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) acc += ai[j] * x[j];
    y[i] = acc;
  }
  return y;
}

inline Vector hadamard(const Vector& a, const Vector& b) {
  require(a.size() == b.size(), "hadamard: dimension mismatch");
  Vector y(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) y[i] = a[i] * b[i];
  return y;
}

// Sums each column of a; returns a row of length a.cols().
inline Vector col_sum(const Matrix& a) {
  Vector y(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* ai = a.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) y[j] += ai[j];
  }
  return y;
}

inline Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

inline Matrix diag(const Vector& v) {
  Matrix m(v.size(), v.size());
  for (std::size_t i = 0; i < v.size(); ++i) m(i, i) = v[i];
  return m;
}

inline double dot(const Vector& a, const Vector& b) {
  require(a.size() == b.size(), "dot: dimension mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

// --- raw kernels for the hot paths ---------------------------------------
//
// All operate on row-major blocks. B and C take explicit leading dimensions
// so a kernel can touch only the first m columns of a wider tape matrix;
// A is always tightly packed.

namespace kern {

// C(n x m) = A(n x k) * B(k x m). Rows of A are processed four at a time so
// each loaded B row feeds four FMAs.
inline void mul_nn(double* __restrict c, const double* __restrict a,
                   const double* __restrict b, std::size_t n, std::size_t k,
                   std::size_t m, std::size_t ldb, std::size_t ldc) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    double* c0 = c + i * ldc;
    double* c1 = c0 + ldc;
    double* c2 = c1 + ldc;
    double* c3 = c2 + ldc;
    for (std::size_t j = 0; j < m; ++j) c0[j] = c1[j] = c2[j] = c3[j] = 0.0;
    const double* a0 = a + i * k;
    const double* a1 = a0 + k;
    const double* a2 = a1 + k;
    const double* a3 = a2 + k;
    for (std::size_t t = 0; t < k; ++t) {
      const double* bt = b + t * ldb;
      const double x0 = a0[t], x1 = a1[t], x2 = a2[t], x3 = a3[t];
      for (std::size_t j = 0; j < m; ++j) {
        const double bj = bt[j];
        c0[j] += x0 * bj;
        c1[j] += x1 * bj;
        c2[j] += x2 * bj;
        c3[j] += x3 * bj;
      }
    }
  }
  for (; i < n; ++i) {
    double* ci = c + i * ldc;
    for (std::size_t j = 0; j < m; ++j) ci[j] = 0.0;
    const double* ai = a + i * k;
    for (std::size_t t = 0; t < k; ++t) {
      const double* bt = b + t * ldb;
      const double x = ai[t];
      for (std::size_t j = 0; j < m; ++j) ci[j] += x * bt[j];
    }
  }
}

// C(n x m) = A^T * B with A(k x n), B(k x m). The k loop is unrolled by
// four so each C row is loaded/stored once per four accumulated terms.
inline void mul_tn(double* __restrict c, const double* __restrict a,
                   const double* __restrict b, std::size_t k, std::size_t n,
                   std::size_t m, std::size_t ldb, std::size_t ldc) {
  for (std::size_t i = 0; i < n; ++i) {
    double* ci = c + i * ldc;
    for (std::size_t j = 0; j < m; ++j) ci[j] = 0.0;
  }
  std::size_t t = 0;
  for (; t + 4 <= k; t += 4) {
    const double* a0 = a + t * n;
    const double* a1 = a0 + n;
    const double* a2 = a1 + n;
    const double* a3 = a2 + n;
    const double* b0 = b + t * ldb;
    const double* b1 = b0 + ldb;
    const double* b2 = b1 + ldb;
    const double* b3 = b2 + ldb;
    for (std::size_t i = 0; i < n; ++i) {
      double* ci = c + i * ldc;
      const double x0 = a0[i], x1 = a1[i], x2 = a2[i], x3 = a3[i];
      for (std::size_t j = 0; j < m; ++j)
        ci[j] += x0 * b0[j] + x1 * b1[j] + x2 * b2[j] + x3 * b3[j];
    }
  }
  for (; t < k; ++t) {
    const double* at = a + t * n;
    const double* bt = b + t * ldb;
    for (std::size_t i = 0; i < n; ++i) {
      double* ci = c + i * ldc;
      const double x = at[i];
      for (std::size_t j = 0; j < m; ++j) ci[j] += x * bt[j];
    }
  }
}

// W(n x m) += coeff * U(n x p) * V(p x m); everything tightly packed.
// p is small (at most dim + 2), m is a layer width.
inline void add_outer(double* __restrict w, const double* __restrict u,
                      const double* __restrict v, std::size_t n, std::size_t p,
                      std::size_t m, double coeff) {
  for (std::size_t i = 0; i < n; ++i) {
    double* wi = w + i * m;
    const double* ui = u + i * p;
    for (std::size_t t = 0; t < p; ++t) {
      const double f = coeff * ui[t];
      const double* vt = v + t * m;
      for (std::size_t j = 0; j < m; ++j) wi[j] += f * vt[j];
    }
  }
}

// Explicit SIMD tiles for the two kernels on the training hot path. GNU
// vector extensions (GCC and Clang) make the vectorization deterministic;
// the autovectorizer loses track of the accumulator arrays in the blocked
// loops below and emits scalar FMAs. Scalar fallbacks compile elsewhere.
#if defined(__GNUC__) && (defined(__x86_64__) || defined(__aarch64__))
#define CAUCHYNET_SIMD_KERNELS 1
#endif

#if CAUCHYNET_SIMD_KERNELS
namespace simd {

typedef double pack2 __attribute__((vector_size(16)));
#if defined(__AVX__) || defined(__AVX512F__)
typedef double pack4 __attribute__((vector_size(32)));
#endif
#if defined(__AVX512F__)
typedef double pack8 __attribute__((vector_size(64)));
#endif

template <class V>
constexpr std::size_t lanes = sizeof(V) / sizeof(double);

template <class V>
inline V load(const double* p) {
  V r;
  __builtin_memcpy(&r, p, sizeof(V));
  return r;
}

template <class V>
inline void store(double* p, V x) {
  __builtin_memcpy(p, &x, sizeof(V));
}

template <class V>
inline V splat(double x) {
  if constexpr (lanes<V> == 8)
    return V{x, x, x, x, x, x, x, x};
  else if constexpr (lanes<V> == 4)
    return V{x, x, x, x};
  else
    return V{x, x};
}

// One column tile of C(rows x m) = A(rows x k) * B(k x m): R rows of
// accumulators held in registers across the whole k loop.
template <std::size_t R, class V>
inline void mul_tile(double* __restrict c, const double* __restrict a,
                     const double* __restrict b, std::size_t k, std::size_t m,
                     std::size_t i0, std::size_t j0) {
  V acc[R];
  for (std::size_t r = 0; r < R; ++r) acc[r] = splat<V>(0.0);
  const double* ar[R];
  for (std::size_t r = 0; r < R; ++r) ar[r] = a + (i0 + r) * k;
  for (std::size_t t = 0; t < k; ++t) {
    const V bt = load<V>(b + t * m + j0);
    for (std::size_t r = 0; r < R; ++r) acc[r] += splat<V>(ar[r][t]) * bt;
  }
  for (std::size_t r = 0; r < R; ++r) store<V>(c + (i0 + r) * m + j0, acc[r]);
}

template <class V>
inline void mul_tile_rows(double* c, const double* a, const double* b,
                          std::size_t rows, std::size_t k, std::size_t m,
                          std::size_t j0) {
  std::size_t i = 0;
  for (; i + 8 <= rows; i += 8) mul_tile<8, V>(c, a, b, k, m, i, j0);
  if (rows - i >= 4) {
    mul_tile<4, V>(c, a, b, k, m, i, j0);
    i += 4;
  }
  if (rows - i >= 2) {
    mul_tile<2, V>(c, a, b, k, m, i, j0);
    i += 2;
  }
  if (i < rows) mul_tile<1, V>(c, a, b, k, m, i, j0);
}

// One column tile of W(n x m) += coeff * U^T V with U(p x n), V(p x m).
template <class V>
inline void outer_tile(double* __restrict w, const double* __restrict u,
                       const double* __restrict v, std::size_t p, std::size_t n,
                       std::size_t m, double coeff, std::size_t j0) {
  for (std::size_t i = 0; i < n; ++i) {
    V acc = load<V>(w + i * m + j0);
    for (std::size_t t = 0; t < p; ++t)
      acc += splat<V>(coeff * u[t * n + i]) * load<V>(v + t * m + j0);
    store<V>(w + i * m + j0, acc);
  }
}

}  // namespace simd
#endif  // CAUCHYNET_SIMD_KERNELS

// Same update with U stored transposed as p x n (rows over the p factors).
inline void add_outer_t(double* __restrict w, const double* __restrict u,
                        const double* __restrict v, std::size_t p, std::size_t n,
                        std::size_t m, double coeff) {
#if CAUCHYNET_SIMD_KERNELS
  std::size_t j0 = 0;
#if defined(__AVX512F__)
  for (; j0 + 8 <= m; j0 += 8) simd::outer_tile<simd::pack8>(w, u, v, p, n, m, coeff, j0);
#endif
#if defined(__AVX__) || defined(__AVX512F__)
  for (; j0 + 4 <= m; j0 += 4) simd::outer_tile<simd::pack4>(w, u, v, p, n, m, coeff, j0);
#endif
  for (; j0 + 2 <= m; j0 += 2) simd::outer_tile<simd::pack2>(w, u, v, p, n, m, coeff, j0);
  for (; j0 < m; ++j0)
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t t = 0; t < p; ++t) s += u[t * n + i] * v[t * m + j0];
      w[i * m + j0] += coeff * s;
    }
#else
  for (std::size_t i = 0; i < n; ++i) {
    double* wi = w + i * m;
    for (std::size_t t = 0; t < p; ++t) {
      const double f = coeff * u[t * n + i];
      const double* vt = v + t * m;
      for (std::size_t j = 0; j < m; ++j) wi[j] += f * vt[j];
    }
  }
#endif
}

// C(rows x m) = A(rows x k) * B(k x m), everything tight. Tuned for the jet
// propagation shape: a handful of rows, k and m being layer widths. Columns
// are tiled at the widest vector width that fits, stepping down through the
// narrower packs so layer widths like 20, 14, 12 and 10 stay vectorized.
inline void mul_rowjet(double* __restrict c, const double* __restrict a,
                       const double* __restrict b, std::size_t rows,
                       std::size_t k, std::size_t m) {
#if CAUCHYNET_SIMD_KERNELS
  std::size_t j0 = 0;
#if defined(__AVX512F__)
  for (; j0 + 8 <= m; j0 += 8) simd::mul_tile_rows<simd::pack8>(c, a, b, rows, k, m, j0);
#endif
#if defined(__AVX__) || defined(__AVX512F__)
  for (; j0 + 4 <= m; j0 += 4) simd::mul_tile_rows<simd::pack4>(c, a, b, rows, k, m, j0);
#endif
  for (; j0 + 2 <= m; j0 += 2) simd::mul_tile_rows<simd::pack2>(c, a, b, rows, k, m, j0);
  for (; j0 < m; ++j0)
    for (std::size_t i = 0; i < rows; ++i) {
      double s = 0.0;
      const double* ai = a + i * k;
      for (std::size_t t = 0; t < k; ++t) s += ai[t] * b[t * m + j0];
      c[i * m + j0] = s;
    }
#else
  for (std::size_t i = 0; i < rows; ++i) {
    double* ci = c + i * m;
    for (std::size_t j = 0; j < m; ++j) ci[j] = 0.0;
    const double* ai = a + i * k;
    for (std::size_t t = 0; t < k; ++t) {
      const double* bt = b + t * m;
      const double x = ai[t];
      for (std::size_t j = 0; j < m; ++j) ci[j] += x * bt[j];
    }
  }
#endif
}

}  // namespace kern
}  // namespace cauchynet
