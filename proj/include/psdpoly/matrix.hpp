#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "psdpoly/precision.hpp"

namespace psdpoly {

/// Dense row-major matrix of doubles. Low-precision modes keep their values
/// in doubles that are exactly representable in the emulated format.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
      : rows_(rows), cols_(cols), data_(std::move(values)) {
    if (data_.size() != rows * cols)
      throw std::invalid_argument("Matrix: value count does not match shape");
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static Matrix diagonal(std::span<const double> d) {
    Matrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  Matrix& operator+=(const Matrix& o) {
    check_same_shape(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  Matrix& operator-=(const Matrix& o) {
    check_same_shape(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  Matrix& operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
  }

  friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
  friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
  friend Matrix operator*(Matrix a, double s) { return a *= s; }
  friend Matrix operator*(double s, Matrix a) { return a *= s; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  void check_same_shape(const Matrix& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_)
      throw std::invalid_argument("Matrix: shape mismatch");
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double v : a.values()) s += v * v;
  return std::sqrt(s);
}

inline double max_abs(const Matrix& a) {
  double m = 0.0;
  for (double v : a.values()) m = std::max(m, std::fabs(v));
  return m;
}

/// Frobenius inner product <A, B> = tr(A^T B).
inline double inner(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("inner: shape mismatch");
  double s = 0.0;
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) s += av[i] * bv[i];
  return s;
}

/// Dense symmetric matrix; both triangles stored, exact symmetry and finite
/// entries enforced at construction.
class SymmetricMatrix {
 public:
  SymmetricMatrix() = default;

  explicit SymmetricMatrix(Matrix m) : m_(std::move(m)) {
    if (!m_.square()) throw std::invalid_argument("SymmetricMatrix: matrix is not square");
    if (m_.rows() == 0) throw std::invalid_argument("SymmetricMatrix: dimension must be >= 1");
    if (!m_.all_finite()) throw std::invalid_argument("SymmetricMatrix: non-finite entry");
    for (std::size_t i = 0; i < m_.rows(); ++i)
      for (std::size_t j = i + 1; j < m_.cols(); ++j)
        if (m_(i, j) != m_(j, i))
          throw std::invalid_argument("SymmetricMatrix: entries (" + std::to_string(i) + "," +
                                      std::to_string(j) + ") not symmetric");
  }

  static SymmetricMatrix zeros(std::size_t n) { return SymmetricMatrix(Matrix(n, n)); }
  static SymmetricMatrix identity(std::size_t n) { return SymmetricMatrix(Matrix::identity(n)); }
  static SymmetricMatrix diagonal(std::span<const double> d) {
    return SymmetricMatrix(Matrix::diagonal(d));
  }

  std::size_t n() const { return m_.rows(); }
  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
  const Matrix& matrix() const { return m_; }
  operator const Matrix&() const { return m_; }

  friend bool operator==(const SymmetricMatrix&, const SymmetricMatrix&) = default;

 private:
  Matrix m_;
};

/// (A + A^T) / 2.
inline SymmetricMatrix symmetrize(const Matrix& a) {
  if (!a.square()) throw std::invalid_argument("symmetrize: matrix is not square");
  Matrix s(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) s(i, j) = 0.5 * (a(i, j) + a(j, i));
  // Averaging is commutative in IEEE arithmetic, so s is exactly symmetric.
  return SymmetricMatrix(std::move(s));
}

/// y = A x in double precision (matrix-vector products are never counted as GEMMs).
inline std::vector<double> matvec(const Matrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) throw std::invalid_argument("matvec: dimension mismatch");
  std::vector<double> y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto r = a.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) s += r[j] * x[j];
    y[i] = s;
  }
  return y;
}

// ---------------------------------------------------------------------------
// GEMM accounting

/// Number of GEMMs executed while installed. Matrix-vector products are not
/// counted.
struct GemmCounter {
  std::size_t count = 0;
};

namespace detail {
inline GemmCounter*& active_counter() {
  thread_local GemmCounter* counter = nullptr;
  return counter;
}
}  // namespace detail

/// Installs a counter for the current thread for the lifetime of the scope.
class ScopedGemmCounter {
 public:
  explicit ScopedGemmCounter(GemmCounter& c) : prev_(detail::active_counter()) {
    detail::active_counter() = &c;
  }
  ~ScopedGemmCounter() { detail::active_counter() = prev_; }
  ScopedGemmCounter(const ScopedGemmCounter&) = delete;
  ScopedGemmCounter& operator=(const ScopedGemmCounter&) = delete;

 private:
  GemmCounter* prev_;
};

/// Sticky flags raised by low-precision rounding.
struct PrecisionFlags {
  bool overflow = false;
};

/// Round every entry to the storage width of `mode`. F64 is the identity.
inline Matrix round_to_precision(const Matrix& a, PrecisionMode mode,
                                 PrecisionFlags* flags = nullptr) {
  if (mode.tag == Precision::F64) return a;
  Matrix r = a;
  bool overflow = false;
  for (double& v : r.values()) v = round_scalar(v, mode.tag, &overflow);
  if (flags && overflow) flags->overflow = true;
  return r;
}

namespace detail {

inline constexpr std::size_t kBlock = 64;

// Blocked i-k-j product. Each output entry accumulates its k terms in
// ascending order, so the result does not depend on the blocking.
template <typename Acc>
void gemm_kernel(const Matrix& a, const Matrix& b, std::vector<Acc>& c) {
  const std::size_t n = a.rows(), inner = a.cols(), m = b.cols();
  std::vector<Acc> brow(m);
  for (std::size_t i0 = 0; i0 < n; i0 += kBlock) {
    const std::size_t i1 = std::min(n, i0 + kBlock);
    for (std::size_t k0 = 0; k0 < inner; k0 += kBlock) {
      const std::size_t k1 = std::min(inner, k0 + kBlock);
      for (std::size_t i = i0; i < i1; ++i) {
        Acc* ci = c.data() + i * m;
        for (std::size_t k = k0; k < k1; ++k) {
          const Acc aik = static_cast<Acc>(a(i, k));
          const double* bk = b.row(k).data();
          for (std::size_t j = 0; j < m; ++j) ci[j] += aik * static_cast<Acc>(bk[j]);
        }
      }
    }
  }
}

}  // namespace detail

/// General matrix product under an emulated precision: inputs rounded to the
/// storage width, products accumulated in `mode.accumulate`, result rounded
/// back to storage width. Increments the installed GemmCounter, if any.
inline Matrix gemm(const Matrix& a, const Matrix& b, PrecisionMode mode = PrecisionMode::f64(),
                   PrecisionFlags* flags = nullptr) {
  mode.validate();
  if (a.cols() != b.rows())
    throw std::invalid_argument("gemm: inner dimensions disagree (" + std::to_string(a.cols()) +
                                " vs " + std::to_string(b.rows()) + ")");
  if (!a.all_finite() || !b.all_finite())
    throw std::invalid_argument("gemm: non-finite input entry");
  if (auto* c = detail::active_counter()) ++c->count;

  const Matrix ar = round_to_precision(a, mode, flags);
  const Matrix br = round_to_precision(b, mode, flags);
  Matrix out(a.rows(), b.cols());
  if (mode.accumulate == Precision::F64) {
    std::vector<double> acc(a.rows() * b.cols(), 0.0);
    detail::gemm_kernel(ar, br, acc);
    std::copy(acc.begin(), acc.end(), out.values().begin());
  } else {
    std::vector<float> acc(a.rows() * b.cols(), 0.0f);
    detail::gemm_kernel(ar, br, acc);
    std::copy(acc.begin(), acc.end(), out.values().begin());
  }
  return round_to_precision(out, mode, flags);
}

}  // namespace psdpoly
