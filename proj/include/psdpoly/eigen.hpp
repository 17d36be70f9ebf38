#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "psdpoly/matrix.hpp"

namespace psdpoly {

/// Thrown when an iterative numerical method exhausts its iteration budget.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// X = Q diag(lambdas) Q^T with eigenvalues in descending order and the
/// eigenvectors stored as the columns of Q.
struct EigenDecomposition {
  Matrix q;
  std::vector<double> lambdas;

  Matrix reconstruct() const {
    const std::size_t n = lambdas.size();
    Matrix out(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k) {
        const double qik = q(i, k) * lambdas[k];
        if (qik == 0.0) continue;
        for (std::size_t j = 0; j < n; ++j) out(i, j) += qik * q(j, k);
      }
    return out;
  }
};

namespace detail {

inline constexpr std::size_t kJacobiMaxDim = 128;

inline void sort_descending(std::vector<double>& d, Matrix& v) {
  const std::size_t n = d.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return d[a] > d[b]; });
  std::vector<double> ds(n);
  Matrix vs(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    ds[k] = d[order[k]];
    for (std::size_t i = 0; i < n; ++i) vs(i, k) = v(i, order[k]);
  }
  d = std::move(ds);
  v = std::move(vs);
}

// Cyclic Jacobi sweeps.
inline EigenDecomposition jacobi_eig(const Matrix& x, int max_sweeps = 100) {
  const std::size_t n = x.rows();
  Matrix a = x;
  Matrix v = Matrix::identity(n);
  const double fro = frobenius_norm(x);
  int sweep = 0;
  for (;; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off == 0.0 || std::sqrt(off) <= 1e-17 * fro) break;
    if (sweep == max_sweeps)
      throw ConvergenceError("sym_eig: Jacobi did not converge after " +
                             std::to_string(max_sweeps) + " sweeps");
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::fabs(tau) + std::hypot(1.0, tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = a(i, i);
  sort_descending(d, v);
  return {std::move(v), std::move(d)};
}

// Householder tridiagonalization followed by implicit QL (the EISPACK
// tred2/tql2 pair).
inline EigenDecomposition householder_ql_eig(const Matrix& x, int max_iter_per_value = 60) {
  const int n = static_cast<int>(x.rows());
  Matrix v = x;
  std::vector<double> d(n), e(n);

  for (int j = 0; j < n; ++j) d[j] = v(n - 1, j);
  for (int i = n - 1; i > 0; --i) {
    double scale = 0.0, h = 0.0;
    for (int k = 0; k < i; ++k) scale += std::fabs(d[k]);
    if (scale == 0.0) {
      e[i] = d[i - 1];
      for (int j = 0; j < i; ++j) {
        d[j] = v(i - 1, j);
        v(i, j) = 0.0;
        v(j, i) = 0.0;
      }
    } else {
      for (int k = 0; k < i; ++k) {
        d[k] /= scale;
        h += d[k] * d[k];
      }
      double f = d[i - 1];
      double g = std::sqrt(h);
      if (f > 0) g = -g;
      e[i] = scale * g;
      h -= f * g;
      d[i - 1] = f - g;
      for (int j = 0; j < i; ++j) e[j] = 0.0;
      for (int j = 0; j < i; ++j) {
        f = d[j];
        v(j, i) = f;
        g = e[j] + v(j, j) * f;
        for (int k = j + 1; k <= i - 1; ++k) {
          g += v(k, j) * d[k];
          e[k] += v(k, j) * f;
        }
        e[j] = g;
      }
      f = 0.0;
      for (int j = 0; j < i; ++j) {
        e[j] /= h;
        f += e[j] * d[j];
      }
      const double hh = f / (h + h);
      for (int j = 0; j < i; ++j) e[j] -= hh * d[j];
      for (int j = 0; j < i; ++j) {
        f = d[j];
        g = e[j];
        for (int k = j; k <= i - 1; ++k) v(k, j) -= (f * e[k] + g * d[k]);
        d[j] = v(i - 1, j);
        v(i, j) = 0.0;
      }
    }
    d[i] = h;
  }
  for (int i = 0; i < n - 1; ++i) {
    v(n - 1, i) = v(i, i);
    v(i, i) = 1.0;
    const double h = d[i + 1];
    if (h != 0.0) {
      for (int k = 0; k <= i; ++k) d[k] = v(k, i + 1) / h;
      for (int j = 0; j <= i; ++j) {
        double g = 0.0;
        for (int k = 0; k <= i; ++k) g += v(k, i + 1) * v(k, j);
        for (int k = 0; k <= i; ++k) v(k, j) -= g * d[k];
      }
    }
    for (int k = 0; k <= i; ++k) v(k, i + 1) = 0.0;
  }
  for (int j = 0; j < n; ++j) {
    d[j] = v(n - 1, j);
    v(n - 1, j) = 0.0;
  }
  v(n - 1, n - 1) = 1.0;
  e[0] = 0.0;

  // tql2
  for (int i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;
  double f = 0.0, tst1 = 0.0;
  const double eps = 0x1p-52;
  for (int l = 0; l < n; ++l) {
    tst1 = std::max(tst1, std::fabs(d[l]) + std::fabs(e[l]));
    int m = l;
    while (m < n) {
      if (std::fabs(e[m]) <= eps * tst1) break;
      ++m;
    }
    if (m > l) {
      int iter = 0;
      do {
        if (++iter > max_iter_per_value)
          throw ConvergenceError("sym_eig: implicit QL did not converge for eigenvalue " +
                                 std::to_string(l));
        double g = d[l];
        double p = (d[l + 1] - g) / (2.0 * e[l]);
        double r = std::hypot(p, 1.0);
        if (p < 0) r = -r;
        d[l] = e[l] / (p + r);
        d[l + 1] = e[l] * (p + r);
        const double dl1 = d[l + 1];
        double h = g - d[l];
        for (int i = l + 2; i < n; ++i) d[i] -= h;
        f += h;
        p = d[m];
        double c = 1.0, c2 = 1.0, c3 = 1.0;
        const double el1 = e[l + 1];
        double s = 0.0, s2 = 0.0;
        for (int i = m - 1; i >= l; --i) {
          c3 = c2;
          c2 = c;
          s2 = s;
          g = c * e[i];
          h = c * p;
          r = std::hypot(p, e[i]);
          e[i + 1] = s * r;
          s = e[i] / r;
          c = p / r;
          p = c * d[i] - s * g;
          d[i + 1] = h + s * (c * g + s * d[i]);
          for (int k = 0; k < n; ++k) {
            h = v(k, i + 1);
            v(k, i + 1) = s * v(k, i) + c * h;
            v(k, i) = c * v(k, i) - s * h;
          }
        }
        p = -s * s2 * c3 * el1 * e[l] / dl1;
        e[l] = s * p;
        d[l] = c * p;
      } while (std::fabs(e[l]) > eps * tst1);
    }
    d[l] += f;
    e[l] = 0.0;
  }
  sort_descending(d, v);
  return {std::move(v), std::move(d)};
}

}  // namespace detail

/// Full symmetric eigendecomposition in double precision. Jacobi sweeps for
/// n <= 128, Householder tridiagonalization + implicit QL above.
inline EigenDecomposition sym_eig(const SymmetricMatrix& x) {
  if (x.n() <= detail::kJacobiMaxDim) return detail::jacobi_eig(x.matrix());
  return detail::householder_ql_eig(x.matrix());
}

/// Exact projection onto the PSD cone: Q diag(max(lambda, 0)) Q^T.
inline SymmetricMatrix eig_project(const SymmetricMatrix& x) {
  EigenDecomposition ed = sym_eig(x);
  for (double& l : ed.lambdas) l = std::max(l, 0.0);
  return symmetrize(ed.reconstruct());
}

inline double spectral_norm(const SymmetricMatrix& x) {
  const auto ed = sym_eig(x);
  return std::max(std::fabs(ed.lambdas.front()), std::fabs(ed.lambdas.back()));
}

inline double lambda_min(const SymmetricMatrix& x) { return sym_eig(x).lambdas.back(); }

/// ||candidate - P(x)||_F / ||P(x)||_F with P the exact PSD projection; the
/// absolute error ||candidate||_F when P(x) = 0.
inline double rel_error(const SymmetricMatrix& candidate, const SymmetricMatrix& x) {
  if (candidate.n() != x.n()) throw std::invalid_argument("rel_error: dimension mismatch");
  const SymmetricMatrix ref = eig_project(x);
  const double denom = frobenius_norm(ref);
  const double num = frobenius_norm(candidate.matrix() - ref.matrix());
  if (denom == 0.0) return frobenius_norm(candidate);
  return num / denom;
}

/// Same metric against a precomputed projection.
inline double rel_error_against(const SymmetricMatrix& candidate, const SymmetricMatrix& ref) {
  if (candidate.n() != ref.n()) throw std::invalid_argument("rel_error: dimension mismatch");
  const double denom = frobenius_norm(ref);
  if (denom == 0.0) return frobenius_norm(candidate);
  return frobenius_norm(candidate.matrix() - ref.matrix()) / denom;
}

}  // namespace psdpoly
