#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "psdpoly/eigen.hpp"
#include "psdpoly/matrix.hpp"

namespace psdpoly {

struct RitzPair {
  double sigma = 0.0;     // largest Ritz value of X^2
  std::vector<double> q;  // unit Ritz vector
  int steps = 0;          // Lanczos steps actually taken
  bool breakdown = false; // Krylov space exhausted before `steps`
};

struct NormBound {
  double lambda_tilde = 0.0;
  double sigma = 0.0;
  double residual = 0.0;  // ||X^2 q - sigma q||_2
  int lanczos_steps = 0;
  bool breakdown = false;
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline std::vector<double> apply_x2(const Matrix& x, std::span<const double> v) {
  const auto xv = matvec(x, v);
  return matvec(x, xv);
}

inline std::vector<double> seeded_unit_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::vector<double> v(n);
  double nrm = 0.0;
  while (nrm == 0.0) {
    for (double& e : v) e = nd(rng);
    nrm = norm2(v);
  }
  for (double& e : v) e /= nrm;
  return v;
}

}  // namespace detail

/// Lanczos run on the operator v -> X (X v) with full reorthogonalization.
struct LanczosRun {
  RitzPair ritz;
  std::vector<std::vector<double>> basis;  // orthonormal Lanczos vectors
};

inline LanczosRun lanczos_x2_run(const SymmetricMatrix& x, int steps, std::uint64_t seed) {
  if (steps < 1) throw std::invalid_argument("lanczos_x2: steps must be >= 1");
  const std::size_t n = x.n();
  const Matrix& a = x.matrix();
  const double fro = frobenius_norm(a);
  // The operator is X^2, whose Frobenius scale is ||X||_F^2.
  const double tiny = 1e-14 * fro * fro;

  LanczosRun run;
  auto& V = run.basis;
  std::vector<double> alpha, beta;
  V.push_back(detail::seeded_unit_vector(n, seed));
  const int m_max = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(steps), n));
  for (int j = 0; j < m_max; ++j) {
    auto w = detail::apply_x2(a, V[j]);
    alpha.push_back(detail::dot(w, V[j]));
    // Two passes of classical Gram-Schmidt against the whole basis.
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& v : V) {
        const double c = detail::dot(w, v);
        for (std::size_t i = 0; i < n; ++i) w[i] -= c * v[i];
      }
    const double b = detail::norm2(w);
    if (j + 1 == m_max) break;
    if (b <= tiny) {
      run.ritz.breakdown = true;
      break;
    }
    beta.push_back(b);
    for (double& e : w) e /= b;
    V.push_back(std::move(w));
  }
  if (m_max < steps && !run.ritz.breakdown) run.ritz.breakdown = true;

  const std::size_t m = alpha.size();
  V.resize(m);
  Matrix t(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    t(i, i) = alpha[i];
    if (i + 1 < m) t(i, i + 1) = t(i + 1, i) = beta[i];
  }
  const auto ed = sym_eig(SymmetricMatrix(std::move(t)));
  std::vector<double> q(n, 0.0);
  for (std::size_t k = 0; k < m; ++k) {
    const double s = ed.q(k, 0);
    for (std::size_t i = 0; i < n; ++i) q[i] += s * V[k][i];
  }
  const double qn = detail::norm2(q);
  for (double& e : q) e /= qn;
  run.ritz.sigma = std::max(ed.lambdas.front(), 0.0);
  run.ritz.q = std::move(q);
  run.ritz.steps = static_cast<int>(m);
  return run;
}

/// Largest Ritz pair of X^2 from a seeded Lanczos run (X^2 is never formed).
inline RitzPair lanczos_x2(const SymmetricMatrix& x, int steps, std::uint64_t seed) {
  return lanczos_x2_run(x, steps, seed).ritz;
}

/// lambda~ = sqrt(sigma + ||X^2 q - sigma q||_2). This is an upper bound on
/// ||X||_2 when sigma is the Ritz value nearest lambda_max(X^2), which the
/// largest Ritz value is in practice but not provably.
inline NormBound spectral_norm_upper_bound(const SymmetricMatrix& x, int steps = 20,
                                           std::uint64_t seed = 0) {
  const auto r = lanczos_x2(x, steps, seed);
  auto w = detail::apply_x2(x.matrix(), r.q);
  for (std::size_t i = 0; i < w.size(); ++i) w[i] -= r.sigma * r.q[i];
  NormBound nb;
  nb.sigma = r.sigma;
  nb.residual = detail::norm2(w);
  nb.lambda_tilde = std::sqrt(nb.sigma + nb.residual);
  nb.lanczos_steps = r.steps;
  nb.breakdown = r.breakdown;
  return nb;
}

}  // namespace psdpoly
