#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "psdpoly/eigen.hpp"
#include "psdpoly/polynomial.hpp"

// Minimax design of odd polynomials approximating sign(x) = 1 on a positive
// interval, and the greedy composition of such stages.
//
// The exchange runs in a local coordinate x = center + half_width * s,
// s in [-1, 1]. The unknowns are the low-order Taylor coefficients of the
// residual p(x) - 1 around the center; the remaining Taylor coefficients are
// linear in them because p is odd. This keeps the alternation system well
// conditioned for arbitrarily narrow intervals (late stages of a composite
// design sit on intervals of width ~1e-15 around 1) and lets the residual be
// evaluated without cancellation.

namespace psdpoly {

class RemezError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using ldouble = long double;

namespace detail {

inline ldouble binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0L;
  ldouble r = 1.0L;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// Dense solve with partial pivoting. Throws RemezError on a (numerically)
/// singular matrix.
inline std::vector<ldouble> solve_dense(std::vector<ldouble> a, std::vector<ldouble> b,
                                        std::size_t n, const char* what) {
  ldouble scale = 0.0L;
  for (ldouble v : a) scale = std::max(scale, std::fabs(v));
  if (scale == 0.0L) throw RemezError(std::string(what) + ": zero matrix");
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(a[r * n + col]) > std::fabs(a[piv * n + col])) piv = r;
    if (std::fabs(a[piv * n + col]) <= 1e-17L * scale)
      throw RemezError(std::string(what) + ": singular system (degenerate points)");
    if (piv != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a[col * n + c], a[piv * n + c]);
      std::swap(b[col], b[piv]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const ldouble f = a[r * n + col] / a[col * n + col];
      if (f == 0.0L) continue;
      for (std::size_t c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
      b[r] -= f * b[col];
    }
  }
  std::vector<ldouble> x(n);
  for (std::size_t i = n; i-- > 0;) {
    ldouble s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= a[i * n + c] * x[c];
    x[i] = s / a[i * n + i];
  }
  return x;
}

/// Local Taylor data of the odd space around `center`: the k x k block
/// mapping coefficients to Taylor coefficients of order < k, and
/// W(i - k, l) expressing order-i Taylor coefficients (i >= k) through the
/// low orders, both in unscaled form.
struct LocalBasis {
  int k = 0;
  ldouble center = 0.0L;
  std::vector<ldouble> top;     // k x k, row i = Taylor order, col j = coefficient of x^(2j+1)
  std::vector<ldouble> high;    // k x k, row i - k
  std::vector<ldouble> w;       // k x k: high * top^{-1}

  LocalBasis(int k_, ldouble center_) : k(k_), center(center_) {
    const std::size_t kk = static_cast<std::size_t>(k);
    top.assign(kk * kk, 0.0L);
    high.assign(kk * kk, 0.0L);
    for (int i = 0; i < 2 * k; ++i)
      for (int j = 0; j < k; ++j) {
        const int p = 2 * j + 1;
        const ldouble v = binomial(p, i) * (i <= p ? std::pow(center, static_cast<ldouble>(p - i)) : 0.0L);
        if (i < k)
          top[i * kk + j] = v;
        else
          high[(i - k) * kk + j] = v;
      }
    // w = high * top^{-1}; solve top^T w_row^T = high_row^T row by row.
    std::vector<ldouble> top_t(kk * kk);
    for (std::size_t i = 0; i < kk; ++i)
      for (std::size_t j = 0; j < kk; ++j) top_t[j * kk + i] = top[i * kk + j];
    w.assign(kk * kk, 0.0L);
    for (std::size_t r = 0; r < kk; ++r) {
      std::vector<ldouble> rhs(high.begin() + r * kk, high.begin() + (r + 1) * kk);
      auto row = solve_dense(top_t, rhs, kk, "local basis");
      std::copy(row.begin(), row.end(), w.begin() + r * kk);
    }
  }

  /// Monomial coefficients from the low-order Taylor coefficients D_0..D_{k-1}.
  std::vector<ldouble> to_monomial(std::span<const ldouble> taylor_low) const {
    return solve_dense(top, {taylor_low.begin(), taylor_low.end()}, static_cast<std::size_t>(k),
                       "local basis");
  }
};

}  // namespace detail

/// Residual r(s) = p(center + half_width * s) - 1 as a polynomial in s.
struct LocalResidual {
  ldouble center = 0.0L;
  ldouble half_width = 0.0L;
  std::vector<ldouble> coeffs;  // power basis in s, degree d

  ldouble operator()(ldouble s) const {
    ldouble acc = 0.0L;
    for (std::size_t i = coeffs.size(); i-- > 0;) acc = acc * s + coeffs[i];
    return acc;
  }

  ldouble derivative(ldouble s) const {
    ldouble acc = 0.0L;
    for (std::size_t i = coeffs.size(); i-- > 1;) acc = acc * s + static_cast<ldouble>(i) * coeffs[i];
    return acc;
  }

  double to_x(ldouble s) const { return static_cast<double>(center + half_width * s); }

  /// Expands a monomial odd polynomial around the interval center.
  static LocalResidual from_polynomial(const OddPolynomial& p, const Interval& iv) {
    LocalResidual r;
    r.center = (static_cast<ldouble>(iv.lo) + iv.hi) / 2;
    r.half_width = (static_cast<ldouble>(iv.hi) - iv.lo) / 2;
    const int d = p.degree();
    r.coeffs.assign(static_cast<std::size_t>(d + 1), 0.0L);
    for (int i = 0; i <= d; ++i) {
      ldouble di = 0.0L;
      for (std::size_t j = 0; j < p.size(); ++j) {
        const int pw = 2 * static_cast<int>(j) + 1;
        if (i > pw) continue;
        di += static_cast<ldouble>(p[j]) * detail::binomial(pw, i) *
              std::pow(r.center, static_cast<ldouble>(pw - i));
      }
      r.coeffs[i] = di * std::pow(r.half_width, static_cast<ldouble>(i));
    }
    r.coeffs[0] -= 1.0L;
    return r;
  }
};

struct RemezResult {
  OddPolynomial poly;
  std::vector<double> extremal_points;   // ascending, in [lo, hi]
  std::vector<ldouble> extremal_offsets; // same points in local coordinate s
  double levelled_error = 0.0;
  int iterations = 0;
  LocalResidual residual;

  /// The same alternation data paired with a different polynomial; the
  /// residual is re-expanded from the monomial coefficients.
  RemezResult with_polynomial(OddPolynomial p, const Interval& iv) const {
    RemezResult r = *this;
    r.poly = std::move(p);
    r.residual = LocalResidual::from_polynomial(r.poly, iv);
    return r;
  }
};

struct RemezOptions {
  double tol = 1e-13;  // relative extremal-point movement
  int max_iter = 100;
};

struct EquioscillationReport {
  bool pass = false;
  bool alternates = false;
  double levelled_error = 0.0;
  double max_abs_residual = 0.0;   // over grid and extremal points
  double worst_grid_excess = 0.0;  // (max |r| - E) / E, clamped at 0
  double worst_level_deviation = 0.0;  // max_i | |r(x_i)| - E | / E
  std::size_t extremal_count = 0;
};

/// Re-verifies equioscillation of a Remez result on a dense grid.
inline EquioscillationReport equioscillation_check(const RemezResult& result,
                                                   const Interval& interval,
                                                   std::size_t grid_points = 10000,
                                                   double rel_tol = 1e-8) {
  EquioscillationReport rep;
  const ldouble E = result.levelled_error;
  rep.levelled_error = result.levelled_error;
  rep.extremal_count = result.extremal_offsets.size();
  const auto& r = result.residual;
  const ldouble c = (static_cast<ldouble>(interval.lo) + interval.hi) / 2;
  const ldouble h = (static_cast<ldouble>(interval.hi) - interval.lo) / 2;
  if (std::fabs(c - r.center) > 1e-15L * std::fabs(c) || std::fabs(h - r.half_width) > 1e-15L * std::fabs(c)) {
    rep.pass = false;
    return rep;
  }

  ldouble max_abs = 0.0L;
  for (std::size_t i = 0; i < grid_points; ++i) {
    const ldouble s = -1.0L + 2.0L * static_cast<ldouble>(i) / static_cast<ldouble>(grid_points - 1);
    max_abs = std::max(max_abs, std::fabs(r(s)));
  }
  rep.alternates = true;
  ldouble level_dev = 0.0L;
  for (std::size_t i = 0; i < result.extremal_offsets.size(); ++i) {
    const ldouble v = r(result.extremal_offsets[i]);
    max_abs = std::max(max_abs, std::fabs(v));
    if (E > 0) level_dev = std::max(level_dev, std::fabs(std::fabs(v) - E) / E);
    if (i > 0) {
      const ldouble prev = r(result.extremal_offsets[i - 1]);
      if (!((prev < 0 && v > 0) || (prev > 0 && v < 0))) rep.alternates = false;
    }
  }
  rep.max_abs_residual = static_cast<double>(max_abs);
  if (E > 0) {
    rep.worst_grid_excess = static_cast<double>(std::max(0.0L, (max_abs - E) / E));
    rep.worst_level_deviation = static_cast<double>(level_dev);
  } else {
    rep.worst_grid_excess = max_abs > 0 ? INFINITY : 0.0;
    rep.worst_level_deviation = rep.worst_grid_excess;
  }
  rep.pass = rep.alternates && rep.worst_grid_excess <= rel_tol &&
             rep.worst_level_deviation <= rel_tol;
  return rep;
}

namespace detail {

// Maximizes sign * r(s) on [a, b]: 64-point scan, golden-section on the
// best bracket, then bisection on r' for full precision.
inline ldouble locate_extremum(const LocalResidual& r, ldouble a, ldouble b, ldouble sign) {
  constexpr int kScan = 64;
  auto f = [&](ldouble s) { return sign * r(s); };
  std::array<ldouble, kScan> g{};
  int best = 0;
  for (int j = 0; j < kScan; ++j) {
    g[j] = a + (b - a) * static_cast<ldouble>(j) / (kScan - 1);
    if (f(g[j]) > f(g[best])) best = j;
  }
  const ldouble bracket_lo = g[std::max(best - 1, 0)];
  const ldouble bracket_hi = g[std::min(best + 1, kScan - 1)];
  ldouble lo = bracket_lo, hi = bracket_hi;

  const ldouble phi = (std::sqrt(5.0L) - 1.0L) / 2.0L;
  ldouble c1 = hi - phi * (hi - lo), c2 = lo + phi * (hi - lo);
  ldouble f1 = f(c1), f2 = f(c2);
  for (int it = 0; it < 200 && hi - lo > 0; ++it) {
    if (f1 > f2) {
      hi = c2;
      c2 = c1;
      f2 = f1;
      c1 = hi - phi * (hi - lo);
      f1 = f(c1);
    } else {
      lo = c1;
      c1 = c2;
      f1 = f2;
      c2 = lo + phi * (hi - lo);
      f2 = f(c2);
    }
    if (hi - lo <= 1e-9L * (b - a)) break;
  }
  ldouble cand = f1 > f2 ? c1 : c2;

  // Golden section stalls near sqrt(eps); polish by bisection on r' over the
  // scan bracket when it straddles a stationary point.
  ldouble plo = bracket_lo, phi_ = bracket_hi;
  auto df = [&](ldouble s) { return sign * r.derivative(s); };
  if (df(plo) > 0 && df(phi_) < 0) {
    for (int it = 0; it < 256; ++it) {
      const ldouble mid = (plo + phi_) / 2;
      if (mid <= plo || mid >= phi_) break;
      if (df(mid) > 0)
        plo = mid;
      else
        phi_ = mid;
    }
    // Near the peak f is flat below rounding, so comparing values would be noise.
    cand = (plo + phi_) / 2;
  }
  for (ldouble end : {a, b})
    if (f(end) > f(cand)) cand = end;
  return cand;
}

inline ldouble bisect_root(const LocalResidual& r, ldouble a, ldouble b) {
  ldouble fa = r(a);
  const ldouble fb = r(b);
  if (fa == 0) return a;
  if (fb == 0) return b;
  if ((fa < 0) == (fb < 0)) throw RemezError("remez: no sign change between extremal points");
  for (int it = 0; it < 256; ++it) {
    const ldouble mid = (a + b) / 2;
    if (mid <= a || mid >= b) break;
    const ldouble fm = r(mid);
    if (fm == 0) return mid;
    if ((fm < 0) == (fa < 0)) {
      a = mid;
      fa = fm;
    } else {
      b = mid;
    }
  }
  return (a + b) / 2;
}

}  // namespace detail

/// Minimax odd polynomial of the given degree approximating the constant 1
/// on `interval` (equivalently sign(x) on the symmetric pair of intervals).
inline RemezResult remez(const Interval& interval, int degree, const RemezOptions& opts = {}) {
  if (!(interval.lo > 0.0) || !std::isfinite(interval.hi) || interval.hi < interval.lo)
    throw RemezError("remez: interval must satisfy 0 < lo <= hi");
  if (interval.hi == interval.lo)
    throw RemezError("remez: degenerate interval (lo == hi) gives a singular alternation system");
  if (degree < 1 || degree % 2 == 0 || degree > kMaxDesignDegree)
    throw RemezError("remez: degree must be odd and in [1, " + std::to_string(kMaxDesignDegree) + "]");

  const int k = (degree + 1) / 2;
  const std::size_t kk = static_cast<std::size_t>(k);
  const std::size_t npts = kk + 1;
  const ldouble center = (static_cast<ldouble>(interval.lo) + interval.hi) / 2;
  const ldouble h = (static_cast<ldouble>(interval.hi) - interval.lo) / 2;
  const detail::LocalBasis basis(k, center);

  // Scaled W: P_i = sum_l h^(i-l) w(i-k, l) P_l for i >= k.
  std::vector<ldouble> ws(kk * kk);
  for (std::size_t i = 0; i < kk; ++i)
    for (std::size_t l = 0; l < kk; ++l)
      ws[i * kk + l] = std::pow(h, static_cast<ldouble>(i + kk - l)) * basis.w[i * kk + l];

  auto psi = [&](std::size_t l, ldouble s) {
    ldouble v = std::pow(s, static_cast<ldouble>(l));
    for (std::size_t i = 0; i < kk; ++i) v += ws[i * kk + l] * std::pow(s, static_cast<ldouble>(i + kk));
    return v;
  };
  auto anchor = [&](ldouble s) {  // residual contribution of P_0 = 1
    ldouble v = 0.0L;
    for (std::size_t i = 0; i < kk; ++i) v += ws[i * kk] * std::pow(s, static_cast<ldouble>(i + kk));
    return v;
  };

  std::vector<ldouble> s(npts);
  for (std::size_t i = 0; i < npts; ++i)
    s[i] = -std::cos((2.0L * i + 1.0L) * std::numbers::pi_v<ldouble> / (2.0L * npts));

  LocalResidual res;
  res.center = center;
  res.half_width = h;
  std::vector<ldouble> u;
  ldouble E = 0.0L;

  auto solve_at = [&](const std::vector<ldouble>& pts) {
    std::vector<ldouble> a(npts * npts), b(npts);
    for (std::size_t i = 0; i < npts; ++i) {
      for (std::size_t l = 0; l < kk; ++l) a[i * npts + l] = psi(l, pts[i]);
      a[i * npts + kk] = (i % 2 == 0) ? -1.0L : 1.0L;
      b[i] = -anchor(pts[i]);
    }
    auto sol = detail::solve_dense(std::move(a), std::move(b), npts, "remez alternation");
    u.assign(sol.begin(), sol.begin() + static_cast<std::ptrdiff_t>(kk));
    E = sol[kk];
    res.coeffs.assign(2 * kk, 0.0L);
    for (std::size_t l = 0; l < kk; ++l) res.coeffs[l] = u[l];
    for (std::size_t i = 0; i < kk; ++i) {
      ldouble v = ws[i * kk];
      for (std::size_t l = 0; l < kk; ++l) v += ws[i * kk + l] * u[l];
      res.coeffs[i + kk] = v;
    }
    if (E == 0.0L) throw RemezError("remez: zero levelled error (degenerate points)");
  };

  auto exchange = [&]() {
    std::vector<ldouble> z(npts + 1);
    z.front() = -1.0L;
    z.back() = 1.0L;
    for (std::size_t i = 1; i < npts; ++i) z[i] = detail::bisect_root(res, s[i - 1], s[i]);
    std::vector<ldouble> next(npts);
    for (std::size_t i = 0; i < npts; ++i) {
      const ldouble sign = res(s[i]) >= 0 ? 1.0L : -1.0L;
      next[i] = detail::locate_extremum(res, z[i], z[i + 1], sign);
    }
    return next;
  };

  RemezResult out;
  bool converged = false;
  ldouble movement = 0.0L;
  int it = 0;
  for (it = 1; it <= opts.max_iter; ++it) {
    solve_at(s);
    auto next = exchange();
    movement = 0.0L;
    for (std::size_t i = 0; i < npts; ++i) movement = std::max(movement, std::fabs(next[i] - s[i]));
    s = std::move(next);
    // Movement in x is h * movement; the threshold is tol * (hi - lo) = tol * 2h.
    if (movement < 2.0L * opts.tol) {
      converged = true;
      break;
    }
  }
  solve_at(s);

  std::vector<ldouble> taylor_low(kk);
  taylor_low[0] = 1.0L + u[0];
  for (std::size_t l = 1; l < kk; ++l) taylor_low[l] = u[l] / std::pow(h, static_cast<ldouble>(l));
  const auto mono = basis.to_monomial(taylor_low);
  std::vector<double> coeffs(kk);
  for (std::size_t j = 0; j < kk; ++j) coeffs[j] = static_cast<double>(mono[j]);

  out.poly = OddPolynomial(std::move(coeffs));
  out.extremal_offsets = s;
  out.extremal_points.resize(npts);
  for (std::size_t i = 0; i < npts; ++i)
    out.extremal_points[i] = std::clamp(res.to_x(s[i]), interval.lo, interval.hi);
  out.levelled_error = static_cast<double>(std::fabs(E));
  out.iterations = std::min(it, opts.max_iter);
  out.residual = res;

  if (!converged) {
    const auto rep = equioscillation_check(out, interval);
    if (!rep.pass) {
      std::ostringstream msg;
      msg << "remez: no convergence after " << opts.max_iter << " iterations on [" << interval.lo
          << ", " << interval.hi << "], degree " << degree << "; last movement "
          << static_cast<double>(movement) << ", E = " << out.levelled_error
          << ", level deviation " << rep.worst_level_deviation;
      throw ConvergenceError(msg.str());
    }
  }
  return out;
}

/// [min, max] of an odd polynomial over a closed interval: endpoints plus
/// interior critical points. Critical points come from p'(x) as a polynomial
/// in u = x^2, solved in closed form up to degree 5 and by bisection on
/// derivative sign changes above.
inline Interval interval_image(const OddPolynomial& p, const Interval& iv) {
  if (!(iv.lo <= iv.hi) || !std::isfinite(iv.lo) || !std::isfinite(iv.hi))
    throw std::invalid_argument("interval_image: invalid interval");
  std::vector<ldouble> cand{iv.lo, iv.hi};
  const ldouble lo = iv.lo, hi = iv.hi;
  auto add_u = [&](ldouble u) {
    if (!(u > 0) || !std::isfinite(u)) return;
    const ldouble x = std::sqrt(u);
    if (x > lo && x < hi) cand.push_back(x);
  };
  const int d = p.degree();
  if (d == 3) {
    const ldouble c1 = p[0], c3 = p[1];
    if (c3 != 0) add_u(-c1 / (3 * c3));
  } else if (d == 5) {
    // 5 c5 u^2 + 3 c3 u + c1 = 0
    const ldouble a = 5.0L * p[2], b = 3.0L * p[1], c = p[0];
    if (a == 0) {
      if (b != 0) add_u(-c / b);
    } else {
      const ldouble disc = b * b - 4 * a * c;
      if (disc >= 0) {
        const ldouble q = -0.5L * (b + std::copysign(std::sqrt(disc), b));
        if (q != 0) {
          add_u(q / a);
          add_u(c / q);
        } else {
          add_u(0);
        }
      }
    }
  } else if (d > 5) {
    constexpr int kScan = 4096;
    auto dp = [&](ldouble x) { return p.derivative(x); };
    ldouble xa = lo, da = dp(xa);
    for (int j = 1; j <= kScan && hi > lo; ++j) {
      const ldouble xb = lo + (hi - lo) * j / kScan;
      const ldouble db = dp(xb);
      if ((da < 0) != (db < 0)) {
        ldouble a = xa, b = xb, fa = da;
        for (int it = 0; it < 200; ++it) {
          const ldouble m = (a + b) / 2;
          if (m <= a || m >= b) break;
          const ldouble fm = dp(m);
          if ((fm < 0) == (fa < 0)) {
            a = m;
            fa = fm;
          } else {
            b = m;
          }
        }
        cand.push_back((a + b) / 2);
      }
      xa = xb;
      da = db;
    }
  }
  ldouble mn = INFINITY, mx = -INFINITY;
  for (ldouble x : cand) {
    const ldouble v = p(x);
    mn = std::min(mn, v);
    mx = std::max(mx, v);
  }
  return {static_cast<double>(mn), static_cast<double>(mx)};
}

/// Odd polynomial with p(a) = 1 and p^(k)(a) = 0 for k = 1 .. (d - 1) / 2:
/// the limit of the minimax fit as [lo, hi] shrinks to the point a.
inline OddPolynomial contact_polynomial(int degree, double a) {
  if (degree < 1 || degree % 2 == 0 || !(a > 0.0))
    throw RemezError("contact_polynomial: need odd degree and a > 0");
  const std::size_t k = static_cast<std::size_t>((degree + 1) / 2);
  std::vector<ldouble> m(k * k, 0.0L), rhs(k, 0.0L);
  rhs[0] = 1.0L;
  for (std::size_t row = 0; row < k; ++row)
    for (std::size_t j = 0; j < k; ++j) {
      const int pw = 2 * static_cast<int>(j) + 1;
      if (static_cast<int>(row) > pw) continue;
      ldouble f = 1.0L;  // falling factorial pw (pw-1) ... (pw-row+1)
      for (std::size_t i = 0; i < row; ++i) f *= static_cast<ldouble>(pw - static_cast<int>(i));
      m[row * k + j] = f * std::pow(static_cast<ldouble>(a), static_cast<ldouble>(pw - static_cast<int>(row)));
    }
  const auto c = detail::solve_dense(std::move(m), std::move(rhs), k, "contact_polynomial");
  return OddPolynomial(std::vector<double>(c.begin(), c.end()));
}

struct SequentialDesign {
  CompositeFilter filter;
  std::vector<RemezResult> stage_results;
  Interval final_image;     // [a_{T+1}, b_{T+1}]
  double sign_error = 0.0;  // 1 - a_{T+1}
};

/// Greedy stage-by-stage minimax design on [epsilon, 1]. `degrees` holds one
/// entry per stage, or a single entry used for all stages.
inline SequentialDesign sequential_remez(int T, std::span<const int> degrees, double epsilon,
                                         const RemezOptions& opts = {}) {
  if (T < 1) throw std::invalid_argument("sequential_remez: T must be >= 1");
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::invalid_argument("sequential_remez: epsilon must lie in (0, 1)");
  if (degrees.size() != 1 && degrees.size() != static_cast<std::size_t>(T))
    throw std::invalid_argument("sequential_remez: need 1 or T degrees");

  SequentialDesign out;
  out.filter.epsilon = epsilon;
  out.filter.provenance = Provenance::MinimaxStage1;
  Interval iv{epsilon, 1.0};
  for (int t = 0; t < T; ++t) {
    const int d = degrees.size() == 1 ? degrees[0] : degrees[t];
    RemezResult r;
    try {
      if (iv.lo == iv.hi) {
        // Image collapsed to a single double; the minimax problem is
        // degenerate, so take its shrinking-interval limit.
        r.poly = contact_polynomial(d, iv.lo);
        r.extremal_points = {iv.lo};
        r.levelled_error = std::fabs(r.poly(iv.lo) - 1.0);
      } else {
        r = remez(iv, d, opts);
      }
    } catch (const std::exception& e) {
      throw RemezError("stage " + std::to_string(t + 1) + ": " + e.what());
    }
    out.filter.design_intervals.push_back(iv);
    const Interval next = interval_image(r.poly, iv);
    out.filter.stages.push_back(r.poly);
    out.stage_results.push_back(std::move(r));
    if (!(next.lo > 0.0))
      throw RemezError("stage " + std::to_string(t + 1) + ": interval image is not positive");
    iv = next;
  }
  out.final_image = iv;
  out.sign_error = 1.0 - iv.lo;
  return out;
}

inline SequentialDesign sequential_remez(int T, int degree, double epsilon,
                                         const RemezOptions& opts = {}) {
  const int d[1] = {degree};
  return sequential_remez(T, std::span<const int>(d, 1), epsilon, opts);
}

}  // namespace psdpoly
