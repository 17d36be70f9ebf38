#pragma once

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "psdpoly/polynomial.hpp"

namespace psdpoly {

// ---------------------------------------------------------------------------
// Sample grids

enum class GridScheme { Uniform, Chebyshev, Mixed };

inline std::string_view to_string(GridScheme s) {
  switch (s) {
    case GridScheme::Uniform: return "Uniform";
    case GridScheme::Chebyshev: return "Chebyshev";
    case GridScheme::Mixed: return "Mixed";
  }
  return "Mixed";
}

inline GridScheme parse_grid_scheme(std::string_view s) {
  if (s == "Uniform" || s == "uniform") return GridScheme::Uniform;
  if (s == "Chebyshev" || s == "chebyshev") return GridScheme::Chebyshev;
  if (s == "Mixed" || s == "mixed") return GridScheme::Mixed;
  throw std::invalid_argument("unknown grid scheme '" + std::string(s) + "'");
}

/// Sorted sample abscissae in [-1, 1], always containing -1, 0 and 1.
struct SampleGrid {
  std::vector<double> points;
  GridScheme scheme = GridScheme::Mixed;

  std::size_t size() const { return points.size(); }

  /// Uniform: n equispaced points. Chebyshev: n first-kind nodes. Mixed: a
  /// quarter uniform, a quarter Chebyshev, and half geometric in |x| over
  /// [1e-7, 1] split between the signs (the ReLU error of a composite filter
  /// peaks at |x| ~ epsilon / 10, far inside the first uniform cell).
  static SampleGrid make(GridScheme scheme, std::size_t n) {
    if (n < 2) throw std::invalid_argument("SampleGrid: need at least 2 points");
    SampleGrid g;
    g.scheme = scheme;
    auto& p = g.points;
    auto uniform = [&](std::size_t m) {
      for (std::size_t i = 0; i < m; ++i) p.push_back(m == 1 ? 0.0 : -1.0 + 2.0 * i / (m - 1));
    };
    auto chebyshev = [&](std::size_t m) {
      for (std::size_t i = 0; i < m; ++i)
        p.push_back(std::cos(std::numbers::pi * (i + 0.5) / static_cast<double>(m)));
    };
    switch (scheme) {
      case GridScheme::Uniform: uniform(n); break;
      case GridScheme::Chebyshev: chebyshev(n); break;
      case GridScheme::Mixed: {
        const std::size_t q = std::max<std::size_t>(n / 4, 2);
        uniform(q);
        chebyshev(q);
        const std::size_t geo = std::max<std::size_t>((n - 2 * q) / 2, 2);
        const double l0 = std::log(1e-7);
        for (std::size_t i = 0; i < geo; ++i) {
          const double v = std::exp(l0 - l0 * i / (geo - 1));
          p.push_back(v);
          p.push_back(-v);
        }
        break;
      }
    }
    p.push_back(-1.0);
    p.push_back(0.0);
    p.push_back(1.0);
    for (double& v : p) v = std::clamp(v, -1.0, 1.0);
    std::sort(p.begin(), p.end());
    p.erase(std::unique(p.begin(), p.end()), p.end());
    return g;
  }

  static SampleGrid from_points(std::vector<double> pts) {
    SampleGrid g;
    g.points = std::move(pts);
    for (double v : g.points)
      if (!(v >= -1.0 && v <= 1.0)) throw std::invalid_argument("SampleGrid: point outside [-1, 1]");
    std::sort(g.points.begin(), g.points.end());
    g.points.erase(std::unique(g.points.begin(), g.points.end()), g.points.end());
    return g;
  }
};

// ---------------------------------------------------------------------------
// Scalar evaluation, loss and gradient

/// 0.5 x (1 + chain(x)), or only chain(x) when `chain_only`.
inline double composite_eval_scalar(const CompositeFilter& f, double x, bool chain_only = false) {
  const double y = f.chain(x);
  return chain_only ? y : 0.5 * x * (1.0 + y);
}

/// Signed ReLU error 0.5 x (1 + chain(x)) - max(x, 0).
inline double relu_error(const CompositeFilter& f, double x) {
  return composite_eval_scalar(f, x) - std::max(x, 0.0);
}

struct LossValue {
  double loss = 0.0;
  double argmax = 0.0;
};

namespace detail {
// Deterministic maximizer order: larger error, then smaller |x|, then positive x.
inline bool better_peak(double e, double x, double best_e, double best_x) {
  if (e != best_e) return e > best_e;
  if (std::fabs(x) != std::fabs(best_x)) return std::fabs(x) < std::fabs(best_x);
  return x > best_x;
}
}  // namespace detail

inline LossValue relu_loss(const CompositeFilter& f, const SampleGrid& grid) {
  LossValue out{-1.0, 0.0};
  for (double x : grid.points) {
    const double e = std::fabs(relu_error(f, x));
    if (std::isnan(e)) return {NAN, x};
    if (detail::better_peak(e, x, out.loss, out.argmax)) out = {e, x};
  }
  return out;
}

/// Partial derivatives of the signed ReLU error at x with respect to the
/// flattened coefficients (stage-major, x^1 coefficient first).
inline std::vector<double> loss_gradient(const CompositeFilter& f, double x) {
  const std::size_t T = f.stages.size();
  std::vector<double> inputs(T), slopes(T);
  double y = x;
  for (std::size_t t = 0; t < T; ++t) {
    inputs[t] = y;
    slopes[t] = f.stages[t].derivative(y);
    y = f.stages[t](y);
  }
  std::vector<double> grad(f.parameter_count(), 0.0);
  std::vector<std::size_t> offset(T);
  for (std::size_t t = 0, o = 0; t < T; o += f.stages[t].size(), ++t) offset[t] = o;
  double g = 0.5 * x;  // d error / d y_T
  for (std::size_t t = T; t-- > 0;) {
    const double yin = inputs[t], y2 = yin * yin;
    double pw = yin;
    for (std::size_t j = 0; j < f.stages[t].size(); ++j, pw *= y2) grad[offset[t] + j] = g * pw;
    g *= slopes[t];
  }
  return grad;
}

// ---------------------------------------------------------------------------
// Stage II refinement

enum class Smoothing { PNorm, HardMaxSubgradient };

struct RefineConfig {
  SampleGrid grid = SampleGrid::make(GridScheme::Mixed, 16384);
  int max_iters = 100000;
  double step_size = 1e-6;
  Smoothing smoothing = Smoothing::PNorm;
  std::vector<double> p_schedule{8, 16, 32, 64, 128, 256, 512};
  int hard_max_tail = 1000;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-12;

  void validate() const {
    if (max_iters < 0) throw std::invalid_argument("RefineConfig: max_iters must be >= 0");
    if (!(step_size > 0)) throw std::invalid_argument("RefineConfig: step_size must be > 0");
    if (grid.size() < 2) throw std::invalid_argument("RefineConfig: grid too small");
    if (smoothing == Smoothing::PNorm && p_schedule.empty())
      throw std::invalid_argument("RefineConfig: empty p schedule");
  }
};

struct RefineReport {
  double initial_loss = 0.0;
  double final_loss = 0.0;
  int best_iteration = 0;  // 0 = the input itself
  int iterations_run = 0;
  bool non_finite_stop = false;
};

namespace detail {

struct GridPass {
  double loss = 0.0;
  double argmax = 0.0;
  std::size_t argmax_index = 0;
  bool finite = true;
};

// Forward pass over the grid; accumulates the gradient of the p-norm
// surrogate (p > 0) or of the hard max (p == 0) into `grad`.
inline GridPass grid_pass(const CompositeFilter& f, const SampleGrid& grid, double p,
                          std::vector<double>& grad) {
  const auto& xs = grid.points;
  const std::size_t N = xs.size(), T = f.stages.size();
  thread_local std::vector<double> err, inputs;
  err.resize(N);
  inputs.resize(N * T);
  GridPass out{-1.0, 0.0, 0, true};
  for (std::size_t i = 0; i < N; ++i) {
    double y = xs[i];
    for (std::size_t t = 0; t < T; ++t) {
      inputs[i * T + t] = y;
      y = f.stages[t](y);
    }
    err[i] = 0.5 * xs[i] * (1.0 + y) - std::max(xs[i], 0.0);
    const double a = std::fabs(err[i]);
    if (!std::isfinite(a)) {
      out.finite = false;
      return out;
    }
    if (better_peak(a, xs[i], out.loss, out.argmax)) {
      out.loss = a;
      out.argmax = xs[i];
      out.argmax_index = i;
    }
  }
  std::fill(grad.begin(), grad.end(), 0.0);
  if (out.loss == 0.0) return out;

  auto backprop = [&](std::size_t i, double weight) {
    double g = weight * 0.5 * xs[i];
    std::size_t o = grad.size();
    for (std::size_t t = T; t-- > 0;) {
      const auto& st = f.stages[t];
      const double yin = inputs[i * T + t], y2 = yin * yin;
      o -= st.size();
      double pw = yin;
      for (std::size_t j = 0; j < st.size(); ++j, pw *= y2) grad[o + j] += g * pw;
      g *= st.derivative(yin);
    }
  };
  if (p == 0.0) {
    backprop(out.argmax_index, err[out.argmax_index] < 0 ? -1.0 : 1.0);
    return out;
  }
  // L = M (mean r^p)^(1/p), r = |e| / M; dL/de_i = (mean r^p)^(1/p - 1) r_i^(p-1) sign(e_i) / N.
  thread_local std::vector<double> rp1;
  rp1.resize(N);
  double mean_rp = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const double r = std::fabs(err[i]) / out.loss;
    rp1[i] = r > 0 ? std::exp((p - 1.0) * std::log(r)) : 0.0;
    mean_rp += rp1[i] * r;
  }
  mean_rp /= static_cast<double>(N);
  const double scale = std::pow(mean_rp, 1.0 / p - 1.0) / static_cast<double>(N);
  for (std::size_t i = 0; i < N; ++i) {
    if (rp1[i] < 1e-30) continue;
    backprop(i, scale * rp1[i] * (err[i] < 0 ? -1.0 : 1.0));
  }
  return out;
}

}  // namespace detail

/// Adam on the flattened coefficients. The p-norm phase walks the p schedule
/// evenly; the last `hard_max_tail` iterations use the hard-max subgradient.
/// The best iterate seen (by hard max on the grid, the input included) is
/// returned, so the output never has a larger grid loss than the input.
inline CompositeFilter refine(const CompositeFilter& input, const RefineConfig& cfg,
                              RefineReport* report = nullptr) {
  input.validate();
  cfg.validate();
  CompositeFilter cur = input;
  const std::size_t P = cur.parameter_count();
  std::vector<double> theta = cur.flat_coefficients(), m(P, 0.0), v(P, 0.0), grad(P, 0.0);

  RefineReport rep;
  std::vector<double> best = theta;
  double best_loss = relu_loss(input, cfg.grid).loss;
  rep.initial_loss = best_loss;

  const int warm = std::max(0, cfg.max_iters - cfg.hard_max_tail);
  const std::size_t np = cfg.p_schedule.size();
  double b1t = 1.0, b2t = 1.0;
  int it = 0;
  for (; it < cfg.max_iters; ++it) {
    double p = 0.0;
    if (cfg.smoothing == Smoothing::PNorm && it < warm)
      p = cfg.p_schedule[std::min(np - 1, static_cast<std::size_t>(it) * np / warm)];
    cur.set_flat_coefficients(theta);
    const auto pass = detail::grid_pass(cur, cfg.grid, p, grad);
    if (!pass.finite) {
      rep.non_finite_stop = true;
      break;
    }
    if (pass.loss < best_loss) {
      best_loss = pass.loss;
      best = theta;
      rep.best_iteration = it;
    }
    b1t *= cfg.beta1;
    b2t *= cfg.beta2;
    bool finite_grad = true;
    for (std::size_t k = 0; k < P; ++k) {
      if (!std::isfinite(grad[k])) finite_grad = false;
      m[k] = cfg.beta1 * m[k] + (1 - cfg.beta1) * grad[k];
      v[k] = cfg.beta2 * v[k] + (1 - cfg.beta2) * grad[k] * grad[k];
      theta[k] -= cfg.step_size * (m[k] / (1 - b1t)) / (std::sqrt(v[k] / (1 - b2t)) + cfg.adam_eps);
    }
    if (!finite_grad) {
      rep.non_finite_stop = true;
      break;
    }
  }
  if (!rep.non_finite_stop && it == cfg.max_iters && cfg.max_iters > 0) {
    cur.set_flat_coefficients(theta);
    const double l = relu_loss(cur, cfg.grid).loss;
    if (std::isfinite(l) && l < best_loss) {
      best_loss = l;
      best = theta;
      rep.best_iteration = it;
    }
  }
  rep.iterations_run = it;
  rep.final_loss = best_loss;

  CompositeFilter out = input;
  out.set_flat_coefficients(best);
  out.provenance = Provenance::Refined;
  if (report) *report = rep;
  return out;
}

// ---------------------------------------------------------------------------
// Error certification

enum class CertificateMode { FullFloat32Enumeration, Grid };

inline std::string_view to_string(CertificateMode m) {
  return m == CertificateMode::Grid ? "Grid" : "FullFloat32Enumeration";
}

struct ErrorCertificate {
  std::string filter_hash;
  CertificateMode mode = CertificateMode::FullFloat32Enumeration;
  std::uint64_t count = 0;  // points evaluated
  double e_value = 0.0;
  double argmax_x = 0.0;
  double e_positive = 0.0;  // max over x >= 0
  double argmax_positive = 0.0;
  double e_negative = 0.0;  // max over x < 0
  double argmax_negative = 0.0;
  double wall_seconds = 0.0;
};

/// Number of binary32 values in [-1, 1] (+0 and -0 counted once).
inline constexpr std::uint64_t kFloat32CountInUnit = 0x3F800000ull + 1 + 0x3F800000ull;

namespace detail {

struct PeakPair {
  double e_pos = -1.0, x_pos = 0.0, e_neg = -1.0, x_neg = 0.0;
  std::uint64_t count = 0;

  void add(double e, double x) {
    if (x >= 0) {
      if (better_peak(e, x, e_pos, x_pos)) e_pos = e, x_pos = x;
    } else if (better_peak(e, x, e_neg, x_neg)) {
      e_neg = e, x_neg = x;
    }
  }
  void merge(const PeakPair& o) {
    if (o.e_pos >= 0) add(o.e_pos, o.x_pos);
    if (o.e_neg >= 0) add(o.e_neg, o.x_neg);
    count += o.count;
  }
};

// Bit patterns [lo, hi) of non-negative floats, mirrored to negatives when
// `negative`.
inline void enumerate_range(const CompositeFilter& f, std::uint32_t lo, std::uint32_t hi,
                            bool negative, PeakPair& acc) {
  constexpr std::uint32_t kBlock = 4096;
  std::vector<double> xs(kBlock), ys(kBlock);
  for (std::uint32_t b0 = lo; b0 < hi; b0 += std::min(kBlock, hi - b0)) {
    const std::uint32_t nb = std::min(kBlock, hi - b0);
    for (std::uint32_t i = 0; i < nb; ++i) {
      const double v = static_cast<double>(std::bit_cast<float>(b0 + i));
      xs[i] = negative ? -v : v;
      ys[i] = xs[i];
    }
    for (const auto& st : f.stages) {
      const auto c = st.coeffs();
      const std::size_t k = c.size();
      for (std::uint32_t i = 0; i < nb; ++i) {
        const double y = ys[i], u = y * y;
        double a = c[k - 1];
        for (std::size_t j = k - 1; j-- > 0;) a = a * u + c[j];
        ys[i] = y * a;
      }
    }
    for (std::uint32_t i = 0; i < nb; ++i) {
      const double x = xs[i];
      const double e = std::fabs(0.5 * x * (1.0 + ys[i]) - std::max(x, 0.0));
      acc.add(std::isnan(e) ? INFINITY : e, x);
    }
    acc.count += nb;
  }
}

inline ErrorCertificate finish_certificate(const CompositeFilter& f, const PeakPair& pk,
                                           CertificateMode mode, double seconds) {
  ErrorCertificate c;
  c.filter_hash = filter_hash(f);
  c.mode = mode;
  c.count = pk.count;
  c.e_positive = std::max(pk.e_pos, 0.0);
  c.argmax_positive = pk.x_pos;
  c.e_negative = std::max(pk.e_neg, 0.0);
  c.argmax_negative = pk.x_neg;
  if (pk.e_neg >= 0 && better_peak(pk.e_neg, pk.x_neg, pk.e_pos, pk.x_pos)) {
    c.e_value = pk.e_neg;
    c.argmax_x = pk.x_neg;
  } else {
    c.e_value = c.e_positive;
    c.argmax_x = pk.x_pos;
  }
  c.wall_seconds = seconds;
  return c;
}

}  // namespace detail

/// Maximum ReLU error over every binary32 value in [-1, 1], evaluated in
/// double. The bit-pattern range is split across `threads` workers.
inline ErrorCertificate e_float_full(const CompositeFilter& f, unsigned threads = 1) {
  f.validate();
  const auto t0 = std::chrono::steady_clock::now();
  threads = std::max(1u, threads);
  constexpr std::uint32_t kOne = 0x3F800000u;
  // Positive side [0, kOne] inclusive, negative side (0, kOne] mirrored.
  struct Task {
    std::uint32_t lo, hi;
    bool neg;
  };
  std::vector<Task> tasks;
  const std::uint32_t chunk = (kOne + 1 + threads - 1) / threads;
  for (std::uint32_t lo = 0; lo <= kOne; lo += chunk) {
    const std::uint32_t hi = std::min<std::uint64_t>(kOne + 1ull, static_cast<std::uint64_t>(lo) + chunk);
    tasks.push_back({lo, hi, false});
    tasks.push_back({std::max(lo, 1u), hi, true});
    if (hi == kOne + 1) break;
  }
  std::vector<detail::PeakPair> partial(tasks.size());
  auto run = [&](std::size_t w) {
    for (std::size_t i = w; i < tasks.size(); i += threads)
      detail::enumerate_range(f, tasks[i].lo, tasks[i].hi, tasks[i].neg, partial[i]);
  };
  if (threads == 1) {
    run(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(run, w);
    for (auto& th : pool) th.join();
  }
  detail::PeakPair total;
  for (const auto& p : partial) total.merge(p);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return detail::finish_certificate(f, total, CertificateMode::FullFloat32Enumeration, secs);
}

inline ErrorCertificate e_float_grid(const CompositeFilter& f, const SampleGrid& grid) {
  f.validate();
  const auto t0 = std::chrono::steady_clock::now();
  detail::PeakPair pk;
  for (double x : grid.points) {
    const double e = std::fabs(relu_error(f, x));
    pk.add(std::isnan(e) ? INFINITY : e, x);
  }
  pk.count = grid.size();
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return detail::finish_certificate(f, pk, CertificateMode::Grid, secs);
}

}  // namespace psdpoly
