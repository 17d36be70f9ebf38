#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "psdpoly/eigen.hpp"
#include "psdpoly/filter_io.hpp"
#include "psdpoly/matrix.hpp"
#include "psdpoly/matrix_io.hpp"

// Standard-form SDP
//   min <C, X>  s.t.  A X = b,  X psd
// with dual  max b^T y  s.t.  A* y + S = C,  S psd,
// solved by the three-step ADMM of Wen, Goldfarb and Yin.

namespace psdpoly {

class SDPProblem {
 public:
  SDPProblem(SymmetricMatrix c, std::vector<SymmetricMatrix> a, std::vector<double> b)
      : c_(std::move(c)), a_(std::move(a)), b_(std::move(b)) {
    const std::size_t n = c_.n(), m = a_.size();
    if (m == 0) throw std::invalid_argument("SDPProblem: need at least one constraint");
    if (b_.size() != m) throw std::invalid_argument("SDPProblem: b length differs from m");
    for (const auto& ai : a_)
      if (ai.n() != n) throw std::invalid_argument("SDPProblem: constraint dimension mismatch");
    for (double v : b_)
      if (!std::isfinite(v)) throw std::invalid_argument("SDPProblem: non-finite b");

    Matrix g(m, m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i; j < m; ++j) g(i, j) = g(j, i) = inner(a_[i], a_[j]);
    const auto ed = sym_eig(SymmetricMatrix(g));
    const double lmax = ed.lambdas.front(), lmin = ed.lambdas.back();
    if (!(lmin > 0.0) || lmax / lmin > 1e10)
      throw std::invalid_argument("SDPProblem: constraint matrices are not linearly independent "
                                  "(Gram condition > 1e10)");
    // Cholesky G = L L^T.
    chol_ = Matrix(m, m);
    for (std::size_t j = 0; j < m; ++j) {
      double d = g(j, j);
      for (std::size_t k = 0; k < j; ++k) d -= chol_(j, k) * chol_(j, k);
      if (!(d > 0.0)) throw std::invalid_argument("SDPProblem: Gram matrix not positive definite");
      chol_(j, j) = std::sqrt(d);
      for (std::size_t i = j + 1; i < m; ++i) {
        double s = g(i, j);
        for (std::size_t k = 0; k < j; ++k) s -= chol_(i, k) * chol_(j, k);
        chol_(i, j) = s / chol_(j, j);
      }
    }
  }

  std::size_t n() const { return c_.n(); }
  std::size_t m() const { return a_.size(); }
  const SymmetricMatrix& C() const { return c_; }
  const std::vector<SymmetricMatrix>& A() const { return a_; }
  const std::vector<double>& b() const { return b_; }

  /// (<A_1, X>, ..., <A_m, X>).
  std::vector<double> apply_A(const Matrix& x) const {
    std::vector<double> r(m());
    for (std::size_t i = 0; i < m(); ++i) r[i] = inner(a_[i], x);
    return r;
  }

  /// sum_i y_i A_i.
  Matrix apply_At(const std::vector<double>& y) const {
    Matrix r(n(), n());
    for (std::size_t i = 0; i < m(); ++i) {
      if (y[i] == 0.0) continue;
      auto rv = r.values();
      auto av = a_[i].matrix().values();
      for (std::size_t k = 0; k < rv.size(); ++k) rv[k] += y[i] * av[k];
    }
    return r;
  }

  /// Solves (A A*) y = r with the cached Cholesky factor.
  std::vector<double> solve_gram(std::vector<double> r) const {
    const std::size_t mm = m();
    for (std::size_t i = 0; i < mm; ++i) {
      for (std::size_t k = 0; k < i; ++k) r[i] -= chol_(i, k) * r[k];
      r[i] /= chol_(i, i);
    }
    for (std::size_t i = mm; i-- > 0;) {
      for (std::size_t k = i + 1; k < mm; ++k) r[i] -= chol_(k, i) * r[k];
      r[i] /= chol_(i, i);
    }
    return r;
  }

 private:
  SymmetricMatrix c_;
  std::vector<SymmetricMatrix> a_;
  std::vector<double> b_;
  Matrix chol_;
};

struct ADMMState {
  SymmetricMatrix X;
  SymmetricMatrix S;
  std::vector<double> y;
  double sigma_penalty = 1.0;
  int iteration = 0;

  static ADMMState zeros(const SDPProblem& p, double sigma = 1.0) {
    if (!(sigma > 0.0)) throw std::invalid_argument("ADMMState: sigma must be > 0");
    return {SymmetricMatrix::zeros(p.n()), SymmetricMatrix::zeros(p.n()),
            std::vector<double>(p.m(), 0.0), sigma, 0};
  }
};

struct KKTResidual {
  double primal = 0.0;
  double dual = 0.0;
  double gap = 0.0;
  double x_cone = 0.0;
  double s_cone = 0.0;
  double eta = 0.0;
  double surrogate = 0.0;
};

using Projector = std::function<SymmetricMatrix(const SymmetricMatrix&)>;

inline Projector exact_projector() {
  return [](const SymmetricMatrix& v) { return eig_project(v); };
}

namespace detail {
inline double vec_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double e : v) s += e * e;
  return std::sqrt(s);
}
}  // namespace detail

/// Feasibility, dual feasibility and gap terms; the cone terms stay zero.
inline KKTResidual kkt_surrogate(const SDPProblem& p, const ADMMState& st) {
  KKTResidual r;
  const double nb = detail::vec_norm(p.b());
  const double nc = frobenius_norm(p.C());
  auto ax = p.apply_A(st.X);
  for (std::size_t i = 0; i < ax.size(); ++i) ax[i] -= p.b()[i];
  r.primal = detail::vec_norm(ax) / (1.0 + nb);
  r.dual = frobenius_norm(p.apply_At(st.y) + st.S.matrix() - p.C().matrix()) / (1.0 + nc);
  const double cx = inner(p.C(), st.X);
  double by = 0.0;
  for (std::size_t i = 0; i < p.m(); ++i) by += p.b()[i] * st.y[i];
  r.gap = std::fabs(cx - by) / (1.0 + std::fabs(cx) + std::fabs(by));
  r.surrogate = std::max({r.primal, r.dual, r.gap});
  r.eta = r.surrogate;
  return r;
}

/// All five terms. The cone terms are reported as magnitudes,
/// |min(0, lambda_min)| / (1 + ...), so that eta is a max of nonnegatives.
inline KKTResidual kkt_residual(const SDPProblem& p, const ADMMState& st) {
  KKTResidual r = kkt_surrogate(p, st);
  const double nb = detail::vec_norm(p.b());
  const double nc = frobenius_norm(p.C());
  r.x_cone = std::fabs(std::min(0.0, lambda_min(st.X))) / (1.0 + nb);
  r.s_cone = std::fabs(std::min(0.0, lambda_min(st.S))) / (1.0 + nc);
  r.eta = std::max({r.surrogate, r.x_cone, r.s_cone});
  return r;
}

/// y, then S, then X, each from the freshest values.
inline ADMMState admm_step(const SDPProblem& p, const ADMMState& st, const Projector& proj) {
  const double sigma = st.sigma_penalty, inv = 1.0 / sigma;
  const Matrix& C = p.C().matrix();

  Matrix t = st.X.matrix() * inv + st.S.matrix() - C;
  auto rhs = p.apply_A(t);
  for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = inv * p.b()[i] - rhs[i];
  auto y = p.solve_gram(std::move(rhs));

  const Matrix aty = p.apply_At(y);
  const SymmetricMatrix s = proj(symmetrize(C - aty - st.X.matrix() * inv));
  const SymmetricMatrix x = symmetrize(st.X.matrix() + (s.matrix() + aty - C) * sigma);
  return {x, s, std::move(y), sigma, st.iteration + 1};
}

struct TraceRow {
  int iteration = 0;
  double surrogate = 0.0;
  double eta = std::numeric_limits<double>::quiet_NaN();  // NaN while warm
  std::string backend;
  double wall_ms = 0.0;
};

struct SolveSchedule {
  std::optional<Projector> warm_projector;  // none = exact from the start
  std::string warm_name = "composite";
  double warm_threshold = 1e-2;
  double final_tol = 1e-4;
  int max_iters = 5000;
  double sigma = 1.0;
  double divergence_limit = 1e6;
};

struct SolveResult {
  ADMMState state;
  std::vector<TraceRow> trace;
  KKTResidual final_residual;
  bool converged = false;
  int switch_iteration = -1;  // first iteration run with the exact projector, -1 if never
  double objective = 0.0;     // <C, X>
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, std::vector<TraceRow> trace)
      : std::runtime_error(what), trace(std::move(trace)) {}
  std::vector<TraceRow> trace;
};

/// Runs with the warm projector while monitoring the surrogate; the first
/// time it drops below `warm_threshold`, switches for good to the exact
/// projector and monitors eta. An infinite threshold disables the switch; such
/// a run stops on surrogate < final_tol.
inline SolveResult solve(const SDPProblem& p, const SolveSchedule& sched) {
  if (sched.max_iters < 0) throw std::invalid_argument("solve: max_iters must be >= 0");
  SolveResult res;
  res.state = ADMMState::zeros(p, sched.sigma);
  bool warm = sched.warm_projector.has_value();
  const Projector exact = exact_projector();
  const auto t0 = std::chrono::steady_clock::now();
  for (int k = 0; k < sched.max_iters; ++k) {
    const std::string backend = warm ? sched.warm_name : "exact";
    res.state = admm_step(p, res.state, warm ? *sched.warm_projector : exact);
    TraceRow row;
    row.iteration = res.state.iteration;
    row.backend = backend;
    KKTResidual r = warm ? kkt_surrogate(p, res.state) : kkt_residual(p, res.state);
    row.surrogate = r.surrogate;
    if (!warm) row.eta = r.eta;
    row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    res.trace.push_back(row);
    res.final_residual = r;
    if (!std::isfinite(r.surrogate) || r.surrogate > sched.divergence_limit)
      throw DivergenceError("solve: residual diverged at iteration " + std::to_string(row.iteration),
                            res.trace);
    if (warm) {
      if (std::isfinite(sched.warm_threshold)) {
        if (r.surrogate < sched.warm_threshold) {
          warm = false;
          res.switch_iteration = res.state.iteration + 1;
        }
      } else if (r.surrogate < sched.final_tol) {
        res.converged = true;
        break;
      }
    } else if (r.eta < sched.final_tol) {
      res.converged = true;
      break;
    }
  }
  res.objective = inner(p.C(), res.state.X);
  return res;
}

/// Max-cut relaxation: C = -L/4, A_i = e_i e_i^T, b = 1 (minimization form).
inline SDPProblem maxcut_sdp(const SymmetricMatrix& w) {
  const std::size_t n = w.n();
  Matrix lap(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (w(i, i) != 0.0) throw std::invalid_argument("maxcut_sdp: weights need a zero diagonal");
    for (std::size_t j = 0; j < n; ++j) {
      if (w(i, j) < 0.0) throw std::invalid_argument("maxcut_sdp: negative weight");
      if (i != j) {
        lap(i, j) = -w(i, j);
        lap(i, i) += w(i, j);
      }
    }
  }
  std::vector<SymmetricMatrix> a;
  for (std::size_t i = 0; i < n; ++i) {
    Matrix e(n, n);
    e(i, i) = 1.0;
    a.emplace_back(std::move(e));
  }
  return SDPProblem(SymmetricMatrix(lap * -0.25), std::move(a), std::vector<double>(n, 1.0));
}

// ---------------------------------------------------------------------------
// I/O:  {"n": n, "m": m, "C": [n*n row-major], "A": [[n*n], ...], "b": [...]}

namespace detail {
inline SymmetricMatrix json_matrix(const nlohmann::json& j, std::size_t n, const char* what) {
  std::vector<double> v;
  if (!j.is_array()) throw FormatError(std::string("SDP file: ") + what + " must be an array");
  if (!j.empty() && j.front().is_array()) {
    for (const auto& row : j)
      for (const auto& e : row) v.push_back(e.get<double>());
  } else {
    v = j.get<std::vector<double>>();
  }
  if (v.size() != n * n)
    throw FormatError(std::string("SDP file: ") + what + " needs " + std::to_string(n * n) + " entries");
  try {
    return SymmetricMatrix(Matrix(n, n, std::move(v)));
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("SDP file: ") + what + ": " + e.what());
  }
}
}  // namespace detail

inline SDPProblem sdp_from_json(const nlohmann::json& j) {
  try {
    const auto n = j.at("n").get<std::size_t>();
    const auto m = j.at("m").get<std::size_t>();
    auto c = detail::json_matrix(j.at("C"), n, "C");
    std::vector<SymmetricMatrix> a;
    for (const auto& ai : j.at("A")) a.push_back(detail::json_matrix(ai, n, "A_i"));
    if (a.size() != m) throw FormatError("SDP file: A has " + std::to_string(a.size()) + " entries, m = " + std::to_string(m));
    return SDPProblem(std::move(c), std::move(a), j.at("b").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("SDP file: ") + e.what());
  }
}

inline SDPProblem load_sdp(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open '" + path.string() + "'");
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("SDP file '" + path.string() + "': " + e.what());
  }
  return sdp_from_json(j);
}

inline nlohmann::json sdp_to_json(const SDPProblem& p) {
  auto flat = [](const SymmetricMatrix& s) {
    auto v = s.matrix().values();
    return std::vector<double>(v.begin(), v.end());
  };
  nlohmann::json j;
  j["n"] = p.n();
  j["m"] = p.m();
  j["C"] = flat(p.C());
  j["A"] = nlohmann::json::array();
  for (const auto& a : p.A()) j["A"].push_back(flat(a));
  j["b"] = p.b();
  return j;
}

inline void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& trace) {
  os << "iteration,surrogate,eta,backend,wallclock_ms\n";
  for (const auto& r : trace) {
    os << r.iteration << ',' << format_g17(r.surrogate) << ','
       << (std::isnan(r.eta) ? std::string() : format_g17(r.eta)) << ',' << r.backend << ',';
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", r.wall_ms);
    os << buf << '\n';
  }
}

}  // namespace psdpoly
