#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "psdpoly/lanczos.hpp"
#include "psdpoly/matrix.hpp"
#include "psdpoly/polynomial.hpp"

namespace psdpoly {

/// HalfStyle divides the iterate by 1.01 after each stage but the last;
/// SingleStyle divides by 1.001 after each of the first 8 stages.
enum class Stabilization { None, HalfStyle, SingleStyle };

inline std::string_view to_string(Stabilization s) {
  switch (s) {
    case Stabilization::None: return "none";
    case Stabilization::HalfStyle: return "half";
    case Stabilization::SingleStyle: return "single";
  }
  return "none";
}

inline Stabilization parse_stabilization(std::string_view s) {
  if (s == "none" || s == "None") return Stabilization::None;
  if (s == "half" || s == "HalfStyle") return Stabilization::HalfStyle;
  if (s == "single" || s == "SingleStyle") return Stabilization::SingleStyle;
  throw std::invalid_argument("unknown stabilization '" + std::string(s) + "'");
}

struct ProjectionConfig {
  CompositeFilter filter;
  PrecisionMode mode = PrecisionMode::f64();
  Stabilization stabilization = Stabilization::None;
  int lanczos_steps = 20;
  std::uint64_t seed = 0;
  std::optional<double> lambda_override;  // skips Lanczos when set

  static ProjectionConfig half(CompositeFilter f) {
    return {std::move(f), PrecisionMode::f16emu(), Stabilization::HalfStyle};
  }
  static ProjectionConfig single(CompositeFilter f) {
    return {std::move(f), PrecisionMode::f32(), Stabilization::SingleStyle};
  }
};

struct ProjectionReport {
  double lambda_tilde = 0.0;
  std::size_t gemm_count = 0;
  bool overflow_flag = false;
  std::vector<double> stage_norms;  // max |entry| after each stage
};

class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// GEMMs of one stage: 0 for degree 1, (d + 1) / 2 otherwise.
inline std::size_t stage_gemms(const OddPolynomial& p) { return p.size() >= 2 ? p.size() : 0; }

/// Stage GEMMs plus the final reconstruction multiply.
inline std::size_t gemm_count_of(const CompositeFilter& f) {
  std::size_t n = 1;
  for (const auto& s : f.stages) n += stage_gemms(s);
  return n;
}

inline CompositeFilter newton_schulz_filter(int iterations) {
  if (iterations < 1) throw std::invalid_argument("newton_schulz_filter: iterations must be >= 1");
  CompositeFilter f;
  f.stages.assign(static_cast<std::size_t>(iterations), OddPolynomial({1.5, -0.5}));
  f.provenance = Provenance::NewtonSchulz;
  return f;
}

namespace detail {

inline double stabilization_factor(Stabilization s, std::size_t t, std::size_t T) {
  switch (s) {
    case Stabilization::None: return 1.0;
    case Stabilization::HalfStyle: return t + 1 < T ? 1.0 / 1.01 : 1.0;
    case Stabilization::SingleStyle: return t < 8 ? 1.0 / 1.001 : 1.0;
  }
  return 1.0;
}

// Counts into a local counter and forwards the total to any enclosing one.
class GemmTally {
 public:
  GemmTally() : outer_(active_counter()), scope_(local_) {}
  ~GemmTally() {
    if (outer_) outer_->count += local_.count;
  }
  std::size_t count() const { return local_.count; }

 private:
  GemmCounter* outer_;
  GemmCounter local_;
  ScopedGemmCounter scope_;
};

}  // namespace detail

/// X_t = f_t(X_{t-1}) for every stage. A stage of degree d = 2k - 1 forms
/// X^2, X^4, ..., X^(2k-2) (k - 1 GEMMs) and then X (c_1 I + c_3 X^2 + ...)
/// (one more); degree 1 is a scalar multiple.
inline Matrix apply_sign_chain(const SymmetricMatrix& x0, const ProjectionConfig& cfg,
                               ProjectionReport* report = nullptr) {
  cfg.filter.validate();
  const auto mode = cfg.mode;
  PrecisionFlags flags;
  const std::size_t n = x0.n(), T = cfg.filter.T();
  Matrix x = round_to_precision(x0.matrix(), mode, &flags);
  std::vector<double> norms;
  for (std::size_t t = 0; t < T; ++t) {
    const auto& st = cfg.filter.stages[t];
    const auto c = st.coeffs();
    if (c.size() == 1) {
      x *= c[0];
    } else {
      auto checked = [&](Matrix m) {
        if (!m.all_finite())
          throw NonFiniteError("apply_sign_chain: stage " + std::to_string(t + 1) +
                               " produced a non-finite entry");
        return m;
      };
      std::vector<Matrix> powers;  // X^2, X^4, ...
      powers.push_back(checked(gemm(x, x, mode, &flags)));
      for (std::size_t j = 2; j < c.size(); ++j)
        powers.push_back(checked(j == 2 ? gemm(powers[0], powers[0], mode, &flags)
                                        : gemm(powers[j - 2], powers[0], mode, &flags)));
      Matrix m = Matrix::identity(n) * c[0];
      for (std::size_t j = 1; j < c.size(); ++j) m += powers[j - 1] * c[j];
      m = checked(round_to_precision(m, mode, &flags));
      x = gemm(x, m, mode, &flags);
    }
    const double s = detail::stabilization_factor(cfg.stabilization, t, T);
    if (s != 1.0) x *= s;
    x = round_to_precision(x, mode, &flags);
    if (!x.all_finite())
      throw NonFiniteError("apply_sign_chain: stage " + std::to_string(t + 1) +
                           " produced a non-finite entry");
    norms.push_back(max_abs(x));
  }
  if (report) {
    report->stage_norms = std::move(norms);
    report->overflow_flag = report->overflow_flag || flags.overflow;
  }
  return x;
}

struct Projection {
  SymmetricMatrix result;
  ProjectionReport report;
};

/// PSD projection using matrix products only: rescale by the Lanczos norm
/// bound, run the sign chain, and return lambda~ * X0 (I + X_T) / 2 with X0 the
/// rescaled input.
inline Projection project_psd(const SymmetricMatrix& x, const ProjectionConfig& cfg) {
  ProjectionReport rep;
  rep.lambda_tilde = cfg.lambda_override
                         ? *cfg.lambda_override
                         : spectral_norm_upper_bound(x, cfg.lanczos_steps, cfg.seed).lambda_tilde;
  if (!(rep.lambda_tilde >= 0.0) || !std::isfinite(rep.lambda_tilde))
    throw std::invalid_argument("project_psd: invalid norm bound");
  const std::size_t n = x.n();
  if (rep.lambda_tilde == 0.0) return {SymmetricMatrix::zeros(n), rep};

  detail::GemmTally tally;
  PrecisionFlags flags;
  const Matrix x0 = round_to_precision(x.matrix() * (1.0 / rep.lambda_tilde), cfg.mode, &flags);
  const Matrix xt = apply_sign_chain(SymmetricMatrix(x0), cfg, &rep);
  Matrix ipx = Matrix::identity(n) + xt;
  ipx = round_to_precision(ipx, cfg.mode, &flags);
  Matrix out = gemm(x0, ipx, cfg.mode, &flags);
  out *= 0.5 * rep.lambda_tilde;
  rep.gemm_count = tally.count();
  rep.overflow_flag = rep.overflow_flag || flags.overflow;
  return {symmetrize(out), rep};
}

}  // namespace psdpoly
