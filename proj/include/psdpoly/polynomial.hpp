#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace psdpoly {

inline constexpr int kMaxDesignDegree = 15;

/// Odd polynomial sum_j coeffs[j] * x^(2j+1).
class OddPolynomial {
 public:
  OddPolynomial() = default;
  explicit OddPolynomial(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.empty()) throw std::invalid_argument("OddPolynomial: no coefficients");
    for (double c : coeffs_)
      if (!std::isfinite(c)) throw std::invalid_argument("OddPolynomial: non-finite coefficient");
  }

  static OddPolynomial identity() { return OddPolynomial({1.0}); }

  int degree() const { return 2 * static_cast<int>(coeffs_.size()) - 1; }
  std::size_t size() const { return coeffs_.size(); }
  std::span<const double> coeffs() const { return coeffs_; }
  std::span<double> coeffs() { return coeffs_; }
  double operator[](std::size_t j) const { return coeffs_[j]; }

  /// Horner in x^2.
  template <typename T = double>
  T operator()(T x) const {
    const T u = x * x;
    T acc = static_cast<T>(coeffs_.back());
    for (std::size_t j = coeffs_.size() - 1; j-- > 0;) acc = acc * u + static_cast<T>(coeffs_[j]);
    return x * acc;
  }

  template <typename T = double>
  T derivative(T x) const {
    const T u = x * x;
    const std::size_t k = coeffs_.size();
    T acc = static_cast<T>((2 * k - 1) * coeffs_[k - 1]);
    for (std::size_t j = k - 1; j-- > 0;) acc = acc * u + static_cast<T>((2 * j + 1) * coeffs_[j]);
    return acc;
  }

  friend bool operator==(const OddPolynomial&, const OddPolynomial&) = default;

 private:
  std::vector<double> coeffs_;
};

/// Closed interval [lo, hi] on the positive half-line.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double width() const { return hi - lo; }
  bool valid() const { return lo > 0.0 && lo <= hi && std::isfinite(hi); }

  friend bool operator==(const Interval&, const Interval&) = default;
};

enum class Provenance { MinimaxStage1, Refined, NewtonSchulz, UserSupplied };

inline std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::MinimaxStage1: return "MinimaxStage1";
    case Provenance::Refined: return "Refined";
    case Provenance::NewtonSchulz: return "NewtonSchulz";
    case Provenance::UserSupplied: return "UserSupplied";
  }
  return "UserSupplied";
}

inline Provenance parse_provenance(std::string_view s) {
  if (s == "MinimaxStage1") return Provenance::MinimaxStage1;
  if (s == "Refined") return Provenance::Refined;
  if (s == "NewtonSchulz") return Provenance::NewtonSchulz;
  if (s == "UserSupplied") return Provenance::UserSupplied;
  throw std::invalid_argument("unknown provenance '" + std::string(s) + "'");
}

/// Ordered composition f_T o ... o f_1 approximating sign(x) on [-1,-eps] U [eps,1].
struct CompositeFilter {
  std::vector<OddPolynomial> stages;
  double epsilon = 0.0;
  std::vector<Interval> design_intervals;  // empty unless produced by the designer
  Provenance provenance = Provenance::UserSupplied;

  std::size_t T() const { return stages.size(); }

  std::vector<int> degrees() const {
    std::vector<int> d;
    d.reserve(stages.size());
    for (const auto& s : stages) d.push_back(s.degree());
    return d;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& s : stages) n += s.size();
    return n;
  }

  std::vector<double> flat_coefficients() const {
    std::vector<double> out;
    out.reserve(parameter_count());
    for (const auto& s : stages) out.insert(out.end(), s.coeffs().begin(), s.coeffs().end());
    return out;
  }

  void set_flat_coefficients(std::span<const double> flat) {
    if (flat.size() != parameter_count())
      throw std::invalid_argument("CompositeFilter: coefficient count mismatch");
    std::size_t k = 0;
    for (auto& s : stages)
      for (double& c : s.coeffs()) c = flat[k++];
  }

  /// f_T o ... o f_1 (x).
  template <typename T = double>
  T chain(T x) const {
    for (const auto& s : stages) x = s(x);
    return x;
  }

  void validate() const {
    if (stages.empty()) throw std::invalid_argument("CompositeFilter: needs at least one stage");
    for (const auto& s : stages)
      if (s.size() == 0) throw std::invalid_argument("CompositeFilter: empty stage");
  }
};

/// FNV-1a over the raw coefficient bytes; identifies a coefficient set in
/// certificates.
inline std::string filter_hash(const CompositeFilter& f) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ull;
    }
  };
  for (const auto& s : f.stages) {
    const std::uint64_t k = s.size();
    mix(&k, sizeof k);
    for (double c : s.coeffs()) mix(&c, sizeof c);
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[i] = hex[h & 0xf];
  return out;
}

}  // namespace psdpoly
