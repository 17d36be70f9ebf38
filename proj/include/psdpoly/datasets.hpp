#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "psdpoly/matrix.hpp"

// Synthetic test-matrix families.
//   GaussianSym       dense symmetric Gaussian (semicircle spectrum)
//   HaarSpectrum      Q diag(lambda) Q^T with Haar Q and a prescribed spectrum
//   DominantPlusTiny  one eigenvalue 1, the rest of magnitude <= 1e-2; the
//                     regime where rescaling by the norm crushes everything else
//   ClusteredPM1      eigenvalues clustered just inside +-1
//   RankDeficient     a quarter of the spectrum nonzero, the rest exactly 0

namespace psdpoly {

enum class DatasetFamily { GaussianSym, HaarSpectrum, DominantPlusTiny, ClusteredPM1, RankDeficient };

inline std::string_view to_string(DatasetFamily f) {
  switch (f) {
    case DatasetFamily::GaussianSym: return "GaussianSym";
    case DatasetFamily::HaarSpectrum: return "HaarSpectrum";
    case DatasetFamily::DominantPlusTiny: return "DominantPlusTiny";
    case DatasetFamily::ClusteredPM1: return "ClusteredPM1";
    case DatasetFamily::RankDeficient: return "RankDeficient";
  }
  return "GaussianSym";
}

inline DatasetFamily parse_dataset_family(std::string_view s) {
  for (auto f : {DatasetFamily::GaussianSym, DatasetFamily::HaarSpectrum,
                 DatasetFamily::DominantPlusTiny, DatasetFamily::ClusteredPM1,
                 DatasetFamily::RankDeficient})
    if (s == to_string(f)) return f;
  throw std::invalid_argument("unknown dataset family '" + std::string(s) + "'");
}

/// Spectrum for HaarSpectrum: explicit eigenvalues (length n), or magnitudes
/// uniform in [gap, 1] with random signs when `values` is empty.
struct SpectrumSpec {
  std::vector<double> values;
  double gap = 1e-3;
};

struct DatasetSpec {
  DatasetFamily family = DatasetFamily::GaussianSym;
  std::size_t n = 2;
  std::uint64_t seed = 0;
  SpectrumSpec spectrum;
};

namespace detail {

inline Matrix gaussian_matrix(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Matrix g(n, n);
  for (double& v : g.values()) v = nd(rng);
  return g;
}

// Q D Q^T without touching the GEMM counter.
inline SymmetricMatrix conjugate_diagonal(const Matrix& q, std::span<const double> d) {
  const std::size_t n = q.rows();
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += q(i, k) * d[k] * q(j, k);
      out(i, j) = out(j, i) = s;
    }
  return SymmetricMatrix(std::move(out));
}

}  // namespace detail

/// Haar-distributed orthogonal matrix: Gram-Schmidt QR of a Gaussian matrix
/// (two passes), which leaves R with a positive diagonal.
inline Matrix haar_orthogonal(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Matrix g = detail::gaussian_matrix(n, rng);
  Matrix q(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = g(i, j);
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t k = 0; k < j; ++k) {
        double c = 0.0;
        for (std::size_t i = 0; i < n; ++i) c += q(i, k) * v[i];
        for (std::size_t i = 0; i < n; ++i) v[i] -= c * q(i, k);
      }
    double nrm = 0.0;
    for (double e : v) nrm += e * e;
    nrm = std::sqrt(nrm);
    if (nrm == 0.0) throw std::runtime_error("haar_orthogonal: rank-deficient Gaussian draw");
    for (std::size_t i = 0; i < n; ++i) q(i, j) = v[i] / nrm;
  }
  return q;
}

/// Eigenvalues the family would conjugate (empty for GaussianSym).
inline std::vector<double> family_spectrum(const DatasetSpec& spec, std::mt19937_64& rng) {
  const std::size_t n = spec.n;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto sign = [&] { return u01(rng) < 0.5 ? -1.0 : 1.0; };
  std::vector<double> d(n);
  switch (spec.family) {
    case DatasetFamily::GaussianSym: return {};
    case DatasetFamily::HaarSpectrum:
      if (!spec.spectrum.values.empty()) {
        if (spec.spectrum.values.size() != n)
          throw std::invalid_argument("HaarSpectrum: spectrum length must equal n");
        return spec.spectrum.values;
      }
      if (!(spec.spectrum.gap > 0.0 && spec.spectrum.gap < 1.0))
        throw std::invalid_argument("HaarSpectrum: gap must lie in (0, 1)");
      for (double& v : d) v = sign() * (spec.spectrum.gap + (1.0 - spec.spectrum.gap) * u01(rng));
      return d;
    case DatasetFamily::DominantPlusTiny:
      d[0] = 1.0;
      for (std::size_t i = 1; i < n; ++i) d[i] = sign() * std::pow(10.0, -4.0 + 2.0 * u01(rng));
      return d;
    case DatasetFamily::ClusteredPM1:
      for (double& v : d) v = sign() * (1.0 - 0.01 * u01(rng));
      return d;
    case DatasetFamily::RankDeficient:
      for (std::size_t i = 0; i < n; ++i) d[i] = i < std::max<std::size_t>(1, n / 4) ? 2.0 * u01(rng) - 1.0 : 0.0;
      return d;
  }
  return {};
}

inline SymmetricMatrix generate(const DatasetSpec& spec) {
  if (spec.n < 2) throw std::invalid_argument("dataset: n must be >= 2");
  std::mt19937_64 rng(spec.seed);
  if (spec.family == DatasetFamily::GaussianSym) {
    const Matrix g = detail::gaussian_matrix(spec.n, rng);
    const double scale = 1.0 / std::sqrt(2.0 * static_cast<double>(spec.n));
    Matrix s(spec.n, spec.n);
    for (std::size_t i = 0; i < spec.n; ++i)
      for (std::size_t j = i; j < spec.n; ++j) s(i, j) = s(j, i) = (g(i, j) + g(j, i)) * scale;
    return SymmetricMatrix(std::move(s));
  }
  const auto d = family_spectrum(spec, rng);
  const Matrix q = haar_orthogonal(spec.n, rng());
  return detail::conjugate_diagonal(q, d);
}

}  // namespace psdpoly
