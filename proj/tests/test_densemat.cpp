#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "psdpoly/datasets.hpp"
#include "psdpoly/eigen.hpp"
#include "psdpoly/matrix.hpp"
#include "psdpoly/matrix_io.hpp"

using namespace psdpoly;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Matrix m(r, c);
  for (double& v : m.values()) v = nd(rng);
  return m;
}

SymmetricMatrix random_sym(std::size_t n, std::uint64_t seed) {
  return symmetrize(random_matrix(n, n, seed));
}

SymmetricMatrix random_psd(std::size_t n, std::uint64_t seed) {
  const Matrix g = random_matrix(n, n, seed);
  return symmetrize(gemm(g, g.transpose()) * (1.0 / n));
}

}  // namespace

TEST(Gemm, IdentityLeavesMatrixUnchangedInAllModes) {
  const Matrix a = random_matrix(3, 3, 1);
  for (auto mode : {PrecisionMode::f64(), PrecisionMode::f32(), PrecisionMode::f16emu()}) {
    const Matrix r = gemm(Matrix::identity(3), a, mode);
    EXPECT_EQ(r, round_to_precision(a, mode));
  }
  EXPECT_EQ(gemm(Matrix::identity(3), a), a);
}

TEST(Gemm, DiagonalProduct) {
  const double d1[] = {2, 3}, d2[] = {5, 7}, d3[] = {10, 21};
  EXPECT_EQ(gemm(Matrix::diagonal(d1), Matrix::diagonal(d2)), Matrix::diagonal(d3));
}

TEST(Gemm, HalfEmulationOfPointOneSquared) {
  const Matrix a(2, 2, 0.1);
  const Matrix h = gemm(a, a, PrecisionMode::f16emu());
  const Matrix d = gemm(a, a);
  // 0.1 -> 0.0999755859375 in binary16; 2 * that^2 accumulated in float and
  // rounded back to binary16.
  for (double v : h.values()) EXPECT_EQ(v, 0.019989013671875);
  for (double v : d.values()) EXPECT_DOUBLE_EQ(v, 0.02);
  EXPECT_NE(h, d);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_LE(std::fabs(h.values()[i] - d.values()[i]), 0x1p-10);
}

TEST(Gemm, RejectsBadInput) {
  EXPECT_THROW(gemm(Matrix(2, 3), Matrix(2, 3)), std::invalid_argument);
  Matrix a(2, 2, 1.0);
  a(0, 1) = NAN;
  EXPECT_THROW(gemm(a, Matrix::identity(2)), std::invalid_argument);
  a(0, 1) = INFINITY;
  EXPECT_THROW(gemm(Matrix::identity(2), a), std::invalid_argument);
}

TEST(Gemm, MatchesNaiveTripleLoop) {
  for (std::size_t n : {1u, 7u, 64u}) {
    const Matrix a = random_matrix(n, n, 10 + n), b = random_matrix(n, n, 20 + n);
    const Matrix c = gemm(a, b);
    const double bound = 1e-13 * frobenius_norm(a) * frobenius_norm(b);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k) s += a(i, k) * b(k, j);
        EXPECT_LE(std::fabs(c(i, j) - s), bound);
      }
  }
}

TEST(Gemm, BlockingDoesNotChangeBits) {
  const Matrix a = random_matrix(150, 130, 3), b = random_matrix(130, 90, 4);
  const Matrix c = gemm(a, b);
  for (std::size_t i = 0; i < 150; i += 37)
    for (std::size_t j = 0; j < 90; j += 11) {
      double s = 0.0;
      for (std::size_t k = 0; k < 130; ++k) s += a(i, k) * b(k, j);
      EXPECT_EQ(c(i, j), s);
    }
}

TEST(Gemm, CounterCountsOnlyWhileInstalled) {
  GemmCounter c;
  gemm(Matrix::identity(2), Matrix::identity(2));
  {
    ScopedGemmCounter scope(c);
    gemm(Matrix::identity(2), Matrix::identity(2));
    gemm(Matrix::identity(2), Matrix::identity(2), PrecisionMode::f16emu());
    matvec(Matrix::identity(2), std::vector<double>{1.0, 2.0});
  }
  gemm(Matrix::identity(2), Matrix::identity(2));
  EXPECT_EQ(c.count, 2u);
}

TEST(Rounding, ScalarReferenceValues) {
  for (auto mode : {PrecisionMode::f64(), PrecisionMode::f32(), PrecisionMode::f16emu()})
    EXPECT_EQ(round_scalar(1.0, mode.tag), 1.0);
  EXPECT_EQ(round_to_half(0x1p-25), 0.0);
  EXPECT_EQ(round_to_half(0.1), 0.0999755859375);
  EXPECT_EQ(round_to_half(0x1p-24), 0x1p-24);           // smallest subnormal
  EXPECT_EQ(round_to_half(3 * 0x1p-26), 0x1p-24);       // 0.75 ulp rounds up
  EXPECT_EQ(round_to_half(1.0 + 0x1p-11), 1.0);         // tie to even
  EXPECT_EQ(round_to_half(1.0 + 3 * 0x1p-11), 1.0 + 0x1p-9);
  EXPECT_EQ(round_to_half(65504.0), 65504.0);
  EXPECT_EQ(round_to_single(0.1), static_cast<double>(0.1f));
}

TEST(Rounding, OverflowSaturatesAndFlags) {
  Matrix a(1, 2);
  a(0, 0) = 1e6;
  a(0, 1) = -70000.0;
  PrecisionFlags flags;
  const Matrix r = round_to_precision(a, PrecisionMode::f16emu(), &flags);
  EXPECT_TRUE(flags.overflow);
  EXPECT_EQ(r(0, 0), 65504.0);
  EXPECT_EQ(r(0, 1), -65504.0);
  PrecisionFlags none;
  round_to_precision(Matrix(1, 1, 65519.0), PrecisionMode::f16emu(), &none);
  EXPECT_FALSE(none.overflow);
}

TEST(Rounding, IdempotentPerMode) {
  const Matrix a = random_matrix(20, 20, 5);
  for (auto mode : {PrecisionMode::f64(), PrecisionMode::f32(), PrecisionMode::f16emu()}) {
    const Matrix once = round_to_precision(a, mode);
    EXPECT_EQ(round_to_precision(once, mode), once);
  }
}

TEST(Rounding, HalfAgreesWithBitLevelReference) {
  // Reference: enumerate all finite positive binary16 values and pick the
  // nearest (ties to even mantissa).
  std::vector<double> halves;
  for (int e = 0; e < 31; ++e)
    for (int m = 0; m < 1024; ++m)
      halves.push_back(e == 0 ? m * 0x1p-24 : std::ldexp(1.0 + m / 1024.0, e - 15));
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ex(-26, 16);
  for (int trial = 0; trial < 20000; ++trial) {
    const double v = std::exp2(ex(rng));
    const auto it = std::lower_bound(halves.begin(), halves.end(), v);
    double ref;
    if (it == halves.end()) {
      ref = 65504.0;
    } else if (it == halves.begin()) {
      ref = *it;
    } else {
      const double hi = *it, lo = *(it - 1);
      const std::size_t ihi = it - halves.begin();
      if (v - lo < hi - v) ref = lo;
      else if (hi - v < v - lo) ref = hi;
      else ref = (ihi % 2 == 0) ? hi : lo;
    }
    ASSERT_EQ(round_to_half(v), ref) << v;
  }
}

TEST(PrecisionModeTest, HalfRequiresSingleAccumulate) {
  PrecisionMode bad{Precision::F16EMU, Precision::F64};
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  EXPECT_NO_THROW(PrecisionMode::f16emu().validate());
  EXPECT_EQ(PrecisionMode::f16emu().accumulate, Precision::F32);
}

TEST(SymmetricMatrixTest, Invariants) {
  Matrix a(2, 2);
  a(0, 1) = 1.0;
  EXPECT_THROW(SymmetricMatrix{a}, std::invalid_argument);
  EXPECT_THROW(SymmetricMatrix(Matrix(2, 3)), std::invalid_argument);
  EXPECT_THROW(SymmetricMatrix(Matrix(0, 0)), std::invalid_argument);
  Matrix b(2, 2, NAN);
  EXPECT_THROW(SymmetricMatrix{b}, std::invalid_argument);
}

TEST(Symmetrize, Basics) {
  const SymmetricMatrix s = random_sym(5, 2);
  EXPECT_EQ(symmetrize(s.matrix()), s);
  Matrix a(2, 2);
  a(0, 1) = 2.0;
  const SymmetricMatrix r = symmetrize(a);
  EXPECT_EQ(r(0, 1), 1.0);
  EXPECT_EQ(r(1, 0), 1.0);
  EXPECT_EQ(r(0, 0), 0.0);
  EXPECT_NO_THROW(symmetrize(random_matrix(10, 10, 9)));
  EXPECT_THROW(symmetrize(Matrix(2, 3)), std::invalid_argument);
}

TEST(SymEig, DiagonalAndSwap) {
  const double d[] = {3, 1, -2};
  const auto ed = sym_eig(SymmetricMatrix::diagonal(d));
  EXPECT_EQ(ed.lambdas, (std::vector<double>{3, 1, -2}));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(std::fabs(ed.q(i, j)), i == j ? 1.0 : 0.0);

  Matrix s(2, 2);
  s(0, 1) = s(1, 0) = 1.0;
  const auto e2 = sym_eig(SymmetricMatrix(s));
  EXPECT_NEAR(e2.lambdas[0], 1.0, 1e-15);
  EXPECT_NEAR(e2.lambdas[1], -1.0, 1e-15);
}

class SymEigBySize : public ::testing::TestWithParam<std::size_t> {};

TEST_P(SymEigBySize, ReconstructsAndIsOrthonormal) {
  const std::size_t n = GetParam();
  const SymmetricMatrix x = random_sym(n, 100 + n);
  const auto ed = sym_eig(x);
  const double fro = frobenius_norm(x);
  EXPECT_LE(frobenius_norm(ed.reconstruct() - x.matrix()), 1e-10 * fro);
  const Matrix qtq = gemm(ed.q.transpose(), ed.q);
  EXPECT_LE(frobenius_norm(qtq - Matrix::identity(n)), 1e-10 * n);
  EXPECT_TRUE(std::is_sorted(ed.lambdas.rbegin(), ed.lambdas.rend()));
}

INSTANTIATE_TEST_SUITE_P(JacobiAndQl, SymEigBySize, ::testing::Values(1, 2, 50, 128, 129, 200));

TEST(SymEig, BothBackendsAgree) {
  const SymmetricMatrix x = random_sym(60, 42);
  const auto a = detail::jacobi_eig(x.matrix());
  const auto b = detail::householder_ql_eig(x.matrix());
  for (std::size_t i = 0; i < 60; ++i) EXPECT_NEAR(a.lambdas[i], b.lambdas[i], 1e-12);
}

TEST(EigProject, ReferenceCases) {
  const double d[] = {1, -1}, p[] = {1, 0};
  EXPECT_LE(max_abs(eig_project(SymmetricMatrix::diagonal(d)).matrix() - Matrix::diagonal(p)), 1e-15);

  const SymmetricMatrix psd = random_psd(30, 3);
  EXPECT_LE(frobenius_norm(eig_project(psd).matrix() - psd.matrix()), 1e-10 * frobenius_norm(psd));

  Matrix s(2, 2);
  s(0, 1) = s(1, 0) = 1.0;
  const auto r = eig_project(SymmetricMatrix(s));
  for (double v : r.matrix().values()) EXPECT_NEAR(v, 0.5, 1e-15);
}

TEST(EigProject, ResultIsPsd) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const SymmetricMatrix x = random_sym(40, seed);
    EXPECT_GE(lambda_min(eig_project(x)), -1e-9 * spectral_norm(x));
  }
}

TEST(EigProject, NearestAmongRandomPsdMatrices) {
  const SymmetricMatrix x = random_sym(12, 77);
  const SymmetricMatrix p = eig_project(x);
  const double best = frobenius_norm(p.matrix() - x.matrix());
  for (std::uint64_t s = 0; s < 100; ++s) {
    // Random PSD candidates, some built as perturbations of the projection.
    SymmetricMatrix cand = random_psd(12, 1000 + s);
    if (s % 2) cand = symmetrize(p.matrix() + cand.matrix() * 0.01);
    EXPECT_LE(best, frobenius_norm(cand.matrix() - x.matrix()) + 1e-12);
  }
}

TEST(RelError, ReferenceCases) {
  const SymmetricMatrix x = random_sym(10, 8);
  EXPECT_EQ(rel_error(eig_project(x), x), 0.0);

  const double d[] = {1, -1}, c[] = {1.001, 0};
  EXPECT_NEAR(rel_error(SymmetricMatrix::diagonal(c), SymmetricMatrix::diagonal(d)), 1e-3, 1e-15);

  const double neg[] = {-1, -2}, cand[] = {0.3, 0.4};
  EXPECT_NEAR(rel_error(SymmetricMatrix::diagonal(cand), SymmetricMatrix::diagonal(neg)), 0.5, 1e-15);

  EXPECT_THROW(rel_error(SymmetricMatrix::zeros(2), SymmetricMatrix::zeros(3)), std::invalid_argument);
}

TEST(RelError, InvariantUnderOrthogonalConjugation) {
  const SymmetricMatrix x = random_sym(20, 11);
  const SymmetricMatrix cand = symmetrize(eig_project(x).matrix() + random_sym(20, 12).matrix() * 1e-3);
  const Matrix q = haar_orthogonal(20, 13);
  auto rot = [&](const SymmetricMatrix& a) { return symmetrize(gemm(gemm(q, a), q.transpose())); };
  EXPECT_NEAR(rel_error(rot(cand), rot(x)), rel_error(cand, x), 1e-9);
}

TEST(MatrixIo, PsdmRoundTripAndLayout) {
  const Matrix a = random_matrix(4, 4, 21);
  std::stringstream ss;
  write_psdm(ss, a);
  const std::string bytes = ss.str();
  ASSERT_EQ(bytes.size(), 4 + 4 + 8 + 16 * 8u);
  EXPECT_EQ(bytes.substr(0, 4), "PSDM");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 1);
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 4);
  EXPECT_EQ(read_psdm(ss), a);
}

TEST(MatrixIo, PsdmRejectsCorruptInput) {
  std::stringstream bad("XXXX");
  EXPECT_THROW(read_psdm(bad), FormatError);
  std::stringstream ss;
  write_psdm(ss, Matrix::identity(3));
  std::string s = ss.str();
  s.resize(s.size() - 3);
  std::stringstream trunc(s);
  EXPECT_THROW(read_psdm(trunc), FormatError);
}

TEST(MatrixIo, CsvRoundTripAndErrors) {
  const Matrix a = random_matrix(3, 3, 22);
  std::stringstream ss;
  write_csv_matrix(ss, a);
  EXPECT_EQ(read_csv_matrix(ss), a);
  std::stringstream ragged("1,2\n3\n");
  EXPECT_THROW(read_csv_matrix(ragged), FormatError);
  std::stringstream junk("1,x\n3,4\n");
  EXPECT_THROW(read_csv_matrix(junk), FormatError);
}
