// Projects a random symmetric matrix onto the PSD cone three ways and
// compares against the eigendecomposition.

#include <cstdio>

#include "psdpoly/datasets.hpp"
#include "psdpoly/eigen.hpp"
#include "psdpoly/projection.hpp"
#include "psdpoly/remez.hpp"

using namespace psdpoly;

int main(int argc, char** argv) {
  const std::size_t n = argc > 1 ? std::stoul(argv[1]) : 200;
  const auto x = generate({DatasetFamily::HaarSpectrum, n, 1});

  const auto half = sequential_remez(7, 5, 1e-3).filter;
  const auto single = sequential_remez(10, 5, 1e-4).filter;
  struct Run {
    const char* name;
    ProjectionConfig cfg;
  };
  const Run runs[] = {
      {"f16emu composite T=7", ProjectionConfig::half(half)},
      {"f32 composite T=10", ProjectionConfig::single(single)},
      {"f64 composite T=10", {single}},
      {"f32 Newton-Schulz x15", {newton_schulz_filter(15), PrecisionMode::f32()}},
  };
  std::printf("n = %zu, HaarSpectrum\n", n);
  for (const auto& r : runs) {
    const auto p = project_psd(x, r.cfg);
    std::printf("  %-24s rel_error %.3e  gemms %zu  lambda~ %.6f\n", r.name, rel_error(p.result, x),
                p.report.gemm_count, p.report.lambda_tilde);
  }
}
