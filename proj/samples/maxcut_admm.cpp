// Max-cut relaxation of a random graph solved by ADMM, warm-started with a
// half-precision composite projector.

#include <cstdio>
#include <iostream>
#include <random>

#include "psdpoly/projection.hpp"
#include "psdpoly/remez.hpp"
#include "psdpoly/sdp.hpp"

using namespace psdpoly;

int main(int argc, char** argv) {
  const std::size_t n = argc > 1 ? std::stoul(argv[1]) : 30;
  std::mt19937_64 rng(7);
  std::bernoulli_distribution edge(0.3);
  Matrix w(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) w(i, j) = w(j, i) = edge(rng) ? 1.0 : 0.0;
  const auto prob = maxcut_sdp(SymmetricMatrix(w));

  SolveSchedule exact;
  const auto ref = solve(prob, exact);

  const auto cfg = ProjectionConfig::half(sequential_remez(7, 5, 1e-3).filter);
  SolveSchedule warm;
  warm.warm_projector = [cfg](const SymmetricMatrix& v) { return project_psd(v, cfg).result; };
  const auto res = solve(prob, warm);

  std::printf("n = %zu\n", n);
  std::printf("  exact : cut bound %.6f  iterations %d\n", -ref.objective, ref.state.iteration);
  std::printf("  warm  : cut bound %.6f  iterations %d  switched at %d\n", -res.objective,
              res.state.iteration, res.switch_iteration);
  if (argc > 2) write_trace_csv(std::cout, res.trace);
}
