// Designs the half- and single-precision filters and prints their tables.

#include <cstdio>

#include "psdpoly/remez.hpp"

using namespace psdpoly;

static void print_table(const char* title, const SequentialDesign& d) {
  std::printf("%s  (eps = %g, T = %zu)\n", title, d.filter.epsilon, d.filter.T());
  std::printf("  t  %16s %16s %16s   a_t            E_t\n", "c1", "c3", "c5");
  for (std::size_t t = 0; t < d.filter.T(); ++t) {
    const auto& s = d.filter.stages[t];
    std::printf("%3zu  %16.10f %16.10f %16.10f   %.6e   %.3e\n", t + 1, s[0], s[1], s[2],
                d.filter.design_intervals[t].lo, d.stage_results[t].levelled_error);
  }
  std::printf("  sign error 1 - a_{T+1} = %.3e\n\n", d.sign_error);
}

int main() {
  print_table("half", sequential_remez(7, 5, 1e-3));
  print_table("single", sequential_remez(10, 5, 1e-4));
}
