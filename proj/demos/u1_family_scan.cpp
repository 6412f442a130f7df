// Solves the U(1)-invariant Dirichlet problem at a range of moment levels a
// and prints how the solution and its singular set change as a -> 0.
#include <cstdio>

#include "slgeo/u1_potential.hpp"

using namespace slgeo;

int main() {
  const ConvexDomain dom = disc_domain(1.0, 65);
  const BoundaryData phi = [](double x, double y) { return x + 0.2 * x * x - 0.5 * y; };

  std::printf("%8s %8s %12s %12s %10s %8s\n", "a", "newton", "residual_P", "residual_CR", "max_defect", "singular");
  for (double a : {1.0, 0.5, 0.25, 0.1, 0.0}) {
    PotentialSolution sol;
    try {
      sol = solve_dirichlet(phi, a, dom, 1e-9);
    } catch (const DivergenceError& e) {
      std::printf("%8.3f  no convergence (residual %.3e)\n", a, e.last_residual());
      continue;
    }
    const SingularSet sp = singular_points(sol);
    double defect = 0.0;
    if (a != 0.0) defect = lift_to_sl3(sol, 1).max_sl_defect;
    std::printf("%8.3f %8d %12.3e %12.3e %10.2e %8zu\n", a, sol.newton_iters, sol.residual_P, sol.residual_CR,
                defect, sp.points.size());
    for (const auto& [x, z3] : sp.points)
      std::printf("         singular point at z3 = %.6f %+.6fi\n", z3.real(), z3.imag());
  }
  return 0;
}
