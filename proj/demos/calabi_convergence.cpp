// Manufactured-solution study for the complex Monge-Ampere solver on the flat
// torus: error against the exact potential and the observed order.
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <vector>

#include "slgeo/calabi_solver.hpp"

using namespace slgeo;

int main(int argc, char** argv) {
  const int m = argc > 1 ? std::atoi(argv[1]) : 1;
  std::vector<int> grids{16, 32, 64};
  if (m == 2) grids = {16, 32};

  std::printf("m = %d\n%6s %12s %10s %8s %12s\n", m, "n", "error", "order", "newton", "min_eig");
  double prev = 0.0;
  for (int n : grids) {
    const ManufacturedCase mc = manufactured_case(m, n);
    const ContinuityPath path = solve_calabi(mc.f, 1e-11, 10);
    double err = 0.0;
    for (std::size_t k = 0; k < mc.f.size(); ++k) err = std::max(err, std::abs(path.phi.values[k] - mc.phi_star.values[k]));
    int newton = 0;
    for (const auto& st : path.steps) newton += st.newton_iterations;
    if (prev > 0.0)
      std::printf("%6d %12.4e %10.3f %8d %12.6f\n", n, err, std::log2(prev / err), newton, path.min_eigenvalue);
    else
      std::printf("%6d %12.4e %10s %8d %12.6f\n", n, err, "-", newton, path.min_eigenvalue);
    prev = err;
  }
  return 0;
}
