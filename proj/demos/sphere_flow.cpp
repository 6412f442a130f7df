// Flows a round sphere in e^{i pi/6} R^3 and prints its phase and radius
// next to the SO(3)-invariant family it should follow.
#include <cmath>
#include <cstdio>

#include "slgeo/evolution.hpp"

using namespace slgeo;

int main() {
  const EvolutionRun run = evolve(make_sphere_surface(3, 1.0, kPi / 6, 0.01), 1.0);
  std::printf("%6s %10s %10s %12s\n", "t", "theta", "radius", "drift");
  for (std::size_t i = 0; i < run.times.size(); i += 10) {
    const So3Comparison c = compare_so3(run, {run.times[i]});
    std::printf("%6.2f %10.6f %10.6f %12.3e\n", run.times[i], c.probes[0].theta, run.states[i][0].norm(), run.drift[i]);
  }
  const So3Comparison all = compare_so3(run, {0.0, 0.5, 1.0});
  std::printf("matched family member t = %.9f, max relative deviation %.3e\n", all.t_matched, all.max_deviation);
  return 0;
}
