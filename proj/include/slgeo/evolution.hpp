#ifndef SLGEO_EVOLUTION_HPP
#define SLGEO_EVOLUTION_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <set>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/numeric/odeint.hpp>

#include "slgeo/core_geometry.hpp"
#include "slgeo/errors.hpp"
#include "slgeo/numerics.hpp"

namespace slgeo {

using CVec3 = Eigen::Vector3cd;

/// Geodesic icosphere: the parameter surface P = S^2 for the evolution.
struct SphereMesh {
  int level = 0;
  std::vector<Eigen::Vector3d> nodes;
  std::vector<std::array<int, 3>> triangles;  // outward orientation
  std::vector<std::vector<int>> neighbours;
  std::vector<Eigen::Vector3d> e1, e2;  // oriented tangent frame, e1 x e2 = outward normal
  /// Per node: weights G with d phi(e_a) ~ sum_j (phi_j - phi_k) G(j, a). The
  /// weights come from a least-squares linear fit on neighbour chords, so they
  /// reproduce the derivative of any linear map exactly.
  std::vector<Eigen::MatrixX2d> stencil;

  [[nodiscard]] std::size_t size() const { return nodes.size(); }
};

inline int icosphere_nodes(int level) { return 10 * (1 << (2 * level)) + 2; }

/// Smallest level whose node count is at least `nodes`.
inline int icosphere_level_for(int nodes) {
  SLGEO_THROW_IF(nodes < 12 || nodes > icosphere_nodes(7), ErrorKind::InvalidArgument,
                 "icosphere node count must be in [12, 163842]");
  int level = 0;
  while (icosphere_nodes(level) < nodes) ++level;
  return level;
}

inline SphereMesh icosphere(int level) {
  SLGEO_THROW_IF(level < 0 || level > 7, ErrorKind::InvalidArgument, "icosphere level must be in [0, 7]");
  SphereMesh mesh;
  mesh.level = level;
  const double g = (1.0 + std::sqrt(5.0)) / 2.0;
  for (const auto& v : std::vector<Eigen::Vector3d>{{-1, g, 0}, {1, g, 0}, {-1, -g, 0}, {1, -g, 0},
                                                    {0, -1, g}, {0, 1, g}, {0, -1, -g}, {0, 1, -g},
                                                    {g, 0, -1}, {g, 0, 1}, {-g, 0, -1}, {-g, 0, 1}})
    mesh.nodes.push_back(v.normalized());
  mesh.triangles = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                    {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                    {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (int l = 0; l < level; ++l) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      if (auto it = mid.find(key); it != mid.end()) return it->second;
      mesh.nodes.push_back((mesh.nodes[a] + mesh.nodes[b]).normalized());
      const int id = static_cast<int>(mesh.nodes.size()) - 1;
      mid.emplace(key, id);
      return id;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(mesh.triangles.size() * 4);
    for (const auto& t : mesh.triangles) {
      const int a = midpoint(t[0], t[1]), b = midpoint(t[1], t[2]), c = midpoint(t[2], t[0]);
      next.push_back({t[0], a, c});
      next.push_back({t[1], b, a});
      next.push_back({t[2], c, b});
      next.push_back({a, b, c});
    }
    mesh.triangles = std::move(next);
  }

  const std::size_t n = mesh.nodes.size();
  std::vector<std::set<int>> nb(n);
  for (const auto& t : mesh.triangles)
    for (int k = 0; k < 3; ++k) {
      nb[t[k]].insert(t[(k + 1) % 3]);
      nb[t[k]].insert(t[(k + 2) % 3]);
    }
  mesh.neighbours.resize(n);
  mesh.e1.resize(n);
  mesh.e2.resize(n);
  mesh.stencil.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Eigen::Vector3d& q = mesh.nodes[k];
    mesh.neighbours[k].assign(nb[k].begin(), nb[k].end());
    const Eigen::Vector3d seed = std::abs(q.x()) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
    mesh.e1[k] = (seed - seed.dot(q) * q).normalized();
    mesh.e2[k] = q.cross(mesh.e1[k]);
    const auto& nbk = mesh.neighbours[k];
    Eigen::Matrix3Xd c(3, nbk.size());
    for (std::size_t j = 0; j < nbk.size(); ++j) c.col(j) = mesh.nodes[nbk[j]] - q;
    Eigen::Matrix<double, 3, 2> e;
    e << mesh.e1[k], mesh.e2[k];
    mesh.stencil[k] = c.transpose() * (c * c.transpose()).ldlt().solve(e);
  }
  return mesh;
}

/// A surface phi: P -> C^3 with the bivector section chi = chi_k e1 ^ e2 at node k.
struct EvolvingSurface {
  std::shared_ptr<const SphereMesh> mesh;
  std::vector<double> chi;
  std::vector<CVec3> position;
  double t = 0.0;
  double dt = 0.01;
};

/// Round sphere of the given radius inside e^{i phase} R^3, with unit chi.
inline EvolvingSurface make_sphere_surface(int level, double radius = 1.0, double phase = kPi / 6,
                                           double dt = 0.01) {
  SLGEO_THROW_IF(!(radius > 0.0), ErrorKind::InvalidArgument, "radius must be positive");
  EvolvingSurface s;
  s.mesh = std::make_shared<const SphereMesh>(icosphere(level));
  s.chi.assign(s.mesh->size(), 1.0);
  const cplx u = std::polar(radius, phase);
  for (const auto& q : s.mesh->nodes) s.position.push_back(u * q.cast<cplx>());
  s.dt = dt;
  return s;
}

/// Adds i eps e^{i phase} (-q2, q1, 0): a non-Lagrangian perturbation.
inline EvolvingSurface perturb_non_lagrangian(EvolvingSurface s, double eps, double phase = kPi / 6) {
  const cplx u = std::polar(eps, phase) * cplx(0, 1);
  for (std::size_t k = 0; k < s.position.size(); ++k) {
    const Eigen::Vector3d& q = s.mesh->nodes[k];
    s.position[k] += u * CVec3(-q.y(), q.x(), 0.0);
  }
  return s;
}

inline void check_chi(const std::vector<double>& chi) {
  for (double c : chi)
    SLGEO_THROW_IF(!(std::abs(c) > 0.0) || !std::isfinite(c), ErrorKind::InvalidChi,
                   "chi must be a nonvanishing section");
}

/// Pushed-forward tangents (d phi(e1), d phi(e2)) at every node.
inline std::vector<std::pair<CVec3, CVec3>> node_tangents(const SphereMesh& mesh, const std::vector<CVec3>& x) {
  std::vector<std::pair<CVec3, CVec3>> out(mesh.size());
  for (std::size_t k = 0; k < mesh.size(); ++k) {
    CVec3 t1 = CVec3::Zero(), t2 = CVec3::Zero();
    const auto& nbk = mesh.neighbours[k];
    for (std::size_t j = 0; j < nbk.size(); ++j) {
      const CVec3 d = x[nbk[j]] - x[k];
      t1 += mesh.stencil[k](j, 0) * d;
      t2 += mesh.stencil[k](j, 1) * d;
    }
    out[k] = {t1, t2};
  }
  return out;
}

/// Velocity field of the evolution: the vector dual, under the Euclidean
/// metric, to Re Omega(phi_* chi, .). For chi = c e1 ^ e2 this is
/// c conj(T1 x T2) with T_a = d phi(e_a).
inline std::vector<CVec3> surface_velocity(const SphereMesh& mesh, const std::vector<double>& chi,
                                           const std::vector<CVec3>& x) {
  const auto tangents = node_tangents(mesh, x);
  std::vector<CVec3> v(mesh.size());
  for (std::size_t k = 0; k < mesh.size(); ++k) {
    const CVec3& a = tangents[k].first;
    const CVec3& b = tangents[k].second;
    // Eigen's complex cross() conjugates its result; spell the product out.
    const CVec3 axb(a(1) * b(2) - a(2) * b(1), a(2) * b(0) - a(0) * b(2), a(0) * b(1) - a(1) * b(0));
    v[k] = chi[k] * axb.conjugate();
  }
  return v;
}

inline std::vector<CVec3> surface_velocity(const EvolvingSurface& s) {
  check_chi(s.chi);
  return surface_velocity(*s.mesh, s.chi, s.position);
}

/// max over cells of |omega(b - a, c - a)|, omega(u, w) = Im sum conj(u_k) w_k.
inline double cell_omega_max(const SphereMesh& mesh, const std::vector<CVec3>& x) {
  double worst = 0.0;
  for (const auto& t : mesh.triangles) {
    const CVec3 u = x[t[1]] - x[t[0]], w = x[t[2]] - x[t[0]];
    worst = std::max(worst, std::abs(u.dot(w).imag()));  // Eigen's dot conjugates the first argument
  }
  return worst;
}

struct StepOptions {
  /// A step is rejected when the cell pullback of omega exceeds
  /// max(drift_threshold, 2 * initial drift).
  double drift_threshold = 1e-9;
  int max_halvings = 20;
};

namespace detail {

inline std::vector<double> pack(const std::vector<CVec3>& x) {
  std::vector<double> s(6 * x.size());
  for (std::size_t k = 0; k < x.size(); ++k)
    for (int c = 0; c < 3; ++c) {
      s[6 * k + 2 * c] = x[k](c).real();
      s[6 * k + 2 * c + 1] = x[k](c).imag();
    }
  return s;
}

inline std::vector<CVec3> unpack(const std::vector<double>& s) {
  std::vector<CVec3> x(s.size() / 6);
  for (std::size_t k = 0; k < x.size(); ++k)
    for (int c = 0; c < 3; ++c) x[k](c) = cplx(s[6 * k + 2 * c], s[6 * k + 2 * c + 1]);
  return x;
}

inline std::vector<CVec3> rk4_step(const SphereMesh& mesh, const std::vector<double>& chi,
                                   const std::vector<CVec3>& x, double t, double dt) {
  auto rhs = [&](const std::vector<double>& s, std::vector<double>& ds, double) {
    ds = pack(surface_velocity(mesh, chi, unpack(s)));
  };
  boost::numeric::odeint::runge_kutta4<std::vector<double>> rk;
  std::vector<double> s = pack(x);
  rk.do_step(rhs, s, t, dt);
  return unpack(s);
}

inline bool all_finite(const std::vector<CVec3>& x) {
  for (const auto& p : x)
    if (!p.allFinite()) return false;
  return true;
}

}  // namespace detail

/// One accepted RK4 step of length s.dt, halving dt on rejection; the
/// returned surface carries the dt actually used.
inline EvolvingSurface evolve_step(const EvolvingSurface& s, const StepOptions& opt = {},
                                   double initial_drift = -1.0) {
  check_chi(s.chi);
  SLGEO_THROW_IF(s.dt == 0.0 || !std::isfinite(s.dt), ErrorKind::InvalidArgument, "dt must be nonzero");
  if (initial_drift < 0.0) initial_drift = cell_omega_max(*s.mesh, s.position);
  const double limit = std::max(opt.drift_threshold, 2.0 * initial_drift);
  double dt = s.dt;
  for (int h = 0; h <= opt.max_halvings; ++h, dt *= 0.5) {
    std::vector<CVec3> x = detail::rk4_step(*s.mesh, s.chi, s.position, s.t, dt);
    if (!detail::all_finite(x) || cell_omega_max(*s.mesh, x) > limit) continue;
    EvolvingSurface out = s;
    out.position = std::move(x);
    out.t = s.t + dt;
    out.dt = dt;
    return out;
  }
  throw DivergenceError("evolution step rejected after " + std::to_string(opt.max_halvings) + " halvings",
                        cell_omega_max(*s.mesh, s.position));
}

struct EvolutionRun {
  std::shared_ptr<const SphereMesh> mesh;
  std::vector<double> chi;
  std::vector<double> times;
  std::vector<std::vector<CVec3>> states;
  std::vector<double> drift;  // cell omega maximum per state
  int rejected_steps = 0;
};

/// Integrates from s.t to t_end (either direction) with step s.dt,
/// clipping the last step to land on t_end.
inline EvolutionRun evolve(EvolvingSurface s, double t_end, const StepOptions& opt = {}) {
  check_chi(s.chi);
  SLGEO_THROW_IF(s.dt == 0.0, ErrorKind::InvalidArgument, "dt must be nonzero");
  const double dir = t_end >= s.t ? 1.0 : -1.0;
  const double base = dir * std::abs(s.dt);
  EvolutionRun run;
  run.mesh = s.mesh;
  run.chi = s.chi;
  const double d0 = cell_omega_max(*s.mesh, s.position);
  run.times.push_back(s.t);
  run.states.push_back(s.position);
  run.drift.push_back(d0);
  while (dir * (t_end - s.t) > 1e-12 * std::max(1.0, std::abs(t_end))) {
    const double remaining = t_end - s.t;
    s.dt = std::abs(base) < std::abs(remaining) ? base : remaining;
    const double want = s.dt;
    s = evolve_step(s, opt, d0);
    if (s.dt != want) ++run.rejected_steps;
    run.times.push_back(s.t);
    run.states.push_back(s.position);
    run.drift.push_back(cell_omega_max(*s.mesh, s.position));
  }
  return run;
}

/// max over cells and times of |phi_t^* omega|.
inline double symplectic_drift(const EvolutionRun& run) {
  SLGEO_THROW_IF(run.states.empty(), ErrorKind::InvalidArgument, "run has no states");
  return *std::max_element(run.drift.begin(), run.drift.end());
}

/// max sl_defect of the swept tangent 3-planes span(T1, T2, velocity).
inline double swept_sl_defect(const EvolutionRun& run) {
  const CYPackage pkg = standard_cy_package(3);
  double worst = 0.0;
  for (const auto& x : run.states) {
    const auto tangents = node_tangents(*run.mesh, x);
    const auto v = surface_velocity(*run.mesh, run.chi, x);
    for (std::size_t k = 0; k < x.size(); ++k) {
      Mat basis(6, 3);
      basis.col(0) = to_real(tangents[k].first);
      basis.col(1) = to_real(tangents[k].second);
      basis.col(2) = to_real(v[k]);
      worst = std::max(worst, sl_defect(make_plane(basis), pkg));
    }
  }
  return worst;
}

struct So3Probe {
  double time = 0.0;
  double theta = 0.0;              // mean phase of the nodes
  double radial_deviation = 0.0;   // max | |p| - t R(theta) | / (t R(theta))
  double phase_deviation = 0.0;    // max |Im(e^{-i theta} p)| / |p|
};

struct So3Comparison {
  double t_matched = 0.0;
  std::vector<So3Probe> probes;
  double max_deviation = 0.0;
};

/// Fits the evolved surfaces at the probe times (nearest recorded states) to
/// L_t = { e^{i theta} x : x in R^3, |x|^2 = t^2 (sin 3 theta)^{-2/3} }, one t
/// for the whole run matched by least squares over all nodes and probes.
inline So3Comparison compare_so3(const EvolutionRun& run, const std::vector<double>& t_probe) {
  SLGEO_THROW_IF(run.states.empty() || t_probe.empty(), ErrorKind::InvalidArgument, "need states and probes");
  struct NodeFit {
    double theta, radius, phase_dev;
  };
  std::vector<std::vector<NodeFit>> fits;
  So3Comparison out;
  double num = 0.0, den = 0.0;
  for (double tp : t_probe) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < run.times.size(); ++i)
      if (std::abs(run.times[i] - tp) < std::abs(run.times[best] - tp)) best = i;
    const auto& x = run.states[best];
    std::vector<NodeFit> f;
    double theta_sum = 0.0;
    for (const auto& p : x) {
      const double theta = 0.5 * std::arg(p.cwiseProduct(p).sum());
      const double r = p.norm();
      SLGEO_THROW_IF(!(theta > 0.0 && theta < kPi / 3) || !(r > 0.0), ErrorKind::FitFailure,
                     "surface point outside the family's phase range (0, pi/3)");
      const double phase_dev = (std::polar(1.0, -theta) * p).imag().norm() / r;
      f.push_back({theta, r, phase_dev});
      const double s = std::pow(std::sin(3 * theta), -1.0 / 3.0);
      num += r * s;
      den += s * s;
      theta_sum += theta;
    }
    So3Probe pr;
    pr.time = run.times[best];
    pr.theta = theta_sum / static_cast<double>(x.size());
    out.probes.push_back(pr);
    fits.push_back(std::move(f));
  }
  out.t_matched = num / den;
  for (std::size_t i = 0; i < fits.size(); ++i) {
    for (const auto& nf : fits[i]) {
      const double model = out.t_matched * std::pow(std::sin(3 * nf.theta), -1.0 / 3.0);
      out.probes[i].radial_deviation = std::max(out.probes[i].radial_deviation, std::abs(nf.radius - model) / model);
      out.probes[i].phase_deviation = std::max(out.probes[i].phase_deviation, nf.phase_dev);
    }
    out.max_deviation = std::max({out.max_deviation, out.probes[i].radial_deviation, out.probes[i].phase_deviation});
  }
  return out;
}

}  // namespace slgeo

#endif  // SLGEO_EVOLUTION_HPP
