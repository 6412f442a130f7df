#ifndef SLGEO_CLI_HPP
#define SLGEO_CLI_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "slgeo/calabi_solver.hpp"
#include "slgeo/core_geometry.hpp"
#include "slgeo/evolution.hpp"
#include "slgeo/graph_sl.hpp"
#include "slgeo/grid_field.hpp"
#include "slgeo/model_families.hpp"
#include "slgeo/report.hpp"
#include "slgeo/sl_fibrations.hpp"
#include "slgeo/u1_potential.hpp"

namespace slgeo::cli {

/// Flags shared by every subcommand.
struct Common {
  std::string out;
  bool no_timing = false;
  std::uint64_t seed = 1;
};

/// Point cloud as CSV with columns x1..x6 = (Re z1, Im z1, ..., Re z3, Im z3).
inline void write_cloud(const std::string& path, const std::vector<CVec>& points) {
  std::ofstream os(path);
  SLGEO_THROW_IF(!os, ErrorKind::FormatError, "cannot open " + path);
  os << "x1,x2,x3,x4,x5,x6\n";
  for (const auto& p : points) {
    SLGEO_THROW_IF(p.size() != 3, ErrorKind::InvalidDimension, "cloud points must lie in C^3");
    for (int k = 0; k < 3; ++k)
      os << detail::fmt17(p(k).real()) << ',' << detail::fmt17(p(k).imag()) << (k == 2 ? '\n' : ',');
  }
}

inline std::vector<CVec> to_cvec(const std::vector<CVec3>& pts) {
  std::vector<CVec> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.emplace_back(p);
  return out;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyArgs {
  std::string example;
  int samples = 10000;
  std::optional<double> tol;
  double t = 1.0;
};

inline void run_verify(const VerifyArgs& a, const Common& c, ReportEnvelope& rep) {
  rep.config() = {{"example", a.example}, {"samples", a.samples}, {"t", a.t}, {"seed", c.seed}};
  std::mt19937_64 rng(c.seed);
  const auto sweep = [&](const ModelFamily& fam) {
    const double tol = a.tol.value_or(1e-12);
    rep.config()["tol"] = tol;
    rep.results()["family"] = std::string(to_string(fam.kind));
    rep.check_le("sl_residual", sl_residual_sweep(fam, a.samples, c.seed), tol);
  };
  if (a.example == "hl-cone") {
    sweep(hl_cone());
  } else if (a.example == "hl") {
    sweep(hl_family(a.t));
  } else if (a.example == "so3") {
    sweep(so3_family(a.t));
  } else if (a.example == "quadric") {
    sweep(quadric_family(1, 2, a.t));
  } else if (a.example == "branched") {
    std::normal_distribution<double> n01;
    CVec u(3), w(3);
    for (int k = 0; k < 3; ++k) u(k) = cplx(n01(rng), n01(rng));
    for (int k = 0; k < 3; ++k) w(k) = cplx(n01(rng), n01(rng));
    const CVec ju = cplx(0, 1) * u;
    const CVec v = w - (kahler_pairing(u, w) / kahler_pairing(u, ju)) * ju;
    const double tol = a.tol.value_or(1e-10);
    rep.config()["tol"] = tol;
    rep.check_le("sl_residual", sl_residual_sweep(branched_family(u, v), a.samples, c.seed), tol);
  } else if (a.example == "calibration") {
    const double tol = a.tol.value_or(1e-12);
    rep.config()["tol"] = tol;
    double violation = -1.0, su_defect = 0.0;
    for (int m = 2; m <= 4; ++m) {
      const CYPackage pkg = standard_cy_package(m);
      for (int k = 0; k < a.samples; ++k)
        violation = std::max(violation, -calibration_defect(random_plane(m, rng), pkg));
      for (int k = 0; k < std::max(1, a.samples / 10); ++k)
        su_defect = std::max(su_defect, sl_defect(transform_plane(random_su(m, rng), real_plane(m)), pkg));
    }
    rep.check_le("calibration_violation", violation, tol);
    rep.check_le("su_orbit_sl_defect", su_defect, 1e-10);
  } else if (a.example == "graph") {
    const double tol = a.tol.value_or(1e-12);
    rep.config()["tol"] = tol;
    std::normal_distribution<double> n01;
    double gap = 0.0;
    for (int m = 2; m <= 4; ++m)
      for (int k = 0; k < a.samples; ++k) {
        Mat s(m, m);
        for (int i = 0; i < m; ++i)
          for (int j = 0; j <= i; ++j) s(i, j) = s(j, i) = n01(rng);
        const double det = sl_graph_residual_matrix(s);
        gap = std::max(gap, std::abs(residual_symmetric_form(s) - det) / std::max(1.0, std::abs(det)));
      }
    rep.check_le("symmetric_form_gap", gap, tol);
    rep.check_eq("witness_residual", sl_graph_residual_matrix(Eigen::Vector3d(1, 1, -2).asDiagonal()), 2.0, tol);
    double cf[10];
    for (double& v : cf) v = n01(rng);
    const auto cubic = [cf](const Vec& x) {
      return cf[0] * x(0) * x(0) * x(0) + cf[1] * x(1) * x(1) * x(1) + cf[2] * x(2) * x(2) * x(2) +
             cf[3] * x(0) * x(1) * x(2) + cf[4] * x(0) * x(0) * x(1) + cf[5] * x(1) * x(1) * x(2) +
             cf[6] * x(0) * x(0) + cf[7] * x(1) * x(1) + cf[8] * x(2) * x(2) + cf[9] * x(0) * x(2);
    };
    const GraphPotential f = sample_potential(3, cubic, {9, 9, 9}, {-0.4, -0.4, -0.4}, {0.1, 0.1, 0.1});
    std::vector<double> eps;
    for (int k = 2; k <= 8; ++k) eps.push_back(std::ldexp(1.0, -k));
    const auto gaps = linearization_gap(f, eps);
    const LineFit fit = fit_loglog(eps, gaps);
    rep.results()["linearization_gaps"] = gaps;
    rep.check_eq("linearization_slope", fit.degenerate ? std::nan("") : fit.slope, 3.0, 0.05);
  }
}

// ---------------------------------------------------------------------------
// solve-u1

struct SolveU1Args {
  double a = 1.0;
  std::string boundary = "quadratic";
  int grid = 65;
  double radius = 1.0;
  double tol = 1e-10;
  std::string init = "harmonic";
  int samples_per_node = 1;
  std::string grid_out;
  std::string cloud;
};

inline BoundaryData boundary_data(const std::string& name) {
  if (name == "zero") return [](double, double) { return 0.0; };
  if (name == "affine") return [](double x, double y) { return 0.8 * x - 0.35 * y; };
  if (name == "quadratic") return [](double x, double) { return x * x; };
  return [](double, double y) { return y; };
}

inline void run_solve_u1(const SolveU1Args& a, const Common& c, ReportEnvelope& rep) {
  rep.config() = {{"a", a.a},       {"boundary", a.boundary}, {"grid", a.grid},
                  {"radius", a.radius}, {"tol", a.tol},       {"init", a.init},
                  {"samples_per_node", a.samples_per_node},   {"seed", c.seed}};
  U1Options opt;
  opt.init = a.init == "zero" ? U1Options::Init::Zero
             : a.init == "random" ? U1Options::Init::Random
                                  : U1Options::Init::Harmonic;
  opt.seed = c.seed;
  const ConvexDomain dom = disc_domain(a.radius, a.grid);
  const BoundaryData phi = boundary_data(a.boundary);
  const PotentialSolution sol = solve_dirichlet(phi, a.a, dom, a.tol, opt);

  rep.check_le("residual_P", sol.residual_P, a.tol);
  if (a.boundary == "zero" || a.boundary == "affine") {
    const double b = a.boundary == "affine" ? 0.8 : 0.0, cc = a.boundary == "affine" ? -0.35 : 0.0;
    double err = 0.0;
    for (int j = 0; j < dom.n; ++j)
      for (int i = 0; i < dom.n; ++i)
        if (sol.f.inside(i, j)) {
          err = std::max(err, std::abs(sol.f(i, j) - (b * dom.x(i) + cc * dom.y(j))));
          err = std::max({err, std::abs(sol.u(i, j) - cc), std::abs(sol.v(i, j) - b)});
        }
    rep.check_le("affine_reproduction", err, 1e-12);
  }

  auto& r = rep.results();
  r["newton_iterations"] = sol.newton_iters;
  r["residual_P"] = sol.residual_P;
  r["residual_CR"] = sol.residual_CR;
  r["h"] = dom.h();
  r["f_sup_norm"] = sol.f.sup_norm();
  r["interior_nodes"] = sol.f.interior_count();
  if (a.a == 0.0) {
    r["continuation_a"] = sol.continuation_a;
    r["continuation_levels"] = sol.continuation_levels;
  }
  // A singular set covering the whole axis segment is a line, not a list of
  // isolated points; it is reported through singular_axis instead.
  const SingularSet sp = singular_points(sol);
  ojson pts = ojson::array();
  if (!sp.entire_axis)
    for (const auto& [x, z3] : sp.points) pts.push_back({{"x", x}, {"z3_re", z3.real()}, {"z3_im", z3.imag()}});
  r["singular_points"] = std::move(pts);
  r["singular_axis"] = sp.entire_axis;
  r["warnings"] = sol.warnings;

  if (a.a != 0.0) {
    const LiftedCloud cloud = lift_to_sl3(sol, a.samples_per_node);
    r["lifted_points"] = cloud.points.size();
    rep.check_le("lifted_sl_defect", cloud.max_sl_defect, 1e-5);
    rep.check_le("moment_map_error", cloud.max_moment_error, 1e-12);
    if (!a.cloud.empty()) {
      write_cloud(a.cloud, cloud.points);
      rep.add_artifact(a.cloud);
    }
  } else if (!a.cloud.empty()) {
    const LiftedCloud cloud = lift_to_sl3(sol, a.samples_per_node);
    r["lifted_points"] = cloud.points.size();
    write_cloud(a.cloud, cloud.points);
    rep.add_artifact(a.cloud);
  }
  if (!a.grid_out.empty()) {
    write_grid(a.grid_out, sol.f);
    rep.add_artifact(a.grid_out);
  }
}

// ---------------------------------------------------------------------------
// fibration

struct FibrationArgs {
  std::string model = "explicit";
  int count = 41;
  int samples = 6;
  double b_re = 0.0;
  double b_im = 0.0;
  int pairs = 100;
  int grid = 17;
  std::string cloud;
};

inline void run_fibration(const FibrationArgs& a, const Common& c, ReportEnvelope& rep) {
  rep.config() = {{"model", a.model}, {"samples", a.samples}, {"seed", c.seed}};
  auto& r = rep.results();
  std::vector<CVec> cloud;
  if (a.model == "explicit") {
    rep.config()["count"] = a.count;
    rep.config()["b"] = {a.b_re, a.b_im};
    const cplx b(a.b_re, a.b_im);
    const auto as = linspace(-1.0, 1.0, a.count);
    double roundtrip = 0.0, sl = 0.0;
    for (double al : as) {
      const FiberRecord rec = explicit_F_fiber(al, b, a.samples);
      for (const auto& p : rec.points) {
        const ExplicitValue v = explicit_F(p);
        roundtrip = std::max({roundtrip, std::abs(v.a - al), std::abs(v.b - b)});
      }
      sl = std::max(sl, rec.sl_residual_max);
      cloud.insert(cloud.end(), rec.points.begin(), rec.points.end());
    }
    rep.check_le("roundtrip_error", roundtrip, 1e-10);
    rep.check_le("sl_residual", sl, 1e-10);
    const auto hits = discriminant_scan_explicit(as, b, a.samples);
    std::vector<double> hit_a;
    for (const auto& h : hits) hit_a.push_back(h.alpha[0]);
    r["discriminant"] = hit_a;
    rep.check_eq("discriminant_hits", static_cast<double>(hits.size()), 1.0);
    rep.check_eq("discriminant_location", hits.size() == 1 ? hits[0].alpha[0] : std::nan(""), 0.0);
    const Topology neg = explicit_F_fiber(-0.5, b, a.samples).topology;
    const Topology zero = explicit_F_fiber(0.0, b, a.samples).topology;
    const Topology pos = explicit_F_fiber(0.5, b, a.samples).topology;
    r["topology"] = {std::string(to_string(neg)), std::string(to_string(zero)), std::string(to_string(pos))};
    const bool transition = neg == Topology::S1xR2 && zero == Topology::T2_cone && pos == Topology::S1xR2;
    rep.check_eq("topology_transition", transition ? 1.0 : 0.0, 1.0);
  } else if (a.model == "u1") {
    rep.config()["pairs"] = a.pairs;
    rep.config()["grid"] = a.grid;
    const FibrationFamily fam = build_family([](double x, double) { return x * x; }, disc_domain(1, a.grid),
                                             ParameterBox{{0.2, 1}, {-1, 1}, {-1, 1}}, a.grid, 1e-9);
    std::mt19937_64 rng(c.seed);
    std::uniform_real_distribution<double> ub(-1, 1);
    // Two a-levels keep the number of solves small; members are paired up
    // until the requested count is reached.
    const double levels[2] = {0.3, 0.8};
    std::vector<std::array<double, 3>> members;
    while (members.size() < 2 || members.size() * (members.size() - 1) / 2 < static_cast<std::size_t>(a.pairs))
      members.push_back({levels[members.size() % 2], ub(rng), ub(rng)});
    std::vector<std::pair<std::array<double, 3>, std::array<double, 3>>> pairs;
    for (std::size_t i = 0; i < members.size() && pairs.size() < static_cast<std::size_t>(a.pairs); ++i)
      for (std::size_t j = i + 1; j < members.size() && pairs.size() < static_cast<std::size_t>(a.pairs); ++j)
        pairs.emplace_back(members[i], members[j]);
    const DisjointReport dr = check_disjoint(fam, pairs);
    int zeros = 0, disjoint = 0, same_a = 0;
    for (const auto& pc : dr.pairs) {
      zeros += std::abs(pc.difference_zero_count);
      disjoint += pc.disjoint ? 1 : 0;
      same_a += pc.same_a ? 1 : 0;
    }
    r["same_a_pairs"] = same_a;
    r["solutions"] = fam.cached();
    rep.check_eq("difference_zeros", zeros, 0.0);
    rep.check_eq("disjoint_pairs", disjoint, static_cast<double>(dr.pairs.size()));
    if (!a.cloud.empty()) cloud = fam.fiber(members.front()).points;
  } else {
    const std::vector<Eigen::Vector3d> params{{0, 0, 0}, {1, 1, 0}, {0.5, -0.3, 0.2}, {-1, 0.2, -0.7}, {1, 0, 0}};
    ojson fibers = ojson::array();
    double roundtrip = 0.0, sl = 0.0;
    bool cone_ok = false, generic_ok = true;
    for (std::size_t k = 0; k < params.size(); ++k) {
      const auto& p = params[k];
      const FiberRecord rec = classify_fiber_hl(p(0), p(1), p(2), a.samples);
      for (const auto& q : rec.points) roundtrip = std::max(roundtrip, (harvey_lawson_F(q) - p).norm());
      sl = std::max(sl, rec.sl_residual_max);
      fibers.push_back({{"alpha", {p(0), p(1), p(2)}},
                        {"topology", std::string(to_string(rec.topology))},
                        {"singular_points", rec.singular_points.size()}});
      if (k == 0) {
        for (const auto& s : rec.singular_points) cone_ok = cone_ok || s.norm() < 1e-12;
        cone_ok = cone_ok && rec.topology == Topology::T2_cone;
      } else if (k < 4) {
        generic_ok = generic_ok && rec.singular_points.empty() && rec.topology == Topology::T3_like;
      }
      cloud.insert(cloud.end(), rec.points.begin(), rec.points.end());
    }
    r["fibers"] = std::move(fibers);
    rep.check_le("roundtrip_error", roundtrip, 1e-10);
    rep.check_le("sl_residual", sl, 1e-10);
    rep.check_eq("cone_fiber_singular_at_origin", cone_ok ? 1.0 : 0.0, 1.0);
    rep.check_eq("generic_fibers_smooth", generic_ok ? 1.0 : 0.0, 1.0);
  }
  if (!a.cloud.empty()) {
    write_cloud(a.cloud, cloud);
    rep.add_artifact(a.cloud);
  }
}

// ---------------------------------------------------------------------------
// solve-calabi

struct SolveCalabiArgs {
  int m = 2;
  int grid = 32;
  std::string source = "manufactured";
  int t_steps = 10;
  double tol = 1e-10;
  std::string out_phi;
};

inline void run_solve_calabi(const SolveCalabiArgs& a, const Common& c, ReportEnvelope& rep) {
  rep.config() = {{"m", a.m},         {"grid", a.grid}, {"source", a.source},
                  {"t_steps", a.t_steps}, {"tol", a.tol}, {"seed", c.seed}};
  std::optional<ManufacturedCase> mc;
  TorusField f;
  if (a.source == "manufactured") {
    mc = manufactured_case(a.m, a.grid);
    f = mc->f;
  } else if (a.source == "zero") {
    f = zero_torus(a.m, a.grid);
  } else {
    f = read_torus(a.source);
    rep.config()["m"] = f.m;
    rep.config()["grid"] = f.n;
  }
  f = normalize_source(f);
  CalabiOptions opt;
  opt.tol = a.tol;
  opt.t_steps = a.t_steps;
  const ContinuityPath path = solve_calabi(f, opt);

  rep.check_le("residual", path.residual, a.tol);
  rep.check_le("volume_identity", path.volume_identity, 1e-12);
  rep.check_eq("positivity_held", path.positivity_held ? 1.0 : 0.0, 1.0);
  auto& r = rep.results();
  r["h"] = f.h();
  r["min_eigenvalue"] = path.min_eigenvalue;
  r["shift"] = path.shift;
  r["phi_mean"] = path.phi_mean;
  r["phi_sup_norm"] = path.phi.sup_norm();
  r["halvings"] = path.halvings;
  ojson steps = ojson::array();
  for (const auto& st : path.steps)
    steps.push_back({{"t", st.t},
                     {"c_t", st.c_t},
                     {"newton_iterations", st.newton_iterations},
                     {"krylov_iterations", st.krylov_iterations},
                     {"residual", st.residual},
                     {"min_eigenvalue", st.min_eigenvalue}});
  r["steps"] = std::move(steps);
  if (mc) {
    double err = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) err = std::max(err, std::abs(path.phi.values[k] - mc->phi_star.values[k]));
    r["manufactured_error"] = err;
  }
  if (a.source == "zero") rep.check_eq("phi_sup_norm", path.phi.sup_norm(), 0.0);
  if (!a.out_phi.empty()) {
    write_torus(a.out_phi, path.phi);
    rep.add_artifact(a.out_phi);
  }
}

// ---------------------------------------------------------------------------
// evolve

struct EvolveArgs {
  std::string surface = "sphere";
  int nodes = 642;
  double dt = 0.01;
  double t_end = 0.5;
  double radius = 1.0;
  double phase = kPi / 6;
  double eps = 0.05;
  std::vector<double> probes;
  std::string cloud_dir;
};

inline void run_evolve(const EvolveArgs& a, const Common& c, ReportEnvelope& rep) {
  std::vector<double> probes = a.probes;
  if (probes.empty()) probes = {0.0, 0.5 * a.t_end, a.t_end};
  const int level = icosphere_level_for(a.nodes);
  rep.config() = {{"surface", a.surface}, {"nodes", icosphere_nodes(level)}, {"dt", a.dt},
                  {"t_end", a.t_end},     {"radius", a.radius},              {"phase", a.phase},
                  {"probes", probes},     {"seed", c.seed}};
  EvolvingSurface s = make_sphere_surface(level, a.radius, a.phase, a.dt);
  if (a.surface == "perturbed") {
    rep.config()["eps"] = a.eps;
    s = perturb_non_lagrangian(s, a.eps);
  }
  const EvolutionRun run = evolve(s, a.t_end);
  auto& r = rep.results();
  r["steps"] = run.times.size() - 1;
  r["rejected_steps"] = run.rejected_steps;
  r["final_time"] = run.times.back();
  r["initial_drift"] = run.drift.front();
  r["final_drift"] = run.drift.back();
  if (a.surface == "sphere") {
    rep.check_le("symplectic_drift", symplectic_drift(run), 1e-6);
    r["swept_sl_defect"] = swept_sl_defect(run);
    const So3Comparison cmp = compare_so3(run, probes);
    r["t_matched"] = cmp.t_matched;
    ojson pr = ojson::array();
    for (const auto& p : cmp.probes)
      pr.push_back({{"time", p.time}, {"theta", p.theta}, {"radial_deviation", p.radial_deviation},
                    {"phase_deviation", p.phase_deviation}});
    r["probes"] = std::move(pr);
    rep.check_le("so3_deviation", cmp.max_deviation, 1e-3);
  } else {
    rep.check_le("drift_growth", run.drift.back() / run.drift.front(), 2.0);
  }
  if (!a.cloud_dir.empty()) {
    std::filesystem::create_directories(a.cloud_dir);
    for (std::size_t k = 0; k < probes.size(); ++k) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < run.times.size(); ++i)
        if (std::abs(run.times[i] - probes[k]) < std::abs(run.times[best] - probes[k])) best = i;
      const std::string path = (std::filesystem::path(a.cloud_dir) / ("state_" + std::to_string(k) + ".csv")).string();
      write_cloud(path, to_cvec(run.states[best]));
      rep.add_artifact(path);
    }
  }
}

// ---------------------------------------------------------------------------
// index, moduli-dim

struct IndexArgs {
  std::string gram = "l0";
  int cutoff = 8;
  int m = 3;
};

inline void run_index(const IndexArgs& a, const Common& c, ReportEnvelope& rep) {
  rep.config() = {{"gram", a.gram}, {"cutoff", a.cutoff}, {"m", a.m}, {"seed", c.seed}};
  const Eigen::Matrix2d g = a.gram == "l0" ? l0_link_gram() : Eigen::Matrix2d::Identity();
  const int idx = legendrian_index_flat_torus(g, a.m, a.cutoff);
  const int idx2 = legendrian_index_flat_torus(g, a.m, 2 * a.cutoff);
  auto& r = rep.results();
  r["index"] = idx;
  r["index_doubled_cutoff"] = idx2;
  r["multiplicity_m_minus_1"] = eigenvalue_multiplicity(g, a.m - 1.0, a.cutoff);
  r["multiplicity_2m"] = eigenvalue_multiplicity(g, 2.0 * a.m, a.cutoff);
  rep.check_eq("cutoff_doubling_change", std::abs(idx2 - idx), 0.0);
  if (a.gram == "l0")
    rep.check_ge("linear_eigenvalue_multiplicity", eigenvalue_multiplicity(g, a.m - 1.0, a.cutoff), 1.0);
}

struct ModuliArgs {
  int vars = 5;
  std::vector<int> degrees{5};
};

inline void run_moduli(const ModuliArgs& a, const Common& c, ReportEnvelope& rep) {
  rep.config() = {{"vars", a.vars}, {"degrees", a.degrees}, {"seed", c.seed}};
  const ModuliResult m = ci_moduli_dimension(a.vars, a.degrees);
  auto& r = rep.results();
  r["dimension"] = m.dimension;
  r["polynomial_space"] = m.polynomial_space;
  r["degenerate"] = m.degenerate;
  r["overdetermined"] = m.overdetermined;
  rep.check_ge("moduli_dimension", static_cast<double>(m.dimension), 0.0);
}

// ---------------------------------------------------------------------------
// Driver

/// Failures of a numerical method on valid input; everything else thrown by
/// the library is an input error.
inline bool is_numerical_failure(ErrorKind k) {
  return k == ErrorKind::Divergence || k == ErrorKind::PathFailure || k == ErrorKind::NonKahlerIterate ||
         k == ErrorKind::FitFailure;
}

/// Runs one subcommand; args excludes the program name. Exit codes: 0 all
/// checks pass, 1 a check failed, 2 usage or input error.
inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Numerical checks for special Lagrangian geometry", "slgeo"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  Common common;
  VerifyArgs va;
  SolveU1Args ua;
  FibrationArgs fa;
  SolveCalabiArgs ca;
  EvolveArgs ea;
  IndexArgs ia;
  ModuliArgs ma;

  auto add_common = [&](CLI::App* s) {
    s->add_option("--out", common.out, "Write the JSON report here instead of stdout");
    s->add_flag("--no-timing", common.no_timing, "Omit timing from the report");
    s->add_option("--seed", common.seed, "Random seed");
  };

  auto* verify = app.add_subcommand("verify", "Check closed-form examples and algebraic identities");
  verify->add_option("--example", va.example)
      ->required()
      ->check(CLI::IsMember({"hl-cone", "hl", "so3", "quadric", "branched", "calibration", "graph"}));
  verify->add_option("--samples", va.samples)->check(CLI::Range(1, 100000000));
  verify->add_option("--tol", va.tol)->check(CLI::PositiveNumber);
  verify->add_option("--t", va.t, "Family parameter");
  add_common(verify);

  auto* u1 = app.add_subcommand("solve-u1", "Solve the U(1)-invariant Dirichlet problem on a disc");
  u1->add_option("--a", ua.a);
  u1->add_option("--boundary", ua.boundary)->check(CLI::IsMember({"zero", "affine", "quadratic", "odd"}));
  u1->add_option("--grid", ua.grid)->check(CLI::Range(17, 4097));
  u1->add_option("--radius", ua.radius)->check(CLI::PositiveNumber);
  u1->add_option("--tol", ua.tol)->check(CLI::PositiveNumber);
  u1->add_option("--init", ua.init)->check(CLI::IsMember({"harmonic", "zero", "random"}));
  u1->add_option("--samples-per-node", ua.samples_per_node)->check(CLI::Range(1, 1000));
  u1->add_option("--grid-out", ua.grid_out, "Write f as a grid CSV");
  u1->add_option("--cloud", ua.cloud, "Write the lifted 3-fold as a point cloud CSV");
  add_common(u1);

  auto* fib = app.add_subcommand("fibration", "Check fibrations by special Lagrangian 3-folds");
  fib->add_option("--model", fa.model)->check(CLI::IsMember({"explicit", "u1", "harvey-lawson"}));
  fib->add_option("--count", fa.count, "Number of a-values in the scan")->check(CLI::Range(2, 100000));
  fib->add_option("--samples", fa.samples)->check(CLI::Range(1, 1000));
  fib->add_option("--b-re", fa.b_re);
  fib->add_option("--b-im", fa.b_im);
  fib->add_option("--pairs", fa.pairs)->check(CLI::Range(1, 100000));
  fib->add_option("--grid", fa.grid)->check(CLI::Range(17, 1025));
  fib->add_option("--cloud", fa.cloud);
  add_common(fib);

  auto* cal = app.add_subcommand("solve-calabi", "Solve the complex Monge-Ampere equation on a flat torus");
  cal->add_option("--m", ca.m)->check(CLI::Range(1, 2));
  cal->add_option("--grid", ca.grid)->check(CLI::Range(16, 1024));
  cal->add_option("--source", ca.source, "manufactured, zero, or a torus file");
  cal->add_option("--t-steps", ca.t_steps)->check(CLI::Range(1, 100000));
  cal->add_option("--tol", ca.tol)->check(CLI::PositiveNumber);
  cal->add_option("--out-phi", ca.out_phi);
  add_common(cal);

  auto* evo = app.add_subcommand("evolve", "Evolve a sphere in C^3 by the special Lagrangian flow");
  evo->add_option("--surface", ea.surface)->check(CLI::IsMember({"sphere", "perturbed"}));
  evo->add_option("--nodes", ea.nodes)->check(CLI::Range(12, 163842));
  evo->add_option("--dt", ea.dt)->check(CLI::PositiveNumber);
  evo->add_option("--t-end", ea.t_end)->check(CLI::NonNegativeNumber);
  evo->add_option("--radius", ea.radius)->check(CLI::PositiveNumber);
  evo->add_option("--phase", ea.phase);
  evo->add_option("--eps", ea.eps);
  evo->add_option("--probes", ea.probes)->delimiter(',');
  evo->add_option("--cloud-dir", ea.cloud_dir);
  add_common(evo);

  auto* idx = app.add_subcommand("index", "Legendrian index of a flat-torus link");
  idx->add_option("--gram", ia.gram)->check(CLI::IsMember({"l0", "identity"}));
  idx->add_option("--cutoff", ia.cutoff)->check(CLI::Range(1, 1000));
  idx->add_option("--m", ia.m)->check(CLI::Range(2, 100));
  add_common(idx);

  auto* mod = app.add_subcommand("moduli-dim", "Moduli dimension of a complete intersection");
  mod->add_option("--vars", ma.vars)->check(CLI::Range(1, 1000));
  mod->add_option("--degrees", ma.degrees)->expected(1, -1)->delimiter(',');
  add_common(mod);

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  ReportEnvelope rep(sub->get_name());
  const Stopwatch clock;
  try {
    if (sub == verify) run_verify(va, common, rep);
    else if (sub == u1) run_solve_u1(ua, common, rep);
    else if (sub == fib) run_fibration(fa, common, rep);
    else if (sub == cal) run_solve_calabi(ca, common, rep);
    else if (sub == evo) run_evolve(ea, common, rep);
    else if (sub == idx) run_index(ia, common, rep);
    else run_moduli(ma, common, rep);
  } catch (const Error& e) {
    if (!is_numerical_failure(e.kind())) {
      err << "slgeo: " << e.what() << '\n';
      return 2;
    }
    rep.results()["error"] = e.what();
    rep.check_le(std::string(to_string(e.kind())), 1.0, 0.0);
  } catch (const std::exception& e) {
    err << "slgeo: " << e.what() << '\n';
    return 2;
  }
  rep.set_elapsed(clock.seconds());

  if (common.out.empty()) {
    rep.write(out, !common.no_timing);
  } else {
    std::ofstream os(common.out);
    if (!os) {
      err << "slgeo: cannot open " << common.out << '\n';
      return 2;
    }
    rep.write(os, !common.no_timing);
  }
  const auto failing = rep.failing();
  for (const auto& name : failing) err << "FAILED " << name << '\n';
  return failing.empty() ? 0 : 1;
}

inline int run(int argc, char** argv) {
  std::vector<std::string> args(argv + std::min(argc, 1), argv + argc);
  return run(std::move(args), std::cout, std::cerr);
}

}  // namespace slgeo::cli

#endif  // SLGEO_CLI_HPP
