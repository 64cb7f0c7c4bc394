#pragma once

// End-to-end verification report: runs the checks of every module at a given
// m and collects pass/fail gates with their numbers and tolerances as JSON.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mstlimits/analysis.hpp"
#include "mstlimits/cascade.hpp"
#include "mstlimits/fixpoint.hpp"
#include "mstlimits/moments.hpp"
#include "mstlimits/spectral.hpp"
#include "mstlimits/stats.hpp"
#include "mstlimits/treesim.hpp"

namespace mst {

using json = nlohmann::ordered_json;

inline json to_json(cplx z) { return json{{"re", z.real()}, {"im", z.imag()}}; }

struct ReportConfig {
  int m = 27;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::int64_t xi_reps = 20000;
  std::int64_t xi_steps = 1000;
  std::int64_t dt_reps = 4000;
  std::int64_t dt_steps = 200;
  std::size_t pool = 100000;
  int generations = 60;
  int replicate_pools = 4;
  std::size_t cascade_reps = 4000;
  int moment_order = 8;
  int spiral_targets = 20;
  double z_gate = 4.0;
};

namespace detail {

struct GateLog {
  json gates = json::array();
  bool ok = true;

  void add(const std::string& name, bool pass, json values, json tolerance) {
    gates.push_back({{"name", name}, {"status", pass ? "pass" : "fail"}, {"values", std::move(values)},
                     {"tolerance", std::move(tolerance)}});
    ok = ok && pass;
  }
  void skip(const std::string& name, const std::string& why) {
    gates.push_back({{"name", name}, {"status", "skipped"}, {"reason", why}});
  }
  void error(const std::string& name, const Error& e) {
    gates.push_back({{"name", name}, {"status", "error"}, {"code", to_string(e.code())}, {"message", e.what()}});
    ok = false;
  }
  void run(const std::string& name, const std::function<void()>& body) {
    try {
      body();
    } catch (const Error& e) {
      error(name, e);
    }
  }
};

inline bool within(double x, double target, double se, double z) { return std::abs(x - target) <= z * se; }

}  // namespace detail

/// Runs, in order: spectral invariants, phase transition, treesim, fixpoint,
/// cascade, moments vs Monte Carlo, ODE check and analysis. For m = 3 (no
/// lambda2) only the spectral part runs. Output depends only on the config.
inline json verification_report(const ReportConfig& cfg) {
  check_branching_factor(cfg.m, 3);
  const int m = cfg.m;
  detail::GateLog log;
  json out;
  out["schema"] = 1;
  out["m"] = m;
  out["seed"] = cfg.seed;

  SpectralData spec;
  bool have_lambda2 = false;
  log.run("spectral", [&] {
    const auto er = eigenvalues_with_residuals(m);
    double maxres = 0.0;
    for (double r : er.residuals) maxres = std::max(maxres, r);
    json eig = json::array();
    for (const cplx e : er.values) eig.push_back(to_json(e));
    out["eigenvalues"] = eig;
    try {
      spec = eigen_data(m);
      have_lambda2 = true;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::no_lambda2) throw;
      out["lambda2"] = nullptr;
      out["note"] = std::string("no-lambda2: ") + e.what();
    }
    if (have_lambda2) {
      const auto c = check_spectral(spec);
      out["lambda2"] = to_json(spec.lambda2);
      log.add("spectral",
              c.max_root_residual <= kIdentityTol && c.eigenform_u1 <= kIdentityTol &&
                  c.eigenform_u2 <= kIdentityTol && c.duality <= kIdentityTol && c.one_is_dominant,
              {{"max_root_residual", c.max_root_residual},
               {"eigenform_u2", c.eigenform_u2},
               {"duality", c.duality},
               {"min_separation", c.min_separation}},
              kIdentityTol);
    } else {
      log.add("spectral", maxres <= kIdentityTol, {{"max_root_residual", maxres}}, kIdentityTol);
    }
  });
  if (!have_lambda2) {
    out["scope"] = "spectral-only";
    out["gates"] = log.gates;
    out["pass"] = log.ok;
    return out;
  }
  out["scope"] = "full";

  const double sigma2 = spec.sigma2;
  const bool l2_regime = sigma2 > 0.5;
  log.add("phase-transition", l2_regime == (m >= 27), {{"sigma2", sigma2}, {"square_integrable", l2_regime}},
          "Re(lambda2) > 1/2 iff m >= 27");

  log.run("treesim-xi-gamma", [&] {
    const auto xi = xi_samples(cfg.xi_steps, 1, cfg.xi_reps, derive_seed(cfg.seed, "report-xi"), cfg.threads);
    bool pass = true;
    json vals = json::array();
    for (int p = 1; p <= 2; ++p) {
      std::vector<double> v(xi.size());
      for (std::size_t i = 0; i < xi.size(); ++i) v[i] = std::pow(xi[i], p);
      const auto ms = stats::mean_se(v);
      const double target = factorial(p);
      pass = pass && detail::within(ms.mean, target, ms.se, cfg.z_gate);
      vals.push_back({{"p", p}, {"mean", ms.mean}, {"se", ms.se}, {"target", target}});
    }
    log.add("treesim-xi-gamma", pass, vals, {{"z", cfg.z_gate}});
  });

  log.run("treesim-martingale", [&] {
    const auto reps = simulate_replicas(spec, CompositionVector::unit(m, 1), cfg.dt_steps, cfg.dt_reps,
                                        derive_seed(cfg.seed, "report-dt"), SimMode::discrete, cfg.threads);
    std::vector<cplx> w;
    for (const auto& r : reps) w.push_back(r.wdt_hat);
    const auto ms = stats::mean_se(std::span<const cplx>(w));
    const bool pass = detail::within(ms.mean.real(), 1.0, ms.se_re, cfg.z_gate) &&
                      detail::within(ms.mean.imag(), 0.0, ms.se_im, cfg.z_gate);
    log.add("treesim-martingale", pass, {{"mean", to_json(ms.mean)}, {"se_re", ms.se_re}, {"se_im", ms.se_im}},
            {{"z", cfg.z_gate}});
  });

  if (!l2_regime) {
    for (const char* g : {"fixpoint-contraction", "fixpoint-mean", "cascade-variance", "moments-vs-mc",
                          "analysis-psi", "analysis-support"})
      log.skip(g, "Re(lambda2) <= 1/2: no square-integrable fixed point");
  } else {
    log.run("fixpoint-contraction", [&] {
      const double c = contraction_constant(m, spec.lambda2);
      log.add("fixpoint-contraction", c < 1.0, {{"contraction", c}}, "< 1");
    });

    log.run("fixpoint-mean", [&] {
      FixpointConfig fc;
      fc.m = m;
      fc.pool_size = cfg.pool;
      fc.iters = cfg.generations;
      fc.seed = derive_seed(cfg.seed, "report-mean");
      fc.threads = cfg.threads;
      const auto fr = iterate_to_fixpoint(fc);
      double acc = 0.0;
      for (const auto& h : fr.history) acc += h.variance;
      const double se = std::sqrt(acc / static_cast<double>(cfg.pool));
      const cplx mu = fr.history.back().mean;
      log.add("fixpoint-mean", std::abs(mu - 1.0) <= 5.0 * se,
              {{"mean", to_json(mu)}, {"accumulated_se", se}, {"generations", cfg.generations}}, {{"z", 5.0}});
    });

    log.run("cascade-variance", [&] {
      CascadeConfig cc{m, spec.lambda2, 1, cfg.cascade_reps};
      const auto ys = cascade_replicas(cc, derive_seed(cfg.seed, "report-cascade"), cfg.threads);
      std::vector<double> sq;
      for (const cplx y : ys) sq.push_back(std::norm(y - 1.0));
      const auto ms = stats::mean_se(sq);
      const double target = cascade_variance(m, spec.lambda2, 1);
      log.add("cascade-variance", detail::within(ms.mean, target, ms.se, cfg.z_gate),
              {{"depth", 1}, {"variance", ms.mean}, {"se", ms.se}, {"target", target},
               {"variance_limit", variance_limit(m, spec.lambda2)}},
              {{"z", cfg.z_gate}});
    });

    log.run("moments-vs-mc", [&] {
      const auto table = moment_table(m, 3);
      std::vector<cplx> m2, m3;
      std::vector<cplx> merged;
      for (int r = 0; r < cfg.replicate_pools; ++r) {
        FixpointConfig fc;
        fc.m = m;
        fc.pool_size = cfg.pool;
        fc.iters = cfg.generations;
        fc.seed = derive_seed(cfg.seed, "report-pool", static_cast<std::uint64_t>(r));
        fc.renormalize_mean = true;
        fc.threads = cfg.threads;
        const auto fr = iterate_to_fixpoint(fc);
        cplx s2 = 0.0, s3 = 0.0;
        for (const cplx z : fr.pool.points) {
          s2 += z * z;
          s3 += z * z * z;
        }
        m2.push_back(s2 / static_cast<double>(cfg.pool));
        m3.push_back(s3 / static_cast<double>(cfg.pool));
        merged.insert(merged.end(), fr.pool.points.begin(), fr.pool.points.end());
      }
      const auto e2 = stats::mean_se(std::span<const cplx>(m2));
      const auto t2 = table.moment(1, 2);
      log.add("moments-vs-mc",
              detail::within(e2.mean.real(), t2.real(), e2.se_re, cfg.z_gate) &&
                  detail::within(e2.mean.imag(), t2.imag(), e2.se_im, cfg.z_gate),
              {{"EW2_table", to_json(t2)}, {"EW2_mc", to_json(e2.mean)}, {"se_re", e2.se_re}, {"se_im", e2.se_im}},
              {{"z", cfg.z_gate}});

      log.run("analysis-psi", [&] {
        const auto radii = default_psi_radii();
        const auto prof = psi_profile(merged, radii, sigma2, 64, cfg.threads);
        bool below = true;
        for (std::size_t i = 0; i < radii.size(); ++i)
          if (radii[i] >= 0.5) below = below && prof.psi_hat[i] < 1.0 - 3.0 * prof.noise;
        log.add("analysis-psi", prof.psi_hat[0] == 1.0 && below && prof.a_hat > 0.0,
                {{"noise", prof.noise}, {"a_hat", prof.a_hat}, {"a_se", prof.a_se},
                 {"band_upper", 1.0 / sigma2}, {"block_decreasing", prof.block_decreasing}},
                "psi(0)=1, psi(r>=0.5) < 1-3 noise, a_hat > 0");
      });
      log.run("analysis-support", [&] {
        const double rmax = 2.0 * std::sqrt(variance_limit(m, spec.lambda2) / 252.0);
        const auto map = support_coverage(merged, 4, 8, std::max(rmax, 1.0));
        log.add("analysis-support", map.occupancy >= 0.9, {{"occupancy", map.occupancy}, {"rmax", map.rmax}},
                ">= 0.9 of 4x8 cells");
      });
    });
  }

  log.run("ode-check", [&] {
    const auto r = ode_check(m, cfg.moment_order);
    log.add("ode-check", r.residual <= 1e-9 && r.system_residual <= 1e-9,
            {{"residual", r.residual}, {"system_residual", r.system_residual}, {"rho", to_json(r.rho)}}, 1e-9);
  });

  log.run("analysis-spiral", [&] {
    Rng rng = make_rng(cfg.seed, "report-spiral");
    std::vector<cplx> targets;
    for (int i = 0; i < cfg.spiral_targets; ++i)
      targets.push_back(std::polar(std::sqrt(uniform01(rng)) * 0.999, 2.0 * std::numbers::pi * uniform01(rng)));
    const double eps = 1e-2;
    const auto ws = spiral_density(m, spec.lambda2, targets, eps, 1000000);
    bool pass = true;
    double worst = 0.0;
    for (const auto& w : ws) {
      pass = pass && w.found && w.verified <= eps;
      worst = std::max(worst, w.verified);
    }
    log.add("analysis-spiral", pass, {{"targets", ws.size()}, {"worst_distance", worst}}, eps);
  });

  out["gates"] = log.gates;
  out["pass"] = log.ok;
  return out;
}

}  // namespace mst
