// mst_limits: command-line front end for the m-ary search tree limit toolkit.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mstlimits/mstlimits.hpp"
#include "mstlimits/report.hpp"

using namespace mst;

namespace {

struct Globals {
  int m = 27;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::string out;
};

// Writes to --out if given, else stdout.
template <typename Fn>
void emit(const std::string& path, Fn&& fn) {
  if (path.empty()) {
    fn(std::cout);
  } else {
    auto f = io::open_out(path);
    fn(f);
  }
}

cplx parse_lambda(const std::string& s, int m) {
  if (s == "auto") return lambda2_of(m);
  const auto comma = s.find(',');
  try {
    if (comma == std::string::npos) return std::stod(s);
    return {std::stod(s.substr(0, comma)), std::stod(s.substr(comma + 1))};
  } catch (const std::exception&) {
    throw Error(ErrorCode::invalid_parameter, "cannot parse lambda '" + s + "' (use auto or re,im)");
  }
}

CompositionVector parse_x0(const std::string& s, int m) {
  if (s.empty()) return CompositionVector::unit(m, 1);
  std::vector<std::int64_t> x;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ',')) x.push_back(std::stoll(cell));
  return {m, std::move(x)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"m-ary search tree limit laws: spectra, simulation, fixed points, moments"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--m", g.m, "branching factor")->capture_default_str();
  app.add_option("--seed", g.seed, "master seed")->capture_default_str();
  app.add_option("--threads", g.threads, "worker threads (0: MST_LIMITS_THREADS or hardware)");
  app.add_option("--out", g.out, "output file (default stdout)");
  app.fallthrough();

  auto* eigen = app.add_subcommand("eigen", "eigenvalues, lambda2 and residuals");
  bool eigen_csv = false;
  eigen->add_flag("--csv", eigen_csv, "CSV instead of JSON");
  eigen->add_flag("--json", "JSON output (default)");

  std::int64_t n = 1000, reps = 1000;
  std::string x0s;
  auto* sdt = app.add_subcommand("simulate-dt", "discrete chain replicas");
  sdt->add_option("--n", n, "steps");
  sdt->add_option("--reps", reps, "replicas");
  sdt->add_option("--x0", x0s, "initial composition vector, comma separated");
  auto* sct = app.add_subcommand("simulate-ct", "continuous-time embedding replicas");
  sct->add_option("--n", n, "steps");
  sct->add_option("--reps", reps, "replicas");
  sct->add_option("--x0", x0s, "initial composition vector, comma separated");

  int perms = 999;
  std::size_t max_group = 2000;
  auto* conn = app.add_subcommand("connection-test", "xi^lambda2 W^DT versus W energy test");
  conn->add_option("--n", n, "steps");
  conn->add_option("--reps", reps, "samples per group");
  conn->add_option("--perms", perms, "permutations");
  conn->add_option("--max-group", max_group, "energy test subsample per group");

  std::string lambda_s = "auto", variant_s = "ct";
  std::size_t pool = 100000;
  int iters = 50;
  bool renorm = false;
  auto* fix = app.add_subcommand("fixpoint", "population dynamics for K");
  fix->add_option("--lambda", lambda_s, "auto or re,im");
  fix->add_option("--variant", variant_s, "ct or dt")->check(CLI::IsMember({"ct", "dt"}));
  fix->add_option("--pool", pool, "pool size");
  fix->add_option("--iters", iters, "generations");
  fix->add_flag("--renormalize", renorm, "rescale to mean 1 after each step");

  CharIterationConfig cc;
  auto* charfix = app.add_subcommand("charfix", "fixed point on characteristic functions");
  charfix->add_option("--lambda", lambda_s, "auto or re,im");
  charfix->add_option("--rmin", cc.r_min);
  charfix->add_option("--rmax", cc.r_max);
  charfix->add_option("--nr", cc.nr);
  charfix->add_option("--ntheta", cc.ntheta);
  charfix->add_option("--quad-order", cc.quad_order);
  charfix->add_option("--panels", cc.panels);
  charfix->add_option("--iters", cc.iters);

  int depth = 3;
  auto* cas = app.add_subcommand("cascade", "Mandelbrot cascade samples");
  cas->add_option("--depth", depth);
  cas->add_option("--reps", reps);
  cas->add_option("--lambda", lambda_s, "auto or re,im");

  std::string in;
  double eps = 0.1;
  auto* expm = app.add_subcommand("expmoments", "exponential moment probe on samples");
  expm->add_option("--in", in, "CSV with re,im columns")->required();
  expm->add_option("--eps", eps);

  int pmax = 8;
  auto* mom = app.add_subcommand("moments", "scaled moment table");
  mom->add_option("--pmax", pmax);
  mom->add_flag("--json", "JSON output (default)");
  auto* ode = app.add_subcommand("odecheck", "check y^(m-1) = y^m on the Laplace series");
  ode->add_option("--pmax", pmax);

  bool do_psi = false, do_cov = false, do_spiral = false;
  int n_angles = 64, targets = 100;
  double rmax = 2.0;
  auto* ana = app.add_subcommand("analyze", "psi profile, support coverage, spiral witnesses");
  ana->add_option("--in", in, "pool CSV");
  ana->add_flag("--psi", do_psi);
  ana->add_flag("--coverage", do_cov);
  ana->add_flag("--spiral", do_spiral);
  ana->add_option("--angles", n_angles);
  ana->add_option("--rmax", rmax);
  ana->add_option("--targets", targets);

  bool quick = false;
  auto* rep = app.add_subcommand("report", "end-to-end verification report");
  rep->add_flag("--quick", quick, "small sample sizes");

  CLI11_PARSE(app, argc, argv);
  const unsigned threads = resolve_threads(g.threads);

  try {
    if (eigen->parsed()) {
      const auto er = eigenvalues_with_residuals(g.m);
      if (eigen_csv) {
        emit(g.out, [&](std::ostream& os) {
          os << "index,re,im,residual\n";
          for (std::size_t i = 0; i < er.values.size(); ++i)
            os << i << ',' << io::fmt(er.values[i].real()) << ',' << io::fmt(er.values[i].imag()) << ','
               << io::fmt(er.residuals[i]) << '\n';
        });
      } else {
        json j;
        j["m"] = g.m;
        j["eigenvalues"] = json::array();
        for (const cplx e : er.values) j["eigenvalues"].push_back(to_json(e));
        j["residuals"] = er.residuals;
        try {
          const cplx l2 = lambda2_from(er.values, g.m);
          j["lambda2"] = to_json(l2);
          j["sigma2"] = l2.real();
        } catch (const Error& e) {
          j["lambda2"] = nullptr;
          j["note"] = to_string(e.code());
        }
        emit(g.out, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
      }
    } else if (sdt->parsed() || sct->parsed()) {
      const auto spec = eigen_data(g.m);
      const auto mode = sdt->parsed() ? SimMode::discrete : SimMode::continuous;
      const auto r = simulate_replicas(spec, parse_x0(x0s, g.m), n, reps, g.seed, mode, threads);
      emit(g.out, [&](std::ostream& os) { io::write_replicas(os, r); });
    } else if (conn->parsed()) {
      const auto spec = eigen_data(g.m);
      const auto x0 = CompositionVector::unit(g.m, 1);
      const auto xi = xi_samples(n, 1, reps, derive_seed(g.seed, "conn-xi"), threads);
      const auto dt = simulate_replicas(spec, x0, n, reps, derive_seed(g.seed, "conn-dt"), SimMode::discrete, threads);
      const auto ct = simulate_replicas(spec, x0, n, reps, derive_seed(g.seed, "conn-ct"), SimMode::continuous, threads);
      std::vector<cplx> wdt, w;
      for (const auto& e : dt) wdt.push_back(e.wdt_hat);
      for (const auto& e : ct) w.push_back(e.w_hat);
      const auto r = martingale_connection_test(xi, wdt, w, spec, connection_factor(spec.lambda2, 1, n), perms,
                                                derive_seed(g.seed, "conn-perm"), max_group);
      json j{{"m", g.m},
             {"n", n},
             {"reps", reps},
             {"factor", to_json(r.factor)},
             {"energy_statistic", r.energy.statistic},
             {"p_value", r.energy.p_value},
             {"mean_product", to_json(r.mean_product)},
             {"mean_w", to_json(r.mean_w)}};
      emit(g.out, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
    } else if (fix->parsed()) {
      FixpointConfig fc;
      fc.m = g.m;
      fc.lambda = parse_lambda(lambda_s, g.m);
      fc.variant = variant_s == "dt" ? KVariant::dt : KVariant::ct;
      fc.pool_size = pool;
      fc.iters = iters;
      fc.seed = g.seed;
      fc.renormalize_mean = renorm;
      fc.threads = threads;
      const auto fr = iterate_to_fixpoint(fc);
      if (fr.contraction_warning) std::cerr << "warning: " << fr.warning << '\n';
      const auto& last = fr.history.empty() ? GenerationStats{} : fr.history.back();
      std::cerr << "generation " << fr.pool.generation << " mean " << last.mean << " variance " << last.variance
                << " contraction " << fr.contraction << '\n';
      emit(g.out, [&](std::ostream& os) { io::write_pool(os, fr.pool.points); });
    } else if (charfix->parsed()) {
      cc.m = g.m;
      cc.lambda = parse_lambda(lambda_s, g.m);
      cc.threads = threads;
      const auto r = char_iteration(cc);
      std::cerr << "iterations " << r.sup_change.size() << " last sup change "
                << (r.sup_change.empty() ? 0.0 : r.sup_change.back()) << '\n';
      emit(g.out, [&](std::ostream& os) { io::write_grid(os, r.grid); });
    } else if (cas->parsed()) {
      const CascadeConfig cfg{g.m, parse_lambda(lambda_s, g.m), depth, static_cast<std::size_t>(reps)};
      const auto ys = cascade_replicas(cfg, g.seed, threads);
      emit(g.out, [&](std::ostream& os) { io::write_pool(os, ys); });
    } else if (expm->parsed()) {
      const auto samples = io::read_pool(in);
      const auto r = exp_moment_probe(samples, exp_moment_grid(eps), eps);
      json pts = json::array();
      for (const auto& p : r.points)
        pts.push_back({{"t", to_json(p.t)},
                       {"log_inner", p.log_inner},
                       {"log_abs", p.log_abs},
                       {"first_bound", p.first_bound},
                       {"second_bound", p.second_bound},
                       {"overflow", p.overflow}});
      json fail = json::array();
      for (const cplx t : r.failing) fail.push_back(to_json(t));
      json j{{"eps", eps}, {"c_hat", r.c_hat}, {"all_hold", r.all_hold}, {"failing", fail}, {"points", pts}};
      emit(g.out, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
    } else if (mom->parsed()) {
      const auto t = moment_table(g.m, pmax);
      json table = json::array();
      for (int k = 1; k <= g.m - 1; ++k)
        for (int p = 0; p <= pmax; ++p)
          table.push_back({{"k", k}, {"p", p}, {"re", t.at(k, p).real()}, {"im", t.at(k, p).imag()}});
      json j{{"m", g.m}, {"pmax", pmax}, {"lambda2", to_json(t.lambda2)}, {"table", table}};
      emit(g.out, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
    } else if (ode->parsed()) {
      const auto r = ode_check(g.m, pmax);
      json j{{"m", g.m},
             {"pmax", pmax},
             {"rho", to_json(r.rho)},
             {"residual", r.residual},
             {"system_residual", r.system_residual},
             {"per_order", r.per_order}};
      emit(g.out, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
      return std::max(r.residual, r.system_residual) > 1e-8 ? 1 : 0;
    } else if (ana->parsed()) {
      require(!in.empty() || (do_spiral && !do_psi && !do_cov), ErrorCode::invalid_parameter,
              "analyze needs --in for --psi and --coverage");
      if (!do_psi && !do_cov && !do_spiral) do_psi = do_cov = do_spiral = true;
      const auto spec = eigen_data(g.m);
      json j{{"m", g.m}};
      std::vector<cplx> pts;
      if (!in.empty()) pts = io::read_pool(in);
      if (do_psi) {
        const auto radii = default_psi_radii();
        const auto prof = psi_profile(pts, radii, spec.sigma2, n_angles, threads);
        json rows = json::array();
        for (std::size_t i = 0; i < radii.size(); ++i) rows.push_back({{"r", radii[i]}, {"psi", prof.psi_hat[i]}});
        j["psi"] = {{"table", rows},          {"noise", prof.noise},        {"a_hat", prof.a_hat},
                    {"a_se", prof.a_se},      {"band_upper", 1.0 / spec.sigma2}, {"in_band", prof.in_band},
                    {"block_decreasing", prof.block_decreasing}};
      }
      if (do_cov) {
        const auto map = support_coverage(pts, 8, 16, rmax);
        j["coverage"] = {{"occupancy", map.occupancy}, {"rmax", rmax}, {"outside", map.outside}, {"counts", map.counts}};
      }
      if (do_spiral) {
        Rng rng = make_rng(g.seed, "analyze-spiral");
        std::vector<cplx> tg;
        for (int i = 0; i < targets; ++i)
          tg.push_back(std::polar(std::sqrt(uniform01(rng)) * 0.999, 2.0 * std::numbers::pi * uniform01(rng)));
        const auto ws = spiral_density(g.m, spec.lambda2, tg, 1e-2, 1000000);
        json arr = json::array();
        for (const auto& w : ws)
          arr.push_back({{"target", to_json(w.target)},
                         {"found", w.found},
                         {"n", w.n},
                         {"k", w.k},
                         {"t", w.t},
                         {"distance", w.verified}});
        j["spiral"] = arr;
      }
      emit(g.out, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
    } else if (rep->parsed()) {
      ReportConfig cfg;
      cfg.m = g.m;
      cfg.seed = g.seed;
      cfg.threads = threads;
      if (quick) {
        cfg.xi_reps = 4000;
        cfg.xi_steps = 300;
        cfg.dt_reps = 2000;
        cfg.dt_steps = 100;
        cfg.pool = 10000;
        cfg.generations = 30;
        cfg.replicate_pools = 3;
        cfg.cascade_reps = 2000;
        cfg.spiral_targets = 10;
      }
      const auto j = verification_report(cfg);
      emit(g.out, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
      return j["pass"].get<bool>() ? 0 : 1;
    }
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
