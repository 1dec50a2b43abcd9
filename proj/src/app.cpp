#include "levyctl/app.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>

#include <CLI11.hpp>
#include <json.hpp>

#include "levyctl/errors.hpp"

namespace levyctl {

namespace {

using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr double kInf = std::numeric_limits<double>::infinity();

const std::vector<double> kPriceSweep = {35, 30, 25, 20, 15, 10, 5, 0, -5};
constexpr double kPriceCommon = 6.0;

std::string prepare(const std::string& dir, const std::string& name) {
  fs::create_directories(dir);
  return (fs::path(dir) / name).string();
}

void write_json(const std::string& path, const ojson& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << j.dump(2) << '\n';
}

// JSON has no infinities; they are written as null.
ojson num(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

class Csv {
 public:
  Csv(const std::string& path, const std::vector<std::string>& header)
      : out_(path, std::ios::binary) {
    if (!out_) throw ConfigError("cannot write " + path);
    row(header);
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

ojson solution_json(const Session& s, const BarrierSolution& sol) {
  const auto& d = sol.diag;
  const auto& sf = s.scale();
  return ojson{
      {"case", to_string(sol.case_tag)},
      {"a_star", num(sol.a_star)},
      {"b_star", num(sol.b_star)},
      {"a_bar", num(sol.a_bar)},
      {"a_underline", num(sol.a_underline)},
      {"gamma_residual", num(sol.gamma_residual)},
      {"Gamma_residual", num(sol.Gamma_residual)},
      {"C_U", s.cost().C_U()},
      {"C_D", s.cost().C_D()},
      {"q", sf.q()},
      {"phi", sf.phi()},
      {"model", {{"kind", to_string(s.model().kind())},
                 {"variation", to_string(s.model().variation())},
                 {"W_at_zero", sf.W_at_zero()},
                 {"W_prime_at_zero", num(sf.W_prime_at_zero())}}},
      {"scale", {{"terms", sf.terms()},
                 {"tail_rates", sf.tail_rates()},
                 {"tail_weights", sf.tail_weights()},
                 {"truncation_indicator", sf.truncation_indicator()},
                 {"truncation_flagged", sf.truncation_flagged()}}},
      {"diagnostics", {{"outer_iterations", d.outer_iterations},
                       {"b_tilde_calls", d.b_tilde_calls},
                       {"bracket_lo", num(d.bracket_lo)},
                       {"bracket_hi", num(d.bracket_hi)},
                       {"a_eps", num(d.a_eps)},
                       {"Gamma_underline_at_eps", num(d.Gamma_underline_at_eps)},
                       {"Gamma_limit", num(d.Gamma_limit)},
                       {"b_cap", num(d.b_cap)},
                       {"b_star_zero_width", num(d.b_star_zero_width)}}}};
}

struct Labeled {
  std::string label;
  double a;
};

std::vector<Labeled> curve_a_values(const BarrierSolution& sol) {
  const double lo = sol.a_underline, hi = sol.a_bar;
  if (sol.case_tag == CaseTag::Case1)
    return {{"a_underline", lo},
            {"mid_low", 0.5 * (lo + sol.a_star)},
            {"a_star", sol.a_star},
            {"mid_high", 0.5 * (sol.a_star + hi)},
            {"a_bar", hi}};
  return {{"a_underline", lo},
          {"quarter", lo + 0.25 * (hi - lo)},
          {"half", 0.5 * (lo + hi)},
          {"three_quarters", lo + 0.75 * (hi - lo)},
          {"a_bar", hi}};
}

std::vector<double> b_grid(const Session& s, const BarrierSolution& sol) {
  const auto& cc = s.config().curves;
  const double lo = sol.a_underline;
  double hi;
  if (cc.b_max)
    hi = *cc.b_max;
  else if (sol.case_tag == CaseTag::Case1)
    hi = sol.b_star + std::max(2.0, sol.b_star - lo);
  else
    hi = sol.a_bar + std::max(3.0, 2.0 * (sol.a_bar - lo));
  std::vector<double> g = linspace(lo, hi, cc.b_points);
  for (const auto& a : curve_a_values(sol)) g.push_back(a.a);
  if (std::isfinite(sol.b_star)) g.push_back(sol.b_star);
  // Points around the kink of f at zero.
  for (double z : {-1e-4, 0.0, 1e-4})
    if (z > lo && z < hi) g.push_back(z);
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

std::string write_gamma_curves(Session& s, bool big, const std::string& dir) {
  const auto& sol = s.solution();
  const auto& p = s.problem();
  const std::string path = prepare(dir, big ? "gamma_big.csv" : "gamma_small.csv");
  Csv csv(path, {"a_label", "a", "b", big ? "Gamma" : "gamma"});
  const auto grid = b_grid(s, sol);
  for (const auto& [label, a] : curve_a_values(sol)) {
    for (double b : grid) {
      if (b < a) continue;
      if (!big && b == a) continue;
      const double v = big ? p.Gamma(a, b) : p.gamma(a, b, Side::Left);
      csv.row({label, format_double(a), format_double(b), format_double(v)});
    }
  }
  return path;
}

std::string write_value_sweep(Session& s, const std::string& dir) {
  const RunConfig& base = s.config();
  struct Entry {
    std::string sweep;
    double cu, cd;
    std::optional<Session> session;
    std::string skipped;
  };
  std::vector<Entry> entries;
  for (const char* sweep : {"C_U", "C_D"}) {
    for (double e : kPriceSweep) {
      Entry en{sweep, sweep[2] == 'U' ? e : kPriceCommon, sweep[2] == 'D' ? e : kPriceCommon, {}, {}};
      RunConfig rc = base;
      rc.cost.C_U = en.cu;
      rc.cost.C_D = en.cd;
      try {
        en.session.emplace(rc);
        en.session->solution();
      } catch (const AssumptionViolation& ex) {
        en.session.reset();
        en.skipped = ex.what();
      } catch (const ConfigError& ex) {
        en.session.reset();
        en.skipped = ex.what();
      }
      entries.push_back(std::move(en));
    }
  }
  double lo = kInf, hi = -kInf;
  for (auto& en : entries) {
    if (!en.session) continue;
    const auto& sol = en.session->solution();
    lo = std::min(lo, sol.a_star);
    hi = std::max(hi, std::isfinite(sol.b_star) ? sol.b_star : sol.a_star + 3.0);
  }
  const auto& cc = base.curves;
  const double x_lo = cc.x_min.value_or(lo - 1.0), x_hi = cc.x_max.value_or(hi + 1.0);
  const std::string path = prepare(dir, "value_sweep.csv");
  Csv csv(path, {"sweep", "C_U", "C_D", "case", "x", "v", "marker"});
  ojson skipped = ojson::array();
  for (auto& en : entries) {
    if (!en.session) {
      skipped.push_back({{"sweep", en.sweep}, {"C_U", en.cu}, {"C_D", en.cd}, {"reason", en.skipped}});
      continue;
    }
    const auto& sol = en.session->solution();
    const ValueFunction vf = en.session->value_function();
    std::vector<std::pair<double, std::string>> xs;
    for (double x : linspace(x_lo, x_hi, cc.x_points)) xs.emplace_back(x, "");
    xs.emplace_back(sol.a_star, "a_star");
    if (std::isfinite(sol.b_star)) xs.emplace_back(sol.b_star, "b_star");
    std::stable_sort(xs.begin(), xs.end(),
                     [](const auto& l, const auto& r) { return l.first < r.first; });
    for (const auto& [x, marker] : xs)
      csv.row({en.sweep, format_double(en.cu), format_double(en.cd), to_string(sol.case_tag),
               format_double(x), format_double(vf.value(x)), marker});
  }
  if (!skipped.empty()) write_json(prepare(dir, "value_sweep_skipped.json"), skipped);
  return path;
}

std::string write_scale_table(const Session& s, const std::string& dir) {
  const auto& sf = s.scale();
  const auto& cc = s.config().curves;
  const std::string path = prepare(dir, "scale_function.csv");
  Csv csv(path, {"x", "W", "W_prime", "W_bar", "Z", "Z_bar"});
  for (double x : linspace(0.0, cc.x_max.value_or(5.0), cc.x_points))
    csv.row({format_double(x), format_double(sf.W(x)), format_double(sf.W_prime(x)),
             format_double(sf.W_bar(x)), format_double(sf.Z(x)), format_double(sf.Z_bar(x))});
  return path;
}

double resolve_x0(const StartPoint& p, const BarrierSolution& sol, double b_sim) {
  if (p.name == "a_star") return sol.a_star;
  if (p.name == "b_star") return b_sim;
  if (p.name == "mid") return 0.5 * (sol.a_star + b_sim);
  return p.value;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Session::Session(RunConfig cfg) : cfg_(std::move(cfg)) {
  model_.emplace(cfg_.model.build());
  sf_.emplace(ScaleFunction::build(*model_, cfg_.q, cfg_.scale));
  cost_.emplace(cfg_.cost.build(cfg_.q, cfg_.quad));
  problem_.emplace(*sf_, *cost_, cfg_.solver);
}

const BarrierSolution& Session::solution() {
  if (!sol_) sol_ = problem_->solve();
  return *sol_;
}

ValueFunction Session::value_function() { return ValueFunction::optimal(*sf_, *cost_, solution()); }

std::vector<std::string> cmd_solve(Session& s, const std::string& out_dir) {
  const std::string path = prepare(out_dir, "solution.json");
  write_json(path, solution_json(s, s.solution()));
  return {path};
}

std::vector<std::string> cmd_curves(Session& s, CurveKind what, const std::string& out_dir) {
  std::vector<std::string> files;
  if (what == CurveKind::GammaBig || what == CurveKind::All)
    files.push_back(write_gamma_curves(s, true, out_dir));
  if (what == CurveKind::GammaSmall || what == CurveKind::All)
    files.push_back(write_gamma_curves(s, false, out_dir));
  if (what == CurveKind::Value || what == CurveKind::All)
    files.push_back(write_value_sweep(s, out_dir));
  if (what == CurveKind::Scale || what == CurveKind::All)
    files.push_back(write_scale_table(s, out_dir));
  return files;
}

std::vector<std::string> cmd_value(Session& s, const std::vector<double>& xs,
                                   const std::string& out_dir) {
  const auto& sol = s.solution();
  const ValueFunction vf = s.value_function();
  const std::string csv_path = prepare(out_dir, "value.csv");
  Csv csv(csv_path, {"x", "v", "v1", "v2", "hjb_residual"});
  ojson pts = ojson::array();
  for (double x : xs) {
    const double v = vf.value(x), v1 = vf.derivative(x), v2 = vf.second_derivative(x);
    const double res = vf.hjb_residual(s.model(), x, s.config().verify);
    csv.row({format_double(x), format_double(v), format_double(v1), format_double(v2),
             format_double(res)});
    pts.push_back({{"x", x}, {"v", num(v)}, {"v1", num(v1)}, {"v2", num(v2)},
                   {"hjb_residual", num(res)}});
  }
  const std::string json_path = prepare(out_dir, "value.json");
  write_json(json_path, {{"case", to_string(sol.case_tag)},
                         {"a_star", num(sol.a_star)},
                         {"b_star", num(sol.b_star)},
                         {"points", pts}});
  return {json_path, csv_path};
}

std::vector<std::string> cmd_simulate(Session& s, const std::string& out_dir) {
  const auto& sol = s.solution();
  const RunConfig& rc = s.config();
  const ValueFunction vf = s.value_function();
  const double b_sim =
      std::isfinite(sol.b_star) ? sol.b_star : sol.a_star + 50.0 / s.scale().phi();
  std::vector<StartPoint> starts = rc.sim_x0;
  if (starts.empty()) starts = {{"a_star", 0}, {"mid", 0}, {"b_star", 0}};
  const std::string hist_path = prepare(out_dir, "occupation.csv");
  Csv csv(hist_path, {"x0", "bin_left", "bin_right", "mass", "se"});
  ojson runs = ojson::array();
  for (const auto& sp : starts) {
    const double x0 = resolve_x0(sp, sol, b_sim);
    const SimResult r = simulate_reflected(s.model(), sol.a_star, sol.b_star, x0, rc.sim, s.cost());
    const double v = vf.value(x0);
    ojson run{{"x0", x0},
              {"mean_cost", r.cost.mean},
              {"se_cost", r.cost.se},
              {"mean_EU", r.EU.mean},
              {"se_EU", r.EU.se},
              {"mean_ED", r.ED.mean},
              {"se_ED", r.ED.se},
              {"value", num(v)},
              {"z_score", r.cost.se > 0.0 ? num((r.cost.mean - v) / r.cost.se) : ojson(nullptr)},
              {"surrogate_upper", r.surrogate_upper},
              {"surrogate_hit_probability", r.surrogate_hit_probability},
              {"counts", r.counts()},
              {"min_state", r.min_state},
              {"max_state", r.max_state},
              {"both_controls_steps", r.both_controls_steps}};
    if (std::isfinite(sol.b_star)) {
      const auto ec = vf.expected_discounted_controls(x0);
      run["EU_exact"] = ec.EU;
      run["ED_exact"] = ec.ED;
    }
    runs.push_back(run);
    for (const auto& bin : r.occupation)
      csv.row({format_double(x0), format_double(bin.left), format_double(bin.right),
               format_double(bin.mass), format_double(bin.se)});
  }
  const auto& sc = rc.sim;
  const std::string json_path = prepare(out_dir, "simulation.json");
  write_json(json_path,
             {{"case", to_string(sol.case_tag)},
              {"a", sol.a_star},
              {"b", b_sim},
              {"sim", {{"n_paths", sc.n_paths},
                       {"dt", sc.dt},
                       {"horizon", sc.horizon},
                       {"rng_seed", sc.rng_seed},
                       {"small_jump_cutoff", sc.small_jump_cutoff},
                       {"small_jump_mode", sc.small_jump_mode == SmallJumpMode::DriftCompensate
                                               ? "drift_compensate"
                                               : "gaussian_approx"},
                       {"reflection", sc.reflection == ReflectionScheme::Endpoint
                                          ? "endpoint"
                                          : "brownian_bridge"}}},
              {"runs", runs}});
  return {json_path, hist_path};
}

bool cmd_verify(Session& s, const std::string& out_dir, std::vector<std::string>* files) {
  const ValueFunction vf = s.value_function();
  const VerifyOptions& vo = s.config().verify;
  const VerificationReport r = vf.verify(s.model(), vo);
  const std::string csv_path = prepare(out_dir, "verification.csv");
  {
    Csv csv(csv_path, {"x", "region", "v", "v1", "v2", "residual"});
    for (const auto& p : r.points) {
      const char* region =
          p.region == Region::Below ? "below" : p.region == Region::Inside ? "inside" : "above";
      csv.row({format_double(p.x), region, format_double(p.v), format_double(p.v1),
               format_double(p.v2), format_double(p.residual)});
    }
  }
  const std::string json_path = prepare(out_dir, "verification.json");
  write_json(json_path, {{"points", r.points.size()},
                         {"max_slope_violation", r.max_slope_violation},
                         {"max_inside_residual", r.max_inside_residual},
                         {"min_outside_residual", num(r.min_outside_residual)},
                         {"min_second_derivative", num(r.min_second_derivative)},
                         {"slope_ok", r.slope_ok},
                         {"inside_ok", r.inside_ok},
                         {"outside_ok", r.outside_ok},
                         {"convex_ok", r.convex_ok},
                         {"convexity_checked", r.convexity_checked},
                         {"tol_slope", vo.tol_slope},
                         {"tol_gen", vo.tol_gen},
                         {"tol_convex", vo.tol_convex},
                         {"all_ok", r.all_ok()}});
  if (files) *files = {json_path, csv_path};
  return r.all_ok();
}

std::vector<CheckResult> selfcheck(Session& s) {
  std::vector<CheckResult> out;
  const auto& sf = s.scale();
  const auto& m = s.model();
  const double q = sf.q();
  const auto add = [&out](std::string name, double v, double tol) {
    out.push_back({std::move(name), v, tol, std::isfinite(v) && v <= tol});
  };

  // Numeric Laplace transform of W against 1/(psi - q).
  for (double ds : {0.5, 1.0, 2.0}) {
    const double th = sf.phi() + ds;
    const double lt =
        integrate([&](double x) { return std::exp(-ds * x) * sf.W_phi(x); }, 0.0, kInf,
                  {1e-3, 1e-2, 0.1, 1.0, 10.0}, 1e-12, 1e-15)
            .value;
    const double exact = 1.0 / (m.psi(th) - q);
    add("laplace_transform_rel_err(s=phi+" + format_double(ds) + ")", std::abs(lt / exact - 1.0),
        1e-5);
  }
  const std::vector<double> xs = {0.01, 0.1, 1.0, 5.0};
  const auto max_rel_diff = [&](const ScaleFunction& other) {
    double d = 0.0;
    for (double x : xs) d = std::max(d, std::abs(other.W(x) / sf.W(x) - 1.0));
    return d;
  };
  if (m.has_infinitely_many_poles()) {
    ScaleOptions o = s.config().scale;
    o.K *= 2;
    add("W_rel_change_K_to_2K", max_rel_diff(ScaleFunction::build(m, q, o)), 1e-8);
    o = s.config().scale;
    o.method = o.method == CoefficientMethod::Residue ? CoefficientMethod::Product
                                                      : CoefficientMethod::Residue;
    add("W_rel_diff_coefficient_methods", max_rel_diff(ScaleFunction::build(m, q, o)), 1e-5);
    add("truncation_indicator", sf.truncation_indicator(), s.config().scale.tail_tol);
  }

  // Closed-form integrals against quadrature.
  const CostSpec closed = s.cost().with_route(Route::ClosedForm);
  const CostSpec quad = s.cost().with_route(Route::Quadrature);
  const double ab = closed.a_bar();
  double d_psi = 0.0;
  for (double x : {ab - 1.0, ab, ab + 1.0}) {
    const double c = closed.Psi(sf, x);
    d_psi = std::max(d_psi, std::abs(c - quad.Psi(sf, x)) / (1.0 + std::abs(c)));
  }
  add("Psi_closed_vs_quadrature", d_psi, 1e-8);
  double d_conv = 0.0;
  for (int order : {0, 1})
    for (Integrand h : {Integrand::F, Integrand::FTildePrime}) {
      const double c = closed.phi_conv(sf, ab - 1.0, ab + 1.5, h, order);
      d_conv = std::max(d_conv, std::abs(c - quad.phi_conv(sf, ab - 1.0, ab + 1.5, h, order)) /
                                    (1.0 + std::abs(c)));
    }
  add("convolution_closed_vs_quadrature", d_conv, 1e-7);
  return out;
}

bool cmd_selfcheck(Session& s, const std::string& out_dir, std::vector<std::string>* files) {
  const auto checks = selfcheck(s);
  ojson arr = ojson::array();
  bool ok = true;
  for (const auto& c : checks) {
    arr.push_back({{"name", c.name}, {"value", num(c.value)}, {"tolerance", c.tolerance},
                   {"pass", c.pass}});
    ok = ok && c.pass;
  }
  const std::string path = prepare(out_dir, "selfcheck.json");
  write_json(path, {{"checks", arr}, {"all_pass", ok}});
  if (files) *files = {path};
  return ok;
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Optimal two-barrier control of spectrally negative Levy processes"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  app.add_option("--config", config_path, "JSON run configuration")->required();
  app.add_option("--out", out_dir, "output directory (overrides output_dir)");
  app.add_option("--seed", seed, "simulation RNG seed");
  app.add_option("--threads", threads, "worker threads for simulation and verification")
      ->check(CLI::PositiveNumber);
  app.fallthrough();

  auto* solve = app.add_subcommand("solve", "compute (a*, b*) and write solution.json");
  auto* curves = app.add_subcommand("curves", "write Gamma, gamma, value-sweep and scale-function CSVs");
  std::string what = "all";
  curves->add_option("--what", what, "gamma_big, gamma_small, value, scale or all")
      ->check(CLI::IsMember({"gamma_big", "gamma_small", "value", "scale", "all"}));
  auto* value = app.add_subcommand("value", "evaluate the value function");
  std::vector<double> xs;
  value->add_option("--x", xs, "points (default: value.x from the config)");
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo under the optimal barriers");
  auto* verify = app.add_subcommand("verify", "check the HJB variational inequality on a grid");
  auto* check = app.add_subcommand("selfcheck", "Laplace-transform and closed-form cross-checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    RunConfig rc = load_config(config_path);
    if (!out_dir.empty()) rc.output_dir = out_dir;
    if (seed) rc.sim.rng_seed = *seed;
    if (threads) rc.sim.threads = rc.verify.threads = *threads;
    if (xs.empty()) xs = rc.value_x;
    const std::string dir = rc.output_dir;
    Session s(std::move(rc));
    std::vector<std::string> files;
    int code = 0;
    if (*solve) {
      files = cmd_solve(s, dir);
    } else if (*curves) {
      const CurveKind k = what == "gamma_big"     ? CurveKind::GammaBig
                          : what == "gamma_small" ? CurveKind::GammaSmall
                          : what == "value"       ? CurveKind::Value
                          : what == "scale"       ? CurveKind::Scale
                                                  : CurveKind::All;
      files = cmd_curves(s, k, dir);
    } else if (*value) {
      if (xs.empty()) throw ConfigError("value: no points given (--x or value.x)");
      files = cmd_value(s, xs, dir);
    } else if (*simulate) {
      files = cmd_simulate(s, dir);
    } else if (*verify) {
      if (!cmd_verify(s, dir, &files)) {
        std::cerr << "verification failed; see verification.json\n";
        code = 4;
      }
    } else if (*check) {
      if (!cmd_selfcheck(s, dir, &files)) {
        std::cerr << "selfcheck failed; see selfcheck.json\n";
        code = 4;
      }
    }
    for (const auto& f : files) std::cout << f << '\n';
    return code;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const AssumptionViolation& e) {
    std::cerr << "assumption violated: " << e.what() << '\n';
    return 3;
  } catch (const ConvergenceError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 4;
  } catch (const DomainError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace levyctl
