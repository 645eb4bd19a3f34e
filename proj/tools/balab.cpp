// balab: command-line front end for the simulator, estimators and sweeps.
//
// Exit codes: 0 ok, 1 usage or input error, 2 verification failure,
// 3 budget exhausted (or no sign change in a bracket search).

#include "balab/engine.hpp"
#include "balab/estimators.hpp"
#include "balab/model.hpp"
#include "balab/oracle.hpp"
#include "balab/sweep.hpp"
#include "balab/theory.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <csignal>
#include <cmath>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

using namespace balab;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kVerifyFailed = 2;
constexpr int kBudget = 3;

std::atomic<bool> g_stop{false};
extern "C" void on_interrupt(int) { g_stop = true; }

struct Common {
  double p = 0.3;
  double lambda = 0.5;
  std::string spec = "exp";
  std::size_t n = 256;
  std::size_t trials = 20000;
  std::uint64_t seed = 0;
  unsigned workers = 0;
};

void add_common(CLI::App* c, Common& o) {
  o.seed = default_seed();
  c->add_option("--p", o.p, "Blockade probability")->capture_default_str();
  c->add_option("--lambda", o.lambda, "Rightward share of movers")->capture_default_str();
  c->add_option("--spec", o.spec, "Spacing law: exp, unit, uniform:LO:HI, atomic:S@W,...")->capture_default_str();
  c->add_option("--n", o.n, "Window size")->capture_default_str();
  c->add_option("--trials", o.trials, "Monte-Carlo trials")->capture_default_str();
  c->add_option("--seed", o.seed, "Master seed (default from BALAB_SEED)")->capture_default_str();
  c->add_option("--workers", o.workers, "Worker threads, 0 = all cores")->capture_default_str();
}

json provenance(const Common& o, const std::string& label) {
  return {{"seed", o.seed}, {"label", label}, {"spec", SpacingSpec::parse(o.spec).str()}, {"p", o.p},
          {"lambda", o.lambda}, {"n", o.n}, {"trials", o.trials}};
}

// ---- trace ----------------------------------------------------------------

int cmd_trace(const std::string& file, const std::string& inline_text, bool force_float) {
  std::string text = inline_text;
  if (text.empty() && !file.empty()) {
    if (file == "-") {
      text.assign(std::istreambuf_iterator<char>(std::cin), {});
    } else {
      std::ifstream is(file);
      if (!is) {
        std::cerr << "balab trace: cannot open " << file << "\n";
        return kUsage;
      }
      text.assign(std::istreambuf_iterator<char>(is), {});
    }
  }
  Configuration c;
  try {
    c = parse_configuration(text, force_float ? std::optional<Mode>(Mode::Float) : std::nullopt);
  } catch (const ParseError& e) {
    std::cerr << "balab trace: " << e.what() << "\n";
    return kUsage;
  }
  if (c.empty()) {
    std::cerr << "balab trace: empty configuration\nusage: balab trace FILE | balab trace --config \"1 1 R; 2 2 L\"\n";
    return kUsage;
  }
  WindowOutcome o;
  try {
    o = resolve(c);
  } catch (const std::invalid_argument& e) {
    std::cerr << "balab trace: " << e.what() << "\n";
    return kUsage;
  }
  write_collision_log(std::cout, o);
  std::cout << "survivors: " << (o.survivors.empty() ? "(none)" : o.survivor_pattern());
  for (long i : o.survivors) std::cout << ' ' << i;
  std::cout << "\ncounts: dot=" << o.counts.dot << " left=" << o.counts.left << " right=" << o.counts.right << "\n";
  if (o.first_left_visitor)
    std::cout << "first left visitor: " << o.first_left_visitor->index << " at time " << o.first_left_visitor->time.str()
              << "\n";
  if (o.first_right_visitor)
    std::cout << "first right visitor: " << o.first_right_visitor->index << " at time "
              << o.first_right_visitor->time.str() << "\n";
  if (o.anomalies) std::cout << "anomalies: " << o.anomalies << " float-mode triple collisions\n";
  return kOk;
}

// ---- estimate -------------------------------------------------------------

int cmd_estimate(const std::string& quantity, const Common& o, std::size_t k, std::size_t kmax,
                 std::vector<std::size_t> windows) {
  const SpacingSpec spec = SpacingSpec::parse(o.spec);
  const Params params(o.p, o.lambda);
  const RandomnessContract rng{o.seed, 0, "estimate/" + quantity};
  const Parallel par{o.workers};
  json out{{"quantity", quantity}, {"provenance", provenance(o, rng.label)}};
  if (quantity == "q-left" || quantity == "q-right") {
    const Side side = quantity == "q-left" ? Side::Positive : Side::Negative;
    out["estimate"] = to_json(estimate_q(side, spec, params, o.n, o.trials, rng, par));
  } else if (quantity == "alpha") {
    out["estimate"] = to_json(estimate_alpha(spec, params, o.n, o.trials, rng, par));
  } else if (quantity == "beta") {
    if (windows.empty())
      for (std::size_t w = 32; w <= o.n; w *= 2) windows.push_back(w);
    if (windows.empty()) windows.push_back(o.n);
    out["estimate"] = to_json(estimate_beta(spec, params, windows, o.trials, rng, par));
  } else if (quantity == "mean-z-left" || quantity == "mean-z-right") {
    const Side side = quantity == "mean-z-left" ? Side::Positive : Side::Negative;
    out["estimate"] = to_json(estimate_mean_z(side, spec, params, k, o.trials, rng, par));
  } else if (quantity == "theta-bracket") {
    const ThetaBracket t = theta_bracket(spec, params, o.n, geometric_grid(std::min(kmax, o.n)), o.trials, rng, par);
    out["estimate"] = to_json(t);
    out["classification"] = to_string(classify(t, 0.05));
  } else if (quantity == "collision-classes") {
    out["estimate"] = to_json(estimate_collision_classes(spec, params, o.n, o.trials, rng, par));
  } else if (quantity == "geometric") {
    out["estimate"] = to_json(check_geometric_visits(spec, params, o.n, o.trials, rng, par));
  } else if (quantity == "bounds") {
    out["estimate"] = to_json(eval_bound_functions(o.lambda));
  } else {
    std::cerr << "balab estimate: unknown quantity '" << quantity << "'\n";
    return kUsage;
  }
  std::cout << out.dump(2) << "\n";
  return kOk;
}

// ---- verify ---------------------------------------------------------------

struct SuiteReport {
  json checks = json::array();
  bool ok = true;
  void add(const std::string& name, bool pass, json detail = json::object()) {
    detail["name"] = name;
    detail["pass"] = pass;
    checks.push_back(detail);
    ok = ok && pass;
  }
};

SuiteReport suite_engine_oracle(const Common& o) {
  SuiteReport r;
  std::size_t discrepancies = 0;
  std::size_t cases = 0;
  std::string first;
  for (int n = 1; n <= 7; ++n) {
    std::vector<int> digit(static_cast<std::size_t>(n), 0);
    constexpr Velocity kinds[3] = {Velocity::Left, Velocity::Blockade, Velocity::Right};
    while (true) {
      std::vector<std::pair<long long, Velocity>> xs;
      for (int i = 0; i < n; ++i) xs.emplace_back(i + 1, kinds[digit[static_cast<std::size_t>(i)]]);
      const Configuration c = make_configuration(xs);
      ++cases;
      if (auto why = compare_outcomes(resolve(c), naive_resolve(c))) {
        if (!discrepancies++) first = *why;
      }
      int i = 0;
      while (i < n && ++digit[static_cast<std::size_t>(i)] == 3) digit[static_cast<std::size_t>(i++)] = 0;
      if (i == n) break;
    }
  }
  r.add("exhaustive-unit-n<=7", discrepancies == 0, {{"cases", cases}, {"discrepancies", discrepancies}, {"first", first}});

  const SpacingSpec exp = SpacingSpec::exponential();
  const Params params(o.p, o.lambda);
  std::size_t bad = 0;
  const std::size_t runs = std::min<std::size_t>(o.trials, 2000);
  for (std::size_t t = 0; t < runs; ++t) {
    const Configuration c = sample_half_configuration(exp, params, 50, Side::Positive, {o.seed, t, "verify/oracle"});
    if (compare_outcomes(resolve(c), naive_resolve(c))) ++bad;
  }
  r.add("random-exp-n=50", bad == 0, {{"cases", runs}, {"discrepancies", bad}});
  return r;
}

SuiteReport suite_identities(const Common& o) {
  SuiteReport r;
  const SpacingSpec spec = SpacingSpec::parse(o.spec);
  const Params params(o.p, o.lambda);
  const Parallel par{o.workers};
  const Estimate qr = estimate_q(Side::Negative, spec, params, o.n, o.trials, {o.seed, 0, "verify/q-right"}, par);
  const Estimate ql = estimate_q(Side::Positive, spec, params, o.n, o.trials, {o.seed, 0, "verify/q-left"}, par);
  const AlphaTriple a = estimate_alpha(spec, params, o.n, o.trials, {o.seed, 0, "verify/alpha"}, par);
  const BetaPair b = estimate_beta(spec, params, {o.n / 2, o.n}, o.trials, {o.seed, 0, "verify/beta"}, par);
  const CollisionClasses cc = estimate_collision_classes(spec, params, o.n, o.trials, {o.seed, 0, "verify/classes"}, par);
  const IdentityReport rep = check_identities(qr, ql, a, b.beta_right(), b.beta_left(), params, cc);
  for (const auto& res : rep.residuals)
    r.add(res.name, !res.flagged, {{"residual", res.value}, {"stderr", res.se}, {"lhs", res.lhs}, {"rhs", res.rhs}});
  return r;
}

SuiteReport suite_bounds() {
  SuiteReport r;
  const auto sym = symmetric_alpha<Rational>();
  const auto f_half = eval_F<Rational>(Rational(1, 3), Rational(1, 2), sym);
  r.add("F(p,1/2)=1/4", f_half.value == Rational(1, 4), {{"value", to_string(f_half.value)}});

  Stream s(0xB0B);
  std::size_t floor_bad = 0;
  std::size_t mirror_bad = 0;
  for (int i = 0; i < 100000; ++i) {
    const double h = s.uniform();
    const double ar = h + (1 - h) * s.uniform();
    const Alpha<double> a{ar, 1 + h - ar, h};
    const double lam = 0.001 + 0.998 * s.uniform();
    const double p = 0.001 + 0.998 * s.uniform();
    const double f = eval_F(p, lam, a).value;
    if (f < 1.0 / (4.0 + h) - 1e-12) ++floor_bad;
    const double fm = eval_F(p, 1 - lam, Alpha<double>{a.left, a.right, h}).value;
    if (std::abs(f - fm) > 1e-12) ++mirror_bad;
  }
  r.add("F>=1/(4+hat)", floor_bad == 0, {{"violations", floor_bad}});
  r.add("F-mirror", mirror_bad == 0, {{"violations", mirror_bad}});

  std::size_t order_bad = 0;
  for (int i = 1; i < 1000; ++i) {
    const double lam = i / 1000.0;
    const auto b = eval_bound_functions(lam);
    const auto m = eval_bound_functions(1 - lam);
    if (!(b.elementary_lower <= b.f_star1 && b.f_star1 <= b.f_star2 && b.f_star_upper <= b.elementary_upper)) ++order_bad;
    if (std::abs(b.f_star1 - m.f_star1) > 1e-15 || std::abs(b.f_star2 - m.f_star2) > 1e-15 ||
        std::abs(b.f_star_upper - m.f_star_upper) > 1e-15)
      ++order_bad;
  }
  r.add("bound-ordering-and-mirror", order_bad == 0, {{"violations", order_bad}});

  const auto fl = solve_fluctuation_system<Rational>(Rational(9, 25), Rational(1, 2), sym);
  const bool two_thirds = fl.feasible && fl.q_right->is_exact() && fl.q_right->rational() == Rational(2, 3) &&
                          fl.q_left->rational() == Rational(2, 3);
  r.add("fluctuation-system-p=9/25", two_thirds, to_json(fl));
  return r;
}

SuiteReport suite_superadditivity(const Common& o) {
  SuiteReport r;
  const auto mc = check_superadditivity(SpacingSpec::parse(o.spec), Params(o.p, o.lambda), 1, 20, 50, o.trials,
                                        {o.seed, 0, "verify/superadditivity"}, {o.workers});
  r.add("monte-carlo-(1,20,50)", mc.violations == 0, to_json(mc));
  const auto ex = check_superadditivity_exhaustive(1, 3, 6);
  r.add("exhaustive-unit-(1,3,6)", ex.violations == 0, to_json(ex));
  return r;
}

SuiteReport suite_mirror(const Common& o) {
  SuiteReport r;
  const SpacingSpec spec = SpacingSpec::parse(o.spec);
  const Params params(o.p, o.lambda);
  std::size_t bad = 0;
  const std::size_t runs = std::min<std::size_t>(o.trials, 10000);
  for (std::size_t t = 0; t < runs; ++t) {
    const Configuration c = sample_half_configuration(spec, params, 40, Side::Positive, {o.seed, t, "verify/mirror"});
    const WindowOutcome a = resolve(c);
    const WindowOutcome b = resolve(mirror(c));
    if (compare_outcomes(mirror(a), b)) ++bad;
  }
  r.add("resolve-mirror-equivariance", bad == 0, {{"cases", runs}, {"violations", bad}});
  return r;
}

SuiteReport suite_dichotomy(const Common& o) {
  SuiteReport r;
  const SpacingSpec spec = SpacingSpec::parse(o.spec);
  const Params params(o.p, o.lambda);
  const Parallel par{o.workers};
  const Estimate qr = estimate_q(Side::Negative, spec, params, o.n, o.trials, {o.seed, 0, "verify/q"}, par);
  const Estimate ql = estimate_q(Side::Positive, spec, params, o.n, o.trials, {o.seed, 0, "verify/q"}, par);
  const AlphaTriple a = estimate_alpha(spec, params, o.n, o.trials, {o.seed, 0, "verify/alpha"}, par);
  const BetaPair b = estimate_beta(spec, params, {o.n / 2, o.n}, o.trials, {o.seed, 0, "verify/beta"}, par);
  const DichotomyReport d = check_dichotomy(qr, ql, a, b.beta_right(), b.beta_left(), params);
  r.add("dichotomy", d.consistent(), to_json(d));
  return r;
}

int cmd_verify(const std::string& suite, const Common& o) {
  SuiteReport r;
  if (suite == "engine-oracle") r = suite_engine_oracle(o);
  else if (suite == "identities") r = suite_identities(o);
  else if (suite == "bounds") r = suite_bounds();
  else if (suite == "superadditivity") r = suite_superadditivity(o);
  else if (suite == "mirror") r = suite_mirror(o);
  else if (suite == "dichotomy") r = suite_dichotomy(o);
  else {
    std::cerr << "balab verify: unknown suite '" << suite
              << "' (engine-oracle, identities, bounds, superadditivity, mirror, dichotomy)\n";
    return kUsage;
  }
  std::cout << json{{"suite", suite}, {"pass", r.ok}, {"checks", r.checks}}.dump(2) << "\n";
  return r.ok ? kOk : kVerifyFailed;
}

// ---- sweep / boundary / oracle -------------------------------------------

int cmd_sweep(const std::string& config_path, const std::string& output, unsigned workers, int workers_set) {
  std::ifstream is(config_path);
  if (!is) {
    std::cerr << "balab sweep: cannot open " << config_path << "\n";
    return kUsage;
  }
  SweepConfig cfg;
  try {
    cfg = SweepConfig::from_json(json::parse(is));
    if (!output.empty()) cfg.output = output;
    if (workers_set) cfg.workers = workers;
    cfg.validate();
  } catch (const std::exception& e) {
    std::cerr << "balab sweep: bad config: " << e.what() << "\n";
    return kUsage;
  }
  std::signal(SIGINT, on_interrupt);
  std::signal(SIGTERM, on_interrupt);
  const SweepResult res = run_sweep(cfg, &std::cerr, &g_stop);
  json summary{{"output", cfg.output},
               {"computed", res.computed},
               {"reused", res.reused},
               {"cells", res.rows.size()},
               {"interrupted", res.interrupted},
               {"violations", res.violations},
               {"bracketInconsistencies", res.bracket_inconsistencies}};
  std::cout << summary.dump(2) << "\n";
  if (res.interrupted) return kUsage;
  return res.violations.empty() && res.bracket_inconsistencies.empty() ? kOk : kVerifyFailed;
}

int cmd_boundary(BoundaryConfig cfg, const std::string& spec) {
  cfg.spec = SpacingSpec::parse(spec);
  const BoundaryResult res = find_boundary(cfg, &std::cerr);
  json out = res.to_json();
  out["lambda"] = cfg.lambda;
  out["spec"] = cfg.spec.str();
  out["trials"] = cfg.trials;
  out["n"] = cfg.n;
  out["kMax"] = cfg.k_max;
  out["seed"] = cfg.seed;
  std::cout << out.dump(2) << "\n";
  if (res.status != "ok") {
    std::cerr << "balab boundary: " << res.status << "\n";
    return kBudget;
  }
  return kOk;
}

int cmd_oracle(int n, const std::string& p, const std::string& lambda, const std::string& stat, bool q_only) {
  try {
    const Rational pr = parse_rational(p);
    const Rational lr = parse_rational(lambda);
    if (q_only) {
      const Rational q = exact_truncated_q(n, pr, lr);
      std::cout << json{{"n", n}, {"p", to_string(pr)}, {"lambda", to_string(lr)}, {"qLeftTruncated", to_string(q)}}.dump(2)
                << "\n";
    } else {
      std::cout << enumerate_exact(n, pr, lr, parse_statistic(stat)).to_json() << "\n";
    }
  } catch (const BudgetExceeded& e) {
    std::cerr << "balab oracle: " << e.what() << "\n";
    return kBudget;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact simulator and Monte-Carlo laboratory for three-velocity ballistic annihilation"};
  app.require_subcommand(1);

  auto* trace = app.add_subcommand("trace", "Resolve one configuration and print its collision log");
  std::string trace_file;
  std::string trace_inline;
  bool trace_float = false;
  trace->add_option("file", trace_file, "Configuration file ('-' for stdin)");
  trace->add_option("--config,-c", trace_inline, "Inline configuration, records separated by ';'");
  trace->add_flag("--float", trace_float, "Resolve in floating point");

  auto* estimate = app.add_subcommand("estimate", "Run one estimator and print JSON");
  Common est;
  std::string quantity;
  std::size_t est_k = 1;
  std::size_t est_kmax = 128;
  std::vector<std::size_t> est_windows;
  estimate
      ->add_option("quantity", quantity,
                   "q-left, q-right, alpha, beta, mean-z-left, mean-z-right, theta-bracket, collision-classes, "
                   "geometric, bounds")
      ->required();
  add_common(estimate, est);
  estimate->add_option("--k", est_k, "Window for mean-z")->capture_default_str();
  estimate->add_option("--kmax", est_kmax, "Largest k in the theta-bracket grid")->capture_default_str();
  estimate->add_option("--windows", est_windows, "Window schedule for beta");

  auto* verify = app.add_subcommand("verify", "Run a verification suite");
  Common ver;
  ver.p = 0.35;
  ver.n = 256;
  ver.trials = 20000;
  std::string suite;
  verify->add_option("suite", suite, "engine-oracle, identities, bounds, superadditivity, mirror, dichotomy")->required();
  add_common(verify, ver);

  auto* sweep = app.add_subcommand("sweep", "Phase-diagram sweep from a JSON config");
  std::string sweep_config;
  std::string sweep_output;
  unsigned sweep_workers = 0;
  sweep->add_option("config", sweep_config, "SweepConfig JSON file")->required();
  sweep->add_option("--output,-o", sweep_output, "Output directory (overrides the config)");
  auto* sweep_workers_opt = sweep->add_option("--workers", sweep_workers, "Worker threads");

  auto* boundary = app.add_subcommand("boundary", "Bracket the transition in p at fixed lambda");
  BoundaryConfig bc;
  bc.seed = default_seed();
  std::string bc_spec = "exp";
  boundary->add_option("--lambda", bc.lambda)->capture_default_str();
  boundary->add_option("--spec", bc_spec)->capture_default_str();
  boundary->add_option("--p-lo", bc.p_lo)->capture_default_str();
  boundary->add_option("--p-hi", bc.p_hi)->capture_default_str();
  boundary->add_option("--tol", bc.tolerance, "Stop once the bracket is this narrow")->capture_default_str();
  boundary->add_option("--max-probes", bc.max_probes)->capture_default_str();
  boundary->add_option("--trials", bc.trials, "Trials per probe")->capture_default_str();
  boundary->add_option("--n", bc.n)->capture_default_str();
  boundary->add_option("--kmax", bc.k_max)->capture_default_str();
  boundary->add_option("--seed", bc.seed)->capture_default_str();
  boundary->add_option("--workers", bc.workers)->capture_default_str();

  auto* oracle = app.add_subcommand("oracle", "Exact enumeration at unit spacing");
  int or_n = 3;
  std::string or_p = "1/4";
  std::string or_lambda = "1/2";
  std::string or_stat = "sigma";
  bool or_q = false;
  oracle->add_option("--n", or_n)->capture_default_str();
  oracle->add_option("--p", or_p, "Rational, e.g. 1/4")->capture_default_str();
  oracle->add_option("--lambda", or_lambda)->capture_default_str();
  oracle->add_option("--stat", or_stat, "sigma, zleft, zright, nleft, nright, ndot")->capture_default_str();
  oracle->add_flag("--q", or_q, "Print the truncated visit probability only");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*trace) return cmd_trace(trace_file, trace_inline, trace_float);
    if (*estimate) return cmd_estimate(quantity, est, est_k, est_kmax, est_windows);
    if (*verify) return cmd_verify(suite, ver);
    if (*sweep) return cmd_sweep(sweep_config, sweep_output, sweep_workers, static_cast<int>(sweep_workers_opt->count()));
    if (*boundary) return cmd_boundary(bc, bc_spec);
    if (*oracle) return cmd_oracle(or_n, or_p, or_lambda, or_stat, or_q);
  } catch (const std::invalid_argument& e) {
    std::cerr << "balab: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
