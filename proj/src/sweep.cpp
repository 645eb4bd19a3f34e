#include "balab/sweep.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

namespace balab {

namespace fs = std::filesystem;

const std::vector<std::string> kCsvColumns = {
    "p",       "lambda",      "theta_lower", "theta_lower_se", "theta_upper", "theta_upper_se", "q_left",        "q_right",
    "alpha_right", "alpha_hat", "f1",        "f2",             "fstar",       "F_of_p",         "classification"};

namespace {

std::string cell_key(double p, double lambda) { return to_string_shortest(p) + "," + to_string_shortest(lambda); }

void write_atomically(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    os << text;
    if (!os) throw std::runtime_error("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string csv_field(const nlohmann::json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_float()) return to_string_shortest(v.get<double>());
  return v.dump();
}

}  // namespace

SweepConfig SweepConfig::from_json(const nlohmann::json& j) {
  SweepConfig c;
  c.p_grid = j.at("p").get<std::vector<double>>();
  c.lambda_grid = j.at("lambda").get<std::vector<double>>();
  c.spec = SpacingSpec::parse(j.value("spec", std::string("exp")));
  c.trials = j.value("trials", c.trials);
  c.n = j.value("n", c.n);
  c.k_grid = j.value("kGrid", std::vector<std::size_t>{});
  c.beta_windows = j.value("betaWindows", std::vector<std::size_t>{});
  c.seed = j.contains("seed") ? j.at("seed").get<std::uint64_t>() : default_seed();
  c.workers = j.value("workers", 0u);
  c.output = j.value("output", std::string("sweep-out"));
  c.fluctuation_threshold = j.value("fluctuationThreshold", c.fluctuation_threshold);
  c.svg = j.value("svg", true);
  return c;
}

nlohmann::json SweepConfig::to_json() const {
  return {{"p", p_grid},
          {"lambda", lambda_grid},
          {"spec", spec.str()},
          {"trials", trials},
          {"n", n},
          {"kGrid", effective_k_grid()},
          {"betaWindows", effective_beta_windows()},
          {"seed", seed},
          {"workers", workers},
          {"output", output},
          {"fluctuationThreshold", fluctuation_threshold},
          {"svg", svg}};
}

void SweepConfig::validate() const {
  if (p_grid.empty() || lambda_grid.empty()) throw std::invalid_argument("sweep grid must be nonempty");
  for (double v : p_grid)
    if (!(v > 0 && v < 1)) throw std::invalid_argument("p grid values must lie in (0, 1)");
  for (double v : lambda_grid)
    if (!(v > 0 && v < 1)) throw std::invalid_argument("lambda grid values must lie in (0, 1)");
  if (trials < 100) throw std::invalid_argument("trials per cell must be >= 100");
  if (n < 2) throw std::invalid_argument("window size n must be >= 2");
  for (std::size_t k : effective_k_grid())
    if (k < 1 || k > n) throw std::invalid_argument("k grid values must lie in [1, n]");
}

std::vector<std::size_t> SweepConfig::effective_k_grid() const { return k_grid.empty() ? geometric_grid(n) : k_grid; }

std::vector<std::size_t> SweepConfig::effective_beta_windows() const {
  if (!beta_windows.empty()) return beta_windows;
  return {std::max<std::size_t>(1, n / 4), std::max<std::size_t>(2, n / 2), n};
}

std::string SweepConfig::result_key() const {
  nlohmann::json j = to_json();
  j.erase("workers");
  j.erase("output");
  j.erase("svg");
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << hash_label(j.dump());
  return os.str();
}

std::string to_string(Classification c) {
  switch (c) {
    case Classification::FluctuationConsistent: return "Fluctuation-consistent";
    case Classification::FixationDetected: return "Fixation-detected";
    case Classification::Undecided: return "Undecided";
  }
  return {};
}

Classification classify(const ThetaBracket& t, double fluctuation_threshold) {
  if (t.lower.value - 3.0 * t.lower.se > 0.0) return Classification::FixationDetected;
  if (t.lower.value == 0.0 && t.upper.value < fluctuation_threshold) return Classification::FluctuationConsistent;
  return Classification::Undecided;
}

PhasePoint compute_phase_point(const SweepConfig& cfg, double p, double lambda) {
  const Params params(p, lambda);
  const Parallel par{cfg.workers};
  // Labels do not depend on (p, lambda): neighbouring cells share random
  // numbers, which keeps the classification close to monotone in p.
  PhasePoint pt;
  pt.p = p;
  pt.lambda = lambda;
  pt.theta = theta_bracket(cfg.spec, params, cfg.n, cfg.effective_k_grid(), cfg.trials,
                           {cfg.seed, 0, "sweep/theta"}, par);
  pt.alpha = estimate_alpha(cfg.spec, params, cfg.n, cfg.trials, {cfg.seed, 0, "sweep/alpha"}, par);
  pt.beta = estimate_beta(cfg.spec, params, cfg.effective_beta_windows(), cfg.trials, {cfg.seed, 0, "sweep/beta"}, par);
  pt.bounds = eval_bound_functions(lambda);
  if (!pt.alpha.degenerate) {
    pt.f_of_p = eval_F(p, lambda, Alpha<double>{pt.alpha.right.value, pt.alpha.left.value, pt.alpha.hat.value}).value;
    pt.bounds.f_of_p = pt.f_of_p;
  }
  pt.classification = classify(pt.theta, cfg.fluctuation_threshold);
  return pt;
}

nlohmann::json PhasePoint::to_json() const {
  nlohmann::json j{{"p", p},
                   {"lambda", lambda},
                   {"theta", balab::to_json(theta)},
                   {"alpha", balab::to_json(alpha)},
                   {"beta", balab::to_json(beta)},
                   {"bounds", balab::to_json(bounds)},
                   {"classification", to_string(classification)}};
  j["fOfP"] = f_of_p ? nlohmann::json(*f_of_p) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json PhasePoint::csv_row() const {
  nlohmann::json r;
  r["p"] = p;
  r["lambda"] = lambda;
  r["theta_lower"] = theta.lower.value;
  r["theta_lower_se"] = theta.lower.se;
  r["theta_upper"] = theta.upper.value;
  r["theta_upper_se"] = theta.upper.se;
  r["q_left"] = theta.q_left.value;
  r["q_right"] = theta.q_right.value;
  r["alpha_right"] = alpha.right.value;
  r["alpha_hat"] = alpha.hat.value;
  r["f1"] = bounds.f_star1;
  r["f2"] = bounds.f_star2;
  r["fstar"] = bounds.f_star_upper;
  r["F_of_p"] = f_of_p ? nlohmann::json(*f_of_p) : nlohmann::json(nullptr);
  r["classification"] = to_string(classification);
  return r;
}

std::vector<std::string> phase_violations(const nlohmann::json& row, bool atomless) {
  std::vector<std::string> out;
  const double p = row.at("p").get<double>();
  const double lambda = row.at("lambda").get<double>();
  const std::string cls = row.at("classification").get<std::string>();
  const double floor = row.at(atomless ? "f2" : "f1").get<double>();
  const std::string where = "p=" + to_string_shortest(p) + " lambda=" + to_string_shortest(lambda);
  if (p <= floor && cls == to_string(Classification::FixationDetected))
    out.push_back(where + ": fixation detected at or below the proven fluctuation bound");
  if (p > row.at("fstar").get<double>() && cls == to_string(Classification::FluctuationConsistent))
    out.push_back(where + ": fluctuation-consistent above f*");
  return out;
}

SweepResult run_sweep(const SweepConfig& cfg, std::ostream* log, const std::atomic<bool>* stop) {
  cfg.validate();
  const fs::path dir(cfg.output);
  fs::create_directories(dir);
  write_atomically(dir / "config.json", cfg.to_json().dump(2) + "\n");
  const std::string key = cfg.result_key();
  const fs::path store = dir / "cells.jsonl";

  std::map<std::string, nlohmann::json> done;
  if (fs::exists(store)) {
    std::ifstream is(store);
    std::string line;
    while (std::getline(is, line)) {
      // A torn final line from an interrupted write fails to parse and is
      // recomputed.
      auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object() || j.value("key", "") != key) continue;
      done[cell_key(j.at("p").get<double>(), j.at("lambda").get<double>())] = j;
    }
  }

  SweepResult res;
  std::ofstream out(store, std::ios::app | std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + store.string());
  for (double lambda : cfg.lambda_grid) {
    for (double p : cfg.p_grid) {
      const std::string ck = cell_key(p, lambda);
      auto it = done.find(ck);
      if (it != done.end()) {
        ++res.reused;
        continue;
      }
      if (stop && stop->load()) {
        res.interrupted = true;
        continue;
      }
      const PhasePoint pt = compute_phase_point(cfg, p, lambda);
      nlohmann::json rec{{"key", key}, {"p", p}, {"lambda", lambda}, {"row", pt.csv_row()}, {"point", pt.to_json()}};
      const std::string text = rec.dump() + "\n";
      out.write(text.data(), static_cast<std::streamsize>(text.size()));
      out.flush();
      done[ck] = std::move(rec);
      ++res.computed;
      if (log)
        *log << "cell p=" << to_string_shortest(p) << " lambda=" << to_string_shortest(lambda) << ": "
             << to_string(pt.classification) << " lower=" << pt.theta.lower.value << " se=" << pt.theta.lower.se
             << " upper=" << pt.theta.upper.value << "\n";
    }
  }

  const bool atomless = !cfg.spec.is_exact();
  for (double lambda : cfg.lambda_grid) {
    for (double p : cfg.p_grid) {
      auto it = done.find(cell_key(p, lambda));
      if (it == done.end()) continue;
      const nlohmann::json& row = it->second.at("row");
      res.rows.push_back(row);
      for (auto& v : phase_violations(row, atomless)) res.violations.push_back(std::move(v));
      if (!it->second.at("point").at("theta").at("consistent").get<bool>())
        res.bracket_inconsistencies.push_back("p=" + to_string_shortest(p) + " lambda=" + to_string_shortest(lambda));
    }
  }

  std::ostringstream csv;
  write_csv(csv, res.rows);
  write_atomically(dir / "phase.csv", csv.str());
  if (cfg.svg) {
    std::ostringstream svg;
    write_svg(svg, res.rows);
    write_atomically(dir / "phase.svg", svg.str());
  }
  return res;
}

void write_csv(std::ostream& os, const std::vector<nlohmann::json>& rows) {
  for (std::size_t i = 0; i < kCsvColumns.size(); ++i) os << (i ? "," : "") << kCsvColumns[i];
  os << "\n";
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < kCsvColumns.size(); ++i) os << (i ? "," : "") << csv_field(r.at(kCsvColumns[i]));
    os << "\n";
  }
}

void write_svg(std::ostream& os, const std::vector<nlohmann::json>& rows) {
  constexpr double W = 640, H = 480, L = 60, R = 20, T = 20, B = 50;
  constexpr double pmax = 0.6;
  auto X = [&](double lam) { return L + lam * (W - L - R); };
  auto Y = [&](double p) { return H - B - p / pmax * (H - T - B); };
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<line x1=\"" << X(0) << "\" y1=\"" << Y(0) << "\" x2=\"" << X(1) << "\" y2=\"" << Y(0) << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << X(0) << "\" y1=\"" << Y(0) << "\" x2=\"" << X(0) << "\" y2=\"" << Y(pmax) << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 10; i += 2) {
    const double lam = i / 10.0;
    os << "<text x=\"" << X(lam) << "\" y=\"" << Y(0) + 16 << "\" text-anchor=\"middle\">" << lam << "</text>\n";
  }
  for (int i = 0; i <= 6; ++i) {
    const double p = i / 10.0;
    os << "<text x=\"" << X(0) - 6 << "\" y=\"" << Y(p) + 4 << "\" text-anchor=\"end\">" << p << "</text>\n";
  }
  os << "<text x=\"" << X(0.5) << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">lambda</text>\n";
  os << "<text x=\"16\" y=\"" << Y(pmax / 2) << "\" transform=\"rotate(-90 16 " << Y(pmax / 2) << ")\" text-anchor=\"middle\">p</text>\n";

  struct Curve {
    const char* name;
    const char* color;
    const char* dash;
    double (*f)(const BoundSet<double>&);
  };
  const Curve curves[] = {
      {"f1", "#1f77b4", "6 3", [](const BoundSet<double>& b) { return b.f_star1; }},
      {"f2", "#2ca02c", "", [](const BoundSet<double>& b) { return b.f_star2; }},
      {"f*", "#d62728", "", [](const BoundSet<double>& b) { return b.f_star_upper; }},
  };
  int legend = 0;
  for (const auto& c : curves) {
    os << "<polyline fill=\"none\" stroke=\"" << c.color << "\" stroke-width=\"1.5\"";
    if (*c.dash) os << " stroke-dasharray=\"" << c.dash << "\"";
    os << " points=\"";
    for (int i = 1; i < 200; ++i) {
      const double lam = i / 200.0;
      os << X(lam) << "," << Y(c.f(eval_bound_functions(lam))) << " ";
    }
    os << "\"/>\n";
    os << "<text x=\"" << X(1) - 40 << "\" y=\"" << T + 14 * (legend++ + 1) << "\" fill=\"" << c.color << "\">" << c.name
       << "</text>\n";
  }
  for (const auto& r : rows) {
    const std::string cls = r.at("classification").get<std::string>();
    const char* fill = cls == "Fixation-detected" ? "#2ca02c" : cls == "Fluctuation-consistent" ? "#1f77b4" : "#999999";
    os << "<circle cx=\"" << X(r.at("lambda").get<double>()) << "\" cy=\"" << Y(r.at("p").get<double>())
       << "\" r=\"5\" fill=\"" << fill << "\"><title>" << cls << "</title></circle>\n";
  }
  os << "</svg>\n";
}

nlohmann::json BoundaryResult::to_json() const {
  nlohmann::json probes_j = nlohmann::json::array();
  for (const auto& pr : probes)
    probes_j.push_back({{"p", pr.p},
                        {"lower", pr.theta.lower.value},
                        {"lowerStderr", pr.theta.lower.se},
                        {"upper", pr.theta.upper.value},
                        {"kLeft", pr.theta.k_left},
                        {"kRight", pr.theta.k_right},
                        {"detected", pr.detected}});
  return {{"pLo", p_lo}, {"pHi", p_hi}, {"width", width()}, {"status", status}, {"probes", probes_j}};
}

BoundaryResult find_boundary(const BoundaryConfig& cfg, std::ostream* log) {
  if (!(cfg.p_lo > 0 && cfg.p_lo < cfg.p_hi && cfg.p_hi < 1))
    throw std::invalid_argument("boundary p-range must satisfy 0 < lo < hi < 1");
  if (cfg.k_max < 1 || cfg.k_max > cfg.n) throw std::invalid_argument("boundary needs 1 <= k_max <= n");
  const auto grid = geometric_grid(cfg.k_max);
  const RandomnessContract rng{cfg.seed, 0, "boundary"};
  BoundaryResult res;
  auto probe = [&](double p) {
    BoundaryProbe pr;
    pr.p = p;
    pr.theta = theta_bracket(cfg.spec, Params(p, cfg.lambda), cfg.n, grid, cfg.trials, rng, {cfg.workers});
    pr.detected = classify(pr.theta, 0.0) == Classification::FixationDetected;
    if (log)
      *log << "probe p=" << to_string_shortest(p) << " lower=" << pr.theta.lower.value << " se=" << pr.theta.lower.se
           << (pr.detected ? " fixation detected" : " not detected") << "\n";
    res.probes.push_back(pr);
    return pr.detected;
  };

  res.p_lo = cfg.p_lo;
  res.p_hi = cfg.p_hi;
  if (probe(cfg.p_lo) || !probe(cfg.p_hi)) {
    res.status = "no sign change";
    return res;
  }
  while (res.p_hi - res.p_lo > cfg.tolerance + 1e-12) {
    if (res.probes.size() >= cfg.max_probes) {
      res.status = "budget exhausted";
      return res;
    }
    const double mid = 0.5 * (res.p_lo + res.p_hi);
    if (probe(mid)) res.p_hi = mid;
    else res.p_lo = mid;
  }
  res.status = "ok";
  return res;
}

}  // namespace balab
