#include "balab/sweep.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace balab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("balab-test-" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

SweepConfig small_config(const fs::path& out) {
  SweepConfig c;
  c.p_grid = {0.15, 0.45};
  c.lambda_grid = {0.5};
  c.spec = SpacingSpec::exponential();
  c.trials = 400;
  c.n = 64;
  c.seed = 42;
  c.workers = 1;
  c.output = out.string();
  return c;
}

}  // namespace

TEST_CASE("config validation") {
  SweepConfig c = small_config("x");
  CHECK_NOTHROW(c.validate());
  c.trials = 99;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.trials = 100;
  c.p_grid = {0.0};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.p_grid = {0.5};
  c.lambda_grid = {1.0};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("config json round trip and result key") {
  const SweepConfig c = small_config("x");
  const SweepConfig d = SweepConfig::from_json(c.to_json());
  CHECK(d.to_json() == c.to_json());
  SweepConfig e = c;
  e.workers = 8;
  e.output = "elsewhere";
  CHECK(e.result_key() == c.result_key());
  e.trials = 500;
  CHECK(e.result_key() != c.result_key());
  CHECK(c.effective_k_grid() == std::vector<std::size_t>{1, 2, 4, 8, 16, 32, 64});
  CHECK(c.effective_beta_windows() == std::vector<std::size_t>{16, 32, 64});
}

TEST_CASE("classification") {
  ThetaBracket t;
  t.lower = {0.05, 0.01};
  t.upper = {0.3, 0.01};
  CHECK(classify(t, 0.05) == Classification::FixationDetected);
  t.lower = {0.02, 0.01};
  CHECK(classify(t, 0.05) == Classification::Undecided);
  t.lower = {0.0, 0.0};
  t.upper = {0.01, 0.01};
  CHECK(classify(t, 0.05) == Classification::FluctuationConsistent);
  t.upper = {0.2, 0.01};
  CHECK(classify(t, 0.05) == Classification::Undecided);
}

TEST_CASE("phase violations") {
  nlohmann::json row{{"p", 0.22}, {"lambda", 0.5}, {"f1", 0.2}, {"f2", 0.25}, {"fstar", 1.0 / 3},
                     {"classification", "Fixation-detected"}};
  CHECK(phase_violations(row, true).size() == 1);
  CHECK(phase_violations(row, false).empty());
  row["p"] = 0.4;
  row["classification"] = "Fluctuation-consistent";
  CHECK(phase_violations(row, true).size() == 1);
  row["classification"] = "Undecided";
  CHECK(phase_violations(row, true).empty());
}

TEST_CASE("sweep writes outputs, resumes, and ignores the worker count") {
  const fs::path a = scratch("a");
  const fs::path b = scratch("b");
  SweepConfig ca = small_config(a);
  SweepConfig cb = small_config(b);
  cb.workers = 3;

  const auto ra = run_sweep(ca);
  const auto rb = run_sweep(cb);
  CHECK(ra.computed == 2);
  CHECK(slurp(a / "phase.csv") == slurp(b / "phase.csv"));
  CHECK(fs::exists(a / "phase.svg"));
  CHECK(fs::exists(a / "config.json"));

  const std::string header = slurp(a / "phase.csv").substr(0, slurp(a / "phase.csv").find('\n'));
  std::string expected;
  for (std::size_t i = 0; i < kCsvColumns.size(); ++i) expected += (i ? "," : "") + kCsvColumns[i];
  CHECK(header == expected);

  // Resume: a second run reuses every cell and writes the same CSV.
  const std::string before = slurp(a / "phase.csv");
  const auto again = run_sweep(ca);
  CHECK(again.computed == 0);
  CHECK(again.reused == 2);
  CHECK(slurp(a / "phase.csv") == before);

  // A torn trailing line is skipped and the cell recomputed.
  {
    std::string cells = slurp(a / "cells.jsonl");
    cells = cells.substr(0, cells.rfind('\n', cells.size() - 2) + 1) + "{\"key\": \"trunc";
    std::ofstream(a / "cells.jsonl") << cells;
  }
  const auto torn = run_sweep(ca);
  CHECK(torn.computed == 1);
  CHECK(slurp(a / "phase.csv") == before);
}

TEST_CASE("sweep stops on request and resumes to the same result") {
  const fs::path a = scratch("stop");
  const fs::path fresh = scratch("fresh");
  SweepConfig c = small_config(a);
  std::atomic<bool> stop{true};
  const auto first = run_sweep(c, nullptr, &stop);
  CHECK(first.interrupted);
  CHECK(first.computed == 0);
  const auto rest = run_sweep(c);
  CHECK(rest.computed == 2);
  CHECK_FALSE(rest.interrupted);
  SweepConfig f = small_config(fresh);
  run_sweep(f);
  CHECK(slurp(a / "phase.csv") == slurp(fresh / "phase.csv"));
}

TEST_CASE("boundary: no sign change above f*") {
  BoundaryConfig bc;
  bc.lambda = 0.5;
  bc.spec = SpacingSpec::exponential();
  bc.p_lo = 0.4;
  bc.p_hi = 0.45;
  bc.trials = 5000;
  bc.n = 128;
  bc.k_max = 64;
  bc.seed = 3;
  const auto r = find_boundary(bc);
  CHECK(r.status == "no sign change");
}
