#include "balab/engine.hpp"
#include "balab/estimators.hpp"
#include "balab/oracle.hpp"
#include "balab/theory.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

namespace py = pybind11;
using namespace balab;
using namespace pybind11::literals;

namespace {

// Results cross the boundary as JSON, decoded by the json module.
py::object to_py(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

Side parse_side(const std::string& s) {
  if (s == "left" || s == "positive") return Side::Positive;
  if (s == "right" || s == "negative") return Side::Negative;
  throw std::invalid_argument("side must be 'left' or 'right'");
}

RandomnessContract contract(std::optional<std::uint64_t> seed, const std::string& label) {
  return {seed.value_or(default_seed()), 0, label};
}

py::dict outcome_dict(const WindowOutcome& o) {
  py::list collisions;
  for (const auto& c : o.collisions) {
    py::list idx;
    for (int i = 0; i < c.arity(); ++i) idx.append(c.indices[static_cast<std::size_t>(i)]);
    collisions.append(py::dict("time"_a = c.time.str(), "position"_a = c.position.str(),
                               "kind"_a = c.kind == CollisionKind::Pair ? "pair" : "triple", "indices"_a = idx));
  }
  auto visit = [](const std::optional<Visit>& v) -> py::object {
    if (!v) return py::none();
    return py::dict("index"_a = v->index, "time"_a = v->time.str());
  };
  return py::dict("collisions"_a = collisions, "survivors"_a = o.survivors, "pattern"_a = o.survivor_pattern(),
                  "dot"_a = o.counts.dot, "left"_a = o.counts.left, "right"_a = o.counts.right,
                  "first_left_visitor"_a = visit(o.first_left_visitor),
                  "first_right_visitor"_a = visit(o.first_right_visitor));
}

}  // namespace

PYBIND11_MODULE(_balab, m) {
  m.doc() = "Three-velocity ballistic annihilation: exact resolution, Monte-Carlo estimates, closed-form bounds.";

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<BudgetExceeded>(m, "BudgetExceeded", PyExc_RuntimeError);

  m.def(
      "resolve",
      [](const std::string& text, bool naive) {
        const auto c = parse_configuration(text);
        return outcome_dict(naive ? naive_resolve(c) : resolve(c));
      },
      "text"_a, "naive"_a = false, "Resolve a configuration given in the text format (\"i x v; i x v; ...\").");

  m.def("default_seed", &default_seed);

  m.def(
      "estimate_q",
      [](const std::string& side, double p, double lambda, const std::string& spec, std::size_t n,
         std::size_t trials, std::optional<std::uint64_t> seed, unsigned workers) {
        py::gil_scoped_release release;
        const auto e = estimate_q(parse_side(side), SpacingSpec::parse(spec), Params(p, lambda), n, trials,
                                  contract(seed, "py/q-" + side), {workers});
        py::gil_scoped_acquire acquire;
        return to_py(to_json(e));
      },
      "side"_a, "p"_a, "lam"_a, "spec"_a = "exp", "n"_a = 256, "trials"_a = 20000, "seed"_a = py::none(),
      "workers"_a = 0);

  m.def(
      "estimate_mean_z",
      [](const std::string& side, double p, double lambda, std::size_t k, const std::string& spec,
         std::size_t trials, std::optional<std::uint64_t> seed, unsigned workers) {
        py::gil_scoped_release release;
        const auto e = estimate_mean_z(parse_side(side), SpacingSpec::parse(spec), Params(p, lambda), k, trials,
                                       contract(seed, "py/z-" + side), {workers});
        py::gil_scoped_acquire acquire;
        return to_py(to_json(e));
      },
      "side"_a, "p"_a, "lam"_a, "k"_a, "spec"_a = "exp", "trials"_a = 20000, "seed"_a = py::none(), "workers"_a = 0);

  m.def(
      "estimate_alpha",
      [](double p, double lambda, const std::string& spec, std::size_t n, std::size_t trials,
         std::optional<std::uint64_t> seed, unsigned workers) {
        py::gil_scoped_release release;
        const auto a =
            estimate_alpha(SpacingSpec::parse(spec), Params(p, lambda), n, trials, contract(seed, "py/alpha"), {workers});
        py::gil_scoped_acquire acquire;
        return to_py(to_json(a));
      },
      "p"_a, "lam"_a, "spec"_a = "exp", "n"_a = 256, "trials"_a = 20000, "seed"_a = py::none(), "workers"_a = 0);

  m.def(
      "theta_bracket",
      [](double p, double lambda, const std::string& spec, std::size_t n, std::size_t kmax, std::size_t trials,
         std::optional<std::uint64_t> seed, unsigned workers) {
        py::gil_scoped_release release;
        const auto t = theta_bracket(SpacingSpec::parse(spec), Params(p, lambda), n, geometric_grid(kmax), trials,
                                     contract(seed, "py/theta"), {workers});
        py::gil_scoped_acquire acquire;
        return to_py(to_json(t));
      },
      "p"_a, "lam"_a, "spec"_a = "exp", "n"_a = 256, "kmax"_a = 128, "trials"_a = 20000, "seed"_a = py::none(),
      "workers"_a = 0);

  m.def(
      "eval_F",
      [](double p, double lambda, double alpha_right, double alpha_left, double alpha_hat) {
        return to_py(to_json(eval_F(p, lambda, Alpha<double>{alpha_right, alpha_left, alpha_hat})));
      },
      "p"_a, "lam"_a, "alpha_right"_a = 0.5, "alpha_left"_a = 0.5, "alpha_hat"_a = 0.0);

  m.def(
      "eval_F_exact",
      [](const std::string& p, const std::string& lambda, const std::string& ar, const std::string& al,
         const std::string& ah) {
        const Alpha<Rational> a{parse_rational(ar), parse_rational(al), parse_rational(ah)};
        return to_string(eval_F(parse_rational(p), parse_rational(lambda), a).value);
      },
      "p"_a, "lam"_a, "alpha_right"_a = "1/2", "alpha_left"_a = "1/2", "alpha_hat"_a = "0");

  m.def(
      "bound_functions", [](double lambda) { return to_py(to_json(eval_bound_functions(lambda))); }, "lam"_a);

  m.def(
      "solve_fluctuation_system",
      [](double p, double lambda, double alpha_right, double alpha_left, double alpha_hat) {
        return to_py(to_json(solve_fluctuation_system(p, lambda, Alpha<double>{alpha_right, alpha_left, alpha_hat})));
      },
      "p"_a, "lam"_a, "alpha_right"_a = 0.5, "alpha_left"_a = 0.5, "alpha_hat"_a = 0.0);

  m.def(
      "fixed_point_pc",
      [](double lambda, double alpha_right, double alpha_left, double alpha_hat) {
        return to_py(to_json(fixed_point_pc(lambda, Alpha<double>{alpha_right, alpha_left, alpha_hat})));
      },
      "lam"_a, "alpha_right"_a = 0.5, "alpha_left"_a = 0.5, "alpha_hat"_a = 0.0);

  m.def(
      "enumerate_exact",
      [](int n, const std::string& p, const std::string& lambda, const std::string& stat) {
        return to_py(nlohmann::json::parse(
            enumerate_exact(n, parse_rational(p), parse_rational(lambda), parse_statistic(stat)).to_json()));
      },
      "n"_a, "p"_a, "lam"_a, "stat"_a = "sigma");

  m.def(
      "exact_truncated_q",
      [](int n, const std::string& p, const std::string& lambda) {
        return to_string(exact_truncated_q(n, parse_rational(p), parse_rational(lambda)));
      },
      "n"_a, "p"_a, "lam"_a);
}
