// Python bindings: liftcut._core.
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

#include "liftcut/analyzer.hpp"
#include "liftcut/cli.hpp"
#include "liftcut/cover.hpp"
#include "liftcut/errors.hpp"
#include "liftcut/lift.hpp"
#include "liftcut/mixing.hpp"
#include "liftcut/version.hpp"

namespace py = pybind11;
using namespace liftcut;

namespace {

using GraphPtr = std::shared_ptr<WeightedMultigraph>;

py::dict arc_dict(const WeightedMultigraph& g, const std::vector<double>& v) {
  py::dict d;
  for (ArcId a = 0; a < g.num_arcs(); ++a) d[py::str(g.arc_name(a))] = v[a];
  return d;
}

py::object opt(const std::optional<std::size_t>& v) { return v ? py::object(py::int_(*v)) : py::none(); }

py::dict entropy_dict(const WeightedMultigraph& g, double alpha) {
  const auto r = entropy(g, alpha);
  py::dict d;
  d["alpha"] = r.alpha;
  d["h_W"] = r.h_w;
  d["s0"] = r.s0;
  d["s_alpha"] = r.s_alpha;
  d["h_alpha"] = r.h_alpha;
  d["a_frac"] = r.a_frac;
  d["h_alpha_inverse_scaling"] = r.h_alpha_inverse_scaling;
  d["degenerate"] = r.degenerate;
  // Per-arc quantities live on the core.
  d["q"] = arc_dict(r.core.core, r.green.q);
  d["w_hat"] = arc_dict(r.core.core, r.ray.w_hat);
  d["pi_hat"] = arc_dict(r.core.core, r.ray.pi_hat);
  return d;
}

py::dict assumptions_dict(const WeightedMultigraph& g) {
  const auto a = check_assumptions(g);
  py::dict d;
  d["irreducible"] = a.irreducible;
  d["two_cycles"] = a.two_cycles;
  d["all_positive"] = a.all_positive;
  d["every_edge_on_cycle"] = a.every_edge_on_cycle;
  d["period"] = a.period;
  py::list cycles;
  for (const auto& c : a.witness_cycles) {
    py::list one;
    for (ArcId x : c) one.append(g.arc_name(x));
    cycles.append(one);
  }
  d["witness_cycles"] = cycles;
  d["transience"] = is_cover_transient(g).transient() ? "transient" : "recurrent";
  return d;
}

Lift make_lift(const GraphPtr& g, std::size_t n, std::uint64_t seed, const std::string& method) {
  RngStream rng = RngStream::derive(seed, "lift", n);
  if (method == "uniform") return generate_uniform_lift(g, n, rng, seed);
  if (method == "sequential") return generate_sequential_lift(g, n, rng, seed);
  throw ValidationError("lift method must be 'uniform' or 'sequential'");
}

py::dict curve_dict(const MixingCurve& c) {
  py::dict d;
  d["start"] = c.start;
  d["tv"] = c.tv;
  d["eps"] = c.eps;
  py::list t;
  for (const auto& x : c.t_eps) t.append(opt(x));
  d["t_eps"] = t;
  d["tv_avg"] = c.tv_avg;
  py::list ta;
  for (const auto& x : c.t_eps_avg) ta.append(opt(x));
  d["t_eps_avg"] = ta;
  d["parity_warning"] = c.parity_warning;
  d["cap_exceeded"] = c.cap_exceeded;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Cutoff entropy and mixing on random lifts of weighted multigraphs";
  m.attr("__version__") = kVersion;

  auto validation = py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ReducibleChain>(m, "ReducibleChain", validation.ptr());
  py::register_exception<RecurrentCover>(m, "RecurrentCover", validation.ptr());
  py::register_exception<DegenerateEntropy>(m, "DegenerateEntropy", validation.ptr());
  py::register_exception<NonConvergence>(m, "NonConvergence", PyExc_RuntimeError);

  py::class_<WeightedMultigraph, GraphPtr>(m, "Graph")
      .def_static("parse", [](const std::string& s) { return std::make_shared<WeightedMultigraph>(WeightedMultigraph::parse(s)); })
      .def_static("load", [](const std::string& p) { return std::make_shared<WeightedMultigraph>(WeightedMultigraph::load(p)); })
      .def_property_readonly("num_vertices", &WeightedMultigraph::num_vertices)
      .def_property_readonly("num_edges", &WeightedMultigraph::num_edges)
      .def_property_readonly("alpha", &WeightedMultigraph::alpha)
      .def_property_readonly("digest", &WeightedMultigraph::digest_hex)
      .def("serialize", &WeightedMultigraph::serialize)
      .def("transition_matrix", &WeightedMultigraph::transition_matrix, py::arg("alpha"))
      .def("vertex_name", &WeightedMultigraph::vertex_name)
      .def("arc_name", &WeightedMultigraph::arc_name);

  m.def("check_assumptions", &assumptions_dict, py::arg("graph"));
  m.def("stationary_distribution", [](const WeightedMultigraph& g) { return stationary_distribution(g).p; });
  m.def("entropy", &entropy_dict, py::arg("graph"), py::arg("alpha") = 0.5,
        "Cutoff entropy h(alpha) with its ingredients.");
  m.def(
      "predict_mixing_time",
      [](double h, std::optional<double> sigma, double n, double eps) {
        const auto p = predict_mixing_time(h, sigma, n, eps);
        py::dict d;
        d["t_center"] = p.t_center;
        d["t_lower"] = p.t_lower ? py::object(py::float_(*p.t_lower)) : py::none();
        return d;
      },
      py::arg("h_alpha"), py::arg("sigma") = py::none(), py::arg("n"), py::arg("eps") = 0.25);
  m.def(
      "level_weight_check",
      [](const WeightedMultigraph& g, std::size_t radius) {
        const auto r = entropy(g, 0.0);
        return level_weight_check(g, extend_ray_law(g, r.core, r.ray), radius);
      },
      py::arg("graph"), py::arg("radius"));
  m.def(
      "cover_sim",
      [](const WeightedMultigraph& g, double alpha, std::size_t steps, std::size_t trials, std::uint64_t seed,
         std::size_t min_excursions, unsigned workers) {
        const auto r = entropy(g, 0.0);
        CoverSimOptions o;
        o.alpha = alpha, o.steps = steps, o.trials = trials, o.seed = seed;
        o.min_excursions = min_excursions, o.workers = workers;
        const auto s = run_cover_monte_carlo(g, extend_ray_law(g, r.core, r.ray), o);
        py::dict d;
        d["h_est"] = s.clt.h_est;
        d["se_h"] = s.clt.se_h;
        d["sigma_est"] = s.clt.sigma_est;
        d["speed_est"] = s.clt.speed_est;
        d["se_speed"] = s.clt.se_speed;
        d["excursions"] = s.clt.excursions;
        d["localization_slope"] = s.localization_fit.slope;
        return d;
      },
      py::arg("graph"), py::arg("alpha") = 0.5, py::arg("steps") = 100'000, py::arg("trials") = 10,
      py::arg("seed") = 1, py::arg("min_excursions") = 0, py::arg("workers") = 1);

  py::class_<Lift>(m, "Lift")
      .def_property_readonly("n", &Lift::n)
      .def_property_readonly("num_vertices", &Lift::num_vertices)
      .def("vertex", &Lift::vertex)
      .def("neighbor", &Lift::neighbor)
      .def("permutation", &Lift::permutation)
      .def("to_json", &Lift::to_json);
  m.def("generate_lift", &make_lift, py::arg("graph"), py::arg("n"), py::arg("seed") = 1,
        py::arg("method") = "uniform");
  m.def("lift_from_json", [](const GraphPtr& g, const std::string& text) { return Lift::from_json(g, text); });
  m.def(
      "mixing_curve",
      [](const Lift& l, std::size_t start, double alpha, std::vector<double> eps, std::size_t t_cap) {
        return curve_dict(mixing_curve(l, start, alpha, eps, t_cap));
      },
      py::arg("lift"), py::arg("start"), py::arg("alpha") = 0.5, py::arg("eps") = kDefaultEps,
      py::arg("t_cap") = 1000);
  m.def("spectrum_inheritance_check", &spectrum_inheritance_check, py::arg("lift"), py::arg("alpha") = 0.5);
  m.def("projection_identity_check", &projection_identity_check, py::arg("lift"), py::arg("start"),
        py::arg("alpha") = 0.5, py::arg("t_max") = 50);
  m.def(
      "conductance_proxy",
      [](const Lift& l, double alpha) {
        const auto r = conductance_proxy(l, alpha);
        py::dict d;
        d["lambda2"] = r.lambda2;
        d["gap"] = r.gap;
        d["sigma2"] = r.sigma2;
        d["conductance_lower"] = r.conductance_lower;
        d["conductance_upper"] = r.conductance_upper;
        d["disconnected"] = r.disconnected;
        return d;
      },
      py::arg("lift"), py::arg("alpha") = 0.5);
  m.def(
      "cutoff_sweep",
      [](const GraphPtr& g, std::vector<std::size_t> n_grid, double alpha, std::vector<double> eps, std::size_t seeds,
         std::uint64_t seed, const std::string& starts, unsigned workers) {
        SweepConfig cfg;
        cfg.n_grid = std::move(n_grid);
        cfg.alpha = alpha, cfg.eps = std::move(eps), cfg.seeds = seeds, cfg.master_seed = seed;
        cfg.starts = StartPolicy::parse(starts);
        cfg.workers = workers;
        SweepResult r;
        {
          py::gil_scoped_release release;
          r = cutoff_sweep(g, cfg);
        }
        py::dict d;
        d["slope"] = r.fit.slope;
        d["r_squared"] = r.fit.r_squared;
        d["predicted_slope"] = r.predicted_slope;
        d["h_alpha"] = r.h_alpha;
        d["seeds_with_monotone_window"] = r.seeds_with_monotone_window;
        d["cutoff"] = r.cutoff_verdict;
        py::list rows;
        for (const auto& row : r.rows) rows.append(py::make_tuple(row.n, row.seed, row.start, row.eps, opt(row.t_mix)));
        d["rows"] = rows;
        return d;
      },
      py::arg("graph"), py::arg("n_grid"), py::arg("alpha") = 0.5, py::arg("eps") = std::vector<double>{0.25},
      py::arg("seeds") = 5, py::arg("seed") = 1, py::arg("starts") = "sample:5", py::arg("workers") = 1);
  m.def(
      "cli", [](const std::vector<std::string>& args) { return cli::run(args); }, py::arg("args"),
      "Run the command-line interface in-process; returns the exit code.");
}
