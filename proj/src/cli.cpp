#include "liftcut/cli.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <unistd.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "liftcut/analyzer.hpp"
#include "liftcut/cover.hpp"
#include "liftcut/errors.hpp"
#include "liftcut/lift.hpp"
#include "liftcut/mixing.hpp"
#include "liftcut/parallel.hpp"
#include "liftcut/version.hpp"

namespace liftcut::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string num(double v) {
  char buf[32];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + tmp.string());
    out << content;
    if (!out) throw ValidationError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

/// Output bookkeeping shared by all subcommands.
struct Session {
  std::string command;
  json config;
  std::string graph_digest;
  fs::path out_dir;
  std::vector<std::pair<fs::path, std::string>> artifacts;  // path, content digest

  std::string config_digest() const { return hex64(fnv1a(config.dump())); }

  json provenance() const {
    return json{{"config_digest", config_digest()}, {"version", kVersion}, {"graph_digest", graph_digest}};
  }

  fs::path resolve(const fs::path& p) const { return p.is_absolute() ? p : out_dir / p; }

  void emit(const fs::path& rel, const std::string& content) {
    const fs::path path = resolve(rel);
    write_atomic(path, content);
    artifacts.emplace_back(path, hex64(fnv1a(content)));
  }

  void emit_json(const fs::path& rel, const json& body) {
    json doc;
    doc["provenance"] = provenance();
    for (const auto& [k, v] : body.items()) doc[k] = v;
    emit(rel, doc.dump(2) + "\n");
  }

  void emit_csv(const fs::path& rel, const std::string& header, const std::vector<std::string>& lines) {
    std::string s = "# config_digest=" + config_digest() + " version=" + kVersion +
                    " graph_digest=" + graph_digest + "\n" + header + "\n";
    for (const auto& l : lines) s += l + "\n";
    emit(rel, s);
  }

  void write_manifest() {
    if (artifacts.empty()) return;
    json m;
    m["schema"] = "liftcut-manifest/1";
    m["version"] = kVersion;
    m["command"] = command;
    m["config"] = config;
    m["config_digest"] = config_digest();
    m["graph_digest"] = graph_digest;
    json arts = json::array();
    for (const auto& [p, d] : artifacts) arts.push_back({{"path", p.lexically_relative(out_dir).generic_string()}, {"fnv1a", d}});
    m["artifacts"] = arts;
    const std::time_t now = std::time(nullptr);
    char ts[32];
    std::strftime(ts, sizeof ts, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    m["timestamp"] = ts;
    write_atomic(out_dir / "manifest.json", m.dump(2) + "\n");
  }
};

fs::path default_out_dir() {
  if (const char* env = std::getenv("LIFTCUT_OUT_DIR"); env && *env) return env;
  return ".";
}

json arc_map(const WeightedMultigraph& g, std::span<const double> v) {
  json j = json::object();
  for (ArcId a = 0; a < g.num_arcs(); ++a) j[g.arc_name(a)] = v[a];
  return j;
}

json cycles_json(const WeightedMultigraph& g, const std::vector<std::vector<ArcId>>& cycles) {
  json j = json::array();
  for (const auto& c : cycles) {
    json one = json::array();
    for (ArcId a : c) one.push_back(g.arc_name(a));
    j.push_back(one);
  }
  return j;
}

std::string verdict_name(TransienceVerdict::Kind k) {
  switch (k) {
    case TransienceVerdict::Kind::transient: return "transient";
    case TransienceVerdict::Kind::recurrent: return "recurrent";
    case TransienceVerdict::Kind::recurrent_finite: return "recurrent_finite";
  }
  return "?";
}

double resolve_alpha(const std::optional<double>& flag, const WeightedMultigraph& g) {
  const double a = flag.value_or(g.alpha());
  if (!(a >= 0.0 && a < 1.0)) throw ValidationError("alpha must lie in [0,1)");
  return a;
}

std::size_t default_t_cap(const WeightedMultigraph& g, double alpha, std::size_t states) {
  try {
    const EntropyReport r = entropy(g, alpha);
    if (r.h_alpha > 0.0)
      return std::max<std::size_t>(200, static_cast<std::size_t>(4.0 * std::log(static_cast<double>(states)) / r.h_alpha));
  } catch (const ValidationError&) {
  }
  return 10'000;
}

// ---------------------------------------------------------------- options

struct Common {
  std::string graph;
  std::string out_dir;
  unsigned jobs = 0;
};

struct ValidateOpts {
  std::string out;
};
struct AnalyzeOpts {
  std::optional<double> alpha;
  std::optional<double> n;
  double eps = 0.25;
  std::optional<double> sigma;
  std::string out = "analyze.json";
};
struct CoverOpts {
  std::optional<double> alpha;
  std::size_t steps = 100'000, trials = 10, margin = 25, min_excursions = 0, r_max = 10, samples = 1000;
  std::uint64_t seed = 1;
  std::string root, e_star, out = "cover.json", trials_csv;
};
struct LiftOpts {
  std::size_t n = 0;
  std::uint64_t seed = 1;
  std::string method = "uniform", input, out = "lift.json";
  std::optional<double> alpha;
};
struct MixOpts {
  std::size_t n = 0;
  std::uint64_t seed = 1;
  std::optional<double> alpha;
  std::vector<double> eps = kDefaultEps;
  std::string starts = "sample:5", lift, out = "curve.csv", summary = "mix.json", format = "csv";
  std::size_t t_cap = 0;
};
struct SweepOpts {
  std::vector<std::size_t> n;
  std::optional<double> alpha;
  std::vector<double> eps{0.25};
  std::size_t seeds = 5, t_cap = 0;
  std::uint64_t seed = 1;
  std::string starts = "sample:5", results = "results.csv", summary = "summary.json";
  std::optional<double> sigma;
  double slack = 5.0;
};
struct SpectrumOpts {
  std::size_t n = 0, t_max = 50;
  std::uint64_t seed = 1;
  std::optional<double> alpha;
  std::string out = "spectrum.json";
};

// ---------------------------------------------------------------- commands

int cmd_validate(const Common& c, const ValidateOpts& o, Session& s) {
  const auto g = WeightedMultigraph::load(c.graph);
  s.graph_digest = g.digest_hex();
  s.config = {{"command", "validate"}, {"graph_digest", s.graph_digest}};
  const AssumptionReport a = check_assumptions(g);
  json j;
  j["vertices"] = g.num_vertices();
  j["edges"] = g.num_edges();
  j["alpha"] = g.alpha_weight().literal;
  j["assumptions"] = {{"irreducible", a.irreducible},       {"two_cycles", a.two_cycles},
                      {"all_positive", a.all_positive},     {"some_edge_both_ways", a.some_edge_both_ways},
                      {"every_edge_on_cycle", a.every_edge_on_cycle}, {"period", a.period}};
  j["witness_cycles"] = cycles_json(g, a.witness_cycles);
  if (a.irreducible) {
    const auto pi = stationary_distribution(g);
    json p = json::object();
    for (VertexId v = 0; v < g.num_vertices(); ++v) p[g.vertex_name(v)] = pi[v];
    j["stationary"] = p;
    j["stationary_residual"] = pi.residual;
    const auto t = is_cover_transient(g);
    j["cover_walk"] = {{"verdict", verdict_name(t.kind)}, {"reason", t.reason}};
  }
  json doc;
  doc["provenance"] = s.provenance();
  for (const auto& [k, v] : j.items()) doc[k] = v;
  std::cout << doc.dump(2) << "\n";
  if (!o.out.empty()) s.emit_json(o.out, j);
  return kOk;
}

int cmd_analyze(const Common& c, const AnalyzeOpts& o, Session& s) {
  const auto g = WeightedMultigraph::load(c.graph);
  const double alpha = resolve_alpha(o.alpha, g);
  s.graph_digest = g.digest_hex();
  s.config = {{"command", "analyze"}, {"graph_digest", s.graph_digest}, {"alpha", alpha}};
  if (o.n) s.config["n"] = *o.n, s.config["eps"] = o.eps;
  if (o.sigma) s.config["sigma"] = *o.sigma;

  EntropyReport r = entropy(g, alpha);
  if (o.sigma) r.sigma_mc = *o.sigma;
  const auto& core = r.core.core;
  json j;
  j["alpha"] = alpha;
  j["h_W"] = r.h_w;
  j["s0"] = r.s0;
  j["s_alpha"] = r.s_alpha;
  j["h_alpha"] = r.h_alpha;
  j["a_frac"] = r.a_frac;
  j["h_alpha_inverse_scaling"] = r.h_alpha_inverse_scaling;
  j["degenerate"] = r.degenerate;
  j["q"] = arc_map(core, r.green.q);
  j["w_hat"] = arc_map(core, r.ray.w_hat);
  j["pi_hat"] = arc_map(core, r.ray.pi_hat);
  j["residuals"] = {{"first_passage", r.green.residual}, {"ray_stationarity", r.ray.stationarity_residual}};
  j["iterations"] = r.green.iterations;
  json removed = json::array();
  for (VertexId v : r.core.removed_vertices) removed.push_back(g.vertex_name(v));
  j["core"] = {{"vertices", core.num_vertices()}, {"edges", core.num_edges()}, {"removed", removed}};
  if (o.n) {
    json pred;
    try {
      const MixingPrediction p = predict_mixing_time(r, *o.n, o.eps);
      pred["t_center"] = p.t_center;
      if (p.t_lower) pred["t_lower"] = *p.t_lower, pred["window_scale"] = *p.window_scale;
    } catch (const DegenerateEntropy& e) {
      pred["error"] = e.what();
    }
    j["prediction"] = pred;
  }
  s.emit_json(o.out, j);
  std::cout << "h_alpha=" << num(r.h_alpha) << " h_W=" << num(r.h_w) << " s0=" << num(r.s0)
            << " a_frac=" << num(r.a_frac) << (r.degenerate ? " degenerate" : "") << "\n";
  return kOk;
}

int cmd_cover(const Common& c, const CoverOpts& o, Session& s) {
  const auto g = WeightedMultigraph::load(c.graph);
  const double alpha = resolve_alpha(o.alpha, g);
  s.graph_digest = g.digest_hex();
  CoverSimOptions opts;
  opts.alpha = alpha;
  opts.steps = o.steps;
  opts.trials = o.trials;
  opts.seed = o.seed;
  opts.margin = o.margin;
  opts.min_excursions = o.min_excursions;
  opts.r_max = o.r_max;
  opts.localization_samples = o.samples;
  opts.workers = c.jobs;
  if (!o.root.empty()) {
    const auto v = g.find_vertex(o.root);
    if (!v) throw ValidationError("unknown root vertex " + o.root);
    opts.root = *v;
  }
  const EntropyReport r = entropy(g, alpha);
  const RayLaw law = extend_ray_law(g, r.core, r.ray);
  if (!o.e_star.empty()) {
    for (ArcId a = 0; a < g.num_arcs(); ++a)
      if (g.arc_name(a) == o.e_star) opts.e_star = a;
    if (!opts.e_star) throw ValidationError("unknown arc " + o.e_star + " (use <edge id>+ or <edge id>-)");
  }
  s.config = {{"command", "cover-sim"}, {"graph_digest", s.graph_digest}, {"alpha", alpha},
              {"steps", o.steps}, {"trials", o.trials}, {"seed", o.seed}, {"margin", o.margin},
              {"root", g.vertex_name(opts.root)}, {"e_star", o.e_star}, {"min_excursions", o.min_excursions},
              {"r_max", o.r_max}, {"localization_samples", o.samples}};

  const CoverSummary sum = run_cover_monte_carlo(g, law, opts);
  json j;
  j["e_star"] = g.arc_name(sum.e_star);
  j["h_est"] = sum.clt.h_est;
  j["se_h"] = sum.clt.se_h;
  j["sigma_est"] = sum.clt.sigma_est;
  j["se_sigma"] = sum.clt.se_sigma;
  j["speed_est"] = sum.clt.speed_est;
  j["se_speed"] = sum.clt.se_speed;
  j["excursions"] = sum.clt.excursions;
  j["trials"] = sum.trials.size();
  if (!sum.clt.note.empty()) j["note"] = sum.clt.note;
  j["predicted"] = {{"h_alpha", r.h_alpha}, {"speed", r.s_alpha}};
  const auto probs = sum.localization.probabilities();
  j["localization_profile"] = {{"samples", sum.localization.samples},
                               {"p_exceed", probs},
                               {"fit", {{"slope", sum.localization_fit.slope},
                                        {"intercept", sum.localization_fit.intercept},
                                        {"r_squared", sum.localization_fit.r_squared},
                                        {"points", sum.localization_fit.points}}}};
  s.emit_json(o.out, j);
  if (!o.trials_csv.empty()) {
    std::vector<std::string> lines;
    for (const auto& t : sum.trials)
      lines.push_back(std::to_string(t.trial) + "," + std::to_string(t.steps) + "," + std::to_string(t.final_height) +
                      "," + std::to_string(t.ray_levels) + "," + std::to_string(t.excursions) + "," + num(t.sum_tau) +
                      "," + num(t.sum_dw) + "," + num(t.sum_dh));
    s.emit_csv(o.trials_csv, "trial,steps,final_height,ray_levels,excursions,sum_tau,sum_dw,sum_dh", lines);
  }
  std::cout << "h_est=" << num(sum.clt.h_est) << " se=" << num(sum.clt.se_h) << " sigma_est=" << num(sum.clt.sigma_est)
            << " speed_est=" << num(sum.clt.speed_est) << " excursions=" << sum.clt.excursions << "\n";
  return kOk;
}

Lift make_lift(std::shared_ptr<const WeightedMultigraph> g, std::size_t n, std::uint64_t seed,
               const std::string& method) {
  RngStream rng = RngStream::derive(seed, "lift", n);
  if (method == "uniform") return generate_uniform_lift(std::move(g), n, rng, seed);
  if (method == "sequential") return generate_sequential_lift(std::move(g), n, rng, seed);
  throw ValidationError("lift method must be 'uniform' or 'sequential'");
}

Lift read_lift(std::shared_ptr<const WeightedMultigraph> g, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read lift file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return Lift::from_json(std::move(g), ss.str());
}

int cmd_lift(const Common& c, const LiftOpts& o, Session& s) {
  auto g = std::make_shared<const WeightedMultigraph>(WeightedMultigraph::load(c.graph));
  const double alpha = resolve_alpha(o.alpha, *g);
  s.graph_digest = g->digest_hex();
  const bool reading = !o.input.empty();
  if (!reading && o.n == 0) throw ValidationError("lift needs --n (or --input)");
  const Lift lift = reading ? read_lift(g, o.input) : make_lift(g, o.n, o.seed, o.method);
  s.config = {{"command", "lift"}, {"graph_digest", s.graph_digest}, {"alpha", alpha}};
  if (reading) {
    s.config["input_digest"] = hex64(fnv1a(lift.to_json()));
  } else {
    s.config["n"] = o.n, s.config["seed"] = o.seed, s.config["method"] = o.method;
    s.emit(o.out, lift.to_json());
  }
  const auto pi_n = lift_stationary(stationary_distribution(*g), lift.n());
  const double stat = lift_stationary_residual(lift, pi_n, alpha);
  std::cout << "n=" << lift.n() << " vertices=" << lift.num_vertices() << " edges=" << lift.num_edges()
            << " stationary_residual=" << num(stat) << "\n";
  return kOk;
}

int cmd_mix(const Common& c, const MixOpts& o, Session& s) {
  auto g = std::make_shared<const WeightedMultigraph>(WeightedMultigraph::load(c.graph));
  const double alpha = resolve_alpha(o.alpha, *g);
  s.graph_digest = g->digest_hex();
  if (o.lift.empty() && o.n == 0) throw ValidationError("mix needs --n (or --lift)");
  if (o.format != "csv" && o.format != "json") throw ValidationError("format must be csv or json");
  const StartPolicy policy = StartPolicy::parse(o.starts);
  const Lift lift = o.lift.empty() ? make_lift(g, o.n, o.seed, "uniform") : read_lift(g, o.lift);
  const std::size_t t_cap = o.t_cap > 0 ? o.t_cap : default_t_cap(*g, alpha, lift.num_vertices());
  s.config = {{"command", "mix"}, {"graph_digest", s.graph_digest}, {"alpha", alpha}, {"n", lift.n()},
              {"seed", o.seed}, {"lift_digest", hex64(fnv1a(lift.to_json()))}, {"eps", o.eps},
              {"starts", policy.to_string()}, {"t_cap", t_cap}};

  RngStream rng = RngStream::derive(o.seed, "starts", lift.n());
  const auto starts = choose_starts(lift, policy, rng);
  const SparseKernel kernel = SparseKernel::from_lift(lift, alpha);
  const auto pi_n = lift_stationary(stationary_distribution(*g), lift.n());
  std::vector<MixingCurve> curves(starts.size());
  parallel_for(starts.size(), c.jobs, [&](std::size_t i) {
    curves[i] = mixing_curve(lift, kernel, pi_n, starts[i], alpha, o.eps, t_cap);
  });

  auto label = [&](LiftVertex x) { return g->vertex_name(lift.type(x)) + ":" + std::to_string(lift.fiber(x) + 1); };
  const std::size_t tight = static_cast<std::size_t>(std::min_element(o.eps.begin(), o.eps.end()) - o.eps.begin());
  const ExtremeMixing worst = extremes(curves, tight);
  std::size_t shown = 0;
  for (std::size_t i = 0; i < curves.size(); ++i)
    if (curves[i].start == worst.argmax) shown = i;
  const MixingCurve& cv = curves[shown];

  json summary;
  summary["curve_start"] = label(cv.start);
  json per = json::array();
  bool parity = false;
  for (const auto& cu : curves) {
    json row{{"start", label(cu.start)}, {"t_eps", json::array()}, {"cap_exceeded", cu.cap_exceeded},
             {"max_mass_drift", cu.max_mass_drift}};
    for (const auto& t : cu.t_eps) row["t_eps"].push_back(t ? json(*t) : json(nullptr));
    if (!cu.t_eps_avg.empty()) {
      row["t_eps_two_step"] = json::array();
      for (const auto& t : cu.t_eps_avg) row["t_eps_two_step"].push_back(t ? json(*t) : json(nullptr));
    }
    parity = parity || cu.parity_warning;
    per.push_back(row);
  }
  summary["starts"] = per;
  json ext = json::array();
  for (std::size_t k = 0; k < o.eps.size(); ++k) {
    const ExtremeMixing e = extremes(curves, k);
    ext.push_back({{"eps", o.eps[k]},
                   {"t_max", e.t_max ? json(*e.t_max) : json(nullptr)},
                   {"t_min", e.t_min ? json(*e.t_min) : json(nullptr)},
                   {"argmax", label(e.argmax)},
                   {"argmin", label(e.argmin)},
                   {"sampled", !policy.all}});
  }
  summary["extremes"] = ext;
  if (parity) {
    summary["warning"] = "periodic chain without holding: crossings use the two-step averaged curve";
    std::cerr << "warning: periodic chain with alpha = 0; parity oscillation in the raw curve\n";
  }

  if (o.format == "csv") {
    std::vector<std::string> lines;
    for (std::size_t t = 0; t < cv.tv.size(); ++t) lines.push_back(std::to_string(t) + "," + num(cv.tv[t]));
    s.emit_csv(o.out, "t,tv", lines);
  } else {
    json curve = json::array();
    for (std::size_t t = 0; t < cv.tv.size(); ++t) curve.push_back({{"t", t}, {"tv", cv.tv[t]}});
    s.emit_json(o.out, json{{"curve", curve}});
  }
  s.emit_json(o.summary, summary);
  std::cout << "starts=" << curves.size() << " t_max(" << num(o.eps[tight]) << ")="
            << (worst.t_max ? std::to_string(*worst.t_max) : "unreached") << "\n";
  return kOk;
}

int cmd_sweep(const Common& c, const SweepOpts& o, Session& s) {
  auto g = std::make_shared<const WeightedMultigraph>(WeightedMultigraph::load(c.graph));
  const double alpha = resolve_alpha(o.alpha, *g);
  s.graph_digest = g->digest_hex();
  SweepConfig cfg;
  cfg.n_grid = o.n;
  cfg.alpha = alpha;
  cfg.eps = o.eps;
  cfg.seeds = o.seeds;
  cfg.master_seed = o.seed;
  cfg.starts = StartPolicy::parse(o.starts);
  cfg.t_cap = o.t_cap;
  cfg.workers = c.jobs;
  s.config = {{"command", "sweep"}, {"graph_digest", s.graph_digest}, {"alpha", alpha}, {"n", o.n},
              {"eps", o.eps}, {"seeds", o.seeds}, {"seed", o.seed}, {"starts", cfg.starts.to_string()},
              {"t_cap", o.t_cap}};
  if (o.sigma) s.config["sigma"] = *o.sigma, s.config["slack"] = o.slack;

  std::cerr << "sweep: " << o.n.size() * o.seeds << " cells on " << c.jobs << " workers\n";
  const SweepResult res = cutoff_sweep(g, cfg);

  std::vector<std::string> lines;
  for (const auto& r : res.rows)
    lines.push_back(std::to_string(r.n) + "," + std::to_string(r.seed) + "," + r.start + "," + num(r.eps) + "," +
                    (r.t_mix ? std::to_string(*r.t_mix) : "") + "," + (r.t_mix ? "1" : "0"));
  s.emit_csv(o.results, "n,seed,start,eps,t_mix,reached", lines);

  json j;
  j["fit_eps"] = res.fit_eps;
  j["slope"] = res.fit.slope;
  j["slope_se"] = res.fit.slope_se;
  j["slope_ci95"] = {res.fit.slope - res.fit.slope_ci95, res.fit.slope + res.fit.slope_ci95};
  j["intercept"] = res.fit.intercept;
  j["r_squared"] = res.fit.r_squared;
  j["predicted_slope"] = res.predicted_slope;
  j["tolerance"] = kSlopeTolerance;
  json windows = json::array();
  for (const auto& w : res.windows) {
    json row{{"n", w.n}, {"mean_ratio", w.mean_ratio}, {"ratio_by_seed", json::array()}};
    for (const auto& r : w.ratio_by_seed) row["ratio_by_seed"].push_back(r ? json(*r) : json(nullptr));
    windows.push_back(row);
  }
  j["window_table"] = windows;
  j["seeds_with_monotone_window"] = res.seeds_with_monotone_window;
  j["slope_within_tolerance"] = res.slope_within_tolerance;
  j["verdict"] = res.cutoff_verdict ? "cutoff" : "inconclusive";
  j["max_mass_drift"] = res.max_mass_drift;
  j["max_tv_increase"] = res.max_tv_increase;
  j["t_max_is_lower_bound"] = !cfg.starts.all;
  if (o.sigma) {
    const LowerBoundReport lb = lower_bound_check(res, *o.sigma, 0, o.slack);
    json cells = json::array();
    for (const auto& cell : lb.cells)
      cells.push_back({{"n", cell.n}, {"seed", cell.seed}, {"t_min", cell.t_min ? json(*cell.t_min) : json(nullptr)},
                       {"bound", cell.bound}, {"holds", cell.holds}});
    j["lower_bound"] = {{"sigma", *o.sigma}, {"slack", o.slack}, {"fraction_holding", lb.fraction}, {"cells", cells}};
  }
  s.emit_json(o.summary, j);
  std::cout << "slope=" << num(res.fit.slope) << " predicted=" << num(res.predicted_slope)
            << " verdict=" << (res.cutoff_verdict ? "cutoff" : "inconclusive") << "\n";
  return kOk;
}

int cmd_spectrum(const Common& c, const SpectrumOpts& o, Session& s) {
  auto g = std::make_shared<const WeightedMultigraph>(WeightedMultigraph::load(c.graph));
  const double alpha = resolve_alpha(o.alpha, *g);
  s.graph_digest = g->digest_hex();
  if (o.n == 0) throw ValidationError("spectrum needs --n");
  s.config = {{"command", "spectrum"}, {"graph_digest", s.graph_digest}, {"alpha", alpha},
              {"n", o.n}, {"seed", o.seed}, {"t_max", o.t_max}};
  const Lift lift = make_lift(g, o.n, o.seed, "uniform");
  const SpectralReport sp = conductance_proxy(lift, alpha);
  const double inherit = spectrum_inheritance_check(lift, alpha);
  const double proj = projection_identity_check(lift, 0, alpha, o.t_max);
  json j;
  j["lambda2"] = sp.lambda2;
  j["gap"] = sp.gap;
  j["sigma2"] = sp.sigma2;
  j["conductance_proxy"] = {{"lower", sp.conductance_lower}, {"upper", sp.conductance_upper}};
  j["disconnected"] = sp.disconnected;
  j["lanczos_residual"] = sp.residual;
  j["lanczos_iterations"] = sp.iterations;
  j["spectrum_inheritance_residual"] = inherit;
  j["projection_identity_deviation"] = proj;
  s.emit_json(o.out, j);
  std::cout << "gap=" << num(sp.gap) << " sigma2=" << num(sp.sigma2) << " inheritance_residual=" << num(inherit)
            << " projection_deviation=" << num(proj) << "\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Cutoff entropy and mixing times of random walks on random lifts", "liftcut"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App* sub, bool needs_graph = true) {
    auto* opt = sub->add_option("--graph", common.graph, "Graph file")->check(CLI::ExistingFile);
    if (needs_graph) opt->required();
    sub->add_option("--out-dir", common.out_dir, "Output directory (env LIFTCUT_OUT_DIR)");
    sub->add_option("--jobs", common.jobs, "Worker threads (env LIFTCUT_JOBS)");
  };

  ValidateOpts vo;
  auto* validate = app.add_subcommand("validate", "Check a graph file and report its assumptions");
  add_common(validate);
  validate->add_option("--out", vo.out, "Also write the report to this JSON file");

  AnalyzeOpts ao;
  auto* analyze = app.add_subcommand("analyze", "Solve the cover system and report h, s and the ray law");
  add_common(analyze);
  analyze->add_option("--alpha", ao.alpha, "Holding probability (default: from the graph file)");
  analyze->add_option("--n", ao.n, "Lift size for a mixing-time prediction");
  analyze->add_option("--eps", ao.eps, "TV level of the prediction");
  analyze->add_option("--sigma", ao.sigma, "CLT sigma of the weight (from cover-sim)");
  analyze->add_option("--out", ao.out, "JSON report");

  CoverOpts co;
  auto* cover = app.add_subcommand("cover-sim", "Monte Carlo walks on the universal cover");
  add_common(cover);
  cover->add_option("--alpha", co.alpha, "Holding probability");
  cover->add_option("--steps", co.steps, "Steps per trial");
  cover->add_option("--trials", co.trials, "Number of trials");
  cover->add_option("--seed", co.seed, "Master seed");
  cover->add_option("--margin", co.margin, "Levels discarded below the final height");
  cover->add_option("--root", co.root, "Root vertex label");
  cover->add_option("--e-star", co.e_star, "Renewal arc, e.g. a+");
  cover->add_option("--min-excursions", co.min_excursions, "Add trials until this many excursions");
  cover->add_option("--r-max", co.r_max, "Largest localization radius");
  cover->add_option("--samples", co.samples, "Localization samples per trial");
  cover->add_option("--out", co.out, "JSON summary");
  cover->add_option("--trials-csv", co.trials_csv, "Per-trial CSV");

  LiftOpts lo;
  auto* lift = app.add_subcommand("lift", "Generate or check a random n-lift");
  add_common(lift);
  lift->add_option("--n", lo.n, "Lift size");
  lift->add_option("--seed", lo.seed, "Seed");
  lift->add_option("--method", lo.method, "uniform or sequential");
  lift->add_option("--alpha", lo.alpha, "Holding probability for the stationarity check");
  lift->add_option("--input", lo.input, "Read and verify an existing lift file");
  lift->add_option("--out", lo.out, "Lift JSON output");

  MixOpts mo;
  auto* mix = app.add_subcommand("mix", "Exact total-variation mixing curve on a random lift");
  add_common(mix);
  mix->add_option("--n", mo.n, "Lift size");
  mix->add_option("--seed", mo.seed, "Seed");
  mix->add_option("--alpha", mo.alpha, "Holding probability");
  mix->add_option("--eps", mo.eps, "TV levels")->delimiter(',');
  mix->add_option("--starts", mo.starts, "all or sample:k");
  mix->add_option("--t-cap", mo.t_cap, "Step cap (default from the prediction)");
  mix->add_option("--lift", mo.lift, "Use this lift file instead of generating one");
  mix->add_option("--out", mo.out, "Curve of the worst sampled start");
  mix->add_option("--summary", mo.summary, "JSON summary over all starts");
  mix->add_option("--format", mo.format, "csv or json for the curve");

  SweepOpts so;
  auto* sweep = app.add_subcommand("sweep", "Cutoff sweep over lift sizes and seeds");
  add_common(sweep);
  sweep->add_option("--n", so.n, "Lift sizes, comma separated")->delimiter(',')->required();
  sweep->add_option("--alpha", so.alpha, "Holding probability");
  sweep->add_option("--eps", so.eps, "TV levels; the first is fitted")->delimiter(',');
  sweep->add_option("--seeds", so.seeds, "Lifts per size");
  sweep->add_option("--seed", so.seed, "Master seed");
  sweep->add_option("--starts", so.starts, "all or sample:k");
  sweep->add_option("--t-cap", so.t_cap, "Step cap");
  sweep->add_option("--sigma", so.sigma, "CLT sigma for the best-case lower-bound check");
  sweep->add_option("--slack", so.slack, "Slack of the lower-bound check, in steps");
  sweep->add_option("--results", so.results, "Row CSV");
  sweep->add_option("--summary", so.summary, "Summary JSON");

  SpectrumOpts po;
  auto* spectrum = app.add_subcommand("spectrum", "Spectral checks on a random lift");
  add_common(spectrum);
  spectrum->add_option("--n", po.n, "Lift size");
  spectrum->add_option("--seed", po.seed, "Seed");
  spectrum->add_option("--alpha", po.alpha, "Holding probability");
  spectrum->add_option("--t-max", po.t_max, "Horizon of the projection identity check");
  spectrum->add_option("--out", po.out, "JSON report");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  if (common.jobs == 0) common.jobs = default_workers();
  Session session;
  session.out_dir = common.out_dir.empty() ? default_out_dir() : fs::path(common.out_dir);
  try {
    int code = kUsage;
    if (*validate) session.command = "validate", code = cmd_validate(common, vo, session);
    else if (*analyze) session.command = "analyze", code = cmd_analyze(common, ao, session);
    else if (*cover) session.command = "cover-sim", code = cmd_cover(common, co, session);
    else if (*lift) session.command = "lift", code = cmd_lift(common, lo, session);
    else if (*mix) session.command = "mix", code = cmd_mix(common, mo, session);
    else if (*sweep) session.command = "sweep", code = cmd_sweep(common, so, session);
    else if (*spectrum) session.command = "spectrum", code = cmd_spectrum(common, po, session);
    if (code == kOk) session.write_manifest();
    return code;
  } catch (const NonConvergence& e) {
    std::cerr << "error: " << e.what() << " (residual " << e.residual() << " after " << e.iterations()
              << " iterations)\n";
    return kNonConvergence;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace liftcut::cli
