// flagsphere command-line front end. Every subcommand resolves a config
// (defaults, then --config JSON, then explicit flags), runs, and prints a JSON
// report that embeds the resolved config and the library version.
//
// Exit codes: 0 ok, 2 precondition / usage error, 3 numerical failure.

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "flagsphere/io.hpp"
#include "flagsphere/jacobi.hpp"

#ifndef FLAGSPHERE_VERSION
#define FLAGSPHERE_VERSION "dev"
#endif

using namespace flagsphere;

namespace {

struct UsageError : PreconditionError {
  using PreconditionError::PreconditionError;
};

// Flag values land here first; only the ones the user actually gave are
// copied over the config.
struct Flags {
  std::string config_path;
  std::uint64_t seed = 42;
  std::string metric, metric_a, metric_b, init, out, propagator;
  double length = 0.0;
  double horizon = 0.0;
  int samples = 0;
  int half_oscillations = 0;
  std::vector<double> latitudes;
  int longitudes = 0, headings = 0;
  double t0 = 0.0, base_alpha = 0.0, w_p = 0.0, pole_eps = 0.0;
  int orbits = 0;
  bool search = false;
};

json defaults(const std::string& cmd) {
  json c{{"seed", 42}, {"integrator", to_json(IntegratorOptions{})}};
  if (cmd == "simulate") {
    c["init"] = "theta=0.2,phi=0,dir=east";
    c["length"] = 50.0;
  } else if (cmd == "closed") {
    const SearchOptions g;
    c["search"] = {{"latitudes", g.latitudes}, {"longitudes", g.longitudes}, {"headings", g.headings},
                   {"horizon", g.horizon}};
  } else if (cmd == "conjugate") {
    c["samples"] = 10;
    c["horizon"] = kPi + 0.5;
  } else if (cmd == "rotation") {
    c["samples"] = 10;
    c["half_oscillations"] = 10;
  } else if (cmd == "counterexample") {
    const CounterexampleOptions o;
    c["params"] = to_json(CounterexampleParams{});
    c["checks"] = {{"random_orbits", o.random_orbits}, {"horizon", o.horizon},
                   {"grid_theta", o.grid_theta},       {"grid_phi", o.grid_phi},
                   {"grid_directions", o.grid_directions}, {"jacobi_orbits", o.jacobi_orbits}};
  } else if (cmd == "conjugacy") {
    c["search"] = false;
  }
  return c;
}

json resolve(const std::string& cmd, const Flags& f, const CLI::App& sub) {
  json c = defaults(cmd);
  if (!f.config_path.empty()) {
    std::ifstream in(f.config_path);
    if (!in) throw UsageError("cannot read config file '" + f.config_path + "'");
    json file;
    try {
      file = json::parse(in);
    } catch (const json::exception& e) {
      throw UsageError(std::string("config file: ") + e.what());
    }
    c.merge_patch(file);
  }
  auto given = [&](const char* name) {
    const CLI::Option* o = sub.get_option_no_throw(name);
    return o && o->count() > 0;
  };
  if (given("--seed")) c["seed"] = f.seed;
  if (given("--metric")) c["metric"] = f.metric;
  if (given("--metric-a")) c["metric_a"] = f.metric_a;
  if (given("--metric-b")) c["metric_b"] = f.metric_b;
  if (given("--init")) c["init"] = f.init;
  if (given("--length")) c["length"] = f.length;
  if (given("--out")) c["out"] = f.out;
  if (given("--propagator")) c["propagator"] = f.propagator;
  if (given("--samples")) c["samples"] = f.samples;
  if (given("--half-oscillations")) c["half_oscillations"] = f.half_oscillations;
  if (given("--search")) c["search"] = f.search;
  if (cmd == "closed") {
    if (given("--latitudes")) c["search"]["latitudes"] = f.latitudes;
    if (given("--longitudes")) c["search"]["longitudes"] = f.longitudes;
    if (given("--headings")) c["search"]["headings"] = f.headings;
    if (given("--horizon")) c["search"]["horizon"] = f.horizon;
  } else if (cmd == "counterexample") {
    if (given("--t0")) c["params"]["t0"] = f.t0;
    if (given("--base-alpha")) c["params"]["base_alpha"] = f.base_alpha;
    if (given("--w-p")) c["params"]["w_p"] = f.w_p;
    if (given("--pole-eps")) c["params"]["pole_eps"] = f.pole_eps;
    if (given("--orbits")) c["checks"]["random_orbits"] = f.orbits;
    if (given("--horizon")) c["checks"]["horizon"] = f.horizon;
  } else if (given("--horizon")) {
    c["horizon"] = f.horizon;
  }
  return c;
}

// Metrics may be given as the compact string form or as a JSON object.
MetricSpec metric_at(const json& c, const char* key) {
  if (!c.contains(key)) throw UsageError(std::string("missing --") + (std::string(key) == "metric" ? "metric" : key));
  const json& v = c.at(key);
  return v.is_string() ? parse_metric(v.get<std::string>()) : metric_from_json(v);
}

Propagator propagator_for(const json& c, const MetricSpec& m) {
  const std::string p = c.value("propagator", std::string(m.is_zermelo() ? "direct" : "oracle"));
  if (p == "direct") return Propagator::Direct;
  if (p == "oracle") return Propagator::Oracle;
  throw InvalidParameters("propagator must be direct or oracle");
}

IntegratorOptions integrator(const json& c) { return integrator_from_json(c.value("integrator", json::object())); }

json entry(const std::string& name, bool pass, double value, double threshold) {
  return {{"check", name}, {"pass", pass}, {"value", value}, {"threshold", threshold}};
}

json report(const std::string& cmd, const json& cfg) {
  return {{"command", cmd}, {"version", FLAGSPHERE_VERSION}, {"config", cfg}};
}

bool all_pass(const json& entries) {
  for (const auto& e : entries)
    if (!e.at("pass").get<bool>()) return false;
  return true;
}

// Lengths of the two closed geodesics that run along the invariant
// parallels: the equator for Zermelo metrics, the pinned latitudes otherwise.
std::pair<std::optional<ClosedGeodesicRecord>, std::optional<ClosedGeodesicRecord>> parallels(const MetricSpec& m) {
  double th = 0.0;
  if (const MetricSpec* root = m.perturbed_root()) th = parallel_latitude(root->params().t0, root->params());
  CounterexampleOptions o;
  return {detail::parallel_orbit(m, -th, +1, o), detail::parallel_orbit(m, th, -1, o)};
}

json cmd_simulate(const json& cfg) {
  const MetricSpec m = metric_at(cfg, "metric");
  const PhaseState s = parse_init(m, cfg.at("init").get<std::string>());
  const double length = cfg.at("length").get<double>();
  Trajectory tr = integrate(m, s, length, integrator(cfg), propagator_for(cfg, m));
  json r = report("simulate", cfg);
  r["initial"] = to_json(s);
  r["stats"] = trajectory_summary(tr);
  if (cfg.contains("out")) {
    std::ofstream os(cfg.at("out").get<std::string>());
    if (!os) throw UsageError("cannot write '" + cfg.at("out").get<std::string>() + "'");
    write_csv(os, tr);
  } else {
    write_csv(std::cout, tr);
  }
  return r;
}

json cmd_spectrum(const json& cfg) {
  const MetricSpec m = metric_at(cfg, "metric");
  const SpectrumReport an = spectrum(m.lambda());
  json r = report("spectrum", cfg);
  r["analytic"] = to_json(an);
  auto [east, west] = parallels(m);
  json entries = json::array();
  if (east && west) {
    const double l1 = std::min(east->length, west->length), l2 = std::max(east->length, west->length);
    const double recip = 1.0 / l1 + 1.0 / l2;
    r["measured"] = {{"eastward", east->length}, {"westward", west->length}, {"l_short", l1}, {"l_long", l2},
                     {"reciprocal_sum", recip}};
    const double dev = std::max(std::abs(l1 - an.l_short), std::abs(l2 - an.l_long));
    entries.push_back(entry("measured_matches_analytic", dev <= 1e-5, dev, 1e-5));
    entries.push_back(entry("reciprocal_sum", std::abs(recip - 1.0 / kPi) <= 1e-6, std::abs(recip - 1.0 / kPi), 1e-6));
  } else {
    r["measured"] = nullptr;
    entries.push_back(entry("measured_matches_analytic", false, 0.0, 1e-5));
  }
  r["entries"] = entries;
  r["pass"] = all_pass(entries);
  return r;
}

json cmd_closed(const json& cfg) {
  const MetricSpec m = metric_at(cfg, "metric");
  SearchOptions g;
  const json& s = cfg.at("search");
  g.latitudes = s.value("latitudes", g.latitudes);
  g.longitudes = s.value("longitudes", g.longitudes);
  g.headings = s.value("headings", g.headings);
  g.horizon = s.value("horizon", g.horizon);
  g.closure.integrator = integrator(cfg);
  if (g.longitudes < 1 || g.headings < 1 || g.latitudes.empty()) throw InvalidParameters("empty search grid");
  auto recs = find_closed_geodesics(m, g);
  json r = report("closed", cfg);
  r["closed_geodesics"] = to_json(recs);
  json entries = json::array();
  entries.push_back(entry("found", !recs.empty(), static_cast<double>(recs.size()), 1.0));
  if (m.is_zermelo()) {
    // Every closed geodesic is an exceptional one or closes at a multiple of
    // the common period.
    const SpectrumReport an = spectrum(m.lambda());
    const auto cp = an.common_period();
    double worst = 0.0;
    for (const auto& rec : recs) {
      double d = std::min(std::abs(rec.length - an.l_short), std::abs(rec.length - an.l_long));
      if (cp) d = std::min(d, std::abs(rec.length - *cp * std::max(1.0, std::round(rec.length / *cp))));
      worst = std::max(worst, d);
    }
    entries.push_back(entry("lengths_in_spectrum", worst <= 1e-5, worst, 1e-5));
  }
  r["entries"] = entries;
  r["pass"] = all_pass(entries);
  return r;
}

json cmd_conjugate(const json& cfg) {
  const MetricSpec m = metric_at(cfg, "metric");
  const int n = cfg.at("samples").get<int>();
  const double horizon = cfg.at("horizon").get<double>();
  if (n < 1) throw InvalidParameters("--samples must be positive");
  std::mt19937_64 rng(cfg.at("seed").get<std::uint64_t>());
  const IntegratorOptions io = integrator(cfg);
  const Propagator prop = propagator_for(cfg, m);
  json orbits = json::array();
  double worst_t = 0.0, k_lo = INFINITY, k_hi = -INFINITY;
  int missing = 0;
  for (int i = 0; i < n; ++i) {
    const PhaseState s = random_unit_state(m, rng);
    JacobiRecord j = variational_flow(m, s, horizon, io, prop);
    json o{{"init", to_json(s)}, {"conjugate_times", j.conjugate_times}};
    if (j.conjugate_times.empty()) {
      ++missing;
    } else {
      worst_t = std::max(worst_t, std::abs(j.conjugate_times.front() - kPi));
    }
    for (double k : j.k_values) k_lo = std::min(k_lo, k), k_hi = std::max(k_hi, k);
    orbits.push_back(o);
  }
  // Constant curvature one forces the first conjugate point to t = pi; for
  // the perturbed metric only the loose window applies.
  const bool exact = m.is_zermelo();
  const double t_tol = exact ? 1e-4 : 0.3;
  json r = report("conjugate", cfg);
  r["orbits"] = orbits;
  r["flag_curvature"] = {{"min", std::isfinite(k_lo) ? json(k_lo) : json()},
                         {"max", std::isfinite(k_hi) ? json(k_hi) : json()}};
  json entries = json::array();
  entries.push_back(entry("first_conjugate_at_pi", missing == 0 && worst_t <= t_tol, worst_t, t_tol));
  if (exact && std::isfinite(k_lo)) {
    const double dk = std::max(std::abs(k_lo - 1.0), std::abs(k_hi - 1.0));
    entries.push_back(entry("flag_curvature_one", dk <= 1e-3, dk, 1e-3));
  }
  r["entries"] = entries;
  r["pass"] = all_pass(entries);
  return r;
}

json cmd_rotation(const json& cfg) {
  const MetricSpec m = metric_at(cfg, "metric");
  const int n = cfg.at("samples").get<int>();
  const int half = cfg.at("half_oscillations").get<int>();
  if (n < 1) throw InvalidParameters("--samples must be positive");
  const IntegratorOptions io = integrator(cfg);
  const Propagator prop = propagator_for(cfg, m);
  std::vector<PhaseState> inits;
  if (cfg.contains("init")) {
    inits.push_back(parse_init(m, cfg.at("init").get<std::string>()));
  } else {
    std::mt19937_64 rng(cfg.at("seed").get<std::uint64_t>());
    for (int i = 0; i < n; ++i) inits.push_back(random_unit_state(m, rng));
  }
  json orbits = json::array();
  double worst = 0.0;
  for (const auto& s : inits) {
    const double rho = rotation_number(m, s, half, io, prop);
    worst = std::max(worst, std::abs(rho - m.lambda()));
    orbits.push_back({{"init", to_json(s)}, {"rotation_number", rho}});
  }
  json r = report("rotation", cfg);
  r["lambda"] = m.lambda();
  r["orbits"] = orbits;
  json entries = json::array();
  if (m.is_zermelo()) entries.push_back(entry("rotation_equals_lambda", worst <= 1e-4, worst, 1e-4));
  r["entries"] = entries;
  r["pass"] = all_pass(entries);
  return r;
}

json cmd_counterexample(const json& cfg) {
  const CounterexampleParams p = params_from_json(cfg.at("params"));
  CounterexampleOptions o;
  const json& k = cfg.at("checks");
  o.seed = cfg.at("seed").get<std::uint64_t>();
  o.random_orbits = k.value("random_orbits", o.random_orbits);
  o.horizon = k.value("horizon", o.horizon);
  o.grid_theta = k.value("grid_theta", o.grid_theta);
  o.grid_phi = k.value("grid_phi", o.grid_phi);
  o.grid_directions = k.value("grid_directions", o.grid_directions);
  o.jacobi_orbits = k.value("jacobi_orbits", o.jacobi_orbits);
  o.integrator = integrator(cfg);
  const CounterexampleReport rep = verify_counterexample(p, o);
  json r = report("counterexample", cfg);
  json body = to_json(rep);
  for (auto& [key, v] : body.items()) r[key] = v;
  return r;
}

json cmd_conjugacy(const json& cfg) {
  const MetricSpec a = metric_at(cfg, "metric_a");
  const MetricSpec b = metric_at(cfg, "metric_b");
  const bool search = cfg.at("search").get<bool>();
  auto side = [&](const MetricSpec& m) {
    json j{{"metric", to_json(m)}, {"lambda", m.lambda()}};
    auto [p1, p2] = conjugacy_invariants(m.lambda());
    j["analytic"] = {p1, p2};
    double shortest = 0.0, second = 0.0;
    if (search) {
      SearchOptions g;
      g.closure.integrator = integrator(cfg);
      const MeasuredInvariants mi = measure_invariants(m, g);
      shortest = mi.shortest, second = mi.second;
    } else {
      auto [e, w] = parallels(m);
      if (!e || !w) throw NumericalBreakdown("conjugacy: parallel closed geodesics not found");
      shortest = std::min(e->length, w->length), second = std::max(e->length, w->length);
    }
    j["measured"] = {shortest, second};
    return j;
  };
  json ja = side(a), jb = side(b);
  const double la = ja["measured"][0].get<double>(), lb = jb["measured"][0].get<double>();
  json r = report("conjugacy", cfg);
  r["a"] = ja;
  r["b"] = jb;
  r["verdict"] = conjugacy_verdict(la, lb);
  json entries = json::array();
  for (const json* j : {&ja, &jb}) {
    const double d = std::max(std::abs((*j)["measured"][0].get<double>() - (*j)["analytic"][0].get<double>()),
                              std::abs((*j)["measured"][1].get<double>() - (*j)["analytic"][1].get<double>()));
    entries.push_back(entry(j == &ja ? "invariants_a" : "invariants_b", d <= 1e-5, d, 1e-5));
  }
  r["entries"] = entries;
  r["pass"] = all_pass(entries);
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical lab for constant flag curvature Finsler metrics on the 2-sphere"};
  app.set_version_flag("--version", std::string(FLAGSPHERE_VERSION));
  app.require_subcommand(1);
  Flags f;

  auto common = [&](CLI::App* s) {
    s->add_option("--config", f.config_path, "JSON config overriding the defaults");
    s->add_option("--seed", f.seed, "seed for random initial conditions");
    s->add_option("--propagator", f.propagator, "direct or oracle");
  };
  const char* metric_help = "round | katok:alpha=A | chain:alpha=A,beta=B | perturbed:t0=..";

  auto* sim = app.add_subcommand("simulate", "integrate one geodesic; CSV samples plus JSON stats");
  common(sim);
  sim->add_option("--metric", f.metric, metric_help);
  sim->add_option("--init", f.init, "meridian | theta=..,phi=..,dir=east|west|north|south | heading=.. | ptheta=..,pphi=..");
  sim->add_option("--length", f.length, "Finsler arc length");
  sim->add_option("--out", f.out, "CSV path; stats go to stdout when set, stderr otherwise");

  auto* spec = app.add_subcommand("spectrum", "analytic and measured lengths of the two invariant parallels");
  common(spec);
  spec->add_option("--metric", f.metric, metric_help);

  auto* closed = app.add_subcommand("closed", "grid search for closed geodesics");
  common(closed);
  closed->add_option("--metric", f.metric, metric_help);
  closed->add_option("--latitudes", f.latitudes, "seed latitudes");
  closed->add_option("--longitudes", f.longitudes);
  closed->add_option("--headings", f.headings);
  closed->add_option("--horizon", f.horizon, "scan length (0: automatic)");

  auto* conj = app.add_subcommand("conjugate", "first conjugate times along random geodesics");
  common(conj);
  conj->add_option("--metric", f.metric, metric_help);
  conj->add_option("--samples", f.samples);
  conj->add_option("--horizon", f.horizon);

  auto* rot = app.add_subcommand("rotation", "rotation numbers of off-equator geodesics");
  common(rot);
  rot->add_option("--metric", f.metric, metric_help);
  rot->add_option("--samples", f.samples);
  rot->add_option("--init", f.init, "single initial condition instead of random samples");
  rot->add_option("--half-oscillations", f.half_oscillations);

  auto* cex = app.add_subcommand("counterexample", "verify the perturbed metric end to end");
  common(cex);
  cex->add_option("--t0", f.t0);
  cex->add_option("--base-alpha", f.base_alpha);
  cex->add_option("--w-p", f.w_p);
  cex->add_option("--pole-eps", f.pole_eps);
  cex->add_option("--orbits", f.orbits, "random orbits in the no-other-closures check");
  cex->add_option("--horizon", f.horizon);

  auto* cy = app.add_subcommand("conjugacy", "compare the conjugacy invariants of two metrics");
  common(cy);
  cy->add_option("--metric-a", f.metric_a, metric_help);
  cy->add_option("--metric-b", f.metric_b, metric_help);
  cy->add_flag("--search", f.search, "measure by the full closed-geodesic search");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string cmd = sub->get_name();
  try {
    const json cfg = resolve(cmd, f, *sub);
    json r;
    if (cmd == "simulate") r = cmd_simulate(cfg);
    else if (cmd == "spectrum") r = cmd_spectrum(cfg);
    else if (cmd == "closed") r = cmd_closed(cfg);
    else if (cmd == "conjugate") r = cmd_conjugate(cfg);
    else if (cmd == "rotation") r = cmd_rotation(cfg);
    else if (cmd == "counterexample") r = cmd_counterexample(cfg);
    else r = cmd_conjugacy(cfg);
    std::ostream& os = (cmd == "simulate" && !cfg.contains("out")) ? std::cerr : std::cout;
    os << r.dump(2) << '\n';
    // A parameter violation still produces a report, but counts as a usage error.
    for (const auto& e : r.value("entries", json::array()))
      if (e.value("check", "") == "parameters" && !e.value("pass", true)) {
        std::cerr << "error: " << e.value("detail", "invalid parameters") << '\n';
        return 2;
      }
    return 0;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << sub->help();
    return 2;
  } catch (const PreconditionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const json::exception& e) {
    std::cerr << "error: config: " << e.what() << '\n';
    return 2;
  }
}
