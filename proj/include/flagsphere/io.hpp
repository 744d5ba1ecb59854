#pragma once

// JSON and CSV forms of metrics, trajectories and reports, plus the compact
// metric / initial-condition strings used on the command line.
// Needs nlohmann/json (vendor/json.hpp).

#include <cmath>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "flagsphere/analysis.hpp"
#include "flagsphere/counterexample.hpp"
#include "flagsphere/errors.hpp"
#include "flagsphere/flow.hpp"
#include "flagsphere/metric.hpp"
#include "flagsphere/models.hpp"
#include "flagsphere/spectrum.hpp"

namespace flagsphere {

using json = nlohmann::ordered_json;

inline json to_json(const CounterexampleParams& p) {
  return {{"base_alpha", p.base_alpha}, {"t0", p.t0}, {"w_p", p.w_p}, {"pole_eps", p.pole_eps}};
}

inline CounterexampleParams params_from_json(const json& j) {
  CounterexampleParams p;
  p.base_alpha = j.value("base_alpha", p.base_alpha);
  p.t0 = j.value("t0", p.t0);
  p.w_p = j.value("w_p", p.w_p);
  p.pole_eps = j.value("pole_eps", p.pole_eps);
  return p;
}

inline json to_json(const MetricSpec& m) {
  switch (m.kind()) {
    case MetricSpec::Kind::Round: return {{"variant", "round"}};
    case MetricSpec::Kind::Katok: return {{"variant", "katok"}, {"alpha", m.alpha()}};
    case MetricSpec::Kind::Chain: return {{"variant", "chain"}, {"base", to_json(m.base())}, {"beta", m.alpha()}};
    case MetricSpec::Kind::Perturbed: return {{"variant", "perturbed"}, {"params", to_json(m.params())}};
  }
  return {};
}

inline MetricSpec metric_from_json(const json& j) {
  if (!j.is_object() || !j.contains("variant")) throw InvalidParameters("metric JSON needs a \"variant\" field");
  const std::string v = j.at("variant").get<std::string>();
  try {
    if (v == "round") return MetricSpec::round();
    if (v == "katok") return MetricSpec::katok(j.at("alpha").get<double>());
    if (v == "chain") return MetricSpec::chain(metric_from_json(j.at("base")), j.at("beta").get<double>());
    if (v == "perturbed") return MetricSpec::perturbed(params_from_json(j.value("params", json::object())));
  } catch (const json::exception& e) {
    throw InvalidParameters(std::string("metric JSON: ") + e.what());
  }
  throw InvalidParameters("unknown metric variant '" + v + "'");
}

namespace detail {

inline double parse_number(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || !std::isfinite(x)) {
    throw InvalidParameters("'" + key + "' expects a number, got '" + text + "'");
  }
  return x;
}

// "a=1,b=2" -> {a: "1", b: "2"}
inline std::map<std::string, std::string> parse_pairs(const std::string& text) {
  std::map<std::string, std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw InvalidParameters("expected key=value, got '" + item + "'");
    out[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return out;
}

inline double take(std::map<std::string, std::string>& kv, const std::string& key, double fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  const double x = parse_number(key, it->second);
  kv.erase(it);
  return x;
}

inline void reject_leftovers(const std::map<std::string, std::string>& kv, const std::string& what) {
  if (!kv.empty()) throw InvalidParameters("unknown " + what + " key '" + kv.begin()->first + "'");
}

}  // namespace detail

/// round | katok:alpha=A | chain:alpha=A,beta=B | perturbed:t0=..,base_alpha=..,w_p=..,pole_eps=..
inline MetricSpec parse_metric(const std::string& text) {
  const auto colon = text.find(':');
  const std::string name = text.substr(0, colon);
  auto kv = detail::parse_pairs(colon == std::string::npos ? "" : text.substr(colon + 1));
  MetricSpec m = MetricSpec::round();
  if (name == "round") {
  } else if (name == "katok") {
    if (!kv.count("alpha")) throw InvalidParameters("katok needs alpha=...");
    m = MetricSpec::katok(detail::take(kv, "alpha", 0.0));
  } else if (name == "chain") {
    const double a = detail::take(kv, "alpha", 0.0);
    if (!kv.count("beta")) throw InvalidParameters("chain needs beta=...");
    m = MetricSpec::chain(MetricSpec::katok(a), detail::take(kv, "beta", 0.0));
  } else if (name == "perturbed") {
    CounterexampleParams p;
    p.t0 = detail::take(kv, "t0", p.t0);
    p.base_alpha = detail::take(kv, "base_alpha", p.base_alpha);
    p.w_p = detail::take(kv, "w_p", p.w_p);
    p.pole_eps = detail::take(kv, "pole_eps", p.pole_eps);
    m = MetricSpec::perturbed(p);
  } else {
    throw InvalidParameters("unknown metric '" + name + "'");
  }
  detail::reject_leftovers(kv, "metric");
  return m;
}

/// Initial condition: "meridian" (equator, heading north), or
/// theta=..,phi=..,dir=east|west|north|south, or theta=..,phi=..,heading=<rad>
/// (velocity direction, 0 = east, counterclockwise), or
/// theta=..,phi=..,ptheta=..,pphi=.. (covector, rescaled to the unit level).
/// Coordinates are in the ZPolar chart.
inline PhaseState parse_init(const MetricSpec& m, const std::string& text) {
  if (text == "meridian") return unit_state_with_heading(m, Chart::ZPolar, 0.0, 0.0, kPi / 2);
  auto kv = detail::parse_pairs(text);
  std::string dir;
  if (auto it = kv.find("dir"); it != kv.end()) dir = it->second, kv.erase(it);
  const double theta = detail::take(kv, "theta", 0.0);
  const double phi = detail::take(kv, "phi", 0.0);
  if (!(std::abs(theta) < kPi / 2)) throw PoleSingularity("initial latitude must lie strictly inside (-pi/2, pi/2)");
  PhaseState s;
  if (kv.count("ptheta") || kv.count("pphi")) {
    if (!dir.empty() || kv.count("heading")) throw InvalidParameters("give either a direction or a covector");
    s = {Chart::ZPolar, theta, wrap_angle(phi), detail::take(kv, "ptheta", 0.0), detail::take(kv, "pphi", 0.0)};
    if (s.p_theta == 0.0 && s.p_phi == 0.0) throw InvalidParameters("initial covector must be nonzero");
    s = normalize(m, best_chart(to_ambient(s)));
  } else {
    double heading = detail::take(kv, "heading", 0.0);
    if (!dir.empty()) {
      static const std::map<std::string, double> dirs{{"east", 0.0}, {"north", kPi / 2}, {"west", kPi}, {"south", -kPi / 2}};
      auto it = dirs.find(dir);
      if (it == dirs.end()) throw InvalidParameters("dir must be east, west, north or south");
      heading = it->second;
    }
    s = unit_state_with_heading(m, Chart::ZPolar, theta, phi, heading);
  }
  detail::reject_leftovers(kv, "init");
  return s;
}

inline json to_json(const PhaseState& s) {
  return {{"chart", s.chart == Chart::ZPolar ? "z" : "x"},
          {"theta", s.theta},
          {"phi", s.phi},
          {"ptheta", s.p_theta},
          {"pphi", s.p_phi}};
}

inline json to_json(const IntegratorOptions& o) {
  return {{"rel_tol", o.rel_tol},
          {"abs_tol", o.abs_tol},
          {"max_step", o.max_step},
          {"chart_switch_threshold", o.chart_switch_threshold},
          {"sample_interval", o.sample_interval}};
}

inline IntegratorOptions integrator_from_json(const json& j, IntegratorOptions o = {}) {
  o.rel_tol = j.value("rel_tol", o.rel_tol);
  o.abs_tol = j.value("abs_tol", o.abs_tol);
  o.max_step = j.value("max_step", o.max_step);
  o.chart_switch_threshold = j.value("chart_switch_threshold", o.chart_switch_threshold);
  o.sample_interval = j.value("sample_interval", o.sample_interval);
  o.validate();
  return o;
}

inline void write_csv(std::ostream& os, const Trajectory& tr) {
  std::ostringstream line;
  line.precision(17);
  os << "t,chart,theta,phi,ptheta,pphi,phi_unwrapped\n";
  for (const auto& s : tr.samples) {
    line.str("");
    line << s.t << ',' << (s.state.chart == Chart::ZPolar ? 'z' : 'x') << ',' << s.state.theta << ',' << s.state.phi
         << ',' << s.state.p_theta << ',' << s.state.p_phi << ',' << s.phi_unwrapped << '\n';
    os << line.str();
  }
}

/// Stats-only summary of a trajectory.
inline json trajectory_summary(const Trajectory& tr) {
  const IntegralDrift d = integral_drift(tr);
  json j{{"metric", to_json(tr.metric)},
         {"length", tr.length()},
         {"samples", tr.samples.size()},
         {"steps", tr.stats.steps},
         {"rejected", tr.stats.rejected},
         {"chart_switches", tr.stats.chart_switches},
         {"max_energy_drift", tr.stats.max_energy_drift},
         {"max_step_correction", tr.stats.max_step_correction},
         {"energy_drift", d.energy},
         {"momentum_drift", d.momentum}};
  if (!tr.samples.empty()) {
    j["endpoint_distance"] = phase_distance(tr.front().state, tr.back().state);
    j["final"] = to_json(tr.back().state);
  }
  // The requested length rarely hits a period exactly, so the closure is
  // refined from the first recurrence instead of read off the endpoint.
  std::optional<ClosedGeodesicRecord> rec;
  if (tr.samples.size() > 2) rec = detect_closure(tr);
  if (rec) {
    j["closure_residual"] = rec->residual;
    j["closure"] = {{"length", rec->length}, {"winding", rec->winding}, {"exceptional", rec->exceptional}};
  } else {
    j["closure_residual"] = nullptr;
    j["closure"] = nullptr;
  }
  return j;
}

inline json to_json(const ClosedGeodesicRecord& r) {
  return {{"length", r.length},
          {"winding", r.winding},
          {"residual", r.residual},
          {"exceptional", r.exceptional},
          {"on_equator", r.on_equator},
          {"max_abs_latitude", r.max_abs_latitude},
          {"init", to_json(r.init)}};
}

inline json to_json(const std::vector<ClosedGeodesicRecord>& rs) {
  json a = json::array();
  for (const auto& r : rs) a.push_back(to_json(r));
  return a;
}

inline json to_json(const SpectrumReport& r) {
  json j{{"lambda", r.lambda}, {"mu", r.mu}, {"l_short", r.l_short}, {"l_long", r.l_long},
         {"reciprocal_sum", r.reciprocal_sum}};
  if (r.rational) {
    j["rational"] = {{"p", r.rational->p}, {"q", r.rational->q}};
    j["common_period"] = *r.common_period();
  } else {
    j["rational"] = nullptr;
  }
  return j;
}

inline json to_json(const CheckEntry& e) {
  json j{{"check", e.check}, {"pass", e.pass}, {"value", e.value}, {"threshold", e.threshold}};
  if (!e.detail.empty()) j["detail"] = e.detail;
  return j;
}

inline json to_json(const CounterexampleReport& r) {
  json entries = json::array();
  for (const auto& e : r.entries) entries.push_back(to_json(e));
  return {{"params", to_json(r.params)},
          {"pass", r.all_pass()},
          {"entries", entries},
          {"closed_geodesics", to_json(r.closed)}};
}

inline json to_json(const MeasuredInvariants& m) {
  return {{"shortest", m.shortest}, {"second", m.second}, {"lambda", m.lambda}, {"records", m.records}};
}

}  // namespace flagsphere
