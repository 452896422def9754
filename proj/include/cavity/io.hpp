#pragma once

// JSON and CSV serialization of parameters, reports, trajectories and fields.
// Doubles are written in shortest round-trip form (JSON) or with 17
// significant digits (CSV); non-finite values become null / "nan".

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cavity/params.hpp"
#include "cavity/phaseplane.hpp"
#include "cavity/reconstruct.hpp"
#include "cavity/trajectory.hpp"

namespace cavity::io {

using json = nlohmann::json;

inline json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline std::string g17(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Parameters

inline json to_json(const Parameters& p) {
  return {{"n", p.n()}, {"gamma", p.gamma()}, {"lambda", p.lambda()}, {"kappa", p.kappa()}};
}

/// Reads {"n", "gamma", "lambda", "kappa"}; numbers or "a/b" strings.
inline Parameters parameters_from_json(const json& j) {
  auto num = [&](const char* key) {
    if (!j.contains(key)) throw Error(ErrorKind::InvalidParameters, std::string("missing key ") + key);
    const auto& v = j.at(key);
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
      if (auto x = parse_number(v.get<std::string>())) return *x;
    }
    throw Error(ErrorKind::InvalidParameters, std::string("bad value for ") + key);
  };
  Parameters p;
  const double n = num("n");
  if (n != 2.0 && n != 3.0) throw Error(ErrorKind::InvalidParameters, "n must be 2 or 3");
  p.gas.n = static_cast<int>(n);
  p.gas.gamma = num("gamma");
  p.sim.lambda = num("lambda");
  p.sim.kappa = num("kappa");
  return p;
}

inline json to_json(const DerivedConstants& d) {
  return {{"mu", number(d.mu)},         {"alpha", number(d.alpha)},   {"q", number(d.q)},
          {"sigma", number(d.sigma)},   {"kappa_bar", number(d.kappa_bar)},
          {"k1", number(d.k1)},         {"k2", number(d.k2)},         {"k3", number(d.k3)},
          {"V_star", number(d.V_star)}, {"W_star", number(d.W_star)}, {"m", d.m},
          {"K", number(d.K)},           {"a_vert", number(d.a_vert)}, {"b_vert", number(d.b_vert)}};
}

inline json to_json(const ConditionReport& r) {
  json out = json::array();
  for (const auto& c : r.conditions) {
    json parts = json::array();
    for (const auto& q : c.parts)
      parts.push_back({{"lhs_label", q.lhs_label}, {"lhs", number(q.lhs)}, {"rhs_label", q.rhs_label},
                       {"rhs", number(q.rhs)}, {"holds", q.holds()}});
    out.push_back({{"id", c.id},
                   {"description", c.description},
                   {"evaluable", c.evaluable},
                   {"pass", c.pass()},
                   {"margin", number(c.margin())},
                   {"parts", parts},
                   {"note", c.note}});
  }
  return {{"all_pass", r.all_pass()}, {"conditions", out}};
}

// ---------------------------------------------------------------------------
// Critical points

inline json to_json(const CriticalPoint& cp) {
  json j{{"id", to_string(cp.id)},
         {"present", cp.present},
         {"V", number(cp.location.V)},
         {"C", number(cp.location.C)},
         {"class", to_string(cp.cls)},
         {"wronskian", number(cp.wronskian)},
         {"discriminant", number(cp.discriminant)},
         {"E1", number(cp.E1)},
         {"E2", number(cp.E2)},
         {"L1", number(cp.L1)},
         {"L2", number(cp.L2)}};
  if (std::isfinite(cp.wronskian_formula)) j["wronskian_formula"] = cp.wronskian_formula;
  if (cp.partials)
    j["partials"] = {{"F_V", cp.partials->F_V}, {"F_C", cp.partials->F_C}, {"G_V", cp.partials->G_V},
                     {"G_C", cp.partials->G_C}};
  if (!cp.note.empty()) j["note"] = cp.note;
  return j;
}

inline json points_report(const Parameters& p) {
  const auto d = derive(p);
  json pts = json::array();
  for (const auto& cp : critical_points(p, d)) pts.push_back(to_json(cp));
  ConditionReport gj = check_conditions_G_to_J(p, d);
  json margins = json::object();
  for (const auto& c : gj.conditions) margins[c.id] = number(c.margin());
  return {{"parameters", to_json(p)}, {"points", pts}, {"condition_margins", margins}};
}

// ---------------------------------------------------------------------------
// Trajectory

inline json to_json(const GammaResult& g) {
  json events = json::array();
  for (const auto& e : g.events)
    events.push_back({{"name", e.name}, {"x", number(e.x)}, {"V", number(e.V)}, {"C", number(e.C)}});
  json j{{"parameters", to_json(g.params)},
         {"x0", g.x0},
         {"x6", number(g.x6)},
         {"nu", number(g.nu)},
         {"omega", number(g.omega)},
         {"route", g.route == Route::ViaP0 ? "P0" : "G-crossing"},
         {"P6", {{"V", g.P6.V}, {"C", g.P6.C}, {"L1", g.L1}, {"L2", g.L2}}},
         {"arrival_angle_error", number(g.arrival_angle_error)},
         {"T2", {{"V0", number(g.V0)}, {"V_hat", number(g.V_hat)}, {"C0", number(g.C0)}}},
         {"samples", g.samples.size()},
         {"events", events}};
  if (g.vertical_approach) {
    j["ell"] = nullptr;
    j["vertical_approach"] = true;
  } else {
    j["ell"] = number(g.ell);
  }
  return j;
}

inline void write_trajectory_csv(std::ostream& os, const GammaResult& g) {
  os << "x,V,C,W,Z,D,G,F,R,segment\n";
  for (const auto& s : g.samples) {
    const double W = 1.0 + s.V;
    const auto r = rhs_w(W, s.C, g.params, g.derived);
    os << g17(s.x) << ',' << g17(s.V) << ',' << g17(s.C) << ',' << g17(W) << ',' << g17(s.C * s.C) << ','
       << g17(r.D) << ',' << g17(r.G) << ',' << g17(r.F) << ',' << g17(s.R) << ',' << to_string(s.segment)
       << '\n';
  }
}

// ---------------------------------------------------------------------------
// Portrait bundle

struct PortraitGrid {
  double V_lo = -1.0, V_hi = 0.6;
  double C_lo = 0.0, C_hi = 1.0;
  int nV = 33, nC = 21;
  int curve_samples = 400;
};

inline json portrait_bundle(const Parameters& p, const GammaResult* g, const PortraitGrid& grid = {}) {
  const auto d = derive(p);
  auto polyline = [&](double a, double b, auto&& fn) {
    json pts = json::array();
    for (int i = 0; i <= grid.curve_samples; ++i) {
      const double V = a + (b - a) * i / grid.curve_samples;
      try {
        const double C = fn(V);
        if (std::isfinite(C) && C <= grid.C_hi * 4.0) pts.push_back({V, C});
      } catch (const Error&) {
      }
    }
    return pts;
  };
  const double lo = std::max(grid.V_lo, -1.0);
  json out;
  out["parameters"] = to_json(p);
  out["derived"] = to_json(d);
  out["nullcline_F"] = polyline(lo, grid.V_hi, [&](double V) { return nullcline_F(V, p, d); });
  out["nullcline_G"] = {
      {"left", polyline(lo, std::min(d.V_star, grid.V_hi), [&](double V) { return nullcline_G(V, p, d); })},
      {"right", polyline(std::max(0.0, lo), grid.V_hi, [&](double V) { return nullcline_G(V, p, d); })},
      {"asymptote_V", d.V_star}};
  out["sonic_line"] = json::array({json::array({lo, 1.0 + lo}), json::array({grid.V_hi, 1.0 + grid.V_hi})});

  json field = json::array();
  for (int i = 0; i < grid.nV; ++i) {
    for (int k = 0; k < grid.nC; ++k) {
      const double V = grid.V_lo + (grid.V_hi - grid.V_lo) * i / (grid.nV - 1);
      const double C = grid.C_lo + (grid.C_hi - grid.C_lo) * k / (grid.nC - 1);
      const auto dir = direction({V, C}, p, d);
      if (dir) field.push_back({V, C, (*dir)[0], (*dir)[1]});
    }
  }
  out["direction_field"] = field;

  json pts = json::array();
  for (const auto& cp : critical_points(p, d)) pts.push_back(to_json(cp));
  out["critical_points"] = pts;

  if (g) {
    json gam = json::array();
    for (const auto& s : g->samples) gam.push_back({s.V, s.C});
    out["gamma"] = gam;
  } else {
    out["gamma"] = nullptr;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reconstruction

inline void write_field_csv(std::ostream& os, const FlowField& f) {
  os << "t,r,rho,u,c,p\n";
  for (const auto& q : f.points)
    os << g17(q.t) << ',' << g17(q.r) << ',' << g17(q.rho) << ',' << g17(q.u) << ',' << g17(q.c) << ','
       << g17(q.p) << '\n';
}

inline json field_header(const GammaResult& g, const FlowField& f) {
  return {{"parameters", to_json(g.params)}, {"x0", g.x0}, {"adiabatic_constant", f.adiabatic_constant}};
}

inline json to_json(const ExponentFit& e) {
  return {{"quantity", e.quantity},
          {"predicted", number(e.predicted)},
          {"fitted", number(e.fitted)},
          {"r_squared", number(e.r_squared)},
          {"rel_error", number(e.rel_error())}};
}

inline json to_json(const BoundaryReport& b) {
  return {{"W_window", {b.W_lo, b.W_hi}},
          {"pressure", to_json(b.pressure)},
          {"density", to_json(b.density)},
          {"entropy", to_json(b.entropy)},
          {"acceleration", {number(b.acceleration[0]), number(b.acceleration[1]), number(b.acceleration[2])}},
          {"acceleration_exponent", number(b.acceleration_exponent)}};
}

inline json to_json(const IntegrabilityReport& r) {
  json ints = json::array();
  for (const auto& i : r.integrals)
    ints.push_back({{"name", i.name},
                    {"exponent", number(i.exponent)},
                    {"closed_form", number(i.closed_form)},
                    {"delta", i.delta},
                    {"total", {number(i.total[0]), number(i.total[1]), number(i.total[2])}},
                    {"worst_rel_error", number(i.worst_rel_error)},
                    {"finite", i.finite}});
  json conds = json::array();
  for (const auto& c : r.exponent_conditions)
    conds.push_back({{"lhs_label", c.lhs_label}, {"lhs", c.lhs}, {"rhs_label", c.rhs_label}, {"rhs", c.rhs},
                     {"holds", c.holds()}});
  return {{"integrals", ints},
          {"exponent_conditions", conds},
          {"entropy_integral",
           {number(r.entropy_integral[0]), number(r.entropy_integral[1]), number(r.entropy_integral[2])}},
          {"pass", r.pass()}};
}

inline json to_json(const ResidualReport& r) {
  json pde = json::array();
  for (const auto& a : r.pde) pde.push_back({number(a[0]), number(a[1]), number(a[2]), number(a[3])});
  return {{"similarity_max", number(r.similarity_max)},
          {"similarity_x_at_max", number(r.similarity_x_at_max)},
          {"h", r.h},
          {"pde", pde},
          {"pde_components", {"mass", "momentum", "sound_speed", "entropy"}},
          {"pde_rate", {number(r.pde_rate[0]), number(r.pde_rate[1]), number(r.pde_rate[2]), number(r.pde_rate[3])}}};
}

}  // namespace cavity::io
