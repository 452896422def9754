#pragma once

// The reduced similarity system dV/dx = -G/(lambda x D), dC/dx = -F/(lambda x D):
// right-hand sides, nullclines, critical points and their linearization.

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cavity/error.hpp"
#include "cavity/params.hpp"

namespace cavity {

struct PhasePoint {
  double V = 0;
  double C = 0;

  double W() const { return 1.0 + V; }
  double Z() const { return C * C; }
};

struct RhsValues {
  double D = 0;
  double G = 0;
  double F = 0;
};

/// Right-hand sides in terms of W = 1 + V. Callers that track W directly
/// (near P2) use this form to keep relative accuracy as W -> 0.
inline RhsValues rhs_w(double W, double C, const Parameters& p, const DerivedConstants& d) {
  const double Z = C * C;
  RhsValues r;
  r.D = W * W - Z;
  r.G = p.n() * Z * (W - d.W_star) - (W - 1.0) * W * (W + d.mu);
  r.F = C * (Z * (1.0 + d.alpha / W) - (d.k1 * W - d.k2) * W - d.k3);
  return r;
}

inline RhsValues eval_rhs(const PhasePoint& pt, const Parameters& p, const DerivedConstants& d) {
  const double W = pt.W();
  if (W == 0.0) {
    if (pt.C != 0.0 && d.alpha != 0.0) {
      throw Error(ErrorKind::Pole, "F is singular at V = -1 with C != 0");
    }
    RhsValues r;
    r.D = -pt.C * pt.C;
    r.G = p.n() * pt.C * pt.C * (-d.W_star);
    // alpha == 0 removes the pole; C == 0 makes F vanish along C -> 0 paths.
    r.F = pt.C * (pt.C * pt.C - d.k3);
    return r;
  }
  return rhs_w(W, pt.C, p, d);
}

inline RhsValues eval_rhs(const PhasePoint& pt, const Parameters& p) { return eval_rhs(pt, p, derive(p)); }

// ---------------------------------------------------------------------------
// Nullclines

/// f(W) with C_F^2 = f(1 + V).
inline double f_of_W(double W, const DerivedConstants& d) {
  return W * ((d.k1 * W - d.k2) * W + d.k3) / (W + d.alpha);
}

/// g(W) with C_G^2 = g(1 + V).
inline double g_of_W(double W, const Parameters& p, const DerivedConstants& d) {
  return W * (W - 1.0) * (W + d.mu) / (p.n() * (W - d.W_star));
}

inline double nullcline_F(double V, const Parameters& p, const DerivedConstants& d) {
  (void)p;
  const double W = 1.0 + V;
  if (W < 0.0) throw Error(ErrorKind::OutsideBranchDomain, "{F=0} is defined for V >= -1");
  if (W == 0.0) return 0.0;
  if (W + d.alpha <= 0.0) throw Error(ErrorKind::Pole, "W + alpha <= 0");
  const double f = f_of_W(W, d);
  if (f < 0.0) throw Error(ErrorKind::NegativeRadicand, "f(1+V) < 0 at V = " + std::to_string(V));
  return std::sqrt(f);
}

inline bool in_G_branch_domain(double V, const DerivedConstants& d) {
  return (V >= -1.0 && V < d.V_star) || V >= 0.0;
}

inline double nullcline_G(double V, const Parameters& p, const DerivedConstants& d) {
  if (!in_G_branch_domain(V, d)) {
    throw Error(ErrorKind::OutsideBranchDomain, "V = " + std::to_string(V) + " is outside [-1, V*) u [0, inf)");
  }
  const double W = 1.0 + V;
  const double g = g_of_W(W, p, d);
  if (g < 0.0) throw Error(ErrorKind::NegativeRadicand, "g(1+V) < 0 at V = " + std::to_string(V));
  return std::sqrt(g);
}

// ---------------------------------------------------------------------------
// Critical points

enum class PointId { P1, P2, P3, P4, P6, P8 };
enum class PointClass { Star, Node, Saddle, Degenerate, Unclassified };

inline const char* to_string(PointId id) {
  switch (id) {
    case PointId::P1: return "P1";
    case PointId::P2: return "P2";
    case PointId::P3: return "P3";
    case PointId::P4: return "P4";
    case PointId::P6: return "P6";
    case PointId::P8: return "P8";
  }
  return "?";
}

inline const char* to_string(PointClass c) {
  switch (c) {
    case PointClass::Star: return "star";
    case PointClass::Node: return "node";
    case PointClass::Saddle: return "saddle";
    case PointClass::Degenerate: return "degenerate";
    case PointClass::Unclassified: return "unclassified";
  }
  return "?";
}

struct Partials {
  double F_V = 0, F_C = 0, G_V = 0, G_C = 0;
};

struct CriticalPoint {
  static constexpr double nan = std::numeric_limits<double>::quiet_NaN();

  PointId id = PointId::P1;
  bool present = false;
  PhasePoint location;
  std::optional<Partials> partials;
  double wronskian = nan;
  double wronskian_formula = nan;  // K C6^2 (V6 - V4)(V6 - V8), P6 only
  double discriminant = nan;
  double E1 = nan, E2 = nan;
  double L1 = nan, L2 = nan;
  PointClass cls = PointClass::Unclassified;
  std::string note;
};

/// Roots of m gamma V^2 - B V + (2 mu - kappa) = 0 whose zeros are V-, V+.
struct SonicRoots {
  double radicand = 0;
  double V_minus = std::numeric_limits<double>::quiet_NaN();
  double V_plus = std::numeric_limits<double>::quiet_NaN();
  bool real() const { return radicand >= 0.0; }
};

inline SonicRoots sonic_roots(const Parameters& p, const DerivedConstants& d) {
  const double g = p.gamma();
  const double k = p.kappa();
  const double mg = d.m * g;
  const double B = (g - 2.0) * d.mu + k - mg;
  SonicRoots r;
  r.radicand = (g - 2.0) * (g - 2.0) * d.mu * d.mu - 2.0 * (mg * (g + 2.0) - k * (g - 2.0)) * d.mu +
               (mg + k) * (mg + k);
  if (r.radicand < 0.0) return r;
  const double sq = std::sqrt(r.radicand);
  const double big = 0.5 * (B + std::copysign(sq, B));
  const double c0 = 2.0 * d.mu - k;
  double v1, v2;
  if (big != 0.0) {
    v1 = big / mg;
    v2 = c0 / big;
  } else {
    v1 = v2 = 0.0;
  }
  r.V_minus = std::min(v1, v2);
  r.V_plus = std::max(v1, v2);
  return r;
}

inline double V4_location(const Parameters& p) {
  return -2.0 * p.lambda() / (2.0 + p.n() * (p.gamma() - 1.0));
}

/// Analytic partial derivatives of F and G at a point with V != -1.
inline Partials generic_partials(const PhasePoint& pt, const Parameters& p, const DerivedConstants& d) {
  const double V = pt.V, C = pt.C, W = pt.W();
  const double n = p.n();
  const double lam = p.lambda();
  Partials r;
  r.G_C = 2.0 * n * C * (V - d.V_star);
  r.G_V = n * C * C - (3.0 * V * V + 2.0 * (1.0 + lam) * V + lam);
  r.F_C = 3.0 * C * C * (1.0 + d.alpha / W) - d.k1 * W * W + d.k2 * W - d.k3;
  r.F_V = C * (-C * C * d.alpha / (W * W) - 2.0 * d.k1 * W + d.k2);
  return r;
}

/// Partials at a point on C = 1 + V where F = G = 0, simplified with those relations.
inline Partials p6_partials(const PhasePoint& pt, const Parameters& p, const DerivedConstants& d) {
  const double V = pt.V, C = pt.C;
  Partials r;
  r.F_C = 2.0 * C * (1.0 + d.alpha + V);
  r.F_V = C * (d.k2 - d.alpha - 2.0 * d.k1 * (1.0 + V));
  r.G_C = 2.0 * p.n() * C * (V - d.V_star);
  r.G_V = C * (p.n() * (1.0 + d.V_star) - 2.0 * V - p.lambda());
  return r;
}

inline Partials linearize(const CriticalPoint& cp, const Parameters& p, const DerivedConstants& d) {
  if (!cp.present) throw Error(ErrorKind::InvalidParameters, std::string(to_string(cp.id)) + " is absent");
  if (cp.id == PointId::P2) {
    throw Error(ErrorKind::Pole, "F has a direction-dependent limit at P2");
  }
  Partials r = cp.id == PointId::P6 ? p6_partials(cp.location, p, d) : generic_partials(cp.location, p, d);
  if (r.F_V == 0.0 && r.F_C == 0.0 && r.G_V == 0.0 && r.G_C == 0.0) {
    throw Error(ErrorKind::DegenerateLinearization, to_string(cp.id));
  }
  return r;
}

/// Fills W, R^2, E1,2, L1,2 and the class. The sign in E1 and L1 is the one
/// giving |E1| <= |E2|.
inline CriticalPoint classify(CriticalPoint cp, const Parameters& p, const DerivedConstants& d) {
  if (!cp.present) return cp;
  if (cp.id == PointId::P1) {
    cp.partials = Partials{0.0, -p.lambda(), -p.lambda(), 0.0};
    cp.wronskian = p.lambda() * p.lambda();
    cp.discriminant = 0.0;
    cp.E1 = cp.E2 = -p.lambda();
    cp.cls = PointClass::Star;
    cp.note = "every direction is characteristic";
    return cp;
  }
  if (cp.id == PointId::P2) {
    cp.cls = PointClass::Degenerate;
    cp.note = "triple point";
    return cp;
  }
  if (cp.id == PointId::P3 || cp.id == PointId::P8) {
    cp.note = "location only";
    return cp;
  }

  const Partials pa = linearize(cp, p, d);
  cp.partials = pa;
  cp.wronskian = pa.F_C * pa.G_V - pa.F_V * pa.G_C;
  const double diff = pa.F_C - pa.G_V;
  cp.discriminant = diff * diff + 4.0 * pa.F_V * pa.G_C;

  if (cp.id == PointId::P6) {
    const auto roots = sonic_roots(p, d);
    const double C6 = cp.location.C;
    cp.wronskian_formula = d.K * C6 * C6 * (roots.V_minus - V4_location(p)) * (roots.V_minus - roots.V_plus);
    if (roots.radicand == 0.0) {
      cp.note = "P6 and P8 coalesce";
      throw Error(ErrorKind::Coalescence, "V- == V+");
    }
  }

  if (cp.discriminant > 0.0 && pa.G_C != 0.0) {
    const double R = std::sqrt(cp.discriminant);
    const double sum = pa.F_C + pa.G_V;
    const double s = std::abs(sum - R) <= std::abs(sum + R) ? -1.0 : 1.0;
    cp.E1 = (sum + s * R) / (2.0 * pa.G_C);
    cp.E2 = (sum - s * R) / (2.0 * pa.G_C);
    cp.L1 = (diff + s * R) / (2.0 * pa.G_C);
    cp.L2 = (diff - s * R) / (2.0 * pa.G_C);
  }

  if (cp.wronskian < 0.0) {
    cp.cls = PointClass::Saddle;
  } else if (cp.wronskian == 0.0) {
    cp.cls = PointClass::Degenerate;
  } else if (cp.discriminant > 0.0) {
    cp.cls = PointClass::Node;
  } else if (cp.id == PointId::P6) {
    throw Error(ErrorKind::DiscriminantNonpositive, "R^2 = " + std::to_string(cp.discriminant) + " at P6");
  } else {
    cp.note = "focus or improper node";
  }
  return cp;
}

/// All six critical points with presence flags. P4 and P6 are classified when
/// present; P6 classification failures are recorded in its note.
inline std::vector<CriticalPoint> critical_points(const Parameters& p, const DerivedConstants& d) {
  std::vector<CriticalPoint> out;
  auto add = [&](PointId id, bool present, PhasePoint loc) {
    CriticalPoint cp;
    cp.id = id;
    cp.present = present;
    cp.location = loc;
    out.push_back(cp);
  };
  add(PointId::P1, true, {0.0, 0.0});
  add(PointId::P2, true, {-1.0, 0.0});
  add(PointId::P3, true, {-p.lambda(), 0.0});

  const double V4 = V4_location(p);
  const double g4 = in_G_branch_domain(V4, d) ? g_of_W(1.0 + V4, p, d) : -1.0;
  add(PointId::P4, g4 > 0.0, {V4, g4 > 0.0 ? std::sqrt(g4) : 0.0});

  const auto roots = sonic_roots(p, d);
  auto sonic_present = [&](double V) {
    return roots.real() && in_G_branch_domain(V, d) && g_of_W(1.0 + V, p, d) > 0.0;
  };
  add(PointId::P6, sonic_present(roots.V_minus), {roots.V_minus, 1.0 + roots.V_minus});
  add(PointId::P8, sonic_present(roots.V_plus), {roots.V_plus, 1.0 + roots.V_plus});

  for (auto& cp : out) {
    try {
      cp = classify(cp, p, d);
    } catch (const Error& e) {
      cp.note = e.what();
    }
  }
  return out;
}

inline const CriticalPoint& find_point(const std::vector<CriticalPoint>& pts, PointId id) {
  for (const auto& cp : pts)
    if (cp.id == id) return cp;
  throw Error(ErrorKind::InvalidParameters, "missing critical point");
}

// ---------------------------------------------------------------------------
// Conditions (G)-(J)

inline ConditionReport check_conditions_G_to_J(const Parameters& p, const DerivedConstants& d) {
  ConditionReport r;
  const auto roots = sonic_roots(p, d);
  const auto pts = critical_points(p, d);
  const auto& p6 = find_point(pts, PointId::P6);

  ConditionResult g{"G", "P6 is present", true, {{"0", 0.0, "radicand", roots.radicand}}, ""};
  if (roots.real() && in_G_branch_domain(roots.V_minus, d)) {
    g.parts.push_back({"0", 0.0, "C_G(V-)^2", g_of_W(1.0 + roots.V_minus, p, d)});
  } else {
    g.parts.push_back({"0", 0.0, "C_G(V-)^2", std::numeric_limits<double>::quiet_NaN()});
  }
  r.conditions.push_back(g);

  const double V4 = V4_location(p);
  ConditionResult h{"H", "P4 lies between P6 and P8", p6.present, {}, ""};
  if (p6.present) {
    h.parts = {{"V-", roots.V_minus, "V4", V4}, {"V4", V4, "V+", roots.V_plus}};
  } else {
    h.note = "not evaluable: P6 absent";
  }
  r.conditions.push_back(h);

  const bool have_lin = p6.present && p6.partials.has_value();
  ConditionResult i{"I", "R^2 > 0 at P6", have_lin, {}, ""};
  if (have_lin) {
    i.parts = {{"0", 0.0, "R^2", p6.discriminant}};
  } else {
    i.note = p6.present ? "not evaluable: " + p6.note : "not evaluable: P6 absent";
  }
  r.conditions.push_back(i);

  const bool have_slopes = have_lin && std::isfinite(p6.L1);
  ConditionResult j{"J", "L2 < -F_V/F_C < L1 < -G_V/G_C at P6", have_slopes, {}, ""};
  if (have_slopes) {
    const auto& pa = *p6.partials;
    const double sF = -pa.F_V / pa.F_C;
    const double sG = -pa.G_V / pa.G_C;
    j.parts = {{"L2", p6.L2, "-F_V/F_C", sF}, {"-F_V/F_C", sF, "L1", p6.L1}, {"L1", p6.L1, "-G_V/G_C", sG}};
  } else {
    j.note = "not evaluable: P6 slopes unavailable";
  }
  r.conditions.push_back(j);
  return r;
}

/// Conditions (A)-(J).
inline ConditionReport check_conditions(const Parameters& p) {
  const auto d = derive(p);
  auto r = check_algebraic_conditions(p, d);
  r.append(check_conditions_G_to_J(p, d));
  return r;
}

// ---------------------------------------------------------------------------
// Direction field

/// Unit tangent of (V(x), C(x)) for increasing x < 0; nullopt on D = 0 or at
/// critical points.
inline std::optional<std::array<double, 2>> direction(const PhasePoint& pt, const Parameters& p,
                                                      const DerivedConstants& d) {
  if (pt.W() == 0.0) return std::nullopt;
  const auto r = eval_rhs(pt, p, d);
  const double norm = std::hypot(r.G, r.F);
  if (r.D == 0.0 || norm == 0.0) return std::nullopt;
  const double s = (r.D > 0.0 ? 1.0 : -1.0) / norm;
  return std::array<double, 2>{s * r.G, s * r.F};
}

}  // namespace cavity
