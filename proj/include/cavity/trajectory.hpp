#pragma once

// Construction of the trajectory from P2 through P6 to P1.
//
// Gauge: x0 = -1, so s = -log|x| vanishes at the interface (P2).
// Segment P2 -> P6 is integrated in an arc-like parameter tau with
// dW/dtau = -G, dC/dtau = -F, ds/dtau = -lambda D, which is regular where G or
// F vanish. Leaving P6 the state is measured from P6 (the departure is
// sensitive to absolute errors there); further out the independent variable
// is s and the state is (V/x, C/x, ln R), which stays O(1) toward P1.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "cavity/error.hpp"
#include "cavity/ode.hpp"
#include "cavity/params.hpp"
#include "cavity/phaseplane.hpp"

namespace cavity {

// ---------------------------------------------------------------------------
// Local analysis at P2

enum class RayClass { Isolated, Nodal };

inline const char* to_string(RayClass c) { return c == RayClass::Isolated ? "isolated" : "nodal"; }

struct RayAnalysisP2 {
  double phi1 = 0.0;
  double phi2 = std::numbers::pi / 2;
  double phi3 = 0.0;
  RayClass class1 = RayClass::Isolated;
  RayClass class2 = RayClass::Isolated;
  RayClass class3 = RayClass::Isolated;
  double a = 0;  // Z ~ W^a along the vertical ray
  double b = 0;  // p ~ W^b along the vertical ray
};

inline RayAnalysisP2 analyze_p2_rays(const Parameters& p, const DerivedConstants& d) {
  RayAnalysisP2 r;
  r.phi3 = std::atan(d.sigma);
  r.class2 = p.kappa() > d.kappa_bar ? RayClass::Isolated : RayClass::Nodal;
  r.class3 = d.mu < 0.5 * p.n() * (p.gamma() - 1.0) ? RayClass::Isolated : RayClass::Nodal;
  r.a = d.a_vert;
  r.b = d.b_vert;
  return r;
}

/// Limit of D/G at P2 along the admissible ray.
inline double dg_limit_p2(const Parameters& p, const DerivedConstants& d) {
  return p.gamma() / (p.n() * (p.gamma() - 1.0) - 2.0 * d.mu);
}

/// ln R from the adiabatic integral R^{1-gamma+q} = constant x^2 / (W^q Z).
inline double ln_density(double s, double W, double C, const DerivedConstants& d, double gamma,
                         double ln_constant = 0.0) {
  return (ln_constant - 2.0 * s - d.q * std::log(std::abs(W)) - 2.0 * std::log(C)) / (1.0 - gamma + d.q);
}

/// State carried on the P2 -> P6 segment: W, C, s, ln R.
using Seg1State = ode::State<4>;
/// State carried just beyond P6: V - V6, C - C6, s, ln R (reversed tau).
using NearP6State = ode::State<4>;
/// State carried toward P1: V/x, C/x, ln R.
using Seg2State = ode::State<3>;

struct P2Start {
  double W = 0, C = 0, s = 0, lnR = 0;
  PhasePoint point() const { return {W - 1.0, C}; }
};

/// First-order point on the admissible ray at offset eps: W = eps, Z = sigma eps.
inline P2Start start_at_P2(const Parameters& p, const DerivedConstants& d, double eps) {
  if (!(eps > 0.0)) throw Error(ErrorKind::InvalidParameters, "eps must be positive");
  P2Start st;
  st.W = eps;
  st.C = std::sqrt(d.sigma * eps);
  st.s = p.lambda() * eps * dg_limit_p2(p, d);
  const double V = eps - 1.0;
  const auto roots = sonic_roots(p, d);
  const double lo = in_G_branch_domain(V, d) ? std::sqrt(std::max(0.0, g_of_W(eps, p, d))) : -1.0;
  const double hi = f_of_W(eps, d) >= 0.0 ? std::sqrt(f_of_W(eps, d)) : -1.0;
  if (!(st.C > lo && st.C < hi) || (roots.real() && V >= roots.V_minus)) {
    throw Error(ErrorKind::StartOutsideStrip, "eps = " + std::to_string(eps));
  }
  st.lnR = ln_density(st.s, st.W, st.C, d, p.gamma());
  return st;
}

// ---------------------------------------------------------------------------
// Right-hand sides

inline Seg1State seg1_rhs(const Seg1State& y, const Parameters& p, const DerivedConstants& d) {
  const double W = y[0], C = y[1];
  const auto r = rhs_w(W, C, p, d);
  const double V = W - 1.0;
  return {-r.G, -r.F, -p.lambda() * r.D, ((p.kappa() + p.n()) * V * r.D + r.G) / W};
}

inline NearP6State near_p6_rhs(const NearP6State& y, const PhasePoint& P6, const Parameters& p,
                               const DerivedConstants& d) {
  const double V = P6.V + y[0];
  const double W = P6.W() + y[0];
  const auto r = rhs_w(W, P6.C + y[1], p, d);
  return {r.G, r.F, p.lambda() * r.D, -((p.kappa() + p.n()) * V * r.D + r.G) / W};
}

inline Seg2State seg2_rhs(double s, const Seg2State& y, const Parameters& p, const DerivedConstants& d) {
  const double x = -std::exp(-s);
  const double a = y[0], b = y[1];
  const double V = a * x, C = b * x, W = 1.0 + V;
  const double n = p.n(), lam = p.lambda();
  const double D = W * W - C * C;
  const double G = n * C * C * (V - d.V_star) - V * W * (lam + V);
  const double lD = lam * D;
  const double da = x * (b * b * ((n - lam) * a * x - n * d.V_star) + d.mu * a * a * W) / lD;
  const double db =
      x * b * (b * b * x * (d.alpha / W - d.mu) + a * (2.0 * lam - 2.0 * d.k1 + d.k2) + (lam - d.k1) * a * a * x) / lD;
  const double dlnR = -((p.kappa() + n) * V / lam + G / lD) / W;
  return {da, db, dlnR};
}

// ---------------------------------------------------------------------------
// Result types

enum class Segment { P2toP6, P6toP1 };

inline const char* to_string(Segment s) { return s == Segment::P2toP6 ? "P2toP6" : "P6toP1"; }

struct TrajectorySample {
  double x = 0;
  double V = 0;
  double C = 0;
  double R = std::numeric_limits<double>::quiet_NaN();  // filled by reconstruct
  double lnR_ode = 0;  // ln R integrated alongside (V, C)
  double s = 0;        // -log|x|
  Segment segment = Segment::P2toP6;
};

struct EventRecord {
  std::string name;
  double x = 0;
  double V = 0;
  double C = 0;
};

enum class Route { ViaP0, ViaGCrossing };

struct BuildOptions {
  ode::Tolerances tol{1e-10, 1e-12};
  double eps_p2 = 1e-6;
  double delta6 = 1e-5;
  double eps6 = 1e-5;
  double delta1 = 1e-6;
  double departure_offset = 0.0;  // departure direction (1, L1) + offset (1, L2)
  // Every departure tangent to L1 grows a secondary component like r^(E2/E1);
  // this fixed component toward the {F<0} side outweighs integration error so
  // roundoff does not pick the branch.
  double secondary_bias = 1e-4;
  bool richardson = true;
  bool allow_alternate_route = false;
  double arrival_angle_tol = 1e-3;
  double trap_tol = 1e-8;
};

/// Value and x-derivative of the similarity variables at one x.
struct SimilarityState {
  double x = 0, s = 0;
  double V = 0, C = 0, lnR = 0;
  double dV = 0, dC = 0, dlnR = 0;  // d/dx
};

struct GammaResult {
  Parameters params;
  DerivedConstants derived;
  BuildOptions options;

  std::vector<TrajectorySample> samples;
  std::vector<EventRecord> events;
  Route route = Route::ViaP0;

  double x0 = -1.0;
  double x6 = 0, s6 = 0;
  double nu = 0, omega = 0, ell = 0;
  bool vertical_approach = false;

  PhasePoint P6, arrival, departure;
  double L1 = 0, L2 = 0;
  double arrival_angle_error = 0;
  double s_arrival = 0, s_departure = 0;
  double lnR6 = 0, lnR_arrival = 0, lnR_departure = 0;

  // T2 = (V0, V_hat) x (0, C0), entered at P0
  double V0 = 0, C0 = 0, V_hat = 0;
  double s_P0 = 0;

  // Dense solutions: near-P2 piece, main P2 -> P6 piece, the piece leaving P6
  // (reversed tau), and the piece reaching P1 (in s).
  ode::Solution<4> seg1a, seg1b, seg2a;
  ode::Solution<3> seg2;
  double s_seg1a_begin = 0, s_seg1b_begin = 0, s_seg2_begin = 0, s_seg2_end = 0;
  double lnR_end = 0;

  SimilarityState at_x(double x) const;
  SimilarityState at_s(double s) const;
  /// State on the P2 -> P6 segment where W = 1 + V takes the given value.
  SimilarityState at_W(double W) const;
};

namespace detail {

inline SimilarityState seg1_state(const ode::Solution<4>& sol, double tau, const GammaResult& g) {
  const auto y = sol.eval(tau);
  const auto dy = sol.derivative(tau);
  SimilarityState st;
  st.s = y[2];
  st.x = -std::exp(-st.s);
  st.V = y[0] - 1.0;
  st.C = y[1];
  st.lnR = y[3];
  // d/dx = (d/dtau) / (dx/dtau), dx/ds = -x
  const double dxdtau = -st.x * dy[2];
  st.dV = dy[0] / dxdtau;
  st.dC = dy[1] / dxdtau;
  st.dlnR = dy[3] / dxdtau;
  (void)g;
  return st;
}

/// Inverts a monotone component of a dense solution by bisection.
template <std::size_t N>
double invert(const ode::Solution<N>& sol, std::size_t comp, double target) {
  const auto& t = sol.t;
  const auto& y = sol.y;
  const bool inc = y.back()[comp] >= y.front()[comp];
  std::size_t lo = 0, hi = t.size() - 1;
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    if ((y[mid][comp] <= target) == inc) lo = mid;
    else hi = mid;
  }
  double a = t[lo], b = t[hi];
  for (int it = 0; it < 100 && b - a > 1e-15 * std::max(1.0, std::abs(b)); ++it) {
    const double m = 0.5 * (a + b);
    if ((sol.eval(m)[comp] <= target) == inc) a = m;
    else b = m;
  }
  return 0.5 * (a + b);
}

}  // namespace detail

inline SimilarityState GammaResult::at_s(double s) const {
  const auto& d = derived;
  const double lam = params.lambda();
  SimilarityState st;
  st.s = s;
  st.x = -std::exp(-s);
  const double x = st.x;

  if (s < s_seg1a_begin) {
    // leading order on the admissible ray
    if (s <= 0.0) throw Error(ErrorKind::OutsideFluidRegion, "x <= x0");
    const double K0 = 1.0 / dg_limit_p2(params, d);
    const double W = K0 * s / lam;
    st.V = W - 1.0;
    st.C = std::sqrt(d.sigma * W);
    st.lnR = ln_density(s, W, st.C, d, params.gamma());
    const double dWdx = -(K0 / lam) / x;
    st.dV = dWdx;
    st.dC = 0.5 * d.sigma * dWdx / st.C;
    st.dlnR = (-2.0 * (-1.0 / x) - d.q * dWdx / W - 2.0 * st.dC / st.C) / (1.0 - params.gamma() + d.q);
    return st;
  }
  if (s < s_seg1b_begin) {
    auto r = detail::seg1_state(seg1a, detail::invert(seg1a, 2, s), *this);
    return r;
  }
  if (s <= s_arrival) return detail::seg1_state(seg1b, detail::invert(seg1b, 2, s), *this);

  if (s < s_departure) {
    // piecewise-linear bridge through P6 along the primary direction
    const bool before = s < s6;
    const double sa = before ? s_arrival : s6, sb = before ? s6 : s_departure;
    const PhasePoint pa = before ? arrival : P6, pb = before ? P6 : departure;
    const double la = before ? lnR_arrival : lnR6, lb = before ? lnR6 : lnR_departure;
    const double w = (s - sa) / (sb - sa);
    st.V = pa.V + w * (pb.V - pa.V);
    st.C = pa.C + w * (pb.C - pa.C);
    st.lnR = la + w * (lb - la);
    const double dsdx = -1.0 / x;
    st.dV = (pb.V - pa.V) / (sb - sa) * dsdx;
    st.dC = (pb.C - pa.C) / (sb - sa) * dsdx;
    st.dlnR = (lb - la) / (sb - sa) * dsdx;
    return st;
  }

  if (s < s_seg2_begin) {
    const double tau = detail::invert(seg2a, 2, s);
    const auto y = seg2a.eval(tau);
    const auto dy = seg2a.derivative(tau);
    const double dxdtau = -x * dy[2];
    st.V = P6.V + y[0];
    st.C = P6.C + y[1];
    st.lnR = y[3];
    st.dV = dy[0] / dxdtau;
    st.dC = dy[1] / dxdtau;
    st.dlnR = dy[3] / dxdtau;
    return st;
  }

  if (s <= s_seg2_end) {
    const auto y = seg2.eval(s);
    const auto dy = seg2.derivative(s);
    const double dsdx = -1.0 / x;
    st.V = y[0] * x;
    st.C = y[1] * x;
    st.lnR = y[2];
    // V = a x with dx/ds = -x
    st.dV = y[0] + x * dy[0] * dsdx;
    st.dC = y[1] + x * dy[1] * dsdx;
    st.dlnR = dy[2] * dsdx;
    return st;
  }

  st.V = nu * x;
  st.C = omega * x;
  st.lnR = lnR_end;
  st.dV = nu;
  st.dC = omega;
  st.dlnR = 0.0;
  return st;
}

inline SimilarityState GammaResult::at_x(double x) const {
  if (!(x < 0.0)) throw Error(ErrorKind::OutsideFluidRegion, "x must be negative");
  if (x <= x0) throw Error(ErrorKind::OutsideFluidRegion, "x <= x0");
  return at_s(-std::log(-x));
}

inline SimilarityState GammaResult::at_W(double W) const {
  if (!(W > 0.0) || W > arrival.W()) throw Error(ErrorKind::OutsideFluidRegion, "W outside the P2 -> P6 segment");
  if (W < seg1a.y.front()[0]) {
    const double K0 = 1.0 / dg_limit_p2(params, derived);
    return at_s(params.lambda() * W / K0);
  }
  if (W < seg1b.y.front()[0]) return detail::seg1_state(seg1a, detail::invert(seg1a, 0, W), *this);
  return detail::seg1_state(seg1b, detail::invert(seg1b, 0, W), *this);
}

// ---------------------------------------------------------------------------
// Segment P2 -> P6

struct Seg1Run {
  ode::Result<4> result;
  Seg1State end{};
};

inline std::vector<ode::Event<4>> seg1_events(const Parameters& p, const DerivedConstants& d, const PhasePoint& P6,
                                              double delta6, double trap_tol) {
  std::vector<ode::Event<4>> ev;
  ev.push_back({"P6", [P6, delta6](double, const Seg1State& y) {
                  return std::hypot(y[0] - P6.W(), y[1] - P6.C) - delta6;
                }, true, -1});
  ev.push_back({"above {F=0}", [&d, trap_tol](double, const Seg1State& y) {
                  const double f = f_of_W(y[0], d);
                  return y[1] - std::sqrt(std::max(f, 0.0)) - trap_tol;
                }, true, 1});
  ev.push_back({"below {G=0}", [&p, &d, trap_tol](double, const Seg1State& y) {
                  if (y[0] - 1.0 >= d.V_star) return -1.0;
                  const double g = g_of_W(y[0], p, d);
                  return std::sqrt(std::max(g, 0.0)) - y[1] - trap_tol;
                }, true, 1});
  ev.push_back({"passed P6", [P6, delta6](double, const Seg1State& y) { return y[0] - P6.W() - delta6; }, true, 1});
  return ev;
}

inline Seg1Run run_seg1(const Parameters& p, const DerivedConstants& d, const Seg1State& y0,
                        const std::vector<ode::Event<4>>& events, const ode::Tolerances& tol) {
  ode::Options opt;
  opt.tol = tol;
  auto f = [&](double, const Seg1State& y) { return seg1_rhs(y, p, d); };
  Seg1Run run;
  run.result = ode::integrate<4>(f, 0.0, y0, 1e6, opt, events);
  run.end = run.result.sol.y.back();
  return run;
}

inline void throw_seg1_exit(const ode::Result<4>& r) {
  if (!r.stop) throw Error(ErrorKind::DomainExit, "P2 -> P6 segment did not terminate");
  if (r.stop->name != "P6" && r.stop->name != "match") {
    throw Error(ErrorKind::DomainExit, "P2 -> P6 segment: " + r.stop->name);
  }
}

// ---------------------------------------------------------------------------
// Independent recovery of x

/// Integrates ds/dV = lambda D/G along a polyline of (V, C) samples, using a
/// cubic Hermite interpolant of C(V) with slopes F/G and adaptive Simpson
/// quadrature. Returns s at every sample, anchored at s_anchor for the first.
inline std::vector<double> recover_x(const std::vector<PhasePoint>& poly, double s_anchor, const Parameters& p,
                                     const DerivedConstants& d, double rel_tol = 1e-9) {
  std::vector<double> s(poly.size(), s_anchor);
  if (poly.size() < 2) return s;
  const double lam = p.lambda();

  auto slope = [&](const PhasePoint& pt) {
    const auto r = eval_rhs(pt, p, d);
    if (r.G == 0.0) throw Error(ErrorKind::NonintegrableEndpoint, "G = 0 on the polyline");
    return r.F / r.G;
  };
  auto integrand = [&](double V, double C) {
    const auto r = eval_rhs({V, C}, p, d);
    if (r.G == 0.0) throw Error(ErrorKind::NonintegrableEndpoint, "G = 0 inside an interval");
    return lam * r.D / r.G;
  };

  std::vector<double> m(poly.size());
  for (std::size_t i = 0; i < poly.size(); ++i) m[i] = slope(poly[i]);

  for (std::size_t i = 0; i + 1 < poly.size(); ++i) {
    const double V0 = poly[i].V, V1 = poly[i + 1].V, h = V1 - V0;
    const double C0 = poly[i].C, C1 = poly[i + 1].C;
    const double m0 = m[i], m1 = m[i + 1];
    auto C_of = [&](double V) {
      const double t = (V - V0) / h;
      const double t2 = t * t, t3 = t2 * t;
      return (2 * t3 - 3 * t2 + 1) * C0 + (t3 - 2 * t2 + t) * h * m0 + (-2 * t3 + 3 * t2) * C1 +
             (t3 - t2) * h * m1;
    };
    auto fV = [&](double V) { return integrand(V, C_of(V)); };

    std::function<double(double, double, double, double, double, double, int)> simpson =
        [&](double a, double b, double fa, double fm, double fb, double whole, int depth) -> double {
      const double c = 0.5 * (a + b);
      const double lm = 0.5 * (a + c), rm = 0.5 * (c + b);
      const double flm = fV(lm), frm = fV(rm);
      const double left = (c - a) / 6.0 * (fa + 4.0 * flm + fm);
      const double right = (b - c) / 6.0 * (fm + 4.0 * frm + fb);
      const double delta = left + right - whole;
      if (depth <= 0 || std::abs(delta) <= 15.0 * rel_tol * std::max(std::abs(left + right), 1e-300)) {
        return left + right + delta / 15.0;
      }
      return simpson(a, c, fa, flm, fm, left, depth - 1) + simpson(c, b, fm, frm, fb, right, depth - 1);
    };
    const double fa = fV(V0), fb = fV(V1), fm = fV(0.5 * (V0 + V1));
    const double whole = h / 6.0 * (fa + 4.0 * fm + fb);
    const double inc = simpson(V0, V1, fa, fm, fb, whole, 30);
    if (!std::isfinite(inc)) throw Error(ErrorKind::NonintegrableEndpoint, "divergent increment");
    s[i + 1] = s[i] + inc;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Crossing P6

struct P6Crossing {
  double L1 = 0, L2 = 0;
  double arrival_angle_error = 0;
  double dg_ratio = 0;  // limit of D/G at P6 along L1
  PhasePoint departure;
};

inline P6Crossing cross_P6(const PhasePoint& arrival, const CriticalPoint& p6, const Parameters& p,
                           const DerivedConstants& d, double eps6, double departure_offset = 0.0,
                           double angle_tol = 1e-3) {
  (void)d;
  if (p6.cls != PointClass::Node || !p6.partials || !std::isfinite(p6.L1)) {
    throw Error(ErrorKind::WrongArrivalSlope, "P6 is not a node");
  }
  P6Crossing c;
  c.L1 = p6.L1;
  c.L2 = p6.L2;
  const double dv = arrival.V - p6.location.V, dc = arrival.C - p6.location.C;
  // angle between undirected lines
  auto line_angle = [](double a, double b) {
    double t = std::abs(a - b);
    t = std::fmod(t, std::numbers::pi);
    return std::min(t, std::numbers::pi - t);
  };
  const double arr = std::atan2(dc, dv);
  c.arrival_angle_error = line_angle(arr, std::atan(c.L1));
  if (c.arrival_angle_error > angle_tol) {
    const double e2 = line_angle(arr, std::atan(c.L2));
    throw Error(ErrorKind::WrongArrivalSlope, "arrival deviates from L1 by " + std::to_string(c.arrival_angle_error) +
                                                  " rad (from L2 by " + std::to_string(e2) + " rad)");
  }
  const auto& pa = *p6.partials;
  c.dg_ratio = 2.0 * p6.location.C * (1.0 - c.L1) / (pa.G_V + pa.G_C * c.L1);

  double ux = 1.0 + departure_offset, uy = c.L1 + departure_offset * c.L2;
  const double nrm = std::hypot(ux, uy);
  ux /= nrm;
  uy /= nrm;
  if (dv > 0.0) {
    ux = -ux;
    uy = -uy;
  }
  c.departure = {p6.location.V + eps6 * ux, p6.location.C + eps6 * uy};
  return c;
}

// ---------------------------------------------------------------------------
// Full construction

/// Solves C_G(V) = C0 on the right branch of {G=0}.
inline double right_branch_V(double C0, const Parameters& p, const DerivedConstants& d) {
  double lo = 0.0, hi = 1.0;
  while (g_of_W(1.0 + hi, p, d) < C0 * C0) hi *= 2.0;
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    (g_of_W(1.0 + mid, p, d) < C0 * C0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline GammaResult build_gamma(const Parameters& p, const BuildOptions& opt = {}) {
  const auto d = derive(p);
  GammaResult g;
  g.params = p;
  g.derived = d;
  g.options = opt;

  const auto pts = critical_points(p, d);
  const auto& p6 = find_point(pts, PointId::P6);
  if (!p6.present) throw Error(ErrorKind::DomainExit, "P6 absent");
  if (p6.cls != PointClass::Node) throw Error(ErrorKind::WrongArrivalSlope, "P6 is not a node: " + p6.note);
  g.P6 = p6.location;

  // P2 start with Richardson refinement at a matching W.
  const double eps = opt.eps_p2;
  const double W_match = std::min(1e3 * eps, 0.5 * (p6.location.W()));
  auto events = seg1_events(p, d, p6.location, opt.delta6, opt.trap_tol);
  auto match_events = events;
  match_events.push_back({"match", [W_match](double, const Seg1State& y) { return y[0] - W_match; }, true, 1});

  auto from = [&](double e) {
    const auto st = start_at_P2(p, d, e);
    auto run = run_seg1(p, d, {st.W, st.C, st.s, st.lnR}, match_events, opt.tol);
    throw_seg1_exit(run.result);
    return run;
  };
  Seg1Run fine = from(0.5 * eps);
  Seg1State start = fine.end;
  if (opt.richardson) {
    const Seg1Run coarse = from(eps);
    // s has an O(eps^2) start error, ln R an O(eps) one
    start[1] = (4.0 * fine.end[1] - coarse.end[1]) / 3.0;
    start[2] = (4.0 * fine.end[2] - coarse.end[2]) / 3.0;
    start[3] = 2.0 * fine.end[3] - coarse.end[3];
  }
  start[0] = W_match;
  g.seg1a = std::move(fine.result.sol);

  Seg1Run main = run_seg1(p, d, start, events, opt.tol);
  throw_seg1_exit(main.result);
  g.seg1b = std::move(main.result.sol);

  g.s_seg1a_begin = g.seg1a.y.front()[2];
  g.s_seg1b_begin = g.seg1b.y.front()[2];
  const auto& yarr = main.end;
  g.arrival = {yarr[0] - 1.0, yarr[1]};
  g.s_arrival = yarr[2];
  g.lnR_arrival = yarr[3];

  // Through P6 by the linearization.
  const auto cross = cross_P6(g.arrival, p6, p, d, opt.eps6, opt.departure_offset + opt.secondary_bias,
                              opt.arrival_angle_tol);
  g.L1 = cross.L1;
  g.L2 = cross.L2;
  g.arrival_angle_error = cross.arrival_angle_error;
  const double lam = p.lambda();
  const double V6 = p6.location.V, W6 = p6.location.W();
  const double dsdV = lam * cross.dg_ratio;
  const double dlnRdV = -((p.kappa() + p.n()) * V6 * cross.dg_ratio + 1.0) / W6;
  g.s6 = g.s_arrival + (V6 - g.arrival.V) * dsdV;
  g.lnR6 = g.lnR_arrival + (V6 - g.arrival.V) * dlnRdV;
  g.x6 = -std::exp(-g.s6);
  g.departure = cross.departure;
  g.s_departure = g.s6 + (g.departure.V - V6) * dsdV;
  g.lnR_departure = g.lnR6 + (g.departure.V - V6) * dlnRdV;
  if (!(g.s_departure > g.s6 && g.s6 > g.s_arrival)) {
    throw Error(ErrorKind::NonintegrableEndpoint, "x is not increasing through P6");
  }

  // Leaving P6, measured from P6.
  const double r_switch = 1e-2;
  std::vector<ode::Event<4>> eva;
  auto near_point = [P6 = g.P6](const NearP6State& y) { return PhasePoint{P6.V + y[0], P6.C + y[1]}; };
  eva.push_back({"P0", [&](double, const NearP6State& y) { return eval_rhs(near_point(y), p, d).F; }, false, 0});
  eva.push_back({"{G=0}", [&](double, const NearP6State& y) { return eval_rhs(near_point(y), p, d).G; }, false, 0});
  eva.push_back({"switch", [&](double, const NearP6State& y) { return std::hypot(y[0], y[1]) - r_switch; }, true, 1});
  eva.push_back({"sonic line", [&](double, const NearP6State& y) { return -eval_rhs(near_point(y), p, d).D; }, true, 1});
  eva.push_back({"C < 0", [&](double, const NearP6State& y) { return -near_point(y).C; }, true, 1});
  ode::Options oa;
  oa.tol = opt.tol;
  auto fa = [&](double, const NearP6State& y) { return near_p6_rhs(y, g.P6, p, d); };
  auto ra = ode::integrate<4>(fa, 0.0, NearP6State{g.departure.V - V6, g.departure.C - p6.location.C, g.s_departure,
                                                   g.lnR_departure},
                              1e6, oa, eva);
  if (!ra.stop) throw Error(ErrorKind::DidNotReachP1, "did not leave the neighbourhood of P6");
  if (ra.stop->name != "switch") throw Error(ErrorKind::DomainExit, "leaving P6: " + ra.stop->name);
  const NearP6State ya = ra.sol.y.back();
  g.s_seg2_begin = ya[2];

  // Toward P1 in scaled variables.
  const double xs = -std::exp(-g.s_seg2_begin);
  Seg2State y2{(V6 + ya[0]) / xs, (p6.location.C + ya[1]) / xs, ya[3]};
  auto state = [](double s, const Seg2State& y) {
    const double x = -std::exp(-s);
    return PhasePoint{y[0] * x, y[1] * x};
  };
  std::vector<ode::Event<3>> ev2;
  ev2.push_back({"P0", [&](double s, const Seg2State& y) { return eval_rhs(state(s, y), p, d).F; }, false, 0});
  ev2.push_back({"{G=0}", [&](double s, const Seg2State& y) { return eval_rhs(state(s, y), p, d).G; }, false, 0});
  ev2.push_back({"P1", [&](double s, const Seg2State& y) {
                   const auto pt = state(s, y);
                   return std::hypot(pt.V, pt.C) - opt.delta1;
                 }, true, -1});
  ev2.push_back({"sonic line", [&](double s, const Seg2State& y) { return -eval_rhs(state(s, y), p, d).D; }, true, 1});
  ev2.push_back({"C < 0", [&](double, const Seg2State& y) { return y[1]; }, true, 1});
  ev2.push_back({"V < -1", [&](double s, const Seg2State& y) { return -state(s, y).W(); }, true, 1});

  ode::Options o2;
  o2.tol = opt.tol;
  auto f2 = [&](double s, const Seg2State& y) { return seg2_rhs(s, y, p, d); };
  ode::Result<3> r2;
  try {
    r2 = ode::integrate<3>(f2, g.s_seg2_begin, y2, g.s_seg2_begin + 80.0, o2, ev2);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::StepUnderflow) throw Error(ErrorKind::DidNotReachP1, e.what());
    throw;
  }
  if (!r2.stop) throw Error(ErrorKind::DidNotReachP1, "no P1 event before x = -e^-80");
  if (r2.stop->name != "P1") throw Error(ErrorKind::DomainExit, "beyond P6: " + r2.stop->name);

  // Route bookkeeping.
  std::optional<double> sP0, sG;
  for (const auto& h : ra.hits) {
    const double sh = ra.sol.eval(h.t)[2];
    if (h.name == "P0" && !sP0) sP0 = sh;
    if (h.name == "{G=0}" && !sG) sG = sh;
  }
  for (const auto& h : r2.hits) {
    if (h.name == "P0" && !sP0) sP0 = h.t;
    if (h.name == "{G=0}" && !sG) sG = h.t;
  }
  if (sG && (!sP0 || *sG < *sP0)) {
    if (!opt.allow_alternate_route) {
      throw Error(ErrorKind::DomainExit, "crossed {G=0} before {F=0}; enable the alternate route");
    }
    g.route = Route::ViaGCrossing;
  }
  if (!sP0 && g.route == Route::ViaP0) throw Error(ErrorKind::DomainExit, "no {F=0} crossing before P1");

  // One more decade of |x| for the collapse limits.
  const double s1 = r2.stop->t;
  const Seg2State y1 = r2.sol.y.back();
  auto tail = ode::integrate<3>(f2, s1, y1, s1 + std::log(10.0), o2);
  g.seg2 = std::move(r2.sol);
  for (std::size_t i = 0; i < tail.sol.steps.size(); ++i) {
    g.seg2.steps.push_back(tail.sol.steps[i]);
    g.seg2.t.push_back(tail.sol.t[i + 1]);
    g.seg2.y.push_back(tail.sol.y[i + 1]);
  }
  g.s_seg2_end = g.seg2.t.back();
  const auto yend = g.seg2.y.back();
  g.nu = (10.0 * yend[0] - y1[0]) / 9.0;
  g.omega = (10.0 * yend[1] - y1[1]) / 9.0;
  g.lnR_end = yend[2];
  g.vertical_approach = g.nu == 0.0;
  g.ell = g.vertical_approach ? std::numeric_limits<double>::infinity() : g.omega / g.nu;

  // Samples.
  auto push1 = [&](const ode::Solution<4>& sol, std::size_t from_index) {
    for (std::size_t i = from_index; i < sol.y.size(); ++i) {
      const auto& y = sol.y[i];
      g.samples.push_back({-std::exp(-y[2]), y[0] - 1.0, y[1], std::numeric_limits<double>::quiet_NaN(), y[3], y[2],
                           Segment::P2toP6});
    }
  };
  push1(g.seg1a, 0);
  g.samples.pop_back();  // replaced by the refined matching state
  push1(g.seg1b, 0);
  g.seg2a = std::move(ra.sol);
  for (std::size_t i = 0; i + 1 < g.seg2a.y.size(); ++i) {
    const auto& y = g.seg2a.y[i];
    const double x = -std::exp(-y[2]);
    g.samples.push_back({x, V6 + y[0], p6.location.C + y[1], std::numeric_limits<double>::quiet_NaN(), y[3], y[2],
                         Segment::P6toP1});
  }
  for (std::size_t i = 0; i < g.seg2.y.size(); ++i) {
    const double s = g.seg2.t[i];
    const double x = -std::exp(-s);
    const auto& y = g.seg2.y[i];
    g.samples.push_back({x, y[0] * x, y[1] * x, std::numeric_limits<double>::quiet_NaN(), y[2], s, Segment::P6toP1});
  }

  auto record = [&](const std::string& name, double s) {
    const auto st = g.at_s(s);
    g.events.push_back({name, st.x, st.V, st.C});
  };
  g.events.push_back({"start", g.samples.front().x, g.samples.front().V, g.samples.front().C});
  g.events.push_back({"P6", g.x6, V6, p6.location.C});
  if (sG) record("{G=0}", *sG);
  if (sP0) {
    record("P0", *sP0);
    g.s_P0 = *sP0;
    const auto st = g.at_s(*sP0);
    g.V0 = st.V;
    g.C0 = st.C;
    g.V_hat = right_branch_V(g.C0, p, d);
  }
  record("P1", s1);
  return g;
}

// ---------------------------------------------------------------------------
// Departure fan

struct SweepEntry {
  double offset = 0;
  bool ok = false;
  double x6 = 0, nu = 0, omega = 0;
  std::string error;
};

/// Rebuilds the trajectory for departure directions (1, L1) + offset (1, L2).
inline std::vector<SweepEntry> sweep_departures(const Parameters& p, const std::vector<double>& offsets,
                                                BuildOptions opt = {}) {
  std::vector<SweepEntry> out;
  for (double off : offsets) {
    SweepEntry e;
    e.offset = off;
    opt.departure_offset = off;
    try {
      const auto g = build_gamma(p, opt);
      e.ok = true;
      e.x6 = g.x6;
      e.nu = g.nu;
      e.omega = g.omega;
    } catch (const Error& err) {
      e.error = err.what();
    }
    out.push_back(e);
  }
  return out;
}

}  // namespace cavity
