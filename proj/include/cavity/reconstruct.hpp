#pragma once

// Density from the adiabatic integral, physical fields, and the checks on them.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "cavity/error.hpp"
#include "cavity/ode.hpp"
#include "cavity/params.hpp"
#include "cavity/phaseplane.hpp"
#include "cavity/trajectory.hpp"

namespace cavity {

// ---------------------------------------------------------------------------
// Density

struct DensityProfile {
  std::vector<double> x;
  std::vector<double> R;
  double adiabatic_constant = 1.0;
};

/// R = [constant x^2 / (|1+V|^q C^2)]^(1/(1-gamma+q)).
inline double density(double x, double V, double C, const DerivedConstants& d, double gamma, double constant = 1.0) {
  if (C == 0.0) throw Error(ErrorKind::OutsideFluidRegion, "C = 0");
  const double e = 1.0 - gamma + d.q;
  if (e == 0.0) throw Error(ErrorKind::InvalidParameters, "gamma - 1 - q = 0");
  return std::pow(constant * x * x / (std::pow(std::abs(1.0 + V), d.q) * C * C), 1.0 / e);
}

/// Fills R on every sample of g with C > 0 and returns the profile.
inline DensityProfile density_from_adiabatic(GammaResult& g, double constant = 1.0) {
  if (!(constant > 0.0)) throw Error(ErrorKind::InvalidParameters, "adiabatic constant must be positive");
  DensityProfile prof;
  prof.adiabatic_constant = constant;
  for (auto& s : g.samples) {
    if (s.C == 0.0) continue;
    s.R = density(s.x, s.V, s.C, g.derived, g.params.gamma(), constant);
    prof.x.push_back(s.x);
    prof.R.push_back(s.R);
  }
  return prof;
}

/// [R |1+V|]^q R^(1-gamma) (C/x)^2 from ln R.
inline double adiabatic_invariant(double lnR, double x, double V, double C, const DerivedConstants& d, double gamma) {
  return std::exp((d.q + 1.0 - gamma) * lnR + d.q * std::log(std::abs(1.0 + V)) + 2.0 * std::log(std::abs(C / x)));
}

/// Largest relative deviation of the invariant, evaluated with the ln R that
/// was integrated alongside (V, C), from its value at the first sample.
inline double adiabatic_variation(const GammaResult& g) {
  const double gamma = g.params.gamma();
  double ref = 0, worst = 0;
  bool first = true;
  for (const auto& s : g.samples) {
    if (s.C <= 0.0) continue;
    const double I = adiabatic_invariant(s.lnR_ode, s.x, s.V, s.C, g.derived, gamma);
    if (first) {
      ref = I;
      first = false;
      continue;
    }
    worst = std::max(worst, std::abs(I / ref - 1.0));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Physical fields

struct FlowPoint {
  double t = 0, r = 0, x = 0;
  double rho = 0, u = 0, c = 0, p = 0;
  double e = 0;        // specific internal energy c^2 / (gamma (gamma - 1))
  double entropy = 0;  // ln(p / rho^gamma) = S/c_v up to a constant
};

struct FlowField {
  std::vector<FlowPoint> points;
  double adiabatic_constant = 1.0;
};

/// Fluid state at (t, r), t <= 0. At t = 0 the collapse profile from the
/// limits nu, omega is used.
inline FlowPoint flow_point(const GammaResult& g, double t, double r, double constant = 1.0) {
  const auto& p = g.params;
  const auto& d = g.derived;
  const double lam = p.lambda(), gamma = p.gamma();
  if (!(r > 0.0) || t > 0.0) throw Error(ErrorKind::OutsideFluidRegion, "need t <= 0 < r");
  FlowPoint f;
  f.t = t;
  f.r = r;
  f.x = t / std::pow(r, lam);
  const double amp = -std::pow(r, 1.0 - lam) / lam;
  double R, Vx, Cx;
  if (t == 0.0) {
    Vx = g.nu;
    Cx = g.omega;
    R = std::pow(constant / (g.omega * g.omega), 1.0 / (1.0 - gamma + d.q));
  } else {
    if (f.x <= g.x0) throw Error(ErrorKind::OutsideFluidRegion, "r below the interface radius");
    const auto st = g.at_x(f.x);
    Vx = st.V / f.x;
    Cx = st.C / f.x;
    R = std::exp(ln_density(st.s, 1.0 + st.V, st.C, d, gamma, std::log(constant)));
  }
  f.rho = std::pow(r, p.kappa()) * R;
  f.u = amp * Vx;
  f.c = amp * Cx;
  f.p = f.rho * f.c * f.c / gamma;
  f.e = f.c * f.c / (gamma * (gamma - 1.0));
  f.entropy = std::log(f.p) - gamma * std::log(f.rho);
  return f;
}

/// Interface path r0(t) = (t / x0)^(1/lambda).
inline double interface_radius(const GammaResult& g, double t) {
  return std::pow(t / g.x0, 1.0 / g.params.lambda());
}

inline FlowField flow_field(const GammaResult& g, const std::vector<double>& t_list, const std::vector<double>& r_grid,
                            double constant = 1.0) {
  FlowField ff;
  ff.adiabatic_constant = constant;
  for (double t : t_list) {
    const double r0 = t < 0.0 ? interface_radius(g, t) : 0.0;
    for (double r : r_grid) {
      if (t < 0.0 && r <= r0) continue;
      ff.points.push_back(flow_point(g, t, r, constant));
    }
  }
  return ff;
}

// ---------------------------------------------------------------------------
// Boundary behaviour at the interface

struct LinearFit {
  double slope = 0, intercept = 0, r_squared = 0;
};

inline LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r_squared = syy == 0.0 ? 1.0 : sxy * sxy / (sxx * syy);
  return f;
}

struct ExponentFit {
  std::string quantity;
  double predicted = 0;
  double fitted = 0;
  double r_squared = 0;
  double rel_error() const { return std::abs(fitted / predicted - 1.0); }
};

struct BoundaryReport {
  double W_lo = 1e-6, W_hi = 1e-3;
  ExponentFit pressure, density, entropy;
  // -(1/rho) dp/dr at t = -1 for W = 1e-5, 1e-4, 1e-3, and its fitted W-exponent
  std::array<double, 3> acceleration{};
  double acceleration_exponent = 0;
};

inline BoundaryReport boundary_exponents(const GammaResult& g, double W_lo = 1e-6, double W_hi = 1e-3,
                                         int samples = 31) {
  const auto& p = g.params;
  const auto& d = g.derived;
  const double gamma = p.gamma();
  if (g.seg1a.empty() || W_lo < g.seg1a.y.front()[0] || W_hi > g.arrival.W()) {
    throw Error(ErrorKind::FitWindowUnresolved, "fit window is not covered by the integrated trajectory");
  }
  BoundaryReport rep;
  rep.W_lo = W_lo;
  rep.W_hi = W_hi;
  const double den = gamma - 1.0 - d.q;
  rep.pressure = {"p", gamma / den, 0, 0};
  rep.density = {"rho", (d.q + 1.0) / den, 0, 0};
  rep.entropy = {"exp(S/c_v)", -gamma * d.q / den, 0, 0};

  const double t = -1.0;
  std::vector<double> lw, lp, lr, ls;
  for (int i = 0; i < samples; ++i) {
    const double W = W_lo * std::pow(W_hi / W_lo, static_cast<double>(i) / (samples - 1));
    const auto st = g.at_W(W);
    const double r = std::pow(t / st.x, 1.0 / p.lambda());
    const auto f = flow_point(g, t, r);
    lw.push_back(std::log(W));
    lp.push_back(std::log(f.p));
    lr.push_back(std::log(f.rho));
    ls.push_back(f.entropy);
  }
  auto fill = [&](ExponentFit& e, const std::vector<double>& y) {
    const auto fit = fit_line(lw, y);
    e.fitted = fit.slope;
    e.r_squared = fit.r_squared;
  };
  fill(rep.pressure, lp);
  fill(rep.density, lr);
  fill(rep.entropy, ls);

  // Normal acceleration by centred differences in r at fixed t.
  const double r0 = interface_radius(g, t);
  std::vector<double> la, lwa;
  const std::array<double, 3> Ws{1e-5, 1e-4, 1e-3};
  for (std::size_t i = 0; i < Ws.size(); ++i) {
    const auto st = g.at_W(Ws[i]);
    const double r = std::pow(t / st.x, 1.0 / p.lambda());
    const double dr = 1e-3 * (r - r0);
    const auto fp = flow_point(g, t, r + dr), fm = flow_point(g, t, r - dr), f0 = flow_point(g, t, r);
    rep.acceleration[i] = -(fp.p - fm.p) / (2.0 * dr) / f0.rho;
    lwa.push_back(std::log(Ws[i]));
    la.push_back(std::log(std::abs(rep.acceleration[i])));
  }
  rep.acceleration_exponent = fit_line(lwa, la).slope;
  return rep;
}

/// |u - dr0/dt| / |dr0/dt| on the interface at time t < 0. u at the interface
/// is extrapolated linearly from r0 (1 + delta) and r0 (1 + 2 delta).
inline double interface_kinematics_error(const GammaResult& g, double t, double delta = 1e-6) {
  const double lam = g.params.lambda();
  const double r0 = interface_radius(g, t);
  const double u1 = flow_point(g, t, r0 * (1.0 + delta)).u;
  const double u2 = flow_point(g, t, r0 * (1.0 + 2.0 * delta)).u;
  const double u0 = 2.0 * u1 - u2;
  // r0 = (t/x0)^(1/lambda)
  const double dr0dt = r0 / (lam * t);
  return std::abs(u0 - dr0dt) / std::abs(dr0dt);
}

// ---------------------------------------------------------------------------
// Integrability at collapse

struct IntegralCheck {
  std::string name;
  double exponent = 0;  // integrand ~ A r^exponent at t = 0
  double closed_form = 0;
  std::array<double, 3> delta{1e-3, 1e-4, 1e-5};
  std::array<double, 3> total{};  // numeric on (delta, 1] plus the power-law tail
  double worst_rel_error = 0;
  bool finite = false;
};

struct IntegrabilityReport {
  std::array<IntegralCheck, 3> integrals;
  // kappa + n > 0, lambda < 1 + kappa + n, lambda < 1 + (kappa + n)/2
  std::array<Inequality, 3> exponent_conditions;
  // integral of rho ln(p/rho^gamma) r^(n-1) over (r0 (1+delta), 2 r0) at t = -1
  std::array<double, 3> entropy_integral{};
  bool pass(double tol = 0.01) const {
    for (const auto& c : exponent_conditions)
      if (!c.holds()) return false;
    for (const auto& i : integrals)
      if (!i.finite || i.worst_rel_error > tol) return false;
    return true;
  }
};

/// Adaptive Simpson on [a, b].
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double rel_tol = 1e-10,
                               int max_depth = 40) {
  std::function<double(double, double, double, double, double, double, int)> rec =
      [&](double lo, double hi, double flo, double fmid, double fhi, double whole, int depth) -> double {
    const double mid = 0.5 * (lo + hi);
    const double lm = 0.5 * (lo + mid), rm = 0.5 * (mid + hi);
    const double flm = f(lm), frm = f(rm);
    const double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
    const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * rel_tol * std::abs(left + right)) return left + right + delta / 15.0;
    return rec(lo, mid, flo, flm, fmid, left, depth - 1) + rec(mid, hi, fmid, frm, fhi, right, depth - 1);
  };
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  return rec(a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), max_depth);
}

inline IntegrabilityReport integrability_check(const GammaResult& g) {
  const auto& p = g.params;
  const double kn = p.kappa() + p.n();
  const double lam = p.lambda();
  const int m = p.n() - 1;
  IntegrabilityReport rep;
  rep.exponent_conditions = {Inequality{"0", 0.0, "kappa+n", kn}, Inequality{"lambda", lam, "1+kappa+n", 1.0 + kn},
                             Inequality{"lambda", lam, "1+(kappa+n)/2", 1.0 + 0.5 * kn}};

  using Integrand = std::function<double(const FlowPoint&)>;
  const std::array<Integrand, 3> integrands{
      [m](const FlowPoint& f) { return f.rho * std::pow(f.r, m); },
      [m](const FlowPoint& f) { return f.rho * std::abs(f.u) * std::pow(f.r, m); },
      [m](const FlowPoint& f) { return f.rho * (f.e + 0.5 * f.u * f.u) * std::pow(f.r, m); }};
  const std::array<std::string, 3> names{"mass", "momentum", "energy"};
  const std::array<double, 3> exponents{p.kappa() + m, p.kappa() + m + 1.0 - lam, p.kappa() + m + 2.0 * (1.0 - lam)};

  for (std::size_t k = 0; k < 3; ++k) {
    auto& ic = rep.integrals[k];
    ic.name = names[k];
    ic.exponent = exponents[k];
    ic.finite = ic.exponent > -1.0;
    if (!ic.finite) {
      ic.worst_rel_error = std::numeric_limits<double>::infinity();
      continue;
    }
    // integrand = A r^exponent at t = 0
    const double A = integrands[k](flow_point(g, 0.0, 1.0));
    ic.closed_form = A / (ic.exponent + 1.0);
    for (std::size_t j = 0; j < 3; ++j) {
      const double dl = ic.delta[j];
      // r = e^y
      const double numeric = adaptive_simpson(
          [&](double y) {
            const double r = std::exp(y);
            return integrands[k](flow_point(g, 0.0, r)) * r;
          },
          std::log(dl), 0.0);
      const double tail = A * std::pow(dl, ic.exponent + 1.0) / (ic.exponent + 1.0);
      ic.total[j] = numeric + tail;
      ic.worst_rel_error = std::max(ic.worst_rel_error, std::abs(ic.total[j] / ic.closed_form - 1.0));
    }
  }

  const double t = -1.0;
  const double r0 = interface_radius(g, t);
  const std::array<double, 3> deltas{1e-3, 1e-4, 1e-5};
  for (std::size_t j = 0; j < 3; ++j) {
    rep.entropy_integral[j] = adaptive_simpson(
        [&](double y) {
          const double r = r0 * (1.0 + std::exp(y));
          const auto f = flow_point(g, t, r);
          return f.rho * f.entropy * std::pow(r, m) * (r - r0);
        },
        std::log(deltas[j]), 0.0, 1e-9, 30);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Residuals

struct ResidualReport {
  double similarity_max = 0;  // scaled residual of the three similarity ODEs
  double similarity_x_at_max = 0;
  std::vector<double> h;                      // relative grid spacings
  std::vector<std::array<double, 4>> pde;     // mass, momentum, sound speed, entropy
  std::array<double, 4> pde_rate{};           // observed order between the two finest grids
};

/// Scaled residuals of the three similarity ODEs at x.
inline std::array<double, 3> similarity_residuals(const GammaResult& g, double x) {
  const auto& p = g.params;
  const auto& d = g.derived;
  const double lam = p.lambda(), gamma = p.gamma(), kn = p.kappa() + p.n();
  const auto st = g.at_x(x);
  const double V = st.V, C = st.C, W = 1.0 + V;
  const double R = std::exp(ln_density(st.s, W, C, d, gamma));
  // R'/R from the closed form
  const double dlnR = (2.0 / x - d.q * st.dV / W - 2.0 * st.dC / C) / (1.0 - gamma + d.q);
  const double dR = R * dlnR;
  const double lx = lam * x;

  std::array<double, 3> out{};
  {
    const double a = W * dR, b = R * st.dV, c = kn * R * V / lx;
    out[0] = std::abs(a + b - c) / (std::abs(a) + std::abs(b) + std::abs(c));
  }
  {
    const double a = C * C * dR, b = gamma * R * W * st.dV, c = 2.0 * R * C * st.dC;
    const double rhs = (gamma * (lam + V) * V + (p.kappa() + 2.0) * C * C) * R / lx;
    out[1] = std::abs(a + b + c - rhs) / (std::abs(a) + std::abs(b) + std::abs(c) + std::abs(rhs));
  }
  {
    const double a = 0.5 * (gamma - 1.0) * C * st.dV, b = W * st.dC;
    const double rhs = (lam + (1.0 + 0.5 * p.n() * (gamma - 1.0)) * V) * C / lx;
    out[2] = std::abs(a + b - rhs) / (std::abs(a) + std::abs(b) + std::abs(rhs));
  }
  return out;
}

/// Interior x-values for residual sampling, avoiding the interface and the
/// sharply turning stretch just after P6.
inline std::vector<double> interior_x(const GammaResult& g, int count, double edge, double gap) {
  std::vector<double> xs;
  const double lo = g.x0 + edge, hi = -edge;
  for (int i = 0; i < count; ++i) {
    const double x = lo + (hi - lo) * (i + 0.5) / count;
    if (std::abs(x - g.x6) < gap) continue;
    xs.push_back(x);
  }
  return xs;
}

/// Scaled PDE residuals at (t, r) with centred differences of relative size h.
inline std::array<double, 4> pde_residuals(const GammaResult& g, double t, double r, double h) {
  const double gamma = g.params.gamma();
  const int m = g.params.n() - 1;
  const double dt = h * std::abs(t), dr = h * r;
  const auto f0 = flow_point(g, t, r);
  const auto ft1 = flow_point(g, t + dt, r), ft0 = flow_point(g, t - dt, r);
  const auto fr1 = flow_point(g, t, r + dr), fr0 = flow_point(g, t, r - dr);
  auto Dt = [&](auto get) { return (get(ft1) - get(ft0)) / (2.0 * dt); };
  auto Dr = [&](auto get) { return (get(fr1) - get(fr0)) / (2.0 * dr); };
  auto rho = [](const FlowPoint& f) { return f.rho; };
  auto u = [](const FlowPoint& f) { return f.u; };
  auto c = [](const FlowPoint& f) { return f.c; };
  auto rc2 = [](const FlowPoint& f) { return f.rho * f.c * f.c; };
  auto S = [](const FlowPoint& f) { return f.entropy; };

  const double div = Dr(u) + m * f0.u / r;
  std::array<double, 4> out{};
  {
    const double a = Dt(rho), b = f0.u * Dr(rho), c2 = f0.rho * div;
    out[0] = std::abs(a + b + c2) / (std::abs(a) + std::abs(b) + std::abs(c2));
  }
  {
    const double a = Dt(u), b = f0.u * Dr(u), c2 = Dr(rc2) / (gamma * f0.rho);
    out[1] = std::abs(a + b + c2) / (std::abs(a) + std::abs(b) + std::abs(c2));
  }
  {
    const double a = Dt(c), b = f0.u * Dr(c), c2 = 0.5 * (gamma - 1.0) * f0.c * div;
    out[2] = std::abs(a + b + c2) / (std::abs(a) + std::abs(b) + std::abs(c2));
  }
  {
    const double a = Dt(S), b = f0.u * Dr(S);
    out[3] = std::abs(a + b) / (std::abs(a) + std::abs(b));
  }
  return out;
}

struct ResidualOptions {
  int similarity_samples = 400;
  double edge = 1e-2;  // distance kept from x0 and from 0
  double gap = 5e-2;   // half-width of the excluded band around x6
  std::vector<double> h{2e-2, 1e-2, 5e-3};
  std::vector<double> pde_x{-0.94, -0.9, -0.5, -0.3, -0.1};
  std::vector<double> pde_t{-1.0, -0.25};
};

inline ResidualReport residual_check(const GammaResult& g, const ResidualOptions& o = {}) {
  ResidualReport rep;
  for (double x : interior_x(g, o.similarity_samples, o.edge, o.gap)) {
    const auto r = similarity_residuals(g, x);
    const double worst = std::max({r[0], r[1], r[2]});
    if (worst > rep.similarity_max) {
      rep.similarity_max = worst;
      rep.similarity_x_at_max = x;
    }
  }

  // PDE stencils span about lambda h |x| in x; keep them clear of x6.
  std::vector<double> xs;
  const double reach = 0.2;
  const double hmax = *std::max_element(o.h.begin(), o.h.end());
  const double stretch = std::max(1.0 + hmax, std::pow(1.0 - hmax, -g.params.lambda()));
  for (double x : o.pde_x)
    if (x * stretch > g.x0 && std::abs(x - g.x6) > reach) xs.push_back(x);
  rep.h = o.h;
  for (double h : o.h) {
    std::array<double, 4> worst{};
    for (double t : o.pde_t) {
      for (double x : xs) {
        const double r = std::pow(t / x, 1.0 / g.params.lambda());
        const auto res = pde_residuals(g, t, r, h);
        for (std::size_t k = 0; k < 4; ++k) worst[k] = std::max(worst[k], res[k]);
      }
    }
    rep.pde.push_back(worst);
  }
  const std::size_t n = rep.pde.size();
  if (n >= 2) {
    const double ratio = rep.h[n - 2] / rep.h[n - 1];
    for (std::size_t k = 0; k < 4; ++k)
      rep.pde_rate[k] = std::log(rep.pde[n - 2][k] / rep.pde[n - 1][k]) / std::log(ratio);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Isentropic case

/// Largest relative variation of R^(1-gamma) (C/x)^2 along the trajectory
/// leaving P2, integrated with ln R up to W = W_end or parameter tau_end.
/// Meaningful for kappa equal to the isentropic value, where that combination
/// is conserved.
inline double isentropic_variation(const Parameters& p, double eps = 1e-6, double W_end = 0.1, double tau_end = 1e4,
                                   ode::Tolerances tol = {1e-10, 1e-12}) {
  const auto d = derive(p);
  const auto st = start_at_P2(p, d, eps);
  std::vector<ode::Event<4>> ev{{"end", [W_end](double, const Seg1State& y) { return y[0] - W_end; }, true, 1}};
  ode::Options opt;
  opt.tol = tol;
  auto f = [&](double, const Seg1State& y) { return seg1_rhs(y, p, d); };
  // ln R starts at 0; only variation matters.
  const auto res = ode::integrate<4>(f, 0.0, Seg1State{st.W, st.C, st.s, 0.0}, tau_end, opt, ev);
  if (res.sol.y.back()[0] < 1e2 * eps) throw Error(ErrorKind::DomainExit, "trajectory did not leave P2");
  double ref = 0, worst = 0;
  for (std::size_t i = 0; i < res.sol.y.size(); ++i) {
    const auto& y = res.sol.y[i];
    const double x = -std::exp(-y[2]);
    const double v = std::exp((1.0 - p.gamma()) * y[3] + 2.0 * std::log(y[1] / std::abs(x)));
    if (i == 0) ref = v;
    else worst = std::max(worst, std::abs(v / ref - 1.0));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Verification summary

struct Check {
  std::string name;
  double value = 0;
  double tolerance = 0;
  bool pass = false;
};

struct Verification {
  std::vector<Check> checks;
  BoundaryReport boundary;
  IntegrabilityReport integrability;
  ResidualReport residuals;
  double adiabatic = 0;
  double kinematics = 0;

  bool pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return !checks.empty();
  }
};

/// Runs every physical check on g (density must already be filled).
inline Verification verify(const GammaResult& g) {
  Verification v;
  auto add = [&](std::string name, double value, double tol) {
    v.checks.push_back({std::move(name), value, tol, std::isfinite(value) && value <= tol});
  };
  v.adiabatic = adiabatic_variation(g);
  add("adiabatic variation", v.adiabatic, 1e-7);

  v.boundary = boundary_exponents(g);
  add("pressure exponent rel error", v.boundary.pressure.rel_error(), 0.02);
  add("density exponent rel error", v.boundary.density.rel_error(), 0.02);
  add("entropy exponent rel error", v.boundary.entropy.rel_error(), 0.02);
  const double worst_r2 =
      std::min({v.boundary.pressure.r_squared, v.boundary.density.r_squared, v.boundary.entropy.r_squared});
  add("exponent fit 1 - R^2", 1.0 - worst_r2, 1e-3);
  add("acceleration exponent", std::abs(v.boundary.acceleration_exponent), 0.02);
  const double acc = v.boundary.acceleration[0];
  add("acceleration not toward cavity", acc < 0.0 && std::isfinite(acc) ? 0.0 : 1.0, 0.0);

  for (double t : {-1.0, -0.1, -1e-3}) v.kinematics = std::max(v.kinematics, interface_kinematics_error(g, t));
  add("interface kinematics", v.kinematics, 1e-6);

  v.integrability = integrability_check(g);
  double worst_int = 0;
  for (const auto& i : v.integrability.integrals)
    worst_int = std::max(worst_int, i.finite ? i.worst_rel_error : std::numeric_limits<double>::infinity());
  for (const auto& c : v.integrability.exponent_conditions)
    if (!c.holds()) worst_int = std::numeric_limits<double>::infinity();
  add("integrability tail mismatch", worst_int, 0.01);

  v.residuals = residual_check(g);
  add("similarity residual", v.residuals.similarity_max, 1e-6);
  double worst_rate = 0;
  for (double r : v.residuals.pde_rate) worst_rate = std::max(worst_rate, std::abs(r - 2.0));
  add("PDE rate |order - 2|", worst_rate, 0.2);
  return v;
}

}  // namespace cavity
