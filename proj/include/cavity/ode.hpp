#pragma once

// Dormand-Prince 5(4) with dense output and event location.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "cavity/error.hpp"

namespace cavity::ode {

template <std::size_t N>
using State = std::array<double, N>;

struct Tolerances {
  double rtol = 1e-10;
  double atol = 1e-12;
};

struct Options {
  Tolerances tol;
  double h0 = 0.0;  // 0 selects an initial step automatically
  double hmax = std::numeric_limits<double>::infinity();
  std::size_t max_steps = 200000;
};

/// One accepted step with its quartic interpolant.
template <std::size_t N>
struct DenseStep {
  double t0 = 0, h = 0;
  std::array<State<N>, 5> rc{};

  State<N> eval(double t) const {
    const double th = (t - t0) / h;
    const double th1 = 1.0 - th;
    State<N> y;
    for (std::size_t i = 0; i < N; ++i)
      y[i] = rc[0][i] + th * (rc[1][i] + th1 * (rc[2][i] + th * (rc[3][i] + th1 * rc[4][i])));
    return y;
  }

  State<N> derivative(double t) const {
    const double th = (t - t0) / h;
    const double th1 = 1.0 - th;
    State<N> dy;
    for (std::size_t i = 0; i < N; ++i) {
      const double a = rc[3][i] + th1 * rc[4][i];
      const double da = -rc[4][i];
      const double b = rc[2][i] + th * a;
      const double db = a + th * da;
      const double c = rc[1][i] + th1 * b;
      const double dc = -b + th1 * db;
      dy[i] = (c + th * dc) / h;
    }
    return dy;
  }
};

/// Continuous solution on [t_front, t_back] assembled from accepted steps.
template <std::size_t N>
struct Solution {
  std::vector<DenseStep<N>> steps;
  std::vector<double> t;        // step endpoints, t[0] is the start
  std::vector<State<N>> y;      // states at those endpoints

  bool empty() const { return steps.empty(); }
  double t_front() const { return t.front(); }
  double t_back() const { return t.back(); }

  const DenseStep<N>& step_at(double tt) const {
    // t is monotone in the direction of integration
    const bool fwd = t.back() >= t.front();
    auto it = fwd ? std::upper_bound(t.begin(), t.end(), tt)
                  : std::upper_bound(t.begin(), t.end(), tt, std::greater<double>());
    std::size_t i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - t.begin() - 1, 0));
    i = std::min(i, steps.size() - 1);
    return steps[i];
  }

  State<N> eval(double tt) const { return step_at(tt).eval(tt); }
  State<N> derivative(double tt) const { return step_at(tt).derivative(tt); }

  /// Drops everything after tt, truncating the last step's interval.
  void truncate(double tt, const State<N>& ytt) {
    const bool fwd = t.back() >= t.front();
    while (steps.size() > 1 && (fwd ? steps.back().t0 >= tt : steps.back().t0 <= tt)) {
      steps.pop_back();
      t.pop_back();
      y.pop_back();
    }
    t.back() = tt;
    y.back() = ytt;
  }
};

template <std::size_t N>
struct Event {
  std::string name;
  std::function<double(double, const State<N>&)> g;
  bool terminal = true;
  int direction = 0;  // +1: only - to +, -1: only + to -, 0: either
};

struct EventHit {
  std::size_t index = 0;
  std::string name;
  double t = 0;
  bool terminal = false;
};

template <std::size_t N>
struct Result {
  Solution<N> sol;
  std::vector<EventHit> hits;
  std::optional<EventHit> stop;  // the terminal event, if any fired
  std::size_t rejected = 0;
};

namespace detail {

template <std::size_t N>
double err_norm(const State<N>& e, const State<N>& y0, const State<N>& y1, const Tolerances& tol) {
  double s = 0;
  for (std::size_t i = 0; i < N; ++i) {
    const double sk = tol.atol + tol.rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    s += (e[i] / sk) * (e[i] / sk);
  }
  return std::sqrt(s / N);
}

}  // namespace detail

/// Integrates y' = f(t, y) from t0 toward t_end. Stops at t_end or at the first
/// terminal event, located by bisection on the dense output.
template <std::size_t N, class Rhs>
Result<N> integrate(Rhs&& f, double t0, const State<N>& y0, double t_end, const Options& opt,
                    const std::vector<Event<N>>& events = {}) {
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                   a76 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                   e6 = 22.0 / 525, e7 = -1.0 / 40;
  constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                   d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                   d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

  Result<N> res;
  const double dir = t_end >= t0 ? 1.0 : -1.0;
  const double span = std::abs(t_end - t0);
  if (span == 0.0) {
    res.sol.t.push_back(t0);
    res.sol.y.push_back(y0);
    return res;
  }

  State<N> y = y0, k1, k2, k3, k4, k5, k6, k7, ytmp, y1, err;
  double t = t0;
  k1 = f(t, y);

  auto axpy = [](State<N>& out, const State<N>& base, double h, std::initializer_list<std::pair<double, const State<N>*>> terms) {
    for (std::size_t i = 0; i < N; ++i) {
      double acc = 0;
      for (const auto& [c, k] : terms) acc += c * (*k)[i];
      out[i] = base[i] + h * acc;
    }
  };

  double h = opt.h0;
  if (h <= 0.0) {
    // Hairer's starting-step heuristic
    double dnf = 0, dny = 0;
    for (std::size_t i = 0; i < N; ++i) {
      const double sk = opt.tol.atol + opt.tol.rtol * std::abs(y[i]);
      dnf += (k1[i] / sk) * (k1[i] / sk);
      dny += (y[i] / sk) * (y[i] / sk);
    }
    h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
    h = std::min(h, span);
    for (std::size_t i = 0; i < N; ++i) ytmp[i] = y[i] + dir * h * k1[i];
    k2 = f(t + dir * h, ytmp);
    double der2 = 0;
    for (std::size_t i = 0; i < N; ++i) {
      const double sk = opt.tol.atol + opt.tol.rtol * std::abs(y[i]);
      der2 += ((k2[i] - k1[i]) / sk) * ((k2[i] - k1[i]) / sk);
    }
    der2 = std::sqrt(der2) / h;
    const double der12 = std::max(std::abs(der2), std::sqrt(dnf));
    const double h1 = der12 <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / der12, 0.2);
    h = std::min({100.0 * h, h1, span});
  }
  h = std::min(h, opt.hmax);

  res.sol.t.push_back(t);
  res.sol.y.push_back(y);

  std::vector<double> gprev(events.size());
  for (std::size_t e = 0; e < events.size(); ++e) gprev[e] = events[e].g(t, y);

  const double safe = 0.9, beta = 0.04, expo1 = 0.2 - beta * 0.75;
  double facold = 1e-4;
  bool last_rejected = false;

  for (std::size_t step = 0; step < opt.max_steps; ++step) {
    const double remaining = dir * (t_end - t);
    if (remaining <= 0.0) return res;
    bool final_step = false;
    if (h >= remaining) {
      h = remaining;
      final_step = true;
    }
    if (h < 1e-15 * std::max(1.0, std::abs(t))) {
      throw Error(ErrorKind::StepUnderflow, "step " + std::to_string(h) + " at t = " + std::to_string(t));
    }
    const double hs = dir * h;

    axpy(ytmp, y, hs, {{a21, &k1}});
    k2 = f(t + c2 * hs, ytmp);
    axpy(ytmp, y, hs, {{a31, &k1}, {a32, &k2}});
    k3 = f(t + c3 * hs, ytmp);
    axpy(ytmp, y, hs, {{a41, &k1}, {a42, &k2}, {a43, &k3}});
    k4 = f(t + c4 * hs, ytmp);
    axpy(ytmp, y, hs, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}});
    k5 = f(t + c5 * hs, ytmp);
    axpy(ytmp, y, hs, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}});
    k6 = f(t + hs, ytmp);
    axpy(y1, y, hs, {{a71, &k1}, {a73, &k3}, {a74, &k4}, {a75, &k5}, {a76, &k6}});
    const double t1 = final_step ? t_end : t + hs;
    k7 = f(t1, y1);
    axpy(err, State<N>{}, hs, {{e1, &k1}, {e3, &k3}, {e4, &k4}, {e5, &k5}, {e6, &k6}, {e7, &k7}});

    bool finite = true;
    for (std::size_t i = 0; i < N; ++i) finite = finite && std::isfinite(y1[i]);
    const double en = finite ? detail::err_norm(err, y, y1, opt.tol) : 1e10;
    const double fac11 = std::pow(en, expo1);

    if (en > 1.0) {
      ++res.rejected;
      h /= std::min(5.0, fac11 / safe);
      last_rejected = true;
      continue;
    }

    DenseStep<N> ds;
    ds.t0 = t;
    ds.h = t1 - t;
    for (std::size_t i = 0; i < N; ++i) {
      const double ydiff = y1[i] - y[i];
      const double bspl = ds.h * k1[i] - ydiff;
      ds.rc[0][i] = y[i];
      ds.rc[1][i] = ydiff;
      ds.rc[2][i] = bspl;
      ds.rc[3][i] = ydiff - ds.h * k7[i] - bspl;
      ds.rc[4][i] = ds.h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
    }
    res.sol.steps.push_back(ds);
    res.sol.t.push_back(t1);
    res.sol.y.push_back(y1);

    // Earliest sign change among the events within this step.
    std::optional<std::pair<std::size_t, double>> first;
    for (std::size_t e = 0; e < events.size(); ++e) {
      const double g1 = events[e].g(t1, y1);
      const double g0 = gprev[e];
      gprev[e] = g1;
      const bool up = g0 < 0.0 && g1 >= 0.0;
      const bool down = g0 > 0.0 && g1 <= 0.0;
      if (!((up && events[e].direction >= 0) || (down && events[e].direction <= 0))) continue;
      double lo = t, hi = t1, glo = g0;
      for (int it = 0; it < 200 && std::abs(hi - lo) > 1e-12 * std::max(1.0, std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double gm = events[e].g(mid, ds.eval(mid));
        if ((gm < 0.0) == (glo < 0.0) && gm != 0.0) {
          lo = mid;
          glo = gm;
        } else {
          hi = mid;
        }
      }
      res.hits.push_back({e, events[e].name, hi, events[e].terminal});
      if (events[e].terminal && (!first || dir * (hi - first->second) < 0.0)) first = {{e, hi}};
    }
    if (first) {
      const auto [e, te] = *first;
      res.sol.truncate(te, ds.eval(te));
      res.stop = EventHit{e, events[e].name, te, true};
      // later non-terminal hits are beyond the stop
      std::vector<EventHit> kept;
      for (const auto& hit : res.hits)
        if (dir * (hit.t - te) <= 0.0) kept.push_back(hit);
      res.hits = kept;
      return res;
    }

    double fac = fac11 / std::pow(facold, beta);
    fac = std::clamp(fac / safe, 0.2, 10.0);
    double hnew = h / fac;
    if (last_rejected) hnew = std::min(hnew, h);
    facold = std::max(en, 1e-4);
    last_rejected = false;

    t = t1;
    y = y1;
    k1 = k7;
    h = std::min(hnew, opt.hmax);
    if (final_step) return res;
  }
  throw Error(ErrorKind::StepUnderflow, "maximum number of steps exceeded");
}

}  // namespace cavity::ode
