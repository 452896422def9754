#pragma once

// Problem parameters (n, gamma, lambda, kappa), every constant derived from
// them, and the purely algebraic admissibility conditions (A)-(F).

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cavity/error.hpp"

namespace cavity {

struct GasParams {
  int n = 3;            // spatial dimension, 2 or 3
  double gamma = 5.0 / 3.0;  // adiabatic index
};

struct SimilarityParams {
  double lambda = 1.25;  // x = t / r^lambda
  double kappa = -0.01;  // rho = r^kappa R(x)
};

struct Parameters {
  GasParams gas;
  SimilarityParams sim;

  int n() const { return gas.n; }
  double gamma() const { return gas.gamma; }
  double lambda() const { return sim.lambda; }
  double kappa() const { return sim.kappa; }
};

struct DerivedConstants {
  double mu = 0;         // lambda - 1
  double alpha = 0;      // coefficient of the 1/(1+V) pole in F
  double q = 0;          // exponent in the adiabatic integral
  double sigma = 0;      // slope of the admissible ray at P2 in (W, Z)
  double kappa_bar = 0;  // isentropic kappa
  double k1 = 0, k2 = 0, k3 = 0;
  double V_star = 0;     // vertical asymptote of {G = 0}
  double W_star = 0;     // 1 + V_star
  int m = 0;             // n - 1
  double K = 0;          // prefactor of the P6 Wronskian
  double a_vert = 0;     // Z ~ W^a along a vertical approach to P2
  double b_vert = 0;     // p ~ W^b along that approach; identically zero
};

/// Evaluates all closed-form constants. Accepts lambda <= 1 so that condition
/// (A) can report the failure rather than the constructor.
inline DerivedConstants derive(const GasParams& gas, const SimilarityParams& sim) {
  if (gas.n != 2 && gas.n != 3) {
    throw Error(ErrorKind::InvalidParameters, "n must be 2 or 3, got " + std::to_string(gas.n));
  }
  if (!(gas.gamma > 1.0) || !std::isfinite(gas.gamma)) {
    throw Error(ErrorKind::InvalidParameters, "gamma must be > 1");
  }
  if (!std::isfinite(sim.lambda) || !std::isfinite(sim.kappa)) {
    throw Error(ErrorKind::InvalidParameters, "lambda and kappa must be finite");
  }
  const double n = gas.n;
  const double g = gas.gamma;
  const double lam = sim.lambda;
  const double kap = sim.kappa;
  if (kap + n == 0.0) {
    throw Error(ErrorKind::InvalidParameters, "kappa + n must be nonzero");
  }

  DerivedConstants d;
  d.mu = lam - 1.0;
  d.alpha = (d.mu + 0.5 * kap * (g - 1.0)) / g;
  d.q = (kap * (g - 1.0) + 2.0 * d.mu) / (kap + n);
  d.sigma = g * d.mu / (kap + n);
  d.kappa_bar = -2.0 * d.mu / (g - 1.0);
  d.k1 = 1.0 + 0.5 * (n - 1.0) * (g - 1.0);
  d.k2 = 0.5 * ((n - 1.0) * (g - 1.0) + (g - 3.0) * d.mu);
  d.k3 = 0.5 * (g - 1.0) * d.mu;
  d.V_star = (kap - 2.0 * d.mu) / (n * g);
  d.W_star = 1.0 + d.V_star;
  d.m = gas.n - 1;
  d.K = d.m * (n * (g - 1.0) + 2.0);
  d.a_vert = (2.0 * d.mu + kap * (g - 1.0)) / (2.0 * d.mu - kap - n * g);
  d.b_vert = (d.a_vert * g + (1.0 - d.a_vert) * d.q) / (g - 1.0 - d.q);
  return d;
}

inline DerivedConstants derive(const Parameters& p) { return derive(p.gas, p.sim); }

// ---------------------------------------------------------------------------
// Condition reports

/// One strict inequality lhs < rhs.
struct Inequality {
  std::string lhs_label;
  double lhs = 0;
  std::string rhs_label;
  double rhs = 0;

  bool holds() const { return lhs < rhs; }
  double margin() const { return rhs - lhs; }
};

struct ConditionResult {
  std::string id;  // "A" ... "J"
  std::string description;
  bool evaluable = true;
  std::vector<Inequality> parts;
  std::string note;

  bool pass() const {
    if (!evaluable || parts.empty()) return false;
    for (const auto& p : parts)
      if (!p.holds()) return false;
    return true;
  }

  /// Smallest distance from an inequality boundary; negative when violated.
  double margin() const {
    if (!evaluable || parts.empty()) return std::numeric_limits<double>::quiet_NaN();
    double m = std::numeric_limits<double>::infinity();
    for (const auto& p : parts) m = std::min(m, p.margin());
    return m;
  }
};

struct ConditionReport {
  std::vector<ConditionResult> conditions;

  bool all_pass() const {
    if (conditions.empty()) return false;
    for (const auto& c : conditions)
      if (!c.pass()) return false;
    return true;
  }

  const ConditionResult* find(std::string_view id) const {
    for (const auto& c : conditions)
      if (c.id == id) return &c;
    return nullptr;
  }

  void append(const ConditionReport& other) {
    conditions.insert(conditions.end(), other.conditions.begin(), other.conditions.end());
  }
};

/// phi(W) = 2 k1 W^3 + (3 alpha k1 - k2) W^2 - 2 alpha k2 W + alpha k3; f'(W) > 0 iff phi(W) > 0.
inline double f_slope_numerator(const DerivedConstants& d, double W) {
  return ((2.0 * d.k1 * W + (3.0 * d.alpha * d.k1 - d.k2)) * W - 2.0 * d.alpha * d.k2) * W +
         d.alpha * d.k3;
}

/// psi(W) = 2W^3 + (mu - 1 - 3W*) W^2 - 2(mu - 1) W* W + mu W*; g'(W) > 0 iff psi(W) > 0.
inline double g_slope_numerator(const DerivedConstants& d, double W) {
  const double ws = d.W_star;
  return ((2.0 * W + (d.mu - 1.0 - 3.0 * ws)) * W - 2.0 * (d.mu - 1.0) * ws) * W + d.mu * ws;
}

inline ConditionReport check_algebraic_conditions(const Parameters& p, const DerivedConstants& d) {
  const double n = p.n();
  const double g = p.gamma();
  const double kap = p.kappa();
  ConditionReport r;

  r.conditions.push_back({"A", "locally finite mass, momentum and energy at collapse", true,
                          {{"0", 0.0, "mu", d.mu}, {"mu", d.mu, "(kappa+n)/2", 0.5 * (kap + n)}},
                          ""});
  r.conditions.push_back(
      {"B", "pressure vanishes at the interface", true, {{"mu", d.mu, "n(gamma-1)/2", 0.5 * n * (g - 1.0)}}, ""});
  r.conditions.push_back(
      {"C", "non-isentropic with alpha > 0", true, {{"kappa_bar", d.kappa_bar, "kappa", kap}}, ""});
  r.conditions.push_back({"D", "k2 > 0", true, {{"0", 0.0, "k2", d.k2}}, ""});

  const double w_plus = d.k2 / (3.0 * d.k1);
  const double phi_min = -d.k2 * d.k2 * d.k2 / (27.0 * d.k1 * d.k1) -
                         d.alpha * d.k2 * d.k2 / (3.0 * d.k1) + d.alpha * d.k3;
  ConditionResult e{"E", "{F=0} is the graph of an increasing function", true,
                    {{"0", 0.0, "phi(W+)", phi_min}}, ""};
  e.note = "W+ = " + std::to_string(w_plus);
  r.conditions.push_back(e);

  const double ws = d.W_star;
  const double psi = ws * (-ws * ws + (1.0 - d.mu) * ws + d.mu);
  r.conditions.push_back({"F", "{G=0} branches are graphs of increasing functions", true,
                          {{"kappa", kap, "2mu", 2.0 * d.mu},
                           {"(1-mu)/3", (1.0 - d.mu) / 3.0, "W*", ws},
                           {"0", 0.0, "psi(W*)", psi}},
                          ""});
  return r;
}

// ---------------------------------------------------------------------------
// Parsing and presets

/// Parses a decimal literal or a ratio "a/b" of decimal literals.
inline std::optional<double> parse_number(std::string_view text) {
  auto trim = [](std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
  };
  auto one = [](std::string_view s) -> std::optional<double> {
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
  };
  text = trim(text);
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) return one(text);
  auto num = one(trim(text.substr(0, slash)));
  auto den = one(trim(text.substr(slash + 1)));
  if (!num || !den || *den == 0.0) return std::nullopt;
  return *num / *den;
}

struct Preset {
  std::string_view id;
  Parameters params;
};

inline const std::array<Preset, 6>& presets() {
  static const std::array<Preset, 6> table{{
      {"case1", {{3, 5.0 / 3.0}, {1.25, -0.01}}},
      {"case2", {{3, 7.0 / 5.0}, {1.16, -0.01}}},
      {"case3", {{3, 3.0}, {1.6, 0.9}}},
      {"case4", {{2, 5.0 / 3.0}, {1.09, -0.01}}},
      {"case5", {{2, 7.0 / 5.0}, {1.06, -0.01}}},
      {"case6", {{2, 3.0}, {1.28, -0.01}}},
  }};
  return table;
}

inline std::optional<Parameters> find_preset(std::string_view id) {
  for (const auto& p : presets())
    if (p.id == id) return p.params;
  return std::nullopt;
}

}  // namespace cavity
