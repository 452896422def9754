#include <cmath>
#include <map>

#include <gtest/gtest.h>

#include "cavity/reconstruct.hpp"
#include "oracle.hpp"

using namespace cavity;

namespace {

GammaResult& built(std::size_t i) {
  static std::map<std::size_t, GammaResult> cache;
  auto it = cache.find(i);
  if (it == cache.end()) {
    it = cache.emplace(i, build_gamma(presets()[i].params)).first;
    density_from_adiabatic(it->second);
  }
  return it->second;
}

class FieldPreset : public ::testing::TestWithParam<std::size_t> {};

std::string preset_name(const ::testing::TestParamInfo<std::size_t>& info) {
  return std::string(presets()[info.param].id);
}

// Interface exponents written out from gamma and q.
struct Predicted {
  double p, rho, entropy;
};

Predicted predicted(const oracle::Case& c) {
  const auto k = oracle::consts(c);
  const double g = static_cast<double>(c.gamma), q = static_cast<double>(k.q);
  return {g / (g - 1 - q), (q + 1) / (g - 1 - q), -g * q / (g - 1 - q)};
}

}  // namespace

TEST(Density, Case1InterfaceExponentValue) {
  const auto e = predicted(oracle::kCases[0]);
  EXPECT_NEAR(e.rho, 1.16499 / 0.50167, 1e-4);
  EXPECT_NEAR(e.rho, 2.32222, 1e-5);
  EXPECT_NEAR(e.p, 3.32222, 1e-5);
  EXPECT_LT(e.entropy, 0.0);
}

TEST(Density, RejectsNonpositiveConstantAndZeroC) {
  auto g = built(0);
  EXPECT_THROW(density_from_adiabatic(g, 0.0), Error);
  EXPECT_THROW(density(-0.5, -0.5, 0.0, g.derived, g.params.gamma()), Error);
}

TEST_P(FieldPreset, DensityMatchesClosedForm) {
  const auto& g = built(GetParam());
  const auto& c = oracle::kCases[GetParam()];
  const auto k = oracle::consts(c);
  for (std::size_t i = 0; i < g.samples.size(); i += 7) {
    const auto& s = g.samples[i];
    const oracle::ld rhs = s.x * s.x / (std::pow(std::abs(1 + static_cast<oracle::ld>(s.V)), k.q) * s.C * s.C);
    const double R = static_cast<double>(std::pow(rhs, 1 / (1 - c.gamma + k.q)));
    EXPECT_NEAR(s.R / R, 1.0, 1e-12);
    EXPECT_GT(s.R, 0.0);
  }
}

TEST_P(FieldPreset, AdiabaticIntegralConstantAlongGamma) {
  EXPECT_LT(adiabatic_variation(built(GetParam())), 1e-7);
}

TEST_P(FieldPreset, GaugeCovariance) {
  const auto& g = built(GetParam());
  const double a = 3.7;
  const double factor = std::pow(a, 1.0 / (1.0 - g.params.gamma() + g.derived.q));
  for (double t : {-1.0, -0.3}) {
    const double r0 = interface_radius(g, t);
    for (double r : {r0 * 1.01, r0 * 1.5, r0 * 4.0}) {
      const auto f1 = flow_point(g, t, r, 1.0), fa = flow_point(g, t, r, a);
      EXPECT_NEAR(fa.rho / f1.rho, factor, 1e-12 * factor);
      EXPECT_NEAR(fa.p / f1.p, factor, 1e-12 * factor);
      EXPECT_EQ(fa.u, f1.u);
      EXPECT_EQ(fa.c, f1.c);
    }
  }
}

TEST_P(FieldPreset, FieldSignsAndPositivity) {
  const auto& g = built(GetParam());
  const double t = -0.5;
  const double r0 = interface_radius(g, t);
  EXPECT_NEAR(r0, std::pow(0.5, 1.0 / g.params.lambda()), 1e-15);
  for (int i = 1; i <= 200; ++i) {
    const double r = r0 * std::pow(50.0, i / 200.0);
    const auto f = flow_point(g, t, r);
    const auto st = g.at_x(f.x);
    EXPECT_GT(f.rho, 0.0);
    EXPECT_GE(f.p, 0.0);
    EXPECT_TRUE(std::isfinite(f.u) && std::isfinite(f.c));
    if (st.V != 0.0) EXPECT_EQ(f.u < 0.0, st.V / st.x > 0.0) << r;
    EXPECT_NEAR(f.e, f.c * f.c / (g.params.gamma() * (g.params.gamma() - 1.0)), 1e-14 * (1 + f.e));
  }
  EXPECT_THROW(flow_point(g, t, 0.99 * r0), Error);
  EXPECT_THROW(flow_point(g, 0.5, 1.0), Error);
}

TEST_P(FieldPreset, PressureVanishesAtInterface) {
  const auto& g = built(GetParam());
  const double t = -1.0;
  const double r0 = interface_radius(g, t);
  double prev = flow_point(g, t, r0 * 1.1).p;
  for (double dr : {1e-2, 1e-3, 1e-4, 1e-5}) {
    const double p = flow_point(g, t, r0 * (1 + dr)).p;
    EXPECT_LT(p, prev);
    prev = p;
  }
  EXPECT_LT(prev, 1e-9);
}

TEST_P(FieldPreset, InterfaceIsMaterialSurface) {
  const auto& g = built(GetParam());
  for (double t : {-1.0, -0.3, -0.01, -1e-3}) EXPECT_LT(interface_kinematics_error(g, t), 1e-6) << t;
}

TEST_P(FieldPreset, CollapseProfile) {
  const auto& g = built(GetParam());
  const double lam = g.params.lambda();
  for (double r : {0.01, 0.1, 0.5, 1.0}) {
    const auto f = flow_point(g, 0.0, r);
    EXPECT_NEAR(f.u, -(g.nu / lam) * std::pow(r, 1 - lam), 1e-13 * std::abs(f.u));
    EXPECT_NEAR(f.c, -(g.omega / lam) * std::pow(r, 1 - lam), 1e-13 * std::abs(f.c));
    EXPECT_GT(f.c, 0.0);
  }
  // the t < 0 field approaches the collapse profile
  const auto near = flow_point(g, -1e-9, 0.5), at = flow_point(g, 0.0, 0.5);
  EXPECT_NEAR(near.u, at.u, 1e-5 * std::abs(at.u));
  EXPECT_NEAR(near.c, at.c, 1e-5 * std::abs(at.c));
}

TEST_P(FieldPreset, BoundaryExponents) {
  const auto& g = built(GetParam());
  const auto e = predicted(oracle::kCases[GetParam()]);
  const auto b = boundary_exponents(g);
  EXPECT_NEAR(b.pressure.predicted, e.p, 1e-12);
  EXPECT_NEAR(b.density.predicted, e.rho, 1e-12);
  EXPECT_NEAR(b.entropy.predicted, e.entropy, 1e-12);
  EXPECT_LT(b.pressure.rel_error(), 0.02);
  EXPECT_LT(b.density.rel_error(), 0.02);
  EXPECT_LT(b.entropy.rel_error(), 0.02);
  for (const auto* f : {&b.pressure, &b.density, &b.entropy}) EXPECT_GT(f->r_squared, 0.999);
  for (double a : b.acceleration) {
    EXPECT_TRUE(std::isfinite(a));
    EXPECT_LT(a, 0.0);
  }
  EXPECT_LT(std::abs(b.acceleration_exponent), 0.02);
}

TEST(Boundary, UnresolvedWindowReported) {
  try {
    boundary_exponents(built(0), 1e-20, 1e-19);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::FitWindowUnresolved);
  }
}

TEST_P(FieldPreset, IntegrableAtCollapse) {
  const auto& g = built(GetParam());
  const auto r = integrability_check(g);
  EXPECT_TRUE(r.pass());
  const double n = g.params.n(), k = g.params.kappa(), lam = g.params.lambda();
  EXPECT_NEAR(r.integrals[0].exponent, k + n - 1, 1e-14);
  EXPECT_NEAR(r.integrals[1].exponent, k + n - 1 + 1 - lam, 1e-14);
  EXPECT_NEAR(r.integrals[2].exponent, k + n - 1 + 2 * (1 - lam), 1e-14);
  for (const auto& i : r.integrals) {
    EXPECT_GT(i.exponent, -1.0);
    EXPECT_LT(i.worst_rel_error, 0.01);
  }
  for (double e : r.entropy_integral) EXPECT_TRUE(std::isfinite(e));
  EXPECT_NEAR(r.entropy_integral[1], r.entropy_integral[2], 1e-3 * (1 + std::abs(r.entropy_integral[2])));
}

TEST(Integrability, Case1EnergyExponent) {
  const auto r = integrability_check(built(0));
  EXPECT_NEAR(r.integrals[2].exponent, 1.49, 1e-12);
}

TEST_P(FieldPreset, SimilarityAndPdeResiduals) {
  const auto& g = built(GetParam());
  const auto r = residual_check(g);
  EXPECT_LT(r.similarity_max, 1e-6);
  ASSERT_EQ(r.pde.size(), 3u);
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_NEAR(r.pde_rate[k], 2.0, 0.2) << k;
    EXPECT_LT(r.pde[2][k], r.pde[0][k]);
  }
}

TEST_P(FieldPreset, IsentropicLimitConservesReducedIntegral) {
  auto p = presets()[GetParam()].params;
  p.sim.kappa = derive(p).kappa_bar;
  EXPECT_LT(isentropic_variation(p), 1e-6);
}

TEST_P(FieldPreset, VerificationSummaryPasses) {
  const auto v = verify(built(GetParam()));
  for (const auto& c : v.checks) EXPECT_TRUE(c.pass) << c.name << " = " << c.value;
  EXPECT_TRUE(v.pass());
}

TEST(Fit, ExactLine) {
  const auto f = fit_line({0, 1, 2, 3}, {1, 3, 5, 7});
  EXPECT_DOUBLE_EQ(f.slope, 2.0);
  EXPECT_DOUBLE_EQ(f.intercept, 1.0);
  EXPECT_DOUBLE_EQ(f.r_squared, 1.0);
}

TEST(Quadrature, AdaptiveSimpsonPowerLaw) {
  EXPECT_NEAR(adaptive_simpson([](double r) { return std::pow(r, 1.49); }, 0.0, 1.0), 1.0 / 2.49, 1e-9);
}

INSTANTIATE_TEST_SUITE_P(Presets, FieldPreset, ::testing::Range<std::size_t>(0, 6), preset_name);
