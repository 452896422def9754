#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "cavity/phaseplane.hpp"
#include "oracle.hpp"

using namespace cavity;

namespace {

Parameters from(const oracle::Case& c) {
  return {{c.n, static_cast<double>(c.gamma)}, {static_cast<double>(c.lambda), static_cast<double>(c.kappa)}};
}

const oracle::Case& case1() { return oracle::kCases[0]; }

}  // namespace

TEST(Rhs, MatchesOracleAtRandomPoints) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> uv(-0.99, 1.5), uc(0.0, 2.0);
  for (const auto& c : oracle::kCases) {
    const auto p = from(c);
    const auto d = derive(p);
    for (int i = 0; i < 200; ++i) {
      const double V = uv(rng), C = uc(rng);
      const auto r = eval_rhs({V, C}, p, d);
      const double F = static_cast<double>(oracle::F(c, V, C));
      const double G = static_cast<double>(oracle::G(c, V, C));
      EXPECT_NEAR(r.F, F, 1e-13 * (1 + std::abs(F)));
      EXPECT_NEAR(r.G, G, 1e-13 * (1 + std::abs(G)));
      EXPECT_NEAR(r.D, static_cast<double>(oracle::D(V, C)), 1e-14);
    }
  }
}

TEST(Rhs, VanishesAtP1AndP2) {
  const auto p = from(case1());
  const auto d = derive(p);
  const auto r1 = eval_rhs({0.0, 0.0}, p, d);
  EXPECT_EQ(r1.D, 1.0);
  EXPECT_EQ(r1.G, 0.0);
  EXPECT_EQ(r1.F, 0.0);
  const auto r2 = eval_rhs({-1.0, 0.0}, p, d);
  EXPECT_EQ(r2.D, 0.0);
  EXPECT_EQ(r2.G, 0.0);
  EXPECT_EQ(r2.F, 0.0);
}

TEST(Rhs, PoleAtMinusOneWithPositiveC) {
  const auto p = from(case1());
  try {
    eval_rhs({-1.0, 0.3}, p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Pole);
  }
}

TEST(SonicIdentity, HoldsOnBothLines) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> uv(-1.0, 2.0);
  for (const auto& c : oracle::kCases) {
    const auto p = from(c);
    const auto d = derive(p);
    const double h = 0.5 * (p.gamma() - 1.0);
    for (int i = 0; i < 100; ++i) {
      const double V = uv(rng);
      if (V == -1.0) continue;
      for (double sgn : {1.0, -1.0}) {
        const auto r = eval_rhs({V, sgn * (1.0 + V)}, p, d);
        const double res = r.F + sgn * h * r.G;
        EXPECT_LE(std::abs(res), 1e-12 * (1.0 + std::abs(r.F) + std::abs(h * r.G))) << "V=" << V;
      }
    }
  }
}

TEST(Nullclines, MatchOracle) {
  for (const auto& c : oracle::kCases) {
    const auto p = from(c);
    const auto d = derive(p);
    for (double V = -0.99; V < 1.0; V += 0.0173) {
      EXPECT_NEAR(nullcline_F(V, p, d), std::sqrt(static_cast<double>(oracle::CF2(c, V))), 1e-13);
      if (V < d.V_star || V >= 0.0)
        EXPECT_NEAR(nullcline_G(V, p, d), std::sqrt(static_cast<double>(oracle::CG2(c, V))), 1e-12);
    }
  }
}

TEST(Nullclines, EndpointsAndDomain) {
  const auto p = from(case1());
  const auto d = derive(p);
  EXPECT_EQ(nullcline_G(-1.0, p, d), 0.0);
  EXPECT_EQ(nullcline_G(0.0, p, d), 0.0);
  EXPECT_THROW(nullcline_G(-0.05, p, d), Error);
  EXPECT_THROW(nullcline_F(-1.5, p, d), Error);
  EXPECT_GT(nullcline_G(d.V_star - 1e-9, p, d), 1e3);
}

TEST(Nullclines, SlopesAtOriginAndOrdering) {
  const auto p = from(case1());
  const auto d = derive(p);
  // both curves leave W = 0 at zero; difference quotients extrapolated in h
  const double h = 1e-6;
  auto slope = [&](auto&& f) { return 2 * f(h) / h - f(2 * h) / (2 * h); };
  const double fprime = slope([&](double W) { return f_of_W(W, d); });
  const double gprime = slope([&](double W) { return g_of_W(W, p, d); });
  EXPECT_EQ(f_of_W(0.0, d), 0.0);
  EXPECT_NEAR(fprime, (1.0 / 12.0) / 0.148, 1e-8);
  EXPECT_NEAR(fprime, 0.56306, 1e-5);
  EXPECT_NEAR(gprime, 0.25 / (3 * 0.898), 1e-8);
  EXPECT_NEAR(gprime, 0.0927988, 1e-6);
  for (const auto& c : oracle::kCases) {
    const auto q = from(c);
    const auto e = derive(q);
    EXPECT_LT(0.0, e.mu / (q.n() * e.W_star));
    EXPECT_LT(e.mu / (q.n() * e.W_star), e.sigma);
    EXPECT_LT(e.sigma, e.k3 / e.alpha);
  }
}

TEST(Nullclines, MonotoneOnEachBranch) {
  for (const auto& c : oracle::kCases) {
    const auto p = from(c);
    const auto d = derive(p);
    double prev = -1.0;
    for (int i = 1; i <= 1000; ++i) {
      const double V = -1.0 + 2.0 * i / 1000.0;
      const double v = nullcline_F(V, p, d);
      EXPECT_GT(v, prev);
      prev = v;
    }
    prev = -1.0;
    for (int i = 0; i < 1000; ++i) {
      const double V = -1.0 + (d.V_star + 1.0) * i / 1000.0;
      const double v = nullcline_G(V, p, d);
      EXPECT_GT(v, prev);
      prev = v;
    }
    prev = -1.0;
    for (int i = 0; i <= 1000; ++i) {
      const double v = nullcline_G(2.0 * i / 1000.0, p, d);
      EXPECT_GT(v, prev);
      prev = v;
    }
  }
}

TEST(CriticalPoints, Case1Locations) {
  const auto p = from(case1());
  const auto d = derive(p);
  EXPECT_EQ(V4_location(p), -0.625);
  const auto roots = sonic_roots(p, d);
  const auto o = oracle::sonic_G_roots(case1());
  EXPECT_NEAR(roots.V_minus, static_cast<double>(o[0]), 1e-12);
  EXPECT_NEAR(roots.V_plus, static_cast<double>(o[1]), 1e-12);
  EXPECT_NEAR(roots.V_minus, -0.84746, 1e-4);
  EXPECT_NEAR(roots.V_plus, -0.18054, 1e-4);
  EXPECT_LT(roots.V_minus, V4_location(p));
  EXPECT_LT(V4_location(p), roots.V_plus);
  const auto pts = critical_points(p, d);
  EXPECT_EQ(find_point(pts, PointId::P3).location.V, -1.25);
  EXPECT_EQ(find_point(pts, PointId::P1).cls, PointClass::Star);
  EXPECT_EQ(find_point(pts, PointId::P2).cls, PointClass::Degenerate);
  EXPECT_EQ(find_point(pts, PointId::P6).cls, PointClass::Node);
  const auto& p4 = find_point(pts, PointId::P4);
  EXPECT_TRUE(p4.present);
  EXPECT_NEAR(eval_rhs(p4.location, p, d).G, 0.0, 1e-14);
  EXPECT_NEAR(eval_rhs(p4.location, p, d).F, 0.0, 1e-14);
}

TEST(CriticalPoints, SonicPointsLieOnTheSonicLine) {
  for (const auto& c : oracle::kCases) {
    const auto p = from(c);
    const auto d = derive(p);
    const auto o = oracle::sonic_G_roots(c);
    for (auto id : {PointId::P6, PointId::P8}) {
      const auto& cp = find_point(critical_points(p, d), id);
      ASSERT_TRUE(cp.present);
      const double V = cp.location.V, C = cp.location.C;
      EXPECT_NEAR(V, static_cast<double>(o[id == PointId::P6 ? 0 : 1]), 1e-12);
      EXPECT_LE(std::abs(C * C - (1 + V) * (1 + V)), 1e-10);
      const auto r = eval_rhs(cp.location, p, d);
      const double scale = 1.0 + std::abs(C * C * C) + std::abs(V * V * V);
      EXPECT_LE(std::abs(r.F), 1e-9 * scale);
      EXPECT_LE(std::abs(r.G), 1e-9 * scale);
      EXPECT_LE(std::abs(r.D), 1e-9 * scale);
    }
  }
}

TEST(Linearization, P6MatchesFiniteDifferenceOracle) {
  for (const auto& c : oracle::kCases) {
    const auto p = from(c);
    const auto d = derive(p);
    const auto& p6 = find_point(critical_points(p, d), PointId::P6);
    ASSERT_TRUE(p6.partials);
    const auto j = oracle::jacobian(c, p6.location.V, p6.location.C);
    EXPECT_NEAR(p6.partials->F_V, static_cast<double>(j.F_V), 1e-7);
    EXPECT_NEAR(p6.partials->F_C, static_cast<double>(j.F_C), 1e-7);
    EXPECT_NEAR(p6.partials->G_V, static_cast<double>(j.G_V), 1e-7);
    EXPECT_NEAR(p6.partials->G_C, static_cast<double>(j.G_C), 1e-7);
    const auto L = oracle::node_slopes(j);
    const double tr = static_cast<double>(j.G_V + j.F_C);
    // L1 belongs to the eigenvalue of smaller modulus
    const double e_a = static_cast<double>(L[0] * j.G_C + j.G_V);
    const double e_b = static_cast<double>(L[1] * j.G_C + j.G_V);
    const double L1 = static_cast<double>(std::abs(e_a) < std::abs(e_b) ? L[0] : L[1]);
    const double L2 = static_cast<double>(std::abs(e_a) < std::abs(e_b) ? L[1] : L[0]);
    EXPECT_NEAR(p6.L1, L1, 1e-6) << tr;
    EXPECT_NEAR(p6.L2, L2, 1e-6);
  }
}

TEST(Linearization, Case1P6Values) {
  const auto p = from(case1());
  const auto& p6 = find_point(critical_points(p, derive(p)), PointId::P6);
  EXPECT_NEAR(p6.L1, 0.623504, 1e-6);
  EXPECT_NEAR(p6.L2, -0.056105, 1e-6);
  EXPECT_NEAR(p6.E1, -0.078282, 1e-6);
  EXPECT_NEAR(p6.E2, -0.757890, 1e-6);
  EXPECT_NEAR(p6.wronskian, 0.0276173, 1e-7);
  EXPECT_NEAR(p6.discriminant, 0.214998, 1e-6);
}

TEST(LinearizationProperty, WronskianFormulasAndEigenvalueProduct) {
  for (const auto& c : oracle::kCases) {
    const auto p = from(c);
    const auto& p6 = find_point(critical_points(p, derive(p)), PointId::P6);
    EXPECT_GT(p6.wronskian, 0.0);
    EXPECT_NEAR(p6.wronskian_formula / p6.wronskian, 1.0, 1e-8);
    const double GC = p6.partials->G_C;
    EXPECT_NEAR(p6.E1 * p6.E2 * GC * GC / p6.wronskian, 1.0, 1e-10);
    EXPECT_LE(std::abs(p6.E1), std::abs(p6.E2));
  }
}

TEST(LinearizationProperty, NodeIffGHAndPositiveDiscriminant) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ul(1.01, 2.2), uk(-0.5, 1.0);
  int nodes = 0, others = 0;
  for (int i = 0; i < 400; ++i) {
    const Parameters p{{3, 5.0 / 3.0}, {ul(rng), uk(rng)}};
    const auto d = derive(p);
    const auto rep = check_conditions_G_to_J(p, d);
    const auto& p6 = find_point(critical_points(p, d), PointId::P6);
    const bool gh = rep.find("G")->pass() && rep.find("H")->pass() && p6.discriminant > 0.0;
    EXPECT_EQ(p6.cls == PointClass::Node, gh) << p.lambda() << " " << p.kappa();
    (gh ? nodes : others)++;
  }
  EXPECT_GT(nodes, 10);
  EXPECT_GT(others, 10);
}

TEST(Linearization, RefusesP2AndAbsentPoints) {
  const auto p = from(case1());
  const auto d = derive(p);
  const auto pts = critical_points(p, d);
  try {
    linearize(find_point(pts, PointId::P2), p, d);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Pole);
  }
  CriticalPoint absent;
  absent.id = PointId::P6;
  EXPECT_THROW(linearize(absent, p, d), Error);
}

TEST(ConditionsGJ, AllPresetsPassAll) {
  for (const auto& pr : presets()) {
    const auto r = check_conditions(pr.params);
    ASSERT_EQ(r.conditions.size(), 10u);
    for (const auto& c : r.conditions) EXPECT_TRUE(c.pass()) << pr.id << " " << c.id;
    EXPECT_TRUE(r.all_pass());
  }
}

TEST(ConditionsGJ, NegativeRadicandFailsGAndLeavesRestUnevaluable) {
  const Parameters p{{3, 5.0 / 3.0}, {2.0, -0.01}};
  oracle::Case oc{3, 5.0L / 3.0L, 2.0L, -0.01L};
  const auto k = oracle::consts(oc);
  const oracle::ld b = 3 - 3 * k.V_star - 2, disc = b * b - 4 * 2 * (-3 * k.V_star);
  ASSERT_LT(disc, 0);
  const auto d = derive(p);
  EXPECT_LT(sonic_roots(p, d).radicand, 0.0);
  const auto r = check_conditions_G_to_J(p, d);
  EXPECT_FALSE(r.find("G")->pass());
  for (const char* id : {"H", "I", "J"}) {
    EXPECT_FALSE(r.find(id)->evaluable) << id;
    EXPECT_TRUE(std::isnan(r.find(id)->margin()));
  }
  EXPECT_FALSE(find_point(critical_points(p, d), PointId::P6).present);
}

TEST(ConditionsGJ, JSlopeChainCase1) {
  const auto p = from(case1());
  const auto r = check_conditions_G_to_J(p, derive(p));
  const auto* j = r.find("J");
  ASSERT_EQ(j->parts.size(), 3u);
  EXPECT_LT(j->parts[0].lhs, j->parts[0].rhs);
  EXPECT_EQ(j->parts[0].rhs, j->parts[1].lhs);
  EXPECT_EQ(j->parts[1].rhs, j->parts[2].lhs);
}

TEST(DirectionField, RightwardBetweenNullclinesInStrip) {
  for (const auto& c : oracle::kCases) {
    const auto p = from(c);
    const auto d = derive(p);
    const double Vm = sonic_roots(p, d).V_minus;
    for (int i = 1; i < 40; ++i) {
      const double V = -1.0 + (Vm + 1.0) * i / 40.0;
      const double lo = nullcline_G(V, p, d);
      const double hi = nullcline_F(V, p, d);
      ASSERT_LT(lo, hi);
      for (int k = 1; k < 10; ++k) {
        const double C = lo + (hi - lo) * k / 10.0;
        const auto dir = direction({V, C}, p, d);
        ASSERT_TRUE(dir);
        EXPECT_GT((*dir)[0], 0.0);
        EXPECT_NEAR(std::hypot((*dir)[0], (*dir)[1]), 1.0, 1e-14);
      }
    }
    EXPECT_FALSE(direction({-0.5, 0.5}, p, d));
  }
}
