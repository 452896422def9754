#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "cavity/ode.hpp"

using namespace cavity;

TEST(Dopri5, ExponentialDecay) {
  auto f = [](double, const ode::State<1>& y) { return ode::State<1>{-2.0 * y[0]}; };
  const auto r = ode::integrate<1>(f, 0.0, {1.0}, 3.0, {});
  EXPECT_FALSE(r.stop);
  EXPECT_DOUBLE_EQ(r.sol.t.back(), 3.0);
  EXPECT_NEAR(r.sol.y.back()[0], std::exp(-6.0), 1e-11);
}

TEST(Dopri5, HarmonicOscillatorKeepsEnergy) {
  auto f = [](double, const ode::State<2>& y) { return ode::State<2>{y[1], -y[0]}; };
  ode::Options opt;
  opt.tol = {1e-12, 1e-14};
  const auto r = ode::integrate<2>(f, 0.0, {1.0, 0.0}, 20.0 * std::numbers::pi, opt);
  EXPECT_NEAR(r.sol.y.back()[0], 1.0, 1e-9);
  EXPECT_NEAR(r.sol.y.back()[1], 0.0, 1e-9);
}

TEST(Dopri5, BackwardIntegration) {
  auto f = [](double t, const ode::State<1>&) { return ode::State<1>{std::cos(t)}; };
  const auto r = ode::integrate<1>(f, 2.0, {std::sin(2.0)}, -1.0, {});
  EXPECT_NEAR(r.sol.y.back()[0], std::sin(-1.0), 1e-10);
  EXPECT_NEAR(r.sol.eval(0.5)[0], std::sin(0.5), 1e-9);
}

TEST(Dopri5, DenseOutputAccuracy) {
  auto f = [](double t, const ode::State<1>& y) { return ode::State<1>{y[0] * std::cos(t)}; };
  const auto r = ode::integrate<1>(f, 0.0, {1.0}, 10.0, {});
  for (double t = 0.0; t <= 10.0; t += 0.0137) {
    EXPECT_NEAR(r.sol.eval(t)[0], std::exp(std::sin(t)), 1e-8) << t;
    EXPECT_NEAR(r.sol.derivative(t)[0], std::cos(t) * std::exp(std::sin(t)), 1e-6) << t;
  }
}

TEST(Dopri5, ConvergesUnderTighterTolerance) {
  auto f = [](double t, const ode::State<1>& y) { return ode::State<1>{-y[0] + std::sin(3 * t)}; };
  auto exact = [](double t) { return (std::sin(3 * t) - 3 * std::cos(3 * t)) / 10 + 1.3 * std::exp(-t); };
  double prev = 1.0;
  for (double rtol : {1e-6, 1e-8, 1e-10}) {
    ode::Options opt;
    opt.tol = {rtol, rtol * 1e-2};
    const auto r = ode::integrate<1>(f, 0.0, {exact(0.0)}, 5.0, opt);
    const double err = std::abs(r.sol.y.back()[0] - exact(5.0));
    EXPECT_LT(err, prev);
    EXPECT_LT(err, 50 * rtol);
    prev = err;
  }
}

TEST(Events, TerminalEventLocatedAndTruncated) {
  // y = 1 - t^2/2 hits zero at sqrt 2
  auto f = [](double t, const ode::State<1>&) { return ode::State<1>{-t}; };
  std::vector<ode::Event<1>> ev{{"zero", [](double, const ode::State<1>& y) { return y[0]; }, true, -1}};
  const auto r = ode::integrate<1>(f, 0.0, {1.0}, 5.0, {}, ev);
  ASSERT_TRUE(r.stop);
  EXPECT_EQ(r.stop->name, "zero");
  EXPECT_NEAR(r.stop->t, std::sqrt(2.0), 1e-11);
  EXPECT_DOUBLE_EQ(r.sol.t.back(), r.stop->t);
  EXPECT_NEAR(r.sol.y.back()[0], 0.0, 1e-11);
}

TEST(Events, DirectionFilterAndNonTerminalHits) {
  auto f = [](double t, const ode::State<1>&) { return ode::State<1>{std::cos(t)}; };
  std::vector<ode::Event<1>> ev{
      {"up", [](double, const ode::State<1>& y) { return y[0]; }, false, 1},
      {"down", [](double, const ode::State<1>& y) { return y[0]; }, false, -1},
  };
  const auto r = ode::integrate<1>(f, 0.1, {std::sin(0.1)}, 10.0, {}, ev);
  EXPECT_FALSE(r.stop);
  int up = 0, down = 0;
  for (const auto& h : r.hits) {
    const double k = std::round(h.t / std::numbers::pi);
    EXPECT_NEAR(h.t, k * std::numbers::pi, 1e-9);
    (h.name == "up" ? up : down)++;
  }
  EXPECT_EQ(up, 1);    // 2 pi
  EXPECT_EQ(down, 2);  // pi, 3 pi
}

TEST(Events, EarliestTerminalWins) {
  auto f = [](double, const ode::State<1>&) { return ode::State<1>{1.0}; };
  std::vector<ode::Event<1>> ev{
      {"late", [](double, const ode::State<1>& y) { return y[0] - 0.7; }, true, 0},
      {"early", [](double, const ode::State<1>& y) { return y[0] - 0.3; }, true, 0},
  };
  ode::Options opt;
  opt.hmax = 10.0;
  opt.h0 = 1.0;
  const auto r = ode::integrate<1>(f, 0.0, {0.0}, 2.0, opt, ev);
  ASSERT_TRUE(r.stop);
  EXPECT_EQ(r.stop->name, "early");
  EXPECT_NEAR(r.stop->t, 0.3, 1e-12);
}

TEST(Dopri5, StepUnderflowAtBlowUp) {
  // y' = y^2, y(0) = 1 blows up at t = 1
  auto f = [](double, const ode::State<1>& y) { return ode::State<1>{y[0] * y[0]}; };
  try {
    ode::integrate<1>(f, 0.0, {1.0}, 2.0, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::StepUnderflow);
  }
}
