#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "handsoff/errors.hpp"
#include "handsoff/model.hpp"
#include "test_support.hpp"

namespace handsoff {
namespace {
using testing::vec;

template <class F>
std::string validation_field(F&& f) {
  try {
    f();
  } catch (const ValidationError& e) {
    return e.field();
  }
  return "<no throw>";
}

TEST(AdmissibleSet, BoxRequiresOriginInInterior) {
  EXPECT_EQ(validation_field([] { AdmissibleSet::box(vec({0.0}), vec({1.0})); }), "U.lower");
  EXPECT_EQ(validation_field([] { AdmissibleSet::box(vec({-1.0}), vec({0.0})); }), "U.upper");
  EXPECT_EQ(validation_field([] { AdmissibleSet::ball(0.0, 2); }), "U.radius");
  EXPECT_THROW(AdmissibleSet::box(vec({-1.0, -1.0}), vec({1.0})), Error);
}

TEST(AdmissibleSet, ContainsAndSupport) {
  const auto box = AdmissibleSet::box(vec({-1.0, -2.0}), vec({3.0, 1.0}));
  EXPECT_TRUE(box.contains(vec({3.0, -2.0})));
  EXPECT_FALSE(box.contains(vec({3.1, 0.0})));
  EXPECT_DOUBLE_EQ(box.support(vec({1.0, -1.0})), 5.0);
  const auto ball = AdmissibleSet::ball(2.0, 2);
  EXPECT_TRUE(ball.contains(vec({1.2, 1.6})));
  EXPECT_FALSE(ball.contains(vec({1.5, 1.5})));
  EXPECT_DOUBLE_EQ(ball.support(vec({3.0, 4.0})), 10.0);
}

TEST(Problem, ValidateNamesField) {
  auto p = testing::double_integrator();
  EXPECT_NO_THROW(p.validate());
  auto q = p;
  q.b = q.a;
  EXPECT_EQ(validation_field([&] { q.validate(); }), "b");
  q = p;
  q.A = vec({1.0});
  EXPECT_EQ(validation_field([&] { q.validate(); }), "A");
  q = p;
  q.G = Matrix::Zero(3, 1);
  EXPECT_EQ(validation_field([&] { q.validate(); }), "G");
  q = p;
  q.U = testing::unit_box(2);
  EXPECT_EQ(validation_field([&] { q.validate(); }), "U");
}

TEST(Control, RightContinuousEvaluation) {
  const auto u = testing::off_on_off();
  EXPECT_EQ(u.value_at(0.0)(0), 0.0);
  EXPECT_EQ(u.value_at(11.0 / 6.0)(0), 1.0);
  EXPECT_EQ(u.value_at(29.0 / 6.0)(0), 0.0);
  EXPECT_EQ(u.value_at(5.0)(0), 0.0);
  EXPECT_EQ(u.value_at(-1.0)(0), 0.0);
  EXPECT_EQ(u.segment_index(3.0), 1u);
}

TEST(Control, ConstructorRejectsBadInput) {
  EXPECT_EQ(validation_field([] { PiecewiseConstantControl({0.0, 1.0, 1.0}, {vec({0.0}), vec({1.0})}); }),
            "control.breakpoints");
  EXPECT_THROW(PiecewiseConstantControl({0.0, 1.0}, {}), Error);
  EXPECT_THROW(PiecewiseConstantControl({0.0, 1.0, 2.0}, {vec({0.0}), vec({1.0, 2.0})}), Error);
  EXPECT_THROW(PiecewiseConstantControl({0.0, 1.0}, {vec({std::nan("")})}), Error);
}

TEST(Control, SimplifiedFusesAndDrops) {
  const PiecewiseConstantControl u({0.0, 1.0, 2.0, 2.0 + 1e-15, 3.0},
                                   {vec({1.0}), vec({1.0}), vec({5.0}), vec({0.0})});
  const auto s = u.simplified(1e-12);
  ASSERT_EQ(s.num_segments(), 2u);
  EXPECT_EQ(s.breakpoints()[1], 2.0 + 1e-15);  // the sliver joins its left neighbour
  EXPECT_EQ(s.values()[0](0), 1.0);
  EXPECT_EQ(s.values()[1](0), 0.0);
  EXPECT_EQ(s.end(), 3.0);
}

TEST(Control, CheckAgainstProblem) {
  const auto p = testing::double_integrator();
  EXPECT_NO_THROW(testing::off_on_off().check_against(p));
  EXPECT_THROW(PiecewiseConstantControl::constant(0.0, 4.0, vec({0.0})).check_against(p),
               ValidationError);
  EXPECT_THROW(PiecewiseConstantControl::constant(0.0, 5.0, vec({1.5})).check_against(p),
               ValidationError);
}

TEST(Costs, OffOnOffSupportIsThree) {
  const auto u = testing::off_on_off();
  EXPECT_NEAR(l0_cost(u), 3.0, 1e-15);
  EXPECT_NEAR(zero_measure(u), 2.0, 1e-15);
  EXPECT_NEAR(l1_cost(u), 3.0, 1e-15);
  const auto r = cost_report(u, vec({2.0}));
  EXPECT_NEAR(r.weighted_l0, 2.0 * 3.0 / 5.0, 1e-15);
  EXPECT_NEAR(r.clarke_cost, -2.0, 1e-15);
}

TEST(Costs, ZeroToleranceMatters) {
  const PiecewiseConstantControl u({0.0, 1.0, 2.0}, {vec({1e-10}), vec({1e-3})});
  EXPECT_NEAR(l0_cost(u), 1.0, 1e-15);
  EXPECT_NEAR(l0_cost(u, 0.0), 2.0, 1e-15);
}

TEST(Costs, WeightedRejectsNegativeWeights) {
  EXPECT_EQ(validation_field([] { weighted_l0_cost(testing::off_on_off(), vec({-1.0})); }), "lambda");
}

TEST(Costs, SupportPlusZeroMeasureIsHorizon) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const double a = -1.0 + 0.01 * trial, b = a + 0.5 + 0.05 * trial;
    const auto u = testing::random_control(rng, a, b, 1 + trial % 3);
    EXPECT_NEAR(l0_cost(u) + zero_measure(u), b - a, 1e-12) << "trial " << trial;
  }
}

TEST(Io, ProblemJsonRoundTrip) {
  const auto p = testing::double_integrator();
  const auto q = problem_from_json(problem_to_json(p));
  EXPECT_EQ(q.F, p.F);
  EXPECT_EQ(q.G, p.G);
  EXPECT_EQ(q.A, p.A);
  EXPECT_EQ(q.b, p.b);
  EXPECT_TRUE(q.U.is_box());
  auto ball = p;
  ball.U = AdmissibleSet::ball(2.5, 1);
  EXPECT_EQ(problem_from_json(problem_to_json(ball)).U.radius(), 2.5);
}

TEST(Io, ProblemJsonErrors) {
  auto j = problem_to_json(testing::double_integrator());
  j.erase("B");
  EXPECT_THROW(problem_from_json(j), ParseError);
  j = problem_to_json(testing::double_integrator());
  j["U"]["kind"] = "simplex";
  EXPECT_THROW(problem_from_json(j), ValidationError);
  j = problem_to_json(testing::double_integrator());
  j["a"] = "zero";
  EXPECT_THROW(problem_from_json(j), ParseError);
  EXPECT_THROW(load_problem("/nonexistent/problem.json"), IoError);
}

TEST(Io, ControlCsvRoundTripIsExact) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto u = testing::random_control(rng, 0.0, 3.7, 2);
    std::stringstream ss;
    write_control_csv(u, ss);
    const auto v = read_control_csv(ss);
    ASSERT_EQ(v.breakpoints(), u.breakpoints());
    for (std::size_t k = 0; k < u.num_segments(); ++k) EXPECT_EQ(v.values()[k], u.values()[k]);
  }
}

TEST(Io, ControlCsvRejectsGaps) {
  std::stringstream ss("t_start,t_end,u_1\n0,1,0\n1.5,2,1\n");
  EXPECT_THROW(read_control_csv(ss), Error);
  std::stringstream empty("");
  EXPECT_THROW(read_control_csv(empty), Error);
  std::stringstream bad("t_start,t_end,u_1\n0,1,x\n");
  EXPECT_THROW(read_control_csv(bad), ParseError);
}

}  // namespace
}  // namespace handsoff
