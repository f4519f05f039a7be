#include <gtest/gtest.h>

#include "handsoff/nelder_mead.hpp"

namespace handsoff {
namespace {

TEST(NelderMead, Quadratic) {
  const auto f = [](const Vector& x) { return (x(0) - 1.0) * (x(0) - 1.0) + 4.0 * (x(1) + 2.0) * (x(1) + 2.0); };
  const auto r = nelder_mead(f, Vector::Zero(2), {4000, 1e-24, 1e-14, 0.5});
  EXPECT_NEAR(r.x(0), 1.0, 1e-7);
  EXPECT_NEAR(r.x(1), -2.0, 1e-7);
  EXPECT_LE(r.value, 1e-14);
}

TEST(NelderMead, Rosenbrock) {
  const auto f = [](const Vector& x) {
    return 100.0 * std::pow(x(1) - x(0) * x(0), 2) + std::pow(1.0 - x(0), 2);
  };
  Vector x0(2);
  x0 << -1.2, 1.0;
  const auto r = nelder_mead(f, x0, {20000, 1e-24, 1e-14, 0.5});
  EXPECT_NEAR(r.x(0), 1.0, 1e-5);
  EXPECT_NEAR(r.x(1), 1.0, 1e-5);
}

TEST(NelderMead, RespectsEvaluationBudget) {
  int calls = 0;
  const auto f = [&](const Vector& x) {
    ++calls;
    return x.squaredNorm();
  };
  const auto r = nelder_mead(f, Vector::Ones(3), {50, 0.0, 0.0, 1.0});
  EXPECT_LE(r.evaluations, 50 + 4);
  EXPECT_EQ(r.evaluations, calls);
}

TEST(NelderMead, OneDimensional) {
  const auto f = [](const Vector& x) { return std::abs(x(0) - 0.3); };
  const auto r = nelder_mead(f, Vector::Zero(1), {2000, 1e-30, 1e-15, 1.0});
  EXPECT_NEAR(r.x(0), 0.3, 1e-12);
}

}  // namespace
}  // namespace handsoff
