#include <gtest/gtest.h>

#include <random>

#include "handsoff/control_law.hpp"
#include "handsoff/errors.hpp"
#include "test_support.hpp"

namespace handsoff {
namespace {
using testing::vec;

TEST(Adjoint, DoubleIntegratorClosedForm) {
  const auto p = testing::double_integrator();
  const auto ap = AdjointParams::make(1, vec({1.0, 0.0}));
  for (double t : {0.0, 1.0, 2.5, 5.0}) {
    const Vector pt = adjoint_at(p, ap, t);
    EXPECT_NEAR(pt(0), 1.0, 1e-14);
    EXPECT_NEAR(pt(1), 5.0 - t, 1e-14);
    EXPECT_NEAR(switching_function(p, ap, t)(0), 5.0 - t, 1e-14);
  }
  const auto flat = AdjointParams::make(1, vec({0.0, 1.0}));
  for (double t : {0.0, 2.0, 5.0}) EXPECT_NEAR(switching_function(p, flat, t)(0), 1.0, 1e-15);
  EXPECT_THROW(adjoint_at(p, ap, 5.5), ValidationError);
}

TEST(AdjointParams, NormalizesAbnormalMultiplier) {
  const auto ap = AdjointParams::make(0, vec({3.0, 4.0}));
  EXPECT_NEAR(ap.p_hat.norm(), 1.0, 1e-15);
  EXPECT_TRUE(ap.nontrivial());
  EXPECT_FALSE(AdjointParams::make(0, vec({0.0, 0.0})).nontrivial());
  EXPECT_TRUE(AdjointParams::make(1, vec({0.0, 0.0})).nontrivial());
  EXPECT_THROW(AdjointParams::make(2, vec({1.0})), ValidationError);
}

TEST(Hamiltonian, PointwiseValues) {
  const auto p = testing::double_integrator();
  const auto ap = AdjointParams::make(1, vec({0.0, 1.0}));
  EXPECT_NEAR(pointwise_hamiltonian(p, ap, vec({4.0, -2.0}), vec({1.0}), 1.0), 1.0, 1e-15);
  EXPECT_NEAR(pointwise_hamiltonian(p, ap, vec({4.0, -2.0}), vec({0.0}), 1.0), 1.0, 1e-15);
  EXPECT_THROW(pointwise_hamiltonian(p, ap, vec({0.0, 0.0}), vec({2.0}), 1.0), ValidationError);
  EXPECT_NEAR(hamiltonian(vec({-2.0}), vec({-1.0}), vec({-1.0}), 1), 2.0, 1e-15);
  EXPECT_NEAR(hamiltonian(vec({-2.0}), vec({0.0}), vec({0.0}), 1), 1.0, 1e-15);
}

TEST(BoxLaw, ScalarRegimes) {
  const Vector lo = vec({-1.0}), hi = vec({1.0});
  auto c = bang_off_bang_box(vec({-2.0}), 1, lo, hi);
  EXPECT_TRUE(c.is_singleton(vec({-1.0})));
  c = bang_off_bang_box(vec({-1.0}), 1, lo, hi);
  EXPECT_TRUE(c.contains(vec({0.0})));
  EXPECT_TRUE(c.contains(vec({-1.0})));
  EXPECT_FALSE(c.contains(vec({1.0})));
  EXPECT_FALSE(c.contains(vec({-0.5})));
  c = bang_off_bang_box(vec({0.5}), 1, lo, hi);
  EXPECT_TRUE(c.is_singleton(vec({0.0})));
  c = bang_off_bang_box(vec({1.0 + 1e-10}), 1, lo, hi);
  EXPECT_TRUE(c.contains(vec({0.0})) && c.contains(vec({1.0})));
}

TEST(BoxLaw, AbnormalIsBangBang) {
  const Vector lo = vec({-2.0}), hi = vec({1.0});
  EXPECT_TRUE(bang_off_bang_box(vec({0.3}), 0, lo, hi).is_singleton(vec({1.0})));
  EXPECT_TRUE(bang_off_bang_box(vec({-0.3}), 0, lo, hi).is_singleton(vec({-2.0})));
  const auto all = bang_off_bang_box(vec({0.0}), 0, lo, hi);
  EXPECT_TRUE(all.contains(vec({-1.5})) && all.contains(vec({0.0})));
}

TEST(BoxLaw, AsymmetricBoundsUseTheLargerPayoff) {
  // s = -0.6: bang payoff at lower = 1.2 > 1.
  const auto c = bang_off_bang_box(vec({-0.6}), 1, vec({-2.0}), vec({1.0}));
  EXPECT_TRUE(c.is_singleton(vec({-2.0})));
}

TEST(BallLaw, Regimes) {
  EXPECT_TRUE(bang_off_bang_ball(vec({0.3, 0.4}), 1, 1.0).is_singleton(vec({0.0, 0.0})));
  EXPECT_TRUE(bang_off_bang_ball(vec({3.0, 4.0}), 1, 1.0).is_singleton(vec({0.6, 0.8})));
  const auto tie = bang_off_bang_ball(vec({0.6, 0.8}), 1, 1.0);
  EXPECT_TRUE(tie.contains(vec({0.0, 0.0})) && tie.contains(vec({0.6, 0.8})));
  EXPECT_TRUE(bang_off_bang_ball(vec({0.0, -0.1}), 0, 2.0).is_singleton(vec({0.0, -2.0})));
}

TEST(CandidateSet, Distance) {
  CandidateSet c;
  c.add_point(vec({0.0, 0.0}));
  c.add_box(vec({1.0, -1.0}), vec({1.0, 1.0}));
  EXPECT_NEAR(c.distance(vec({0.2, 0.0})), 0.2, 1e-15);
  EXPECT_NEAR(c.distance(vec({1.0, 2.0})), 1.0, 1e-15);
  EXPECT_NEAR(c.distance(vec({1.0, 0.5})), 0.0, 1e-15);
}

TEST(Bruteforce, ScalarIntegrator) {
  const auto p = testing::scalar_integrator();
  const auto ap = AdjointParams::make(1, vec({-2.0}));
  const auto arg = argmax_hamiltonian_bruteforce(p, ap, vec({1.0}), 1.0, 10001);
  ASSERT_EQ(arg.size(), 1u);
  EXPECT_NEAR(arg[0](0), -1.0, 1e-15);
}

/// Analytic candidate sets must sit inside the exhaustive grid argmax.
void check_oracle_equivalence(const Problem& p, int samples, std::uint64_t seed, int grid_n) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int violations = 0;
  for (int k = 0; k < samples; ++k) {
    const int eta = unit(rng) < 0.8 ? 1 : 0;
    Vector ph = Vector::Zero(p.state_dim());
    for (Eigen::Index i = 0; i < ph.size(); ++i) ph(i) = 4.0 * unit(rng) - 2.0;
    const double t = p.a + (p.b - p.a) * unit(rng);
    if (k % 10 == 0) {
      ph << 0.0, 1.0;  // switching function on the threshold
    }
    const auto ap = AdjointParams::make(eta, ph);
    Vector z(p.state_dim());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = 10.0 * unit(rng) - 5.0;
    const auto grid = argmax_hamiltonian_bruteforce(p, ap, z, t, grid_n);
    for (const auto& v : control_candidates(p, ap, t).representatives()) {
      const bool hit = std::any_of(grid.begin(), grid.end(),
                                   [&](const Vector& g) { return (g - v).norm() <= 1e-12; });
      if (!hit) ++violations;
    }
  }
  EXPECT_EQ(violations, 0);
}

TEST(Bruteforce, DoubleIntegratorOracleEquivalence) {
  check_oracle_equivalence(testing::double_integrator(), 200, 99, 10001);
}

TEST(Bruteforce, TwoChannelBox) {
  Problem p;
  p.F = Matrix::Zero(2, 2);
  p.F(0, 1) = 1.0;
  p.G = Matrix::Identity(2, 2);
  p.a = 0.0;
  p.b = 2.0;
  p.A = vec({1.0, 0.0});
  p.B = vec({0.0, 0.0});
  p.U = AdmissibleSet::box(vec({-1.0, -0.5}), vec({2.0, 0.5}));
  check_oracle_equivalence(p, 100, 3, 301);
}

TEST(ControlGrid, IncludesZeroAndBounds) {
  const auto g = control_grid(AdmissibleSet::box(vec({-1.0}), vec({2.0})), 4);
  auto has = [&](double x) {
    return std::any_of(g.begin(), g.end(), [&](const Vector& v) { return v(0) == x; });
  };
  EXPECT_TRUE(has(-1.0) && has(2.0) && has(0.0));
  const auto ball = control_grid(AdmissibleSet::ball(1.5, 2), 16);
  for (const auto& v : ball) EXPECT_LE(v.norm(), 1.5 + 1e-12);
}

}  // namespace
}  // namespace handsoff
