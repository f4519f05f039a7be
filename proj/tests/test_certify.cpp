#include <gtest/gtest.h>

#include "handsoff/certify.hpp"
#include "handsoff/errors.hpp"
#include "test_support.hpp"

namespace handsoff {
namespace {
using testing::vec;

TEST(Certify, DoubleIntegratorCertificatePasses) {
  const auto p = testing::double_integrator();
  const auto r = certify(p, AdjointParams::make(1, vec({0.0, 1.0})), testing::off_on_off());
  EXPECT_TRUE(r.passed);
  EXPECT_TRUE(r.locally_optimal);
  EXPECT_TRUE(r.nontriviality);
  EXPECT_TRUE(r.transversality);
  EXPECT_LE(r.adjoint_residual, 1e-6);
  EXPECT_LE(r.hmax_violation, 1e-6);
  EXPECT_LE(r.endpoint_residual, 1e-6);
  EXPECT_LE(r.constancy_spread, 1e-9);
  EXPECT_NEAR(r.hamiltonian_level, 1.0, 1e-9);
}

TEST(Certify, WrongMultiplierFails) {
  const auto p = testing::double_integrator();
  const auto r = certify(p, AdjointParams::make(1, vec({1.0, 0.0})), testing::off_on_off());
  EXPECT_FALSE(r.passed);
  EXPECT_GT(r.hmax_violation, 1e-6);
  EXPECT_FALSE(r.locally_optimal);
}

TEST(Certify, TrivialMultiplierFails) {
  const auto p = testing::double_integrator();
  const auto r = certify(p, AdjointParams::make(0, vec({0.0, 0.0})), testing::off_on_off());
  EXPECT_FALSE(r.nontriviality);
  EXPECT_FALSE(r.passed);
}

TEST(Certify, EndpointMissFails) {
  const auto p = testing::double_integrator();
  const PiecewiseConstantControl u({0.0, 2.0, 29.0 / 6.0, 5.0}, {vec({0.0}), vec({1.0}), vec({0.0})});
  const auto r = certify(p, AdjointParams::make(1, vec({0.0, 1.0})), u);
  EXPECT_GT(r.endpoint_residual, 1e-3);
  EXPECT_FALSE(r.passed);
}

TEST(Certify, ScalarIntegratorTieCase) {
  const auto p = testing::scalar_integrator();
  const PiecewiseConstantControl u({0.0, 3.0, 5.0}, {vec({-1.0}), vec({0.0})});
  EXPECT_TRUE(certify(p, AdjointParams::make(1, vec({-1.0})), u).passed);
  EXPECT_FALSE(certify(p, AdjointParams::make(1, vec({-2.0})), u).passed);
}

TEST(Certify, AbnormalIsNotLocallyOptimal) {
  // Minimum-time transfer: full bang over the whole horizon admits eta = 0.
  const auto p = testing::scalar_integrator(3.0);
  const auto u = PiecewiseConstantControl::constant(0.0, 3.0, vec({-1.0}));
  const auto r = certify(p, AdjointParams::make(0, vec({-1.0})), u);
  EXPECT_TRUE(r.passed);
  EXPECT_FALSE(r.locally_optimal);
}

TEST(Certify, MismatchedControlThrows) {
  const auto p = testing::double_integrator();
  const auto u = PiecewiseConstantControl::constant(0.0, 5.0, vec({0.0, 0.0}));
  EXPECT_THROW(certify(p, AdjointParams::make(1, vec({0.0, 1.0})), u), Error);
}

TEST(Certify, AdjointResidualOfClosedForm) {
  const auto p = testing::double_integrator();
  const auto traj = propagate_exact(p, testing::off_on_off());
  EXPECT_LE(check_adjoint(p, AdjointParams::make(1, vec({0.7, -0.2})), traj), 1e-6);
}

NonlinearProblem wrapped(const Problem& p) {
  NonlinearProblem np;
  np.dynamics = linear_dynamics(p);
  np.dynamics.affine_in_state = true;
  np.a = p.a;
  np.b = p.b;
  np.A = p.A;
  np.B = p.B;
  np.U = p.U;
  return np;
}

TEST(CertifyNonlinear, WrappedLinearPlantPasses) {
  const auto np = wrapped(testing::double_integrator());
  const auto r = certify(np, AdjointParams::make(1, vec({0.0, 1.0})), testing::off_on_off());
  EXPECT_TRUE(r.passed) << to_json(r).dump();
  EXPECT_TRUE(r.locally_optimal);
}

TEST(CertifyNonlinear, IntegratedAdjointMatchesClosedForm) {
  const auto p = testing::double_integrator();
  const auto np = wrapped(p);
  const auto traj = propagate_rk4(np.dynamics, testing::off_on_off(), p.A, 2000);
  const auto adj = integrate_adjoint(np.dynamics, vec({1.0, 0.0}), traj);
  ASSERT_EQ(adj.size(), traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    EXPECT_NEAR(adj[i](1), 5.0 - traj.grid[i], 1e-9);
  }
}

TEST(CertifyNonlinear, NotAffineSkipsLocalOptimality) {
  auto np = wrapped(testing::double_integrator());
  np.dynamics.affine_in_state = false;
  const auto r = certify(np, AdjointParams::make(1, vec({0.0, 1.0})), testing::off_on_off());
  EXPECT_TRUE(r.passed);
  EXPECT_FALSE(r.locally_optimal);
}

TEST(CertifyReport, JsonKeys) {
  const auto p = testing::double_integrator();
  const auto j = to_json(certify(p, AdjointParams::make(1, vec({0.0, 1.0})), testing::off_on_off()));
  for (const char* k : {"eta", "p_hat", "adjoint_residual", "hmax_violation", "constancy_spread",
                        "endpoint_residual", "nontriviality", "transversality", "passed",
                        "locally_optimal"}) {
    EXPECT_TRUE(j.contains(k)) << k;
  }
}

}  // namespace
}  // namespace handsoff
