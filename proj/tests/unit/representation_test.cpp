#include <gtest/gtest.h>

#include "mcbsde/representation.hpp"
#include "oracles.hpp"

using namespace mcbsde;

namespace {

Matrix three_state() {
  Matrix a(3, 3);
  a << -1.0, 0.5, 0.2,
        0.7, -1.5, 0.8,
        0.3, 1.0, -1.0;
  return a;
}

const std::vector<double> kBps{0.0, 0.4, 1.0};
const std::vector<Matrix> kGens{three_state(), 2.5 * three_state()};

TerminalCondition terminal() {
  Matrix q(2, 3);
  q << 1.0, 0.0, -1.0,
       0.5, 2.0, 0.0;
  return TerminalCondition(q);
}

IntegrandField shifted(const IntegrandField& y, int state, int target, double delta) {
  std::vector<std::vector<Matrix>> nodes(y.num_nodes()), mids(y.num_nodes() - 1);
  for (int g = 0; g < y.num_nodes(); ++g) {
    for (int i = 0; i < y.num_states(); ++i) {
      Matrix v = y.node(g, i);
      if (i == state) v.col(target).array() += delta;
      nodes[g].push_back(v);
      if (g + 1 < y.num_nodes()) {
        Matrix m = y.midpoint(g, i);
        if (i == state) m.col(target).array() += delta;
        mids[g].push_back(m);
      }
    }
  }
  return IntegrandField(y.grid(), nodes, mids);
}

}  // namespace

TEST(TerminalCondition, Validates) {
  EXPECT_THROW(TerminalCondition(Matrix::Zero(1, 1)), std::invalid_argument);
  Matrix bad = Matrix::Zero(1, 2);
  bad(0, 1) = std::nan("");
  EXPECT_THROW(TerminalCondition{bad}, std::invalid_argument);
}

TEST(ConditionalExpectation, MatchesTransitionOracle) {
  RateSchedule s(kBps, kGens);
  const auto q = terminal();
  const StateFunction l = conditional_expectation(q, s, 200);
  EXPECT_EQ(l.tag(), SurfaceTag::kMartingale);
  EXPECT_EQ(l.node(l.num_nodes() - 1), q.values());
  for (double t : {0.0, 0.2, 0.4, 0.7}) {
    const Matrix ref = q.values() * oracle::transition(kBps, kGens, t, 1.0);
    // node values are exact; between nodes the Hermite interpolant is 4th order
    EXPECT_LE((l.at(t) - ref).cwiseAbs().maxCoeff(), 1e-10) << "t=" << t;
  }
  EXPECT_LE(harmonicity_residual(l, s), kHarmonicityTolerance);
}

TEST(ConditionalExpectation, TwoStateWorkedValue) {
  const auto s = RateSchedule::constant(oracle::two_state_generator(1.0, 1.0), 1.0);
  Matrix q(1, 2);
  q << 1.0, 0.0;
  const StateFunction l = conditional_expectation(TerminalCondition(q), s, 1000);
  EXPECT_NEAR(l(0.0, 0)(0), 0.56767, 5e-6);
  EXPECT_NEAR(l(0.0, 0)(0), 0.5 * (1.0 + std::exp(-2.0)), 1e-14);
}

TEST(RepresentationIntegrand, RejectsNonMartingale) {
  const auto s = RateSchedule::constant(oracle::two_state_generator(1.0, 1.0), 1.0);
  Matrix v0(1, 2), v1(1, 2);
  v0 << 0.0, 0.0;
  v1 << 1.0, 0.0;
  StateFunction drifting({0.0, 1.0}, {v0, v1});
  EXPECT_THROW(representation_integrand(drifting, s), NotMartingale);
}

TEST(RepresentationIntegrand, CanonicalJumpDifferences) {
  RateSchedule s(kBps, kGens);
  const StateFunction l = conditional_expectation(terminal(), s, 100);
  const IntegrandField y = representation_integrand(l, s);
  for (int g = 0; g < y.num_nodes(); g += 17) {
    for (int i = 0; i < 3; ++i) {
      EXPECT_EQ(y.node(g, i).col(i), Vector::Zero(2));
      for (int j = 0; j < 3; ++j) {
        EXPECT_LE((y.node(g, i).col(j) - (l.node(g).col(j) - l.node(g).col(i))).cwiseAbs().maxCoeff(),
                  1e-15);
      }
    }
  }
}

TEST(Reconstruct, ConstantMartingaleIsExact) {
  RateSchedule s(kBps, kGens);
  const TerminalCondition q(Matrix::Constant(2, 3, 0.37));
  const StateFunction l = conditional_expectation(q, s, 100);
  const IntegrandField y = representation_integrand(l, s);
  for (std::uint64_t k = 0; k < 20; ++k) {
    EXPECT_EQ(reconstruct(l, y, simulate_path(s, k % 3, k), s).max_residual, 0.0);
  }
}

TEST(Reconstruct, SimulatedPathsWithinTolerance) {
  RateSchedule s(kBps, kGens);
  const StateFunction l = conditional_expectation(terminal(), s, 1000);
  const IntegrandField y = representation_integrand(l, s);
  for (std::uint64_t k = 0; k < 100; ++k) {
    EXPECT_LE(reconstruct(l, y, simulate_path(s, k % 3, path_seed(77, k)), s).max_residual, 1e-6);
  }
}

TEST(Reconstruct, FaultInjectionIsWitnessed) {
  RateSchedule s(kBps, kGens);
  const StateFunction l = conditional_expectation(terminal(), s, 1000);
  const IntegrandField bad = shifted(representation_integrand(l, s), 0, 2, 0.1);
  int witnesses = 0;
  for (std::uint64_t k = 0; k < 100; ++k) {
    const ChainPath path = simulate_path(s, 0, path_seed(78, k));
    bool makes_jump = false;
    int prev = path.initial_state();
    for (const Jump& j : path.jumps()) {
      makes_jump = makes_jump || (prev == 0 && j.state == 2);
      prev = j.state;
    }
    if (!makes_jump) continue;
    ++witnesses;
    EXPECT_GE(reconstruct(l, bad, path, s).max_residual, 1e-2);
  }
  EXPECT_GT(witnesses, 5);
}

TEST(Reconstruct, KernelShiftDoesNotChangeResidual) {
  // adding v 1^T to y(., e_i) is invisible to d<M,M>
  RateSchedule s(kBps, kGens);
  const StateFunction l = conditional_expectation(terminal(), s, 500);
  const IntegrandField y = representation_integrand(l, s);
  IntegrandField moved = y;
  for (int j = 0; j < 3; ++j) moved = shifted(moved, 1, j, 0.25);
  for (std::uint64_t k = 0; k < 30; ++k) {
    const ChainPath path = simulate_path(s, k % 3, path_seed(79, k));
    EXPECT_NEAR(reconstruct(l, y, path, s).max_residual, reconstruct(l, moved, path, s).max_residual,
                1e-13);
  }
}

TEST(IntegrabilityDiagnostic, EqualsIsometryAndScalesQuadratically) {
  RateSchedule s(kBps, kGens);
  const auto q = terminal();
  const StateFunction l = conditional_expectation(q, s, 1000);
  const IntegrandField y = representation_integrand(l, s);
  Vector x0(3);
  x0 << 0.5, 0.25, 0.25;
  const double value = integrability_diagnostic(y, s, x0);

  const Matrix p = oracle::transition(kBps, kGens, 0.0, 1.0);
  const Matrix l0 = q.values() * p;
  double exact = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) exact += x0(i) * p(j, i) * (q(j) - l0.col(i)).squaredNorm();
  EXPECT_NEAR(value, exact, 1e-8);

  const IntegrandField doubled = [&] {
    std::vector<std::vector<Matrix>> nodes(y.num_nodes()), mids(y.num_nodes() - 1);
    for (int g = 0; g < y.num_nodes(); ++g)
      for (int i = 0; i < 3; ++i) {
        nodes[g].push_back(2.0 * y.node(g, i));
        if (g + 1 < y.num_nodes()) mids[g].push_back(2.0 * y.midpoint(g, i));
      }
    return IntegrandField(y.grid(), nodes, mids);
  }();
  EXPECT_NEAR(integrability_diagnostic(doubled, s, x0), 4.0 * value, 1e-12);
}
