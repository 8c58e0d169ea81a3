#include <gtest/gtest.h>

#include <random>

#include "mcbsde/surface.hpp"
#include "oracles.hpp"

using namespace mcbsde;

TEST(TimeGrid, UniformPlusBreakpoints) {
  const Matrix a = oracle::two_state_generator(1.0, 1.0);
  RateSchedule s({0.0, 0.33, 1.0}, {a, a});
  const auto grid = make_time_grid(s, 10);
  EXPECT_EQ(grid.front(), 0.0);
  EXPECT_EQ(grid.back(), 1.0);
  EXPECT_EQ(grid.size(), 12u);
  EXPECT_NE(std::find(grid.begin(), grid.end(), 0.33), grid.end());
  EXPECT_TRUE(std::is_sorted(grid.begin(), grid.end()));
}

TEST(TimeGrid, BreakpointOnUniformNodeIsNotDuplicated) {
  const Matrix a = oracle::two_state_generator(1.0, 1.0);
  RateSchedule s({0.0, 0.5, 1.0}, {a, a});
  EXPECT_EQ(make_time_grid(s, 10).size(), 11u);
}

TEST(TimeGrid, CellLookup) {
  const std::vector<double> grid{0.0, 0.25, 0.5, 1.0};
  EXPECT_EQ(grid_cell(grid, 0.0), 0);
  EXPECT_EQ(grid_cell(grid, 0.2), 0);
  EXPECT_EQ(grid_cell(grid, 0.25), 1);
  EXPECT_EQ(grid_cell(grid, 0.3), 1);
  EXPECT_EQ(grid_cell(grid, 1.0), 2);
}

TEST(StateFunction, HermiteReproducesCubics) {
  // value column i: (i + 1) t^3 - t
  const std::vector<double> grid{0.0, 0.3, 0.7, 1.0};
  std::vector<Matrix> values, slopes;
  for (double t : grid) {
    Matrix v(1, 2), d(1, 2);
    for (int i = 0; i < 2; ++i) {
      v(0, i) = (i + 1) * t * t * t - t;
      d(0, i) = 3 * (i + 1) * t * t - 1;
    }
    values.push_back(v);
    slopes.push_back(d);
  }
  StateFunction f(grid, values, slopes, slopes);
  EXPECT_EQ(f.interpolation(), Interpolation::kHermite);
  for (double t : {0.05, 0.31, 0.5, 0.99}) {
    for (int i = 0; i < 2; ++i) {
      EXPECT_NEAR(f(t, i)(0), (i + 1) * t * t * t - t, 1e-14);
      EXPECT_NEAR(f.derivative_at(t)(0, i), 3 * (i + 1) * t * t - 1, 1e-13);
    }
  }
}

TEST(StateFunction, LinearWithoutSlopes) {
  StateFunction f({0.0, 1.0}, {Matrix::Constant(1, 2, 1.0), Matrix::Constant(1, 2, 3.0)});
  EXPECT_EQ(f.interpolation(), Interpolation::kLinear);
  EXPECT_DOUBLE_EQ(f(0.25, 1)(0), 1.5);
}

TEST(StateFunction, ConstantSurfaceStaysExactlyConstant) {
  const Matrix c = Matrix::Constant(2, 3, 0.1);
  const Matrix zero = Matrix::Zero(2, 3);
  StateFunction f({0.0, 0.3, 1.0}, {c, c, c}, {zero, zero, zero}, {zero, zero, zero});
  for (double t : {0.01, 0.123456, 0.5, 0.77}) EXPECT_EQ(f.at(t), c);
}

TEST(IntegrandField, QuadraticIsExact) {
  const std::vector<double> grid{0.0, 0.4, 1.0};
  auto value = [](double t, int i) {
    Matrix m(1, 2);
    m << t * t - i, 2 * t + i * t * t;
    return m;
  };
  std::vector<std::vector<Matrix>> nodes(3), mids(2);
  for (int g = 0; g < 3; ++g)
    for (int i = 0; i < 2; ++i) nodes[g].push_back(value(grid[g], i));
  for (int k = 0; k < 2; ++k)
    for (int i = 0; i < 2; ++i) mids[k].push_back(value(0.5 * (grid[k] + grid[k + 1]), i));
  IntegrandField y(grid, nodes, mids);
  for (double t : {0.1, 0.4, 0.55, 0.9})
    for (int i = 0; i < 2; ++i) EXPECT_LE((y(t, i) - value(t, i)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Propagators, ExactExponentialsAndOccupation) {
  Matrix a(3, 3);
  a << -1.0, 0.5, 0.2,
        0.7, -1.5, 0.8,
        0.3, 1.0, -1.0;
  const std::vector<double> bps{0.0, 0.45, 1.0};
  const std::vector<Matrix> gens{a, 2.0 * a};
  RateSchedule s(bps, gens);
  const auto grid = make_time_grid(s, 8);
  const auto cells = cell_propagators(grid, s);
  ASSERT_EQ(cells.size() + 1, grid.size());
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const Matrix& gen = s.generator(cells[k].piece);
    EXPECT_LE((cells[k].full - oracle::expm(gen * cells[k].width)).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LE((cells[k].half - oracle::expm(gen * 0.5 * cells[k].width)).cwiseAbs().maxCoeff(),
              1e-14);
  }
  Vector x0(3);
  x0 << 0.2, 0.3, 0.5;
  const auto occ = occupation_probabilities(cells, x0);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const Vector ref = oracle::transition(bps, gens, 0.0, grid[g]) * x0;
    EXPECT_LE((occ.nodes[g] - ref).cwiseAbs().maxCoeff(), 1e-14);
  }
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const Vector ref = oracle::transition(bps, gens, 0.0, 0.5 * (grid[k] + grid[k + 1])) * x0;
    EXPECT_LE((occ.midpoints[k] - ref).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(DifferenceProducts, AgreeWithPlainProducts) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 4;
    const Matrix a = oracle::random_generator(rng, n, 0.0, 2.0);
    const Matrix p = oracle::expm(a * 0.3);
    const Matrix z = oracle::random_matrix(rng, 3, n, 1.0);
    EXPECT_LE((times_stochastic(z, p) - z * p).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LE((times_generator(z, a) - z * a).cwiseAbs().maxCoeff(), 1e-14);
    const Matrix flat = Vector::LinSpaced(3, -1.0, 2.0) * Eigen::RowVectorXd::Ones(n);
    EXPECT_EQ(times_stochastic(flat, p), flat);
    EXPECT_EQ(times_generator(flat, a), Matrix::Zero(3, n));
  }
}
