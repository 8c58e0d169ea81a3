#include "mcbsde/surface.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mcbsde {

std::vector<double> make_time_grid(const RateSchedule& schedule, int steps) {
  if (steps < 1) throw std::invalid_argument("grid needs at least one step");
  const double horizon = schedule.horizon();
  const double merge = 1e-9 * horizon;
  std::vector<double> grid;
  grid.reserve(steps + schedule.num_pieces() + 1);
  for (int k = 0; k <= steps; ++k) grid.push_back(horizon * k / steps);
  const auto bps = schedule.breakpoints();
  for (std::size_t k = 1; k + 1 < bps.size(); ++k) grid.push_back(bps[k]);
  std::sort(grid.begin(), grid.end());

  // uniform nodes within `merge` of a breakpoint are dropped in its favour
  auto is_breakpoint = [&](double t) {
    return std::find(bps.begin(), bps.end(), t) != bps.end();
  };
  std::vector<double> out;
  for (double t : grid) {
    if (!out.empty() && t - out.back() <= merge) {
      if (is_breakpoint(t)) out.back() = t;
      continue;
    }
    out.push_back(t);
  }
  out.front() = 0.0;
  out.back() = horizon;
  return out;
}

int grid_cell(const std::vector<double>& grid, double t) {
  auto it = std::upper_bound(grid.begin(), grid.end(), t);
  const int k = static_cast<int>(it - grid.begin()) - 1;
  return std::clamp(k, 0, static_cast<int>(grid.size()) - 2);
}

std::vector<CellPropagator> cell_propagators(const std::vector<double>& grid,
                                             const RateSchedule& schedule) {
  std::vector<CellPropagator> cells;
  cells.reserve(grid.size() - 1);
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const double h = grid[k + 1] - grid[k];
    const int piece = schedule.piece_at(0.5 * (grid[k] + grid[k + 1]));
    // uniform grids repeat the same width; reuse the previous exponentials
    if (!cells.empty() && cells.back().width == h && cells.back().piece == piece) {
      cells.push_back(cells.back());
      continue;
    }
    const Matrix& a = schedule.generator(piece);
    cells.push_back({h, piece, expm(h * a), expm(0.5 * h * a)});
  }
  return cells;
}

OccupationProbabilities occupation_probabilities(const std::vector<CellPropagator>& cells,
                                                 const Vector& initial_distribution) {
  OccupationProbabilities out;
  out.nodes.reserve(cells.size() + 1);
  out.midpoints.reserve(cells.size());
  out.nodes.push_back(initial_distribution);
  for (const CellPropagator& cell : cells) {
    out.midpoints.push_back(cell.half * out.nodes.back());
    out.nodes.push_back(cell.full * out.nodes.back());
  }
  return out;
}

namespace {

void check_grid(const std::vector<double>& grid, std::size_t nodes) {
  if (grid.size() < 2) throw std::invalid_argument("surface grid needs at least two nodes");
  if (nodes != grid.size()) throw std::invalid_argument("one value per grid node required");
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    if (!(grid[k + 1] > grid[k])) throw std::invalid_argument("surface grid must be increasing");
  }
}

}  // namespace

StateFunction::StateFunction(std::vector<double> grid, std::vector<Matrix> values)
    : grid_(std::move(grid)), values_(std::move(values)), interpolation_(Interpolation::kLinear) {
  check_grid(grid_, values_.size());
}

StateFunction::StateFunction(std::vector<double> grid, std::vector<Matrix> values,
                             std::vector<Matrix> left_slopes, std::vector<Matrix> right_slopes)
    : grid_(std::move(grid)),
      values_(std::move(values)),
      left_slopes_(std::move(left_slopes)),
      right_slopes_(std::move(right_slopes)),
      interpolation_(Interpolation::kHermite) {
  check_grid(grid_, values_.size());
  if (left_slopes_.size() != values_.size() || right_slopes_.size() != values_.size()) {
    throw std::invalid_argument("one slope pair per grid node required");
  }
}

Matrix StateFunction::at(double t) const {
  const int k = grid_cell(grid_, t);
  const double h = grid_[k + 1] - grid_[k];
  const double s = (t - grid_[k]) / h;
  if (s == 0.0) return values_[k];
  if (s == 1.0) return values_[k + 1];
  // written around the left value so a constant surface stays exactly constant
  const Matrix rise = values_[k + 1] - values_[k];
  if (interpolation_ == Interpolation::kLinear) return values_[k] + s * rise;
  const double s2 = s * s;
  const double s3 = s2 * s;
  return values_[k] + (3 * s2 - 2 * s3) * rise +
         h * ((s3 - 2 * s2 + s) * right_slopes_[k] + (s3 - s2) * left_slopes_[k + 1]);
}

Matrix StateFunction::derivative_at(double t) const {
  const int k = grid_cell(grid_, t);
  const double h = grid_[k + 1] - grid_[k];
  const double s = (t - grid_[k]) / h;
  if (interpolation_ == Interpolation::kLinear) return (values_[k + 1] - values_[k]) / h;
  const double s2 = s * s;
  return (6 * s - 6 * s2) * (values_[k + 1] - values_[k]) / h +
         (3 * s2 - 4 * s + 1) * right_slopes_[k] + (3 * s2 - 2 * s) * left_slopes_[k + 1];
}

IntegrandField::IntegrandField(std::vector<double> grid, std::vector<std::vector<Matrix>> nodes,
                               std::vector<std::vector<Matrix>> midpoints)
    : grid_(std::move(grid)), nodes_(std::move(nodes)), midpoints_(std::move(midpoints)) {
  check_grid(grid_, nodes_.size());
  if (midpoints_.size() + 1 != grid_.size()) {
    throw std::invalid_argument("one midpoint sample per grid cell required");
  }
}

Matrix IntegrandField::operator()(double t, int state) const {
  const int k = grid_cell(grid_, t);
  const double s = (t - grid_[k]) / (grid_[k + 1] - grid_[k]);
  if (s == 0.0) return nodes_[k][state];
  if (s == 1.0) return nodes_[k + 1][state];
  const Matrix& left = nodes_[k][state];
  const Matrix to_mid = midpoints_[k][state] - left;
  const Matrix to_right = nodes_[k + 1][state] - left;
  return left + s * (4.0 * to_mid - to_right) + s * s * (2.0 * to_right - 4.0 * to_mid);
}

Matrix times_stochastic(const Matrix& z, const Matrix& p) {
  Matrix out = z;
  for (Eigen::Index i = 0; i < z.cols(); ++i) {
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      if (j != i && p(j, i) != 0.0) out.col(i) += p(j, i) * (z.col(j) - z.col(i));
    }
  }
  return out;
}

Matrix times_generator(const Matrix& z, const Matrix& a) {
  Matrix out = Matrix::Zero(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.cols(); ++i) {
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      if (j != i && a(j, i) != 0.0) out.col(i) += a(j, i) * (z.col(j) - z.col(i));
    }
  }
  return out;
}

}  // namespace mcbsde
