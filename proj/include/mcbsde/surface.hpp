#pragma once

#include <vector>

#include "mcbsde/chain.hpp"

namespace mcbsde {

// Uniform grid with `steps` cells on [0, horizon], refined so that every
// schedule breakpoint inside is a node. No cell straddles a breakpoint.
std::vector<double> make_time_grid(const RateSchedule& schedule, int steps);

// Index k of the cell [s_k, s_{k+1}] used to evaluate at t (clamped).
int grid_cell(const std::vector<double>& grid, double t);

enum class Interpolation { kLinear, kHermite };
enum class SurfaceTag { kGeneral, kMartingale };

// (t, e_i) -> K-vector on a time grid. Node g stores a K x N matrix whose
// column i is the value at state e_i. With one-sided slopes the surface is
// a piecewise cubic Hermite interpolant; without them it is piecewise linear.
class StateFunction {
 public:
  StateFunction(std::vector<double> grid, std::vector<Matrix> values);
  StateFunction(std::vector<double> grid, std::vector<Matrix> values,
                std::vector<Matrix> left_slopes, std::vector<Matrix> right_slopes);

  Interpolation interpolation() const { return interpolation_; }
  SurfaceTag tag() const { return tag_; }
  void set_tag(SurfaceTag tag) { tag_ = tag; }

  int dimension() const { return static_cast<int>(values_.front().rows()); }
  int num_states() const { return static_cast<int>(values_.front().cols()); }
  const std::vector<double>& grid() const { return grid_; }
  int num_nodes() const { return static_cast<int>(grid_.size()); }

  const Matrix& node(int g) const { return values_[g]; }
  // Derivative at node g approaching from the left (cell g-1) or right (cell g).
  const Matrix& left_slope(int g) const { return left_slopes_[g]; }
  const Matrix& right_slope(int g) const { return right_slopes_[g]; }

  Matrix at(double t) const;
  Vector operator()(double t, int state) const { return at(t).col(state); }
  // Time derivative of the interpolant inside the cell holding t.
  Matrix derivative_at(double t) const;

 private:
  std::vector<double> grid_;
  std::vector<Matrix> values_;
  std::vector<Matrix> left_slopes_;
  std::vector<Matrix> right_slopes_;
  Interpolation interpolation_;
  SurfaceTag tag_ = SurfaceTag::kGeneral;
};

// (t, e_i) -> K x N matrix on a time grid, sampled at nodes and at cell
// midpoints and interpolated quadratically on each cell.
class IntegrandField {
 public:
  IntegrandField(std::vector<double> grid, std::vector<std::vector<Matrix>> nodes,
                 std::vector<std::vector<Matrix>> midpoints);

  int dimension() const { return static_cast<int>(nodes_.front().front().rows()); }
  int num_states() const { return static_cast<int>(nodes_.front().size()); }
  const std::vector<double>& grid() const { return grid_; }
  int num_nodes() const { return static_cast<int>(grid_.size()); }

  const Matrix& node(int g, int state) const { return nodes_[g][state]; }
  const Matrix& midpoint(int cell, int state) const { return midpoints_[cell][state]; }

  Matrix operator()(double t, int state) const;

 private:
  std::vector<double> grid_;
  std::vector<std::vector<Matrix>> nodes_;
  std::vector<std::vector<Matrix>> midpoints_;
};

// Exact one-cell propagators exp(h A) and exp(h A / 2) for each grid cell.
struct CellPropagator {
  double width;
  int piece;
  Matrix full;
  Matrix half;
};

std::vector<CellPropagator> cell_propagators(const std::vector<double>& grid,
                                             const RateSchedule& schedule);

// p(u) = P(0, u) x0 at every node and cell midpoint of the grid.
struct OccupationProbabilities {
  std::vector<Vector> nodes;
  std::vector<Vector> midpoints;
};

OccupationProbabilities occupation_probabilities(const std::vector<CellPropagator>& cells,
                                                 const Vector& initial_distribution);

// Cubic Hermite value at the middle of a cell of width h.
inline Matrix hermite_midpoint(const Matrix& left, const Matrix& right, const Matrix& left_slope,
                               const Matrix& right_slope, double h) {
  return left + 0.5 * (right - left) + (h / 8.0) * (left_slope - right_slope);
}

// z P for a column-stochastic P, computed as
//   column i: z_i + sum_{j != i} P_ji (z_j - z_i).
// Agrees with the plain product up to rounding and keeps rows that are
// constant across states exactly constant.
Matrix times_stochastic(const Matrix& z, const Matrix& p);

// z A for a generator A, as column i: sum_{j != i} A_ji (z_j - z_i).
Matrix times_generator(const Matrix& z, const Matrix& a);

}  // namespace mcbsde
