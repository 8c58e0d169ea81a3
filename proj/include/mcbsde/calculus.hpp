#pragma once

#include <vector>

#include "mcbsde/chain.hpp"

namespace mcbsde {

// Maximal interval [begin, end] on which the chain state and the schedule
// piece are both constant.
struct Segment {
  double begin;
  double end;
  int state;
  int piece;
};

std::vector<Segment> constant_segments(const ChainPath& path, const RateSchedule& schedule,
                                       double from, double to);

// Exact samples of a path functional. The grid holds 0, T, every breakpoint
// and every jump time; values at a jump time are post-jump.
template <class Value>
struct PathProcessSample {
  std::vector<double> grid;
  std::vector<Value> values;
};

// M_t = X_t - X_0 - int_0^t A_u X_u du.
PathProcessSample<Vector> martingale_path(const ChainPath& path, const RateSchedule& schedule);
Vector martingale_at(const ChainPath& path, const RateSchedule& schedule, double t);

// Number of i -> j transitions in ]0, t].
int counting_process(const ChainPath& path, int from, int to, double t);

// N^{ij}_t - int_0^t A_ji 1{X_u = e_i} du.
double compensated_jump(const ChainPath& path, const RateSchedule& schedule, int from, int to,
                        double t);

// [M, M]_t: sum over jumps of (e_j - e_i)(e_j - e_i)^T.
Matrix optional_qv(const ChainPath& path, double t);

// D(V) = diag(A V) - diag(V) A^T - A diag(V). Linear in V, so probability
// vectors give the expected density.
Matrix qv_density(const Matrix& generator, const Vector& v);
Matrix qv_density(const Matrix& generator, int state);

// <M, M>_t = int_0^t D(X_u) du, integrated exactly along the path.
Matrix predictable_qv(const ChainPath& path, const RateSchedule& schedule, double t);

// Inner product <C, D>_V = Tr(C D(V) D^T) for K x N matrices C, D.
class SeminormContext {
 public:
  SeminormContext(const Matrix& generator, const Vector& v);
  SeminormContext(const Matrix& generator, int state);

  const Matrix& density() const { return density_; }

 private:
  Matrix density_;
};

double inner_v(const Matrix& c, const Matrix& d, const SeminormContext& ctx);
double seminorm_sq_v(const Matrix& c, const SeminormContext& ctx);

// Frobenius norm squared, Tr(C C^T).
inline double norm_sq(const Matrix& c) { return c.squaredNorm(); }

double min_eigenvalue(const Matrix& symmetric);

// K x N matrix per (grid cell, state), constant on ]s_k, s_{k+1}]. Evaluated
// at (u, X_{u-}) it is a predictable process.
class PiecewiseConstantIntegrand {
 public:
  PiecewiseConstantIntegrand(std::vector<double> grid, std::vector<std::vector<Matrix>> values);

  const std::vector<double>& grid() const { return grid_; }
  int cell_at(double t) const;
  const Matrix& at(double t, int state) const { return values_[cell_at(t)][state]; }
  const Matrix& cell_value(int cell, int state) const { return values_[cell][state]; }
  Eigen::Index rows() const { return values_.front().front().rows(); }

 private:
  std::vector<double> grid_;
  std::vector<std::vector<Matrix>> values_;
};

// int_0^t C(u, X_{u-}) dM_u, exact.
Vector stochastic_integral(const PiecewiseConstantIntegrand& c, const ChainPath& path,
                           const RateSchedule& schedule, double t);

// int_0^t ||C_u||^2_{X_u} du, from the seminorm at each constant segment.
double seminorm_path_integral(const PiecewiseConstantIntegrand& c, const ChainPath& path,
                              const RateSchedule& schedule, double t);

// int_0^t Tr(C_u d<M, M>_u C_u^T), from increments of predictable_qv.
double qv_trace_integral(const PiecewiseConstantIntegrand& c, const ChainPath& path,
                         const RateSchedule& schedule, double t);

}  // namespace mcbsde
