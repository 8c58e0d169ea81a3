#include "mcbsde/calculus.hpp"

#include <algorithm>
#include <stdexcept>

namespace mcbsde {

namespace {

void check_consistent(const ChainPath& path, const RateSchedule& schedule) {
  if (path.horizon() != schedule.horizon()) {
    throw std::invalid_argument("path horizon does not match schedule horizon");
  }
  if (path.num_states() != schedule.num_states()) {
    throw std::invalid_argument("path state count does not match schedule");
  }
}

void check_pair(int from, int to, int n) {
  if (from == to) throw std::invalid_argument("jump counts need distinct states i != j");
  if (from < 0 || to < 0 || from >= n || to >= n) throw std::out_of_range("state index");
}

Vector unit(int n, int i) {
  Vector e = Vector::Zero(n);
  e(i) = 1.0;
  return e;
}

// Segments additionally split at the cell boundaries of c.
std::vector<Segment> refined_segments(const PiecewiseConstantIntegrand& c, const ChainPath& path,
                                      const RateSchedule& schedule, double t) {
  std::vector<Segment> out;
  const auto& grid = c.grid();
  for (const Segment& seg : constant_segments(path, schedule, 0.0, t)) {
    double lo = seg.begin;
    auto it = std::upper_bound(grid.begin(), grid.end(), lo);
    for (; it != grid.end() && *it < seg.end; ++it) {
      out.push_back({lo, *it, seg.state, seg.piece});
      lo = *it;
    }
    out.push_back({lo, seg.end, seg.state, seg.piece});
  }
  return out;
}

}  // namespace

std::vector<Segment> constant_segments(const ChainPath& path, const RateSchedule& schedule,
                                       double from, double to) {
  check_consistent(path, schedule);
  if (from < 0.0 || to > path.horizon() || from > to) {
    throw std::out_of_range("constant_segments: interval outside [0, T]");
  }
  std::vector<double> cuts{from};
  for (double b : schedule.breakpoints()) {
    if (b > from && b < to) cuts.push_back(b);
  }
  for (const Jump& jump : path.jumps()) {
    if (jump.time > from && jump.time < to) cuts.push_back(jump.time);
  }
  cuts.push_back(to);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::vector<Segment> segments;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double a = cuts[k];
    const double b = cuts[k + 1];
    segments.push_back({a, b, path.state_at(a), schedule.piece_after(a)});
  }
  return segments;
}

PathProcessSample<Vector> martingale_path(const ChainPath& path, const RateSchedule& schedule) {
  const int n = schedule.num_states();
  PathProcessSample<Vector> out;
  Vector m = Vector::Zero(n);
  out.grid.push_back(0.0);
  out.values.push_back(m);
  for (const Segment& seg : constant_segments(path, schedule, 0.0, path.horizon())) {
    m -= (seg.end - seg.begin) * schedule.generator(seg.piece).col(seg.state);
    const int after = path.state_at(seg.end);
    if (after != seg.state) {
      m(after) += 1.0;
      m(seg.state) -= 1.0;
    }
    out.grid.push_back(seg.end);
    out.values.push_back(m);
  }
  return out;
}

Vector martingale_at(const ChainPath& path, const RateSchedule& schedule, double t) {
  const int n = schedule.num_states();
  Vector m = unit(n, path.state_at(t)) - unit(n, path.initial_state());
  for (const Segment& seg : constant_segments(path, schedule, 0.0, t)) {
    m -= (seg.end - seg.begin) * schedule.generator(seg.piece).col(seg.state);
  }
  return m;
}

int counting_process(const ChainPath& path, int from, int to, double t) {
  check_pair(from, to, path.num_states());
  int count = 0;
  int prev = path.initial_state();
  for (const Jump& jump : path.jumps()) {
    if (jump.time > t) break;
    if (prev == from && jump.state == to) ++count;
    prev = jump.state;
  }
  return count;
}

double compensated_jump(const ChainPath& path, const RateSchedule& schedule, int from, int to,
                        double t) {
  check_pair(from, to, path.num_states());
  double compensator = 0.0;
  for (const Segment& seg : constant_segments(path, schedule, 0.0, t)) {
    if (seg.state == from) {
      compensator += schedule.generator(seg.piece)(to, from) * (seg.end - seg.begin);
    }
  }
  return counting_process(path, from, to, t) - compensator;
}

Matrix optional_qv(const ChainPath& path, double t) {
  const int n = path.num_states();
  Matrix qv = Matrix::Zero(n, n);
  int prev = path.initial_state();
  for (const Jump& jump : path.jumps()) {
    if (jump.time > t) break;
    qv(prev, prev) += 1.0;
    qv(jump.state, jump.state) += 1.0;
    qv(prev, jump.state) -= 1.0;
    qv(jump.state, prev) -= 1.0;
    prev = jump.state;
  }
  return qv;
}

Matrix qv_density(const Matrix& generator, const Vector& v) {
  Matrix d = Matrix((generator * v).asDiagonal());
  d -= v.asDiagonal() * generator.transpose();
  d -= generator * v.asDiagonal();
  return d;
}

Matrix qv_density(const Matrix& generator, int state) {
  return qv_density(generator, unit(static_cast<int>(generator.rows()), state));
}

Matrix predictable_qv(const ChainPath& path, const RateSchedule& schedule, double t) {
  const int n = schedule.num_states();
  Matrix qv = Matrix::Zero(n, n);
  for (const Segment& seg : constant_segments(path, schedule, 0.0, t)) {
    qv += (seg.end - seg.begin) * qv_density(schedule.generator(seg.piece), seg.state);
  }
  return qv;
}

SeminormContext::SeminormContext(const Matrix& generator, const Vector& v)
    : density_(qv_density(generator, v)) {}

SeminormContext::SeminormContext(const Matrix& generator, int state)
    : density_(qv_density(generator, state)) {}

double inner_v(const Matrix& c, const Matrix& d, const SeminormContext& ctx) {
  if (c.rows() != d.rows() || c.cols() != d.cols() || c.cols() != ctx.density().rows()) {
    throw std::invalid_argument("inner_v: dimension mismatch");
  }
  return (c * ctx.density() * d.transpose()).trace();
}

double seminorm_sq_v(const Matrix& c, const SeminormContext& ctx) { return inner_v(c, c, ctx); }

double min_eigenvalue(const Matrix& symmetric) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetric, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

PiecewiseConstantIntegrand::PiecewiseConstantIntegrand(std::vector<double> grid,
                                                       std::vector<std::vector<Matrix>> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (grid_.size() < 2 || values_.size() + 1 != grid_.size()) {
    throw std::invalid_argument("integrand needs one value row per grid cell");
  }
  if (!std::is_sorted(grid_.begin(), grid_.end())) {
    throw std::invalid_argument("integrand grid must be increasing");
  }
}

int PiecewiseConstantIntegrand::cell_at(double t) const {
  auto it = std::lower_bound(grid_.begin() + 1, grid_.end(), t);
  if (it == grid_.end()) return static_cast<int>(values_.size()) - 1;
  return static_cast<int>(it - grid_.begin()) - 1;
}

Vector stochastic_integral(const PiecewiseConstantIntegrand& c, const ChainPath& path,
                           const RateSchedule& schedule, double t) {
  Vector total = Vector::Zero(c.rows());
  for (const Segment& seg : refined_segments(c, path, schedule, t)) {
    const Matrix& value = c.at(0.5 * (seg.begin + seg.end), seg.state);
    total -= (seg.end - seg.begin) * (value * schedule.generator(seg.piece).col(seg.state));
  }
  int prev = path.initial_state();
  for (const Jump& jump : path.jumps()) {
    if (jump.time > t) break;
    const Matrix& value = c.at(jump.time, prev);
    total += value.col(jump.state) - value.col(prev);
    prev = jump.state;
  }
  return total;
}

double seminorm_path_integral(const PiecewiseConstantIntegrand& c, const ChainPath& path,
                              const RateSchedule& schedule, double t) {
  double total = 0.0;
  for (const Segment& seg : refined_segments(c, path, schedule, t)) {
    const SeminormContext ctx(schedule.generator(seg.piece), seg.state);
    total += (seg.end - seg.begin) * seminorm_sq_v(c.at(0.5 * (seg.begin + seg.end), seg.state), ctx);
  }
  return total;
}

double qv_trace_integral(const PiecewiseConstantIntegrand& c, const ChainPath& path,
                         const RateSchedule& schedule, double t) {
  double total = 0.0;
  Matrix prev_qv = Matrix::Zero(schedule.num_states(), schedule.num_states());
  for (const Segment& seg : refined_segments(c, path, schedule, t)) {
    Matrix qv = predictable_qv(path, schedule, seg.end);
    const Matrix& value = c.at(0.5 * (seg.begin + seg.end), seg.state);
    total += (value * (qv - prev_qv) * value.transpose()).trace();
    prev_qv = std::move(qv);
  }
  return total;
}

}  // namespace mcbsde
