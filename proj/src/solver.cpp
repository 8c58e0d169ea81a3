#include "mcbsde/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "mcbsde/calculus.hpp"

namespace mcbsde {

Matrix canonical_integrand(const Matrix& z, const Matrix& offset, int state) {
  return jump_differences(z, state) - jump_differences(offset, state);
}

double sup_difference(const Solution& a, const Solution& b) {
  if (a.grid != b.grid) throw std::invalid_argument("sup_difference: solutions on different grids");
  double worst = 0.0;
  for (int g = 0; g < a.z.num_nodes(); ++g) {
    worst = std::max(worst, (a.z.node(g) - b.z.node(g)).cwiseAbs().maxCoeff());
  }
  return worst;
}

namespace {

// Sample points interleave nodes and cell midpoints: point 2k is node k and
// point 2k+1 is the middle of cell k.
using Samples = std::vector<Matrix>;                   // [point] K x N, column i = state i
using StateSamples = std::vector<std::vector<Matrix>>;  // [point][state] K x N

struct Problem {
  const RateSchedule& schedule;
  std::vector<double> grid;
  std::vector<CellPropagator> cells;
  OccupationProbabilities occupation;
  std::vector<double> times;
  std::vector<std::vector<Matrix>> densities;  // [piece][state]
  int k;
  int n;

  int num_points() const { return static_cast<int>(times.size()); }
  int num_cells() const { return static_cast<int>(cells.size()); }
  const Vector& probability(int p) const {
    return p % 2 == 0 ? occupation.nodes[p / 2] : occupation.midpoints[p / 2];
  }
};

Problem make_problem(const RateSchedule& schedule, int steps, const Vector& x0, int dimension) {
  if (steps < 2) throw std::invalid_argument("grid_steps must be at least 2");
  const int n = schedule.num_states();
  Vector dist = x0.size() == 0 ? Vector::Constant(n, 1.0 / n) : x0;
  if (dist.size() != n) throw std::invalid_argument("initial distribution has wrong length");

  Problem pb{schedule, make_time_grid(schedule, steps), {}, {}, {}, {}, dimension, n};
  pb.cells = cell_propagators(pb.grid, schedule);
  pb.occupation = occupation_probabilities(pb.cells, dist);
  for (std::size_t g = 0; g < pb.grid.size(); ++g) {
    pb.times.push_back(pb.grid[g]);
    if (g + 1 < pb.grid.size()) pb.times.push_back(0.5 * (pb.grid[g] + pb.grid[g + 1]));
  }
  for (int piece = 0; piece < schedule.num_pieces(); ++piece) {
    std::vector<Matrix> per_state;
    for (int i = 0; i < n; ++i) per_state.push_back(qv_density(schedule.generator(piece), i));
    pb.densities.push_back(std::move(per_state));
  }
  return pb;
}

struct Iterate {
  std::vector<Matrix> nodes;
  std::vector<Matrix> left;
  std::vector<Matrix> right;
  Samples z;
  StateSamples y;
};

void fill_samples(const Problem& pb, Iterate& it, const StateSamples& offsets) {
  const int cells = pb.num_cells();
  it.z.assign(pb.num_points(), Matrix());
  for (int c = 0; c < cells; ++c) {
    it.z[2 * c] = it.nodes[c];
    it.z[2 * c + 1] = hermite_midpoint(it.nodes[c], it.nodes[c + 1], it.right[c],
                                       it.left[c + 1], pb.cells[c].width);
  }
  it.z[2 * cells] = it.nodes[cells];
  it.y.assign(pb.num_points(), std::vector<Matrix>(pb.n));
  for (int p = 0; p < pb.num_points(); ++p) {
    for (int i = 0; i < pb.n; ++i) it.y[p][i] = canonical_integrand(it.z[p], offsets[p][i], i);
  }
}

// One backward sweep: Z_k = Z_{k+1} e^{hA} - int_{s_k}^{s_{k+1}} F(u) P(s_k, u) du,
// the integral by Simpson's rule with exact propagators.
Iterate stage1_core(const Problem& pb, const Samples& f, const StateSamples& offsets,
                    const Matrix& q) {
  const int cells = pb.num_cells();
  Iterate it;
  it.nodes.assign(cells + 1, Matrix());
  it.left.assign(cells + 1, Matrix());
  it.right.assign(cells + 1, Matrix());
  it.nodes[cells] = q;
  for (int c = cells - 1; c >= 0; --c) {
    const CellPropagator& cell = pb.cells[c];
    const Matrix quadrature = f[2 * c] + 4.0 * times_stochastic(f[2 * c + 1], cell.half) +
                              times_stochastic(f[2 * c + 2], cell.full);
    it.nodes[c] = times_stochastic(it.nodes[c + 1], cell.full) - (cell.width / 6.0) * quadrature;
  }
  for (int c = 0; c < cells; ++c) {
    const Matrix& a = pb.schedule.generator(pb.cells[c].piece);
    it.right[c] = f[2 * c] - times_generator(it.nodes[c], a);
    it.left[c + 1] = f[2 * c + 2] - times_generator(it.nodes[c + 1], a);
  }
  it.left[0] = it.right[0];
  it.right[cells] = it.left[cells];
  fill_samples(pb, it, offsets);
  return it;
}

// int_0^T w(u) sum_i p_i(u) ||a_i(u) - b_i(u)||^2_{e_i} du, Simpson on each cell.
double expected_seminorm_gap(const Problem& pb, const StateSamples& a, const StateSamples& b,
                             double weight_rate) {
  const double horizon = pb.schedule.horizon();
  double total = 0.0;
  for (int c = 0; c < pb.num_cells(); ++c) {
    const auto& dens = pb.densities[pb.cells[c].piece];
    double simpson = 0.0;
    for (int m = 0; m < 3; ++m) {
      const int p = 2 * c + m;
      const Vector& prob = pb.probability(p);
      double value = 0.0;
      for (int i = 0; i < pb.n; ++i) {
        if (prob(i) == 0.0) continue;
        const Matrix d = a[p][i] - b[p][i];
        value += prob(i) * (d * dens[i] * d.transpose()).trace();
      }
      const double w = weight_rate > 0.0 ? std::exp(weight_rate * (pb.times[p] - horizon)) : 1.0;
      simpson += (m == 1 ? 4.0 : 1.0) * w * value;
    }
    total += pb.cells[c].width / 6.0 * simpson;
  }
  return total;
}

// int_0^T sum_i p_i(u) |a(u, e_i) - b(u, e_i)|^2 du.
double expected_square_gap(const Problem& pb, const Samples& a, const Samples& b) {
  double total = 0.0;
  for (int c = 0; c < pb.num_cells(); ++c) {
    double simpson = 0.0;
    for (int m = 0; m < 3; ++m) {
      const int p = 2 * c + m;
      const Vector col_sq = (a[p] - b[p]).colwise().squaredNorm().transpose();
      simpson += (m == 1 ? 4.0 : 1.0) * pb.probability(p).dot(col_sq);
    }
    total += pb.cells[c].width / 6.0 * simpson;
  }
  return total;
}

double sup_node_gap(const std::vector<Matrix>& a, const std::vector<Matrix>& b) {
  double worst = 0.0;
  for (std::size_t g = 0; g < a.size(); ++g) {
    worst = std::max(worst, (a[g] - b[g]).cwiseAbs().maxCoeff());
  }
  return worst;
}

Solution make_solution(const Problem& pb, Iterate it, Stage stage, int steps, double tol) {
  std::vector<std::vector<Matrix>> y_nodes, y_mids;
  for (int p = 0; p < pb.num_points(); ++p) {
    (p % 2 == 0 ? y_nodes : y_mids).push_back(std::move(it.y[p]));
  }
  StateFunction z(pb.grid, std::move(it.nodes), std::move(it.left), std::move(it.right));
  IntegrandField y(pb.grid, std::move(y_nodes), std::move(y_mids));
  return Solution{pb.grid, std::move(z), std::move(y), stage, steps, tol};
}

void check_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw std::domain_error(std::string("non-finite driver output in ") + what);
}

using SampledF = std::function<Vector(int point, int state, const Matrix& y)>;

struct PicardOutcome {
  Iterate last;
  bool converged = false;
};

PicardOutcome run_stage2(const Problem& pb, const SampledF& f, const StateSamples& offsets,
                         const Matrix& q, StateSamples y_prev, double c, double tol, int max_iter,
                         PicardReport& report) {
  const double weight_rate = std::isfinite(c) ? 2.0 * c * c : 0.0;
  std::optional<Iterate> prev;
  Samples fs(pb.num_points(), Matrix(pb.k, pb.n));
  while (true) {
    for (int p = 0; p < pb.num_points(); ++p) {
      for (int i = 0; i < pb.n; ++i) fs[p].col(i) = f(p, i, y_prev[p][i]);
      check_finite(fs[p], "the Picard driver");
    }
    Iterate next = stage1_core(pb, fs, offsets, q);
    report.y_increments.push_back(expected_seminorm_gap(pb, next.y, y_prev, weight_rate));
    const auto& inc = report.y_increments;
    if (inc.size() >= 2) report.observed_ratios.push_back(inc[inc.size() - 1] / inc[inc.size() - 2]);
    if (prev) {
      const double sup = sup_node_gap(next.nodes, prev->nodes);
      report.z_sup_increments.push_back(sup);
      report.z_l2_increments.push_back(expected_square_gap(pb, next.z, prev->z));
      ++report.iterations;
      if (sup <= tol) return {std::move(next), true};
      if (report.iterations >= max_iter) return {std::move(next), false};
    }
    y_prev = next.y;
    prev = std::move(next);
  }
}

double resolve_c(const Driver& driver, const TerminalCondition& q, const RateSchedule& schedule,
                 const SolverOptions& options, bool& estimated) {
  estimated = false;
  if (options.lipschitz_c) return *options.lipschitz_c;
  if (driver.lipschitz_c) return *driver.lipschitz_c;
  estimated = true;
  const double bound = std::max(1.0, 2.0 * q.values().cwiseAbs().maxCoeff());
  return estimate_lipschitz(driver, schedule, {bound, bound}, 20000, options.lipschitz_seed).c;
}

void fill_constants(PicardReport& report, const RateSchedule& schedule, double c) {
  report.lipschitz_c = c;
  report.x = c > 0.0 ? 1.0 / (std::sqrt(2.0) * c) : std::numeric_limits<double>::infinity();
  report.gronwall_constant = 7.0 * c * c + 0.25;
  report.three_a = 3.0 * schedule.max_abs_rate();
}

void check_inputs(const TerminalCondition& q, const RateSchedule& schedule,
                  const SolverOptions& options) {
  if (q.num_states() != schedule.num_states()) {
    throw std::invalid_argument("terminal condition and schedule disagree on N");
  }
  if (!(options.tol > 0.0)) throw std::invalid_argument("tol must be positive");
  if (options.max_iter < 1) throw std::invalid_argument("max_iter must be at least 1");
}

StateSamples seed_y(const Problem& pb, const SolverOptions& options) {
  StateSamples y(pb.num_points(), std::vector<Matrix>(pb.n, Matrix::Zero(pb.k, pb.n)));
  if (!options.y_seed) return y;
  for (int p = 0; p < pb.num_points(); ++p) {
    for (int i = 0; i < pb.n; ++i) {
      y[p][i] = options.y_seed(pb.times[p], i);
      y[p][i] = jump_differences(y[p][i], i);
    }
  }
  return y;
}

Solution stage2_solution(const Problem& pb, PicardOutcome outcome, const SolverOptions& options,
                         Stage stage) {
  return make_solution(pb, std::move(outcome.last), stage, options.grid_steps, options.tol);
}

}  // namespace

Solution solve_stage1(const ExogenousF& f0, const ExogenousG& g0, const TerminalCondition& q,
                      const RateSchedule& schedule, int grid_steps) {
  if (q.num_states() != schedule.num_states()) {
    throw std::invalid_argument("terminal condition and schedule disagree on N");
  }
  const Problem pb = make_problem(schedule, grid_steps, Vector(), q.dimension());
  Samples fs(pb.num_points(), Matrix(pb.k, pb.n));
  StateSamples offsets(pb.num_points(), std::vector<Matrix>(pb.n));
  for (int p = 0; p < pb.num_points(); ++p) {
    for (int i = 0; i < pb.n; ++i) {
      fs[p].col(i) = f0(pb.times[p], i);
      offsets[p][i] = g0(pb.times[p], i);
      check_finite(offsets[p][i], "G0");
    }
    check_finite(fs[p], "F0 (quadrature failure)");
  }
  return make_solution(pb, stage1_core(pb, fs, offsets, q.values()), Stage::kExogenous,
                       grid_steps, 0.0);
}

std::pair<Solution, PicardReport> solve_stage2(const YDriverF& f, const ExogenousG& g0,
                                               const TerminalCondition& q,
                                               const RateSchedule& schedule,
                                               const SolverOptions& options) {
  check_inputs(q, schedule, options);
  const Problem pb = make_problem(schedule, options.grid_steps, options.initial_distribution,
                                  q.dimension());

  PicardReport report;
  report.stage = Stage::kYDependent;
  Driver as_driver;
  as_driver.dimension = q.dimension();
  as_driver.f = [&f](double t, int i, const Vector&, const Matrix& y) { return f(t, i, y); };
  as_driver.g = [&g0](double t, int i, const Vector&) { return g0(t, i); };
  const double c = resolve_c(as_driver, q, schedule, options, report.c_estimated);
  fill_constants(report, schedule, c);
  report.ratio_bound = 0.5;

  StateSamples offsets(pb.num_points(), std::vector<Matrix>(pb.n));
  for (int p = 0; p < pb.num_points(); ++p)
    for (int i = 0; i < pb.n; ++i) offsets[p][i] = g0(pb.times[p], i);

  const SampledF sampled = [&](int p, int i, const Matrix& y) { return f(pb.times[p], i, y); };
  PicardOutcome outcome = run_stage2(pb, sampled, offsets, q.values(), seed_y(pb, options), c,
                                     options.tol, options.max_iter, report);
  report.converged = outcome.converged;
  Solution solution = stage2_solution(pb, std::move(outcome), options, Stage::kYDependent);
  if (!report.converged) {
    throw NoConvergence("stage-2 Picard iteration reached max_iter", report, std::move(solution));
  }
  return {std::move(solution), std::move(report)};
}

std::pair<Solution, PicardReport> solve_general(const Driver& driver, const TerminalCondition& q,
                                                const RateSchedule& schedule,
                                                const SolverOptions& options) {
  check_inputs(q, schedule, options);
  const Problem pb = make_problem(schedule, options.grid_steps, options.initial_distribution,
                                  q.dimension());
  PicardReport report;
  report.stage = Stage::kGeneral;
  const double c = resolve_c(driver, q, schedule, options, report.c_estimated);
  fill_constants(report, schedule, c);
  const double growth = schedule.horizon() * (4.0 * c * c + 1.0);
  const double log_factor = std::log(growth) + growth;

  Samples frozen(pb.num_points());
  for (int p = 0; p < pb.num_points(); ++p) {
    if (options.z_seed) {
      frozen[p].resize(pb.k, pb.n);
      for (int i = 0; i < pb.n; ++i) frozen[p].col(i) = options.z_seed(pb.times[p], i);
    } else {
      frozen[p] = q.values();
    }
  }
  std::optional<StateSamples> prev_y;

  while (true) {
    StateSamples offsets(pb.num_points(), std::vector<Matrix>(pb.n));
    for (int p = 0; p < pb.num_points(); ++p) {
      for (int i = 0; i < pb.n; ++i) {
        offsets[p][i] = driver.g(pb.times[p], i, frozen[p].col(i));
        check_finite(offsets[p][i], "G");
      }
    }
    const SampledF sampled = [&](int p, int i, const Matrix& y) {
      return driver.f(pb.times[p], i, frozen[p].col(i), y);
    };
    PicardReport inner;
    PicardOutcome outcome = run_stage2(pb, sampled, offsets, q.values(), seed_y(pb, SolverOptions{}),
                                       c, options.tol, options.max_iter, inner);
    report.inner_iterations.push_back(inner.iterations);
    if (!outcome.converged) {
      report.converged = false;
      Solution last = make_solution(pb, std::move(outcome.last), Stage::kGeneral,
                                    options.grid_steps, options.tol);
      throw NoConvergence("inner Picard iteration reached max_iter at outer step " +
                              std::to_string(report.iterations + 1),
                          report, std::move(last));
    }

    Iterate& next = outcome.last;
    double sup = 0.0;
    for (int g = 0; g <= pb.num_cells(); ++g) {
      sup = std::max(sup, (next.nodes[g] - frozen[2 * g]).cwiseAbs().maxCoeff());
    }
    report.z_sup_increments.push_back(sup);
    report.z_l2_increments.push_back(expected_square_gap(pb, next.z, frozen));
    if (prev_y) report.y_increments.push_back(expected_seminorm_gap(pb, next.y, *prev_y, 0.0));
    report.log_factorial_bound.push_back(report.iterations * log_factor -
                                         std::lgamma(report.iterations + 1.0));
    ++report.iterations;

    const bool done = sup <= options.tol;
    if (done || report.iterations >= options.max_iter) {
      report.converged = done;
      Solution solution = make_solution(pb, std::move(next), Stage::kGeneral, options.grid_steps,
                                        options.tol);
      if (!done) {
        throw NoConvergence("outer Picard iteration reached max_iter", report, std::move(solution));
      }
      return {std::move(solution), std::move(report)};
    }
    frozen = next.z;
    prev_y = std::move(next.y);
  }
}

std::pair<Solution, PicardReport> solve(const Driver& driver, const TerminalCondition& q,
                                        const RateSchedule& schedule,
                                        const SolverOptions& options) {
  const int k = driver.dimension;
  const Vector zero_z = Vector::Zero(k);
  switch (required_stage(driver)) {
    case Stage::kExogenous: {
      const Matrix zero_y = Matrix::Zero(k, schedule.num_states());
      Solution s = solve_stage1(
          [&](double t, int i) { return driver.f(t, i, zero_z, zero_y); },
          [&](double t, int i) { return driver.g(t, i, zero_z); }, q, schedule,
          options.grid_steps);
      PicardReport report;
      report.stage = Stage::kExogenous;
      fill_constants(report, schedule, driver.lipschitz_c.value_or(0.0));
      report.iterations = 1;
      report.converged = true;
      return {std::move(s), std::move(report)};
    }
    case Stage::kYDependent:
      return solve_stage2([&](double t, int i, const Matrix& y) { return driver.f(t, i, zero_z, y); },
                          [&](double t, int i) { return driver.g(t, i, zero_z); }, q, schedule,
                          options.lipschitz_c || !driver.lipschitz_c
                              ? options
                              : [&] {
                                  SolverOptions o = options;
                                  o.lipschitz_c = driver.lipschitz_c;
                                  return o;
                                }());
    case Stage::kGeneral:
      return solve_general(driver, q, schedule, options);
  }
  throw std::logic_error("unreachable stage");
}

Solution solve_ode_oracle(const Driver& driver, const TerminalCondition& q,
                          const RateSchedule& schedule, int grid_steps) {
  if (q.num_states() != schedule.num_states()) {
    throw std::invalid_argument("terminal condition and schedule disagree on N");
  }
  const Problem pb = make_problem(schedule, grid_steps, Vector(), q.dimension());
  const int n = pb.n;

  auto rhs = [&](double t, const Matrix& a, const Matrix& z) {
    Matrix out = -times_generator(z, a);
    for (int i = 0; i < n; ++i) {
      const Vector zi = z.col(i);
      const Matrix yi = canonical_integrand(z, driver.g(t, i, zi), i);
      out.col(i) += driver.f(t, i, zi, yi);
    }
    check_finite(out, "the ODE oracle right-hand side");
    return out;
  };

  const int cells = pb.num_cells();
  Iterate it;
  it.nodes.assign(cells + 1, Matrix());
  it.left.assign(cells + 1, Matrix());
  it.right.assign(cells + 1, Matrix());
  it.nodes[cells] = q.values();
  for (int c = cells - 1; c >= 0; --c) {
    const Matrix& a = schedule.generator(pb.cells[c].piece);
    const double h = pb.cells[c].width;
    const double t1 = pb.grid[c + 1];
    const double tm = pb.times[2 * c + 1];
    const double t0 = pb.grid[c];
    const Matrix& z = it.nodes[c + 1];
    const Matrix k1 = rhs(t1, a, z);
    const Matrix k2 = rhs(tm, a, z - 0.5 * h * k1);
    const Matrix k3 = rhs(tm, a, z - 0.5 * h * k2);
    const Matrix k4 = rhs(t0, a, z - h * k3);
    it.nodes[c] = z - (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    it.left[c + 1] = k1;
    it.right[c] = rhs(t0, a, it.nodes[c]);
  }
  it.left[0] = it.right[0];
  it.right[cells] = it.left[cells];

  // offsets need the interpolated z, so they are filled after the sweep
  Samples z_samples(pb.num_points());
  for (int c = 0; c < cells; ++c) {
    z_samples[2 * c] = it.nodes[c];
    z_samples[2 * c + 1] = hermite_midpoint(it.nodes[c], it.nodes[c + 1], it.right[c],
                                            it.left[c + 1], pb.cells[c].width);
  }
  z_samples[2 * cells] = it.nodes[cells];
  StateSamples offsets(pb.num_points(), std::vector<Matrix>(n));
  for (int p = 0; p < pb.num_points(); ++p)
    for (int i = 0; i < n; ++i) offsets[p][i] = driver.g(pb.times[p], i, z_samples[p].col(i));
  fill_samples(pb, it, offsets);
  return make_solution(pb, std::move(it), required_stage(driver), grid_steps, 0.0);
}

}  // namespace mcbsde
