#include "mcbsde/representation.hpp"

#include <algorithm>
#include <cmath>

namespace mcbsde {

TerminalCondition::TerminalCondition(Matrix values) : values_(std::move(values)) {
  if (values_.rows() < 1 || values_.cols() < 2) {
    throw std::invalid_argument("terminal condition needs K >= 1 rows and N >= 2 states");
  }
  if (!values_.allFinite()) throw std::invalid_argument("terminal condition must be finite");
}

StateFunction conditional_expectation(const TerminalCondition& q, const RateSchedule& schedule,
                                      int steps) {
  if (q.num_states() != schedule.num_states()) {
    throw std::invalid_argument("terminal condition and schedule disagree on N");
  }
  std::vector<double> grid = make_time_grid(schedule, steps);
  const auto cells = cell_propagators(grid, schedule);
  const std::size_t nodes = grid.size();

  std::vector<Matrix> values(nodes);
  values.back() = q.values();
  for (std::size_t k = nodes - 1; k-- > 0;) {
    values[k] = times_stochastic(values[k + 1], cells[k].full);
  }

  // d/dt L = -L A, one-sided at breakpoints
  std::vector<Matrix> left(nodes), right(nodes);
  for (std::size_t g = 0; g < nodes; ++g) {
    const Matrix& a_left = schedule.generator(cells[g == 0 ? 0 : g - 1].piece);
    const Matrix& a_right = schedule.generator(cells[std::min(g, nodes - 2)].piece);
    left[g] = -times_generator(values[g], a_left);
    right[g] = -times_generator(values[g], a_right);
  }
  StateFunction l(std::move(grid), std::move(values), std::move(left), std::move(right));
  const double residual = harmonicity_residual(l, schedule);
  if (!(residual <= kHarmonicityTolerance)) {
    throw NotMartingale("conditional expectation failed the harmonicity check", residual);
  }
  l.set_tag(SurfaceTag::kMartingale);
  return l;
}

double harmonicity_residual(const StateFunction& l, const RateSchedule& schedule) {
  const auto& grid = l.grid();
  const auto cells = cell_propagators(grid, schedule);
  double scale = 1.0;
  for (int g = 0; g < l.num_nodes(); ++g) scale = std::max(scale, l.node(g).cwiseAbs().maxCoeff());
  double worst = 0.0;
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const Matrix r = l.node(static_cast<int>(k)) -
                     times_stochastic(l.node(static_cast<int>(k + 1)), cells[k].full);
    worst = std::max(worst, r.cwiseAbs().maxCoeff() / scale);
  }
  return worst;
}

IntegrandField representation_integrand(const StateFunction& l, const RateSchedule& schedule) {
  const double residual = harmonicity_residual(l, schedule);
  if (!(residual <= kHarmonicityTolerance)) {
    throw NotMartingale("representation_integrand needs a martingale state function", residual);
  }
  const auto& grid = l.grid();
  const int n = l.num_states();
  std::vector<std::vector<Matrix>> nodes(grid.size(), std::vector<Matrix>(n));
  std::vector<std::vector<Matrix>> mids(grid.size() - 1, std::vector<Matrix>(n));
  for (std::size_t g = 0; g < grid.size(); ++g) {
    for (int i = 0; i < n; ++i) nodes[g][i] = jump_differences(l.node(static_cast<int>(g)), i);
  }
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const Matrix mid = l.at(0.5 * (grid[k] + grid[k + 1]));
    for (int i = 0; i < n; ++i) mids[k][i] = jump_differences(mid, i);
  }
  return IntegrandField(grid, std::move(nodes), std::move(mids));
}

ReconstructionReport reconstruct(const StateFunction& l, const IntegrandField& y,
                                 const ChainPath& path, const RateSchedule& schedule) {
  std::vector<double> cuts = l.grid();
  cuts.insert(cuts.end(), y.grid().begin(), y.grid().end());
  for (double b : schedule.breakpoints()) cuts.push_back(b);
  for (const Jump& jump : path.jumps()) cuts.push_back(jump.time);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  ReconstructionReport report;
  auto record = [&](const Vector& r, double t) {
    const double size = r.cwiseAbs().maxCoeff();
    if (size > report.max_residual) {
      report.max_residual = size;
      report.worst_time = t;
    }
  };

  const Vector start = l(0.0, path.initial_state());
  Vector integral = Vector::Zero(l.dimension());
  int state = path.initial_state();
  record(start + integral - l(0.0, state), 0.0);
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double a = cuts[k];
    const double b = cuts[k + 1];
    const Matrix& gen = schedule.generator(schedule.piece_at(0.5 * (a + b)));
    // y is quadratic on each sub-interval, so Simpson's rule is exact here
    auto drift = [&](double u) -> Vector { return y(u, state) * gen.col(state); };
    integral -= (b - a) / 6.0 * (drift(a) + 4.0 * drift(0.5 * (a + b)) + drift(b));
    record(start + integral - l(b, state), b);
    const int after = path.state_at(b);
    if (after != state) {
      const Matrix yb = y(b, state);
      integral += yb.col(after) - yb.col(state);
      state = after;
      record(start + integral - l(b, state), b);
    }
  }
  return report;
}

double integrability_diagnostic(const IntegrandField& y, const RateSchedule& schedule,
                                const Vector& initial_distribution) {
  const auto& grid = y.grid();
  const auto cells = cell_propagators(grid, schedule);
  const auto occupation = occupation_probabilities(cells, initial_distribution);
  const int n = y.num_states();

  double total = 0.0;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const Matrix& a = schedule.generator(cells[k].piece);
    auto weighted = [&](const Vector& p, auto&& value_at) {
      double sum = 0.0;
      for (int i = 0; i < n; ++i) {
        if (p(i) == 0.0) continue;
        sum += p(i) * seminorm_sq_v(value_at(i), SeminormContext(a, i));
      }
      return sum;
    };
    const int g = static_cast<int>(k);
    const double left = weighted(occupation.nodes[k], [&](int i) -> const Matrix& { return y.node(g, i); });
    const double mid = weighted(occupation.midpoints[k], [&](int i) -> const Matrix& { return y.midpoint(g, i); });
    const double right = weighted(occupation.nodes[k + 1], [&](int i) -> const Matrix& { return y.node(g + 1, i); });
    total += cells[k].width / 6.0 * (left + 4.0 * mid + right);
  }
  return total;
}

}  // namespace mcbsde
