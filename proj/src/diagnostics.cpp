#include "mcbsde/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mcbsde {

ContractionSummary contraction_diagnostics(const PicardReport& report, double slack) {
  ContractionSummary out;
  std::ostringstream detail;
  if (report.stage == Stage::kGeneral) {
    const auto& inc = report.z_l2_increments;
    if (inc.size() < 2) {
      out.vacuous = true;
      out.detail = "fewer than two outer increments";
      return out;
    }
    for (std::size_t n = 1; n < inc.size() && n < report.log_factorial_bound.size(); ++n) {
      const double bound = std::exp(report.log_factorial_bound[n]) * inc[0] * (1.0 + 1e-9) + 1e-30;
      ++out.assessed;
      out.worst_ratio = std::max(out.worst_ratio, inc[n] / bound);
      if (!(inc[n] <= bound)) {
        out.passed = false;
        detail << "increment " << n << " = " << inc[n] << " exceeds bound " << bound << "; ";
      }
    }
    out.bound = 1.0;
    out.detail = detail.str();
    return out;
  }

  const auto& inc = report.y_increments;
  if (report.stage == Stage::kExogenous || inc.size() < 2 || !report.ratio_bound) {
    out.vacuous = true;
    out.detail = "fewer than two weighted increments";
    return out;
  }
  out.bound = *report.ratio_bound + slack;
  const double floor = std::max(1e-22, 1e-16 * inc[0]);
  for (std::size_t r = 0; r < report.observed_ratios.size(); ++r) {
    if (!(inc[r] > floor)) continue;
    ++out.assessed;
    const double ratio = report.observed_ratios[r];
    out.worst_ratio = std::max(out.worst_ratio, ratio);
    if (!(ratio <= out.bound)) {
      out.passed = false;
      detail << "ratio " << r << " = " << ratio << " exceeds " << out.bound << "; ";
    }
  }
  if (out.assessed == 0) out.vacuous = true;
  out.detail = detail.str();
  return out;
}

namespace {

std::vector<double> event_times(const std::vector<double>& grid, const ChainPath& path,
                                const RateSchedule& schedule) {
  std::vector<double> cuts = grid;
  for (double b : schedule.breakpoints()) cuts.push_back(b);
  for (const Jump& jump : path.jumps()) cuts.push_back(jump.time);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  return cuts;
}

// Three-point Gauss-Legendre rule. Nodes stay inside the sub-interval, so a
// generator looked up by time never sees the piece on the other side of a
// breakpoint.
template <class Integrand>
Vector gauss3(double a, double b, Integrand&& f) {
  static const double offset = std::sqrt(0.6);
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  return half * ((5.0 / 9.0) * f(mid - half * offset) + (8.0 / 9.0) * f(mid) +
                 (5.0 / 9.0) * f(mid + half * offset));
}

struct Event {
  double t;
  int state;
  Vector cumulative;
};

// Cumulative int_0^t drift(u, X_u) du + sum_{tau <= t} jump(tau, X_{tau-}, X_tau)
// on both sides of every event.
template <class Drift, class JumpTerm>
std::vector<Event> accumulate(const std::vector<double>& cuts, const ChainPath& path, int dim,
                              Drift&& drift, JumpTerm&& jump) {
  std::vector<Event> events;
  int state = path.initial_state();
  Vector cumulative = Vector::Zero(dim);
  events.push_back({cuts.front(), state, cumulative});
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double a = cuts[k];
    const double b = cuts[k + 1];
    cumulative += gauss3(a, b, [&](double u) -> Vector { return drift(u, state); });
    events.push_back({b, state, cumulative});
    const int after = path.state_at(b);
    if (after != state) {
      cumulative += jump(b, state, after);
      state = after;
      events.push_back({b, state, cumulative});
    }
  }
  return events;
}

ResidualReport residual_from(const std::vector<Event>& events, const Solution& solution,
                             const TerminalCondition& q, const ChainPath& path) {
  const Vector target = q(path.terminal_state());
  const Vector& total = events.back().cumulative;
  ResidualReport report;
  for (const Event& e : events) {
    const Vector lhs = solution.z(e.t, e.state) + (total - e.cumulative);
    const double size = (lhs - target).cwiseAbs().maxCoeff();
    if (size > report.max_residual) {
      report.max_residual = size;
      report.worst_time = e.t;
    }
  }
  return report;
}

}  // namespace

ResidualReport pathwise_residual(const Solution& solution, const Driver& driver,
                                 const TerminalCondition& q, const ChainPath& path,
                                 const RateSchedule& schedule) {
  const auto cuts = event_times(solution.grid, path, schedule);
  auto integrand_sum = [&](double u, int i) -> Matrix {
    return driver.g(u, i, solution.z(u, i)) + solution.y(u, i);
  };
  auto drift = [&](double u, int i) -> Vector {
    const Vector zi = solution.z(u, i);
    const Vector f = driver.f(u, i, zi, solution.y(u, i));
    const Vector compensator = integrand_sum(u, i) * schedule.generator_at(u).col(i);
    return f - compensator;
  };
  auto jump = [&](double tau, int from, int to) -> Vector {
    const Matrix h = integrand_sum(tau, from);
    return h.col(to) - h.col(from);
  };
  return residual_from(accumulate(cuts, path, driver.dimension, drift, jump), solution, q, path);
}

ResidualReport pathwise_residual_dx(const Solution& solution, const DxDriver& driver,
                                    const TerminalCondition& q, const ChainPath& path,
                                    const RateSchedule& schedule) {
  const auto cuts = event_times(solution.grid, path, schedule);
  auto drift = [&](double u, int i) -> Vector {
    return driver.f_star(u, i, solution.z(u, i), solution.y(u, i));
  };
  auto jump = [&](double tau, int from, int to) -> Vector {
    const Matrix h = driver.g(tau, from, solution.z(tau, from)) + solution.y(tau, from);
    return h.col(to) - h.col(from);
  };
  return residual_from(accumulate(cuts, path, driver.dimension, drift, jump), solution, q, path);
}

std::vector<Vector> consistency_process(const Solution& solution, const Driver& driver,
                                        const ChainPath& path, const RateSchedule& schedule,
                                        const std::vector<double>& times) {
  std::vector<double> grid = solution.grid;
  grid.insert(grid.end(), times.begin(), times.end());
  const auto cuts = event_times(grid, path, schedule);
  auto drift = [&](double u, int i) -> Vector {
    return driver.f(u, i, solution.z(u, i), solution.y(u, i));
  };
  auto no_jump = [&](double, int, int) -> Vector { return Vector::Zero(driver.dimension); };
  const auto events = accumulate(cuts, path, driver.dimension, drift, no_jump);

  std::vector<Vector> out;
  out.reserve(times.size());
  for (double t : times) {
    // last event at time t is the post-jump one
    auto it = std::upper_bound(events.begin(), events.end(), t,
                               [](double value, const Event& e) { return value < e.t; });
    const Event& e = *std::prev(it);
    out.push_back(solution.z(t, e.state) - e.cumulative);
  }
  return out;
}

}  // namespace mcbsde
