#pragma once

#include <stdexcept>

#include "mcbsde/calculus.hpp"
#include "mcbsde/surface.hpp"

namespace mcbsde {

// Markovian terminal data Q = q(X_T): column i of `values` is q(e_i).
class TerminalCondition {
 public:
  explicit TerminalCondition(Matrix values);

  int dimension() const { return static_cast<int>(values_.rows()); }
  int num_states() const { return static_cast<int>(values_.cols()); }
  const Matrix& values() const { return values_; }
  Vector operator()(int state) const { return values_.col(state); }

 private:
  Matrix values_;
};

inline constexpr double kHarmonicityTolerance = 1e-8;

class NotMartingale : public std::invalid_argument {
 public:
  NotMartingale(const std::string& what, double residual)
      : std::invalid_argument(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

// l(t, e_i) = E[q(X_T) | X_t = e_i] on make_time_grid(schedule, steps), with
// exact node values (products of one-cell exponentials) and Hermite slopes
// from the backward equation. Tagged as a martingale after the residual check.
StateFunction conditional_expectation(const TerminalCondition& q, const RateSchedule& schedule,
                                      int steps);

// max over grid cells of |l(s_k) - l(s_{k+1}) P(s_k, s_{k+1})|, relative to max(1, max |l|).
// Node values of a martingale surface satisfy this to rounding on any grid.
double harmonicity_residual(const StateFunction& l, const RateSchedule& schedule);

// Canonical integrand of a martingale l(t, X_t): column j of y(t, e_i) is
// l(t, e_j) - l(t, e_i), the jump of L when X moves from e_i to e_j. Column i
// is zero. Throws NotMartingale when the harmonicity residual exceeds tolerance.
IntegrandField representation_integrand(const StateFunction& l, const RateSchedule& schedule);

// Column j of the result is values.col(j) - values.col(state).
inline Matrix jump_differences(const Matrix& values, int state) {
  return values.colwise() - values.col(state);
}

struct ReconstructionReport {
  double max_residual = 0.0;
  double worst_time = 0.0;
};

// max_t |l(0, X_0) + int_0^t y(u, X_{u-}) dM_u - l(t, X_t)| over the union of
// the surface grid, breakpoints and jump times (both sides of every jump).
ReconstructionReport reconstruct(const StateFunction& l, const IntegrandField& y,
                                 const ChainPath& path, const RateSchedule& schedule);

// E int_0^T ||y(u, X_u)||^2_{X_u} du with X_0 ~ x0, using exact occupation
// probabilities and Simpson's rule on the field's own grid.
double integrability_diagnostic(const IntegrandField& y, const RateSchedule& schedule,
                                const Vector& initial_distribution);

}  // namespace mcbsde
