#pragma once

#include <string>
#include <vector>

#include "mcbsde/solver.hpp"

namespace mcbsde {

inline constexpr double kContractionSlack = 0.05;

struct ContractionSummary {
  bool passed = true;
  bool vacuous = false;
  int assessed = 0;
  double worst_ratio = 0.0;  // stage 2: max assessed ratio; stage 3: max z_l2[n] / bound[n]
  double bound = 0.0;
  std::string detail;
};

// Stage 2: every weighted Y-increment ratio with a non-negligible denominator
// is at most ratio_bound + slack. Stage 3: z_l2[n] <= exp(log_factorial_bound[n]) z_l2[0].
// Fewer than two increments pass vacuously.
ContractionSummary contraction_diagnostics(const PicardReport& report,
                                           double slack = kContractionSlack);

struct ResidualReport {
  double max_residual = 0.0;
  double worst_time = 0.0;
};

// max_t |z(t, X_t) + int_t^T F du + int_t^T [G + y](u, X_{u-}) dM_u - q(X_T)| over the
// solver grid, breakpoints and jump times (both sides of each jump).
ResidualReport pathwise_residual(const Solution& solution, const Driver& driver,
                                 const TerminalCondition& q, const ChainPath& path,
                                 const RateSchedule& schedule);

// Same residual for the dX form: int F* du + int [G + y] dX_u.
ResidualReport pathwise_residual_dx(const Solution& solution, const DxDriver& driver,
                                    const TerminalCondition& q, const ChainPath& path,
                                    const RateSchedule& schedule);

// z(t, X_t) - int_0^t F(u, X_u, z, y) du at each requested time (sorted).
// A martingale when the solution is exact.
std::vector<Vector> consistency_process(const Solution& solution, const Driver& driver,
                                        const ChainPath& path, const RateSchedule& schedule,
                                        const std::vector<double>& times);

}  // namespace mcbsde
