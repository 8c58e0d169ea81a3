#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mcbsde/driver.hpp"
#include "mcbsde/representation.hpp"
#include "mcbsde/surface.hpp"

namespace mcbsde {

// Exogenous drivers for the first stage: F0(t, e_i) and G0(t, e_i).
using ExogenousF = std::function<Vector(double t, int state)>;
using ExogenousG = std::function<Matrix(double t, int state)>;
// Y-dependent driver for the second stage: F(t, e_i, Y).
using YDriverF = std::function<Vector(double t, int state, const Matrix& y)>;

struct SolverOptions {
  int grid_steps = 1000;
  double tol = 1e-10;
  int max_iter = 200;
  // Law of X_0 used for the expectation-weighted norms; empty means uniform.
  Vector initial_distribution;
  // Overrides the driver's declared constant. When neither is set the
  // constant is estimated with estimate_lipschitz.
  std::optional<double> lipschitz_c;
  std::uint64_t lipschitz_seed = 0x5eed;
  // Picard seeds. Defaults: Y^0 = 0 and Z^0(t, e_i) = q(e_i).
  std::function<Matrix(double t, int state)> y_seed;
  std::function<Vector(double t, int state)> z_seed;
};

struct Solution {
  std::vector<double> grid;
  StateFunction z;
  IntegrandField y;
  Stage stage = Stage::kExogenous;
  int grid_steps = 0;
  double tol = 0.0;
};

// Convergence record of a Picard run. Expectations are exact: they weight
// each state by p(u) = P(0, u) x0.
struct PicardReport {
  Stage stage = Stage::kYDependent;
  double lipschitz_c = 0.0;
  bool c_estimated = false;
  // Weight parameter x = 2^{-1/2} / c of the second stage.
  double x = 0.0;

  // Stage 2: int_0^T e^{(u - T)/x^2} E||Y^{n+1}_u - Y^n_u||^2_{X_u} du.
  // Stage 3: the same increment between outer iterates, unweighted.
  std::vector<double> y_increments;
  // max over grid nodes and states of |Z^{n+1} - Z^n|.
  std::vector<double> z_sup_increments;
  // int_0^T E||Z^{n+1}_u - Z^n_u||^2 du.
  std::vector<double> z_l2_increments;
  // y_increments[n+1] / y_increments[n], unclamped.
  std::vector<double> observed_ratios;
  // x^2 c^2 for stage 2; absent for stage 3.
  std::optional<double> ratio_bound;
  // ln of [T(4c^2+1) e^{T(4c^2+1)}]^n / n! for n = 0, 1, ... (stage 3).
  std::vector<double> log_factorial_bound;
  double gronwall_constant = 0.0;  // 7c^2 + 1/4
  double three_a = 0.0;            // 3 max|A_ij|
  int iterations = 0;
  bool converged = false;
  std::vector<int> inner_iterations;
};

class NoConvergence : public std::runtime_error {
 public:
  NoConvergence(const std::string& what, PicardReport report, Solution last)
      : std::runtime_error(what),
        report_(std::make_shared<PicardReport>(std::move(report))),
        last_(std::make_shared<Solution>(std::move(last))) {}

  const PicardReport& report() const { return *report_; }
  const Solution& last_iterate() const { return *last_; }

 private:
  std::shared_ptr<PicardReport> report_;
  std::shared_ptr<Solution> last_;
};

// z(t, e_i) = E[q(X_T) - int_t^T F0(u, X_u) du | X_t = e_i], y = canonical(Gamma - G0).
Solution solve_stage1(const ExogenousF& f0, const ExogenousG& g0, const TerminalCondition& q,
                      const RateSchedule& schedule, int grid_steps);

// Picard iteration with Y^n frozen inside F; each step is a stage-1 solve.
std::pair<Solution, PicardReport> solve_stage2(const YDriverF& f, const ExogenousG& g0,
                                               const TerminalCondition& q,
                                               const RateSchedule& schedule,
                                               const SolverOptions& options);

// Outer Picard iteration with Z^n frozen in F's Z slot and in G; each outer
// step is a stage-2 solve started from Y^0 = 0.
std::pair<Solution, PicardReport> solve_general(const Driver& driver, const TerminalCondition& q,
                                                const RateSchedule& schedule,
                                                const SolverOptions& options);

// Dispatches on required_stage(driver). A stage-1 solve reports one iteration
// and no increments.
std::pair<Solution, PicardReport> solve(const Driver& driver, const TerminalCondition& q,
                                        const RateSchedule& schedule,
                                        const SolverOptions& options);

// Independent reference: classical RK4 on the backward system
//   d/dt z(t, e_i) = F(t, e_i, z_i, y_i) - sum_j A_ji (z_j - z_i),
// where column j of y_i is z_j - z_i - G(t, e_i, z_i)(e_j - e_i).
Solution solve_ode_oracle(const Driver& driver, const TerminalCondition& q,
                          const RateSchedule& schedule, int grid_steps);

// Canonical integrand at state i: column j is z_j - z_i - (G e_j - G e_i).
Matrix canonical_integrand(const Matrix& z, const Matrix& offset, int state);

// max over shared grid nodes and states of |a.z - b.z|.
double sup_difference(const Solution& a, const Solution& b);

}  // namespace mcbsde
