#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mcbsde {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Rate matrices use the COLUMN convention: entry (j, i) is the rate of
// jumping from state i to state j, and every column sums to zero. This is
// the transpose of the row-stochastic convention common elsewhere. A state
// is identified with the unit vector e_i, so the drift of X_t is A_t X_t.

class ScheduleError : public std::invalid_argument {
 public:
  enum class Kind { kNegativeOffDiagonal, kColumnSumNonzero, kBadBreakpoints, kShape };

  ScheduleError(Kind kind, const std::string& what)
      : std::invalid_argument(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

inline constexpr double kColumnSumTolerance = 1e-12;

// Throws ScheduleError naming the offending entry or interval.
void validate_schedule(std::span<const double> breakpoints,
                       std::span<const Matrix> generators);

// Piecewise-constant generator: generators[k] is in force on
// ]breakpoints[k], breakpoints[k+1]].
class RateSchedule {
 public:
  RateSchedule(std::vector<double> breakpoints, std::vector<Matrix> generators);

  static RateSchedule constant(Matrix generator, double horizon);

  int num_states() const { return static_cast<int>(generators_.front().rows()); }
  int num_pieces() const { return static_cast<int>(generators_.size()); }
  double horizon() const { return breakpoints_.back(); }
  std::span<const double> breakpoints() const { return breakpoints_; }
  const Matrix& generator(int piece) const { return generators_.at(piece); }

  // Piece whose interval ]t_k, t_{k+1}] contains t; t = 0 maps to piece 0.
  int piece_at(double t) const;
  // Piece in force just after t, i.e. [t_k, t_{k+1}[ contains t; t = T maps
  // to the last piece.
  int piece_after(double t) const;
  const Matrix& generator_at(double t) const { return generators_[piece_at(t)]; }

  // a = max over pieces and entries of |A_ij|.
  double max_abs_rate() const { return max_abs_rate_; }

  // Same rates restricted to [0, horizon].
  RateSchedule truncated(double horizon) const;

 private:
  std::vector<double> breakpoints_;
  std::vector<Matrix> generators_;
  double max_abs_rate_ = 0.0;
};

// exp(a) by scaling and squaring with a truncated Taylor series.
Matrix expm(const Matrix& a);

// P(s, t) with P_ji = Pr(X_t = e_j | X_s = e_i); columns are distributions.
Matrix transition_matrix(const RateSchedule& schedule, double s, double t);

struct Jump {
  double time;
  int state;

  bool operator==(const Jump&) const = default;
};

// One càdlàg trajectory of the chain on [0, T].
class ChainPath {
 public:
  ChainPath(int num_states, int initial_state, std::vector<Jump> jumps, double horizon);

  int num_states() const { return num_states_; }
  int initial_state() const { return initial_state_; }
  std::span<const Jump> jumps() const { return jumps_; }
  double horizon() const { return horizon_; }

  int state_at(double t) const;
  // X_{t-}; equals initial_state at t = 0.
  int left_limit_state_at(double t) const;
  int terminal_state() const { return jumps_.empty() ? initial_state_ : jumps_.back().state; }

  bool operator==(const ChainPath&) const = default;

 private:
  int num_states_;
  int initial_state_;
  std::vector<Jump> jumps_;
  double horizon_;
};

// Exact event-driven simulation. The exponential holding clock is re-drawn
// at every breakpoint of the schedule. Deterministic in the seed.
ChainPath simulate_path(const RateSchedule& schedule, int initial_state, std::uint64_t seed);

// Seed used for the k-th path of a batch started from `base`.
constexpr std::uint64_t path_seed(std::uint64_t base, std::uint64_t k) { return base ^ k; }

}  // namespace mcbsde
