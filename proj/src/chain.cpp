#include "mcbsde/chain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace mcbsde {

namespace {

std::string entry_name(int piece, Eigen::Index row, Eigen::Index col) {
  std::ostringstream os;
  os << "piece " << piece << ", entry (" << row << ", " << col << ")";
  return os.str();
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

void validate_schedule(std::span<const double> breakpoints,
                       std::span<const Matrix> generators) {
  using Kind = ScheduleError::Kind;
  if (generators.empty()) throw ScheduleError(Kind::kShape, "schedule has no generator matrices");
  if (breakpoints.size() != generators.size() + 1) {
    throw ScheduleError(Kind::kBadBreakpoints,
                        "expected " + std::to_string(generators.size() + 1) +
                            " breakpoints, got " + std::to_string(breakpoints.size()));
  }
  if (breakpoints.front() != 0.0) {
    throw ScheduleError(Kind::kBadBreakpoints, "first breakpoint must be 0");
  }
  for (std::size_t k = 0; k + 1 < breakpoints.size(); ++k) {
    if (!std::isfinite(breakpoints[k + 1]) || !(breakpoints[k + 1] > breakpoints[k])) {
      throw ScheduleError(Kind::kBadBreakpoints,
                          "breakpoints not strictly increasing at interval " + std::to_string(k));
    }
  }
  const Eigen::Index n = generators.front().rows();
  if (n < 2) throw ScheduleError(Kind::kShape, "need at least 2 states");
  for (std::size_t k = 0; k < generators.size(); ++k) {
    const Matrix& a = generators[k];
    const int piece = static_cast<int>(k);
    if (a.rows() != n || a.cols() != n) {
      throw ScheduleError(Kind::kShape, "piece " + std::to_string(k) + " is not " +
                                            std::to_string(n) + "x" + std::to_string(n));
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (!std::isfinite(a(j, i))) {
          throw ScheduleError(Kind::kShape, "non-finite rate at " + entry_name(piece, j, i));
        }
        if (j != i && a(j, i) < 0.0) {
          throw ScheduleError(Kind::kNegativeOffDiagonal,
                              "negative off-diagonal rate at " + entry_name(piece, j, i));
        }
      }
      const double col_sum = a.col(i).sum();
      if (std::abs(col_sum) > kColumnSumTolerance) {
        std::ostringstream os;
        os << "column " << i << " of piece " << k << " sums to " << col_sum;
        throw ScheduleError(Kind::kColumnSumNonzero, os.str());
      }
    }
  }
}

RateSchedule::RateSchedule(std::vector<double> breakpoints, std::vector<Matrix> generators)
    : breakpoints_(std::move(breakpoints)), generators_(std::move(generators)) {
  validate_schedule(breakpoints_, generators_);
  for (const Matrix& a : generators_) {
    max_abs_rate_ = std::max(max_abs_rate_, a.cwiseAbs().maxCoeff());
  }
}

RateSchedule RateSchedule::constant(Matrix generator, double horizon) {
  return RateSchedule({0.0, horizon}, {std::move(generator)});
}

int RateSchedule::piece_at(double t) const {
  // first breakpoint >= t closes the interval ]t_{k}, t_{k+1}] holding t
  auto it = std::lower_bound(breakpoints_.begin() + 1, breakpoints_.end(), t);
  if (it == breakpoints_.end()) return num_pieces() - 1;
  return static_cast<int>(it - breakpoints_.begin()) - 1;
}

int RateSchedule::piece_after(double t) const {
  auto it = std::upper_bound(breakpoints_.begin() + 1, breakpoints_.end(), t);
  if (it == breakpoints_.end()) return num_pieces() - 1;
  return static_cast<int>(it - breakpoints_.begin()) - 1;
}

RateSchedule RateSchedule::truncated(double horizon) const {
  if (!(horizon > 0.0) || horizon > this->horizon()) {
    throw std::out_of_range("truncation horizon outside ]0, T]");
  }
  std::vector<double> bps{0.0};
  std::vector<Matrix> gens;
  for (int k = 0; k < num_pieces(); ++k) {
    gens.push_back(generators_[k]);
    if (breakpoints_[k + 1] >= horizon) {
      bps.push_back(horizon);
      break;
    }
    bps.push_back(breakpoints_[k + 1]);
  }
  return RateSchedule(std::move(bps), std::move(gens));
}

Matrix expm(const Matrix& a) {
  const Eigen::Index n = a.rows();
  const double norm = a.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const Matrix b = a / std::ldexp(1.0, squarings);

  Matrix result = Matrix::Identity(n, n);
  Matrix term = Matrix::Identity(n, n);
  // ||b|| <= 1/2, so terms decay at least geometrically; stop well below 1e-12.
  for (int k = 1; k < 40; ++k) {
    term = term * b / static_cast<double>(k);
    result += term;
    if (term.cwiseAbs().maxCoeff() <= 1e-17 * result.cwiseAbs().maxCoeff()) break;
  }
  for (int s = 0; s < squarings; ++s) result = result * result;
  return result;
}

Matrix transition_matrix(const RateSchedule& schedule, double s, double t) {
  const double horizon = schedule.horizon();
  if (!(s >= 0.0) || !(t <= horizon) || s > t) {
    std::ostringstream os;
    os << "transition_matrix: need 0 <= s <= t <= " << horizon << ", got s=" << s << " t=" << t;
    throw std::out_of_range(os.str());
  }
  const int n = schedule.num_states();
  Matrix p = Matrix::Identity(n, n);
  if (s == t) return p;
  const auto bps = schedule.breakpoints();
  for (int k = schedule.piece_after(s); k < schedule.num_pieces(); ++k) {
    const double lo = std::max(s, bps[k]);
    const double hi = std::min(t, bps[k + 1]);
    if (hi > lo) p = expm((hi - lo) * schedule.generator(k)) * p;
    if (bps[k + 1] >= t) break;
  }
  return p;
}

ChainPath::ChainPath(int num_states, int initial_state, std::vector<Jump> jumps, double horizon)
    : num_states_(num_states),
      initial_state_(initial_state),
      jumps_(std::move(jumps)),
      horizon_(horizon) {
  if (initial_state < 0 || initial_state >= num_states) {
    throw std::invalid_argument("initial state out of range");
  }
  int prev_state = initial_state;
  double prev_time = 0.0;
  for (const Jump& jump : jumps_) {
    if (!(jump.time > prev_time) || jump.time > horizon) {
      throw std::invalid_argument("jump times must be strictly increasing in ]0, T]");
    }
    if (jump.state < 0 || jump.state >= num_states || jump.state == prev_state) {
      throw std::invalid_argument("jump must move to a different valid state");
    }
    prev_state = jump.state;
    prev_time = jump.time;
  }
}

int ChainPath::state_at(double t) const {
  if (t < 0.0 || t > horizon_) throw std::out_of_range("state_at: time outside [0, T]");
  auto it = std::upper_bound(jumps_.begin(), jumps_.end(), t,
                             [](double value, const Jump& jump) { return value < jump.time; });
  return it == jumps_.begin() ? initial_state_ : std::prev(it)->state;
}

int ChainPath::left_limit_state_at(double t) const {
  if (t < 0.0 || t > horizon_) throw std::out_of_range("left_limit_state_at: time outside [0, T]");
  auto it = std::lower_bound(jumps_.begin(), jumps_.end(), t,
                             [](const Jump& jump, double value) { return jump.time < value; });
  return it == jumps_.begin() ? initial_state_ : std::prev(it)->state;
}

ChainPath simulate_path(const RateSchedule& schedule, int initial_state, std::uint64_t seed) {
  const int n = schedule.num_states();
  if (initial_state < 0 || initial_state >= n) {
    throw std::invalid_argument("simulate_path: initial state out of range");
  }
  std::mt19937_64 rng(splitmix64(seed));
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  std::vector<Jump> jumps;
  int state = initial_state;
  const auto bps = schedule.breakpoints();
  for (int k = 0; k < schedule.num_pieces(); ++k) {
    const Matrix& a = schedule.generator(k);
    double t = bps[k];
    const double end = bps[k + 1];
    while (true) {
      const double rate = -a(state, state);
      if (!(rate > 0.0)) break;  // absorbing on this piece
      t += std::exponential_distribution<double>(rate)(rng);
      if (t > end) break;  // memoryless: redraw on the next piece
      double u = uniform(rng) * rate;
      // rounding may leave u marginally positive: fall back to the last live target
      int next = -1;
      for (int j = 0; j < n; ++j) {
        if (j == state || !(a(j, state) > 0.0)) continue;
        next = j;
        u -= a(j, state);
        if (u < 0.0) break;
      }
      jumps.push_back({t, next});
      state = next;
    }
  }
  return ChainPath(n, initial_state, std::move(jumps), schedule.horizon());
}

}  // namespace mcbsde
