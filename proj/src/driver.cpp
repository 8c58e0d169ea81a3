#include "mcbsde/driver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "mcbsde/calculus.hpp"

namespace mcbsde {

Driver Driver::zero(int dimension, int num_states) {
  Driver d;
  d.dimension = dimension;
  d.f = [dimension](double, int, const Vector&, const Matrix&) { return Vector::Zero(dimension); };
  d.g = [dimension, num_states](double, int, const Vector&) {
    return Matrix::Zero(dimension, num_states);
  };
  d.lipschitz_c = 0.0;
  d.f_uses_z = d.f_uses_y = d.g_uses_z = false;
  return d;
}

Stage required_stage(const Driver& driver) {
  if (driver.f_uses_z || driver.g_uses_z) return Stage::kGeneral;
  return driver.f_uses_y ? Stage::kYDependent : Stage::kExogenous;
}

std::string_view stage_name(Stage stage) {
  switch (stage) {
    case Stage::kExogenous: return "stage1_exogenous";
    case Stage::kYDependent: return "stage2_y_dependent";
    case Stage::kGeneral: return "stage3_general";
  }
  return "unknown";
}

namespace {

constexpr std::string_view kFamilies[] = {"zero",     "constant",    "linear_z",
                                          "linear_y", "linear_full", "soft_nonlinear"};

Matrix or_zero(const Matrix& m, int rows, int cols, const char* name) {
  if (m.size() == 0) return Matrix::Zero(rows, cols);
  if (m.rows() != rows || m.cols() != cols) {
    throw std::invalid_argument(std::string("driver parameter '") + name + "' must be " +
                                std::to_string(rows) + "x" + std::to_string(cols));
  }
  return m;
}

Vector or_zero(const Vector& v, int size, const char* name) {
  if (v.size() == 0) return Vector::Zero(size);
  if (v.size() != size) {
    throw std::invalid_argument(std::string("driver parameter '") + name + "' must have length " +
                                std::to_string(size));
  }
  return v;
}

}  // namespace

bool is_known_family(std::string_view family) {
  return std::find(std::begin(kFamilies), std::end(kFamilies), family) != std::end(kFamilies);
}

Driver make_family_driver(std::string_view family, const FamilyParams& params, int dimension,
                          int num_states) {
  if (!is_known_family(family)) {
    throw std::invalid_argument("unknown driver family '" + std::string(family) + "'");
  }
  const int k = dimension;
  const int n = num_states;
  const Matrix alpha = or_zero(params.alpha, k, k, "alpha");
  const Vector beta = or_zero(params.beta, n, "beta");
  const Vector f0 = or_zero(params.f0, k, "f0");
  const Vector g_hat = or_zero(params.g_hat, n, "g_hat");
  const Matrix g0 = or_zero(params.g0, k, n, "g0");
  const double eps = params.epsilon;

  if (family == "zero") {
    Driver d = Driver::zero(k, n);
    if (params.lipschitz_c) d.lipschitz_c = params.lipschitz_c;
    return d;
  }

  Driver d;
  d.dimension = k;
  d.lipschitz_c = params.lipschitz_c;
  d.g = [g0](double, int, const Vector&) { return g0; };
  d.g_uses_z = false;

  if (family == "constant") {
    d.f = [f0](double, int, const Vector&, const Matrix&) { return f0; };
    d.f_uses_z = d.f_uses_y = false;
    if (!d.lipschitz_c) d.lipschitz_c = 0.0;
  } else if (family == "linear_z") {
    d.f = [alpha, f0](double, int, const Vector& z, const Matrix&) -> Vector {
      return alpha * z + f0;
    };
    d.f_uses_y = false;
  } else if (family == "linear_y") {
    d.f = [beta, f0](double, int, const Vector&, const Matrix& y) -> Vector {
      return y * beta + f0;
    };
    d.f_uses_z = false;
  } else {
    if (family == "linear_full") {
      d.f = [alpha, beta, f0](double, int, const Vector& z, const Matrix& y) -> Vector {
        return alpha * z + y * beta + f0;
      };
    } else {
      d.f = [alpha, beta, f0](double, int, const Vector& z, const Matrix& y) -> Vector {
        return (alpha * z + y * beta + f0).array().tanh().matrix();
      };
    }
    d.g = [eps, g_hat, g0](double, int, const Vector& z) -> Matrix {
      return eps * z * g_hat.transpose() + g0;
    };
    d.g_uses_z = eps != 0.0 && (g_hat.array() != 0.0).any();
  }
  return d;
}

DxDriver to_dx_form(const Driver& driver, const RateSchedule& schedule) {
  DxDriver dx;
  dx.dimension = driver.dimension;
  dx.g = driver.g;
  dx.f_star = [f = driver.f, g = driver.g, schedule](double t, int state, const Vector& z,
                                                    const Matrix& y) -> Vector {
    return f(t, state, z, y) - (g(t, state, z) + y) * schedule.generator_at(t).col(state);
  };
  return dx;
}

Driver from_dx_form(const DxDriver& dx, const RateSchedule& schedule) {
  Driver d;
  d.dimension = dx.dimension;
  d.g = dx.g;
  d.f = [f_star = dx.f_star, g = dx.g, schedule](double t, int state, const Vector& z,
                                                const Matrix& y) -> Vector {
    return f_star(t, state, z, y) + (g(t, state, z) + y) * schedule.generator_at(t).col(state);
  };
  return d;
}

LipschitzEstimate estimate_lipschitz(const Driver& driver, const RateSchedule& schedule,
                                     const LipschitzBox& box, int samples, std::uint64_t seed) {
  if (!(box.z_bound > 0.0) || !(box.y_bound > 0.0)) {
    throw std::invalid_argument("estimate_lipschitz: degenerate box");
  }
  if (samples < 1) throw std::invalid_argument("estimate_lipschitz: need at least one sample");
  const int k = driver.dimension;
  const int n = schedule.num_states();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> time(0.0, schedule.horizon());
  std::uniform_int_distribution<int> pick_state(0, n - 1);
  std::uniform_int_distribution<int> pick_mode(0, 2);

  auto draw_z = [&] {
    Vector z(k);
    for (int r = 0; r < k; ++r) z(r) = box.z_bound * unit(rng);
    return z;
  };
  auto draw_y = [&](int state) {
    Matrix y(k, n);
    for (int c = 0; c < n; ++c)
      for (int r = 0; r < k; ++r) y(r, c) = box.y_bound * unit(rng);
    y.col(state).setZero();
    return y;
  };

  LipschitzEstimate est;
  est.samples = samples;
  for (int s = 0; s < samples; ++s) {
    const double t = time(rng);
    const int state = pick_state(rng);
    const int mode = pick_mode(rng);  // 0: Z only, 1: Y only, 2: both
    const Vector z1 = draw_z();
    const Vector z2 = mode == 1 ? z1 : draw_z();
    const Matrix y1 = draw_y(state);
    const Matrix y2 = mode == 0 ? y1 : draw_y(state);
    const Matrix& a = schedule.generator_at(t);

    const Matrix dy = y1 - y2;
    const double dz_sq = (z1 - z2).squaredNorm();
    double min_semi = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) min_semi = std::min(min_semi, seminorm_sq_v(dy, SeminormContext(a, i)));
    const double f_den = min_semi + dz_sq;
    const double df_sq = (driver.f(t, state, z1, y1) - driver.f(t, state, z2, y2)).squaredNorm();
    if (f_den > 0.0) {
      est.f_ratio_sq = std::max(est.f_ratio_sq, df_sq / f_den);
    } else if (df_sq > 0.0) {
      est.f_ratio_sq = std::numeric_limits<double>::infinity();
    }

    if (dz_sq > 0.0) {
      const Matrix dg = driver.g(t, state, z1) - driver.g(t, state, z2);
      double max_semi = 0.0;
      for (int i = 0; i < n; ++i) max_semi = std::max(max_semi, seminorm_sq_v(dg, SeminormContext(a, i)));
      est.g_ratio_sq = std::max(est.g_ratio_sq, max_semi / dz_sq);
    }
  }
  est.c = std::sqrt(std::max(est.f_ratio_sq, est.g_ratio_sq));
  return est;
}

}  // namespace mcbsde
