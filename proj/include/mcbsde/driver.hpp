#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "mcbsde/chain.hpp"

namespace mcbsde {

// Markovian driver of
//   Z_t + int_t^T F(u, X_u, Z_u, Y_u) du + int_t^T [G(u, X_{u-}, Z_{u-}) + Y_u] dM_u = Q.
// The Y argument handed to F is always the canonical representative at the
// current state (its column for that state is zero).
struct Driver {
  using Generator = std::function<Vector(double t, int state, const Vector& z, const Matrix& y)>;
  using Offset = std::function<Matrix(double t, int state, const Vector& z)>;

  Generator f;
  Offset g;
  int dimension = 1;
  std::optional<double> lipschitz_c;

  // Which arguments the driver actually reads; used to pick the solver stage.
  bool f_uses_z = true;
  bool f_uses_y = true;
  bool g_uses_z = true;

  static Driver zero(int dimension, int num_states);
};

enum class Stage { kExogenous = 1, kYDependent = 2, kGeneral = 3 };

Stage required_stage(const Driver& driver);
std::string_view stage_name(Stage stage);

// Parameters of the named driver families. Unset arrays are zero.
struct FamilyParams {
  Matrix alpha;    // K x K, Z coefficient
  Vector beta;     // N, F gets Y * beta
  Vector f0;       // K
  double epsilon = 0.0;
  Vector g_hat;    // N, G gets epsilon * Z * g_hat^T
  Matrix g0;       // K x N
  std::optional<double> lipschitz_c;
};

//   zero            F = 0,                      G = 0
//   constant        F = f0,                     G = g0
//   linear_z        F = alpha Z + f0,           G = g0
//   linear_y        F = Y beta + f0,            G = g0
//   linear_full     F = alpha Z + Y beta + f0,  G = epsilon Z g_hat^T + g0
//   soft_nonlinear  F = tanh(alpha Z + Y beta + f0) componentwise,
//                   G = epsilon Z g_hat^T + g0
Driver make_family_driver(std::string_view family, const FamilyParams& params, int dimension,
                          int num_states);
bool is_known_family(std::string_view family);

// dX form of the same equation:
//   Z_t + int_t^T F* du + int_t^T [G + Y] dX_u = Q,
//   F*(t, e_i, Z, Y) = F(t, e_i, Z, Y) - [G(t, e_i, Z) + Y] A_t e_i.
struct DxDriver {
  Driver::Generator f_star;
  Driver::Offset g;
  int dimension = 1;
};

DxDriver to_dx_form(const Driver& driver, const RateSchedule& schedule);
Driver from_dx_form(const DxDriver& dx, const RateSchedule& schedule);

struct LipschitzBox {
  double z_bound = 1.0;  // |Z_k| <= z_bound
  double y_bound = 1.0;  // |Y_kj| <= y_bound
};

struct LipschitzEstimate {
  double c = 0.0;
  double f_ratio_sq = 0.0;  // max ||dF||^2 / (min_i ||dY||^2_{e_i} + ||dZ||^2)
  double g_ratio_sq = 0.0;  // max max_i ||dG||^2_{e_i} / ||dZ||^2
  int samples = 0;
  // Sampled maxima never exceed the true constant.
  bool lower_estimate = true;
};

// Random pairs inside the box; Y pairs are drawn in canonical form for the
// sampled state. Throws std::invalid_argument on a degenerate box.
LipschitzEstimate estimate_lipschitz(const Driver& driver, const RateSchedule& schedule,
                                     const LipschitzBox& box, int samples, std::uint64_t seed);

}  // namespace mcbsde
