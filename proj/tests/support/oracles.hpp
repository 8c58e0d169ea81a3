#pragma once

// Reference computations for the tests. Nothing here calls the library's
// numerical routines: transition matrices come from closed forms or Eigen's
// matrix exponential, and linear BSDEs are solved exactly through an
// augmented exponential.

#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Generator with rate lambda for 0 -> 1 and mu for 1 -> 0 (column convention).
inline Matrix two_state_generator(double lambda, double mu) {
  Matrix a(2, 2);
  a << -lambda, mu, lambda, -mu;
  return a;
}

// P(0, t) for the two-state chain: Pi + e^{-(lambda+mu)t}(I - Pi).
inline Matrix two_state_transition(double lambda, double mu, double t) {
  const double s = lambda + mu;
  Matrix pi(2, 2);
  pi << mu / s, mu / s, lambda / s, lambda / s;
  return pi + std::exp(-s * t) * (Matrix::Identity(2, 2) - pi);
}

inline Matrix expm(const Matrix& a) { return a.exp(); }

// P(s, t) for a piecewise-constant schedule: piece k on ]b[k], b[k+1]].
inline Matrix transition(const std::vector<double>& b, const std::vector<Matrix>& gens, double s,
                         double t) {
  Matrix p = Matrix::Identity(gens.front().rows(), gens.front().cols());
  for (std::size_t k = 0; k < gens.size(); ++k) {
    const double lo = std::max(s, b[k]);
    const double hi = std::min(t, b[k + 1]);
    if (hi > lo) p = expm(gens[k] * (hi - lo)) * p;
  }
  return p;
}

// Rate-weighted outer products of the possible jumps out of state i.
inline Matrix qv_density(const Matrix& a, int i) {
  const int n = static_cast<int>(a.rows());
  Matrix d = Matrix::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    if (j == i) continue;
    Vector jump = Vector::Zero(n);
    jump(j) = 1.0;
    jump(i) = -1.0;
    d += a(j, i) * jump * jump.transpose();
  }
  return d;
}

// sum_{j != i} A_ji |c_j - c_i|^2
inline double seminorm_sq(const Matrix& c, const Matrix& a, int i) {
  double s = 0.0;
  for (int j = 0; j < a.rows(); ++j) {
    if (j != i) s += a(j, i) * (c.col(j) - c.col(i)).squaredNorm();
  }
  return s;
}

// Random generator with off-diagonal rates in [lo, hi].
inline Matrix random_generator(std::mt19937_64& rng, int n, double lo, double hi) {
  std::uniform_real_distribution<double> rate(lo, hi);
  Matrix a = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j != i) a(j, i) = rate(rng);
    }
    a(i, i) = -(a.col(i).sum());
  }
  return a;
}

inline Matrix random_matrix(std::mt19937_64& rng, int rows, int cols, double scale) {
  std::uniform_real_distribution<double> unit(-scale, scale);
  Matrix m(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) m(r, c) = unit(rng);
  return m;
}

// Smallest c with |Y beta|^2 <= c^2 min_i ||Y||^2_{e_i} for every Y whose
// column s is zero, maximised over s and over the given generators. The
// quotient is a rank-one generalised Rayleigh quotient in the free columns,
// so for each (s, i) its supremum is b^T Q^{-1} b with Q the quadratic form
// of the seminorm restricted to those columns.
inline double linear_y_constant(const Vector& beta, const std::vector<Matrix>& gens) {
  const int n = static_cast<int>(beta.size());
  double worst = 0.0;
  for (const Matrix& a : gens) {
    for (int s = 0; s < n; ++s) {
      std::vector<int> free;
      for (int j = 0; j < n; ++j)
        if (j != s) free.push_back(j);
      const int m = static_cast<int>(free.size());
      Vector b(m);
      for (int r = 0; r < m; ++r) b(r) = beta(free[r]);
      for (int i = 0; i < n; ++i) {
        // Q(d) = sum_{j != i} A_ji (c_j - c_i)^2 with c_s = 0, c_free = d
        Matrix q = Matrix::Zero(m, m);
        for (int j = 0; j < n; ++j) {
          if (j == i) continue;
          Vector row = Vector::Zero(m);
          for (int r = 0; r < m; ++r) {
            if (free[r] == j) row(r) += 1.0;
            if (free[r] == i) row(r) -= 1.0;
          }
          q += a(j, i) * row * row.transpose();
        }
        Eigen::LDLT<Matrix> ldlt(q);
        if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 1e-14) {
          if (b.squaredNorm() > 0.0) return std::numeric_limits<double>::infinity();
          continue;
        }
        worst = std::max(worst, b.dot(ldlt.solve(b)));
      }
    }
  }
  return std::sqrt(worst);
}

// Exact solution of a BSDE whose backward system is affine,
//   d/dt vec(Z) = M vec(Z) + c  on each schedule piece,
// with rhs(t, A, Z) supplied as a function of the K x N unknown. Affinity lets
// M and c be read off by probing with unit matrices. Returns Z at `times`.
inline std::vector<Matrix> affine_backward(
    const std::function<Matrix(const Matrix& a, const Matrix& z)>& rhs,
    const std::vector<double>& b, const std::vector<Matrix>& gens, const Matrix& terminal,
    const std::vector<double>& times) {
  const int k = static_cast<int>(terminal.rows());
  const int n = static_cast<int>(terminal.cols());
  const int dim = k * n;
  auto flat = [&](const Matrix& z) { return Eigen::Map<const Vector>(z.data(), dim); };

  std::vector<Matrix> aug;
  for (const Matrix& a : gens) {
    const Vector c = flat(rhs(a, Matrix::Zero(k, n)));
    Matrix m(dim + 1, dim + 1);
    m.setZero();
    for (int e = 0; e < dim; ++e) {
      Matrix unit = Matrix::Zero(k, n);
      unit.data()[e] = 1.0;
      m.col(e).head(dim) = flat(rhs(a, unit)) - c;
    }
    m.col(dim).head(dim) = c;
    aug.push_back(m);
  }

  std::vector<Matrix> out;
  for (double t : times) {
    Vector state(dim + 1);
    state.head(dim) = flat(terminal);
    state(dim) = 1.0;
    for (std::size_t p = gens.size(); p-- > 0;) {
      const double lo = std::max(t, b[p]);
      const double hi = b[p + 1];
      if (hi > lo) state = expm(-aug[p] * (hi - lo)) * state;
    }
    out.push_back(Eigen::Map<const Matrix>(state.data(), k, n));
  }
  return out;
}

// Right side of the backward system for F = alpha z + y beta + f0 and
// G = eps z g_hat^T + g0, where column j of y_i is z_j - z_i - (G_j - G_i).
inline Matrix affine_rhs(const Matrix& a, const Matrix& z, const Matrix& alpha, const Vector& beta,
                         const Vector& f0, double eps, const Vector& g_hat, const Matrix& g0) {
  const int n = static_cast<int>(z.cols());
  Matrix out(z.rows(), n);
  for (int i = 0; i < n; ++i) {
    const Vector zi = z.col(i);
    const Matrix g = eps * zi * g_hat.transpose() + g0;
    Matrix y(z.rows(), n);
    for (int j = 0; j < n; ++j) y.col(j) = z.col(j) - zi - (g.col(j) - g.col(i));
    Vector drift = Vector::Zero(z.rows());
    for (int j = 0; j < n; ++j)
      if (j != i) drift += a(j, i) * (z.col(j) - zi);
    out.col(i) = alpha * zi + y * beta + f0 - drift;
  }
  return out;
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

inline MeanSe mean_se(const std::vector<double>& xs) {
  MeanSe m;
  const double n = static_cast<double>(xs.size());
  for (double x : xs) m.mean += x;
  m.mean /= n;
  double ss = 0.0;
  for (double x : xs) ss += (x - m.mean) * (x - m.mean);
  m.se = std::sqrt(ss / (n - 1.0) / n);
  return m;
}

}  // namespace oracle
