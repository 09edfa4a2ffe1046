#pragma once

// Test-only oracles. Every routine here takes an independent computational
// route from the library implementation it is used to check: SVD instead of
// power iteration, exhaustive face enumeration instead of thresholding,
// composite quadrature instead of adaptive refinement.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace oracles {

inline double svd_spectral_norm(const Eigen::MatrixXd& A) {
  if (A.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Eigen::MatrixXd>(A).singularValues()[0];
}

// Explicit partial sum of ||A^i||_2 for i = 0..terms, norms via SVD.
inline double power_series_partial_sum(const Eigen::MatrixXd& A, int terms) {
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(A.rows(), A.cols());
  double sum = svd_spectral_norm(power);
  for (int i = 1; i <= terms; ++i) {
    power = power * A;
    sum += svd_spectral_norm(power);
  }
  return sum;
}

// Exact projection onto the l1 ball by enumerating every face (sign pattern)
// of the cross-polytope; practical for dimensions up to ~8.
inline Eigen::VectorXd l1_ball_project_bruteforce(const Eigen::VectorXd& v,
                                                  double radius) {
  if (v.lpNorm<1>() <= radius) return v;
  const int m = static_cast<int>(v.size());
  long long patterns = 1;
  for (int i = 0; i < m; ++i) patterns *= 3;

  Eigen::VectorXd best = Eigen::VectorXd::Zero(m);  // the origin is feasible
  double best_dist = v.squaredNorm();
  std::vector<int> sign(static_cast<std::size_t>(m));
  for (long long p = 0; p < patterns; ++p) {
    long long rest = p;
    int support = 0;
    double dot = 0.0;
    for (int i = 0; i < m; ++i) {
      sign[static_cast<std::size_t>(i)] = static_cast<int>(rest % 3) - 1;  // -1, 0, +1
      rest /= 3;
      if (sign[static_cast<std::size_t>(i)] != 0) {
        ++support;
        dot += sign[static_cast<std::size_t>(i)] * v[i];
      }
    }
    if (support == 0) continue;  // the origin candidate is already seeded
    // Projection onto the affine hull {sum_S sign_i w_i = radius, w = 0 off S}.
    const double mu = (dot - radius) / support;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(m);
    bool consistent = true;
    for (int i = 0; i < m && consistent; ++i) {
      if (sign[static_cast<std::size_t>(i)] == 0) continue;
      w[i] = v[i] - mu * sign[static_cast<std::size_t>(i)];
      if (sign[static_cast<std::size_t>(i)] * w[i] < -1e-12) consistent = false;
    }
    if (!consistent) continue;
    const double dist = (w - v).squaredNorm();
    if (dist < best_dist) {
      best_dist = dist;
      best = w;
    }
  }
  return best;
}

// Exact projection onto {u : <signs, u_S> + ||u_{S^c}||_1 <= 0} by enumerating
// the sign patterns of the off-support coordinates; practical for ambient
// dimensions up to ~8.
inline Eigen::VectorXd l1_descent_cone_project_bruteforce(
    const Eigen::VectorXd& g, const std::vector<int>& support,
    const std::vector<double>& signs) {
  const int m = static_cast<int>(g.size());
  std::vector<int> off;
  std::vector<char> on_support(static_cast<std::size_t>(m), 0);
  for (int idx : support) on_support[static_cast<std::size_t>(idx)] = 1;
  for (int i = 0; i < m; ++i) {
    if (!on_support[static_cast<std::size_t>(i)]) off.push_back(i);
  }

  double c_of_g = 0.0;
  for (std::size_t i = 0; i < support.size(); ++i) c_of_g += signs[i] * g[support[i]];
  for (int i : off) c_of_g += std::abs(g[i]);
  if (c_of_g <= 0.0) return g;

  const int f = static_cast<int>(off.size());
  long long patterns = 1;
  for (int i = 0; i < f; ++i) patterns *= 3;

  Eigen::VectorXd best;
  double best_dist = std::numeric_limits<double>::infinity();
  std::vector<int> sigma(static_cast<std::size_t>(f));
  for (long long p = 0; p < patterns; ++p) {
    long long rest = p;
    for (int i = 0; i < f; ++i) {
      sigma[static_cast<std::size_t>(i)] = static_cast<int>(rest % 3) - 1;
      rest /= 3;
    }
    // Active constraint: <signs, u_S> + sum_F sigma_i u_i = 0, u = 0 on the
    // zeroed off-support set. Lagrange shift along the constraint normal.
    double dot = 0.0;
    int active = static_cast<int>(support.size());
    for (std::size_t i = 0; i < support.size(); ++i) dot += signs[i] * g[support[i]];
    for (int i = 0; i < f; ++i) {
      if (sigma[static_cast<std::size_t>(i)] != 0) {
        dot += sigma[static_cast<std::size_t>(i)] * g[off[static_cast<std::size_t>(i)]];
        ++active;
      }
    }
    const double mu = dot / active;
    if (mu < -1e-12) continue;  // multiplier must be nonnegative

    Eigen::VectorXd u = Eigen::VectorXd::Zero(m);
    for (std::size_t i = 0; i < support.size(); ++i) {
      u[support[i]] = g[support[i]] - mu * signs[i];
    }
    bool consistent = true;
    for (int i = 0; i < f && consistent; ++i) {
      const int idx = off[static_cast<std::size_t>(i)];
      if (sigma[static_cast<std::size_t>(i)] == 0) {
        u[idx] = 0.0;
      } else {
        u[idx] = g[idx] - mu * sigma[static_cast<std::size_t>(i)];
        if (sigma[static_cast<std::size_t>(i)] * u[idx] < -1e-12) consistent = false;
      }
    }
    if (!consistent) continue;
    const double dist = (u - g).squaredNorm();
    if (dist < best_dist) {
      best_dist = dist;
      best = u;
    }
  }
  return best;
}

// Composite midpoint rule; the fixed fine grid is an independent check on the
// adaptive integrator.
inline double midpoint_integral(const std::function<double(double)>& f, double a,
                                double b, int points) {
  const double h = (b - a) / points;
  double sum = 0.0;
  for (int i = 0; i < points; ++i) sum += f(a + (i + 0.5) * h);
  return sum * h;
}

// Mean of the chi distribution with d degrees of freedom.
inline double chi_mean(int d) {
  return std::sqrt(2.0) *
         std::exp(std::lgamma((d + 1) / 2.0) - std::lgamma(d / 2.0));
}

}  // namespace oracles
