#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ldsid/rng.hpp"

namespace ldsid {

enum class NoiseFamily { gaussian, rademacher, uniform };

const char* to_string(NoiseFamily family);
NoiseFamily noise_family_from_string(const std::string& name);

// Zero-mean, unit-variance i.i.d. noise per coordinate. Uniform draws live on
// [-sqrt(3), sqrt(3)] and rademacher on {-1, +1} so all families share the
// same second moment.
struct NoiseSpec {
  NoiseFamily family = NoiseFamily::gaussian;
  double sample(SplitMix64& rng) const;
};

// Largest eigenvalue modulus, via a dense general eigensolver.
double spectral_radius(const Eigen::MatrixXd& A);

// Largest singular value, via power iteration on A^T A with a fixed
// pseudo-random start. Stops on the eigen-residual ||A^T A v - s v|| so a
// plateau between near-equal top singular values is not mistaken for
// convergence.
double spectral_norm(const Eigen::MatrixXd& A, double tol = 1e-12,
                     int max_iters = 10000);

// Truncated sum of ||A^i||_2 over i >= 0. Truncation starts being considered
// once ||A^m||_2 drops below 1 and stops when the geometric tail bound
// (ratio taken as the max over the last five power-norm ratios) falls below
// tol; the result is within tol of the full series.
double stability_param_J(const Eigen::MatrixXd& A, double tol = 1e-10);

struct StabilityParamDetail {
  double value = 0.0;
  int terms = 0;        // highest matrix power included in the sum
  double tail_bound = 0.0;
};
StabilityParamDetail stability_param_J_detailed(const Eigen::MatrixXd& A,
                                                double tol = 1e-10);

// System matrix with cached stability quantities.
class LdsModel {
 public:
  explicit LdsModel(Eigen::MatrixXd A_star, double j_tol = 1e-10);

  const Eigen::MatrixXd& A_star() const { return A_star_; }
  int n() const { return static_cast<int>(A_star_.rows()); }
  double spectral_radius() const { return spectral_radius_; }
  // Stability parameter; +inf when the spectral radius is >= 1.
  double J() const { return J_; }
  bool strictly_stable() const { return spectral_radius_ < 1.0; }

 private:
  Eigen::MatrixXd A_star_;
  double spectral_radius_ = 0.0;
  double J_ = 0.0;
};

struct Trajectory {
  std::vector<Eigen::VectorXd> states;  // x_0 .. x_{T+1}, with x_0 = 0
  std::vector<Eigen::VectorXd> noises;  // eta_1 .. eta_{T+1}
  long long T = 0;
  std::uint64_t seed = 0;
  NoiseFamily noise_family = NoiseFamily::gaussian;

  int n() const {
    return states.empty() ? 0 : static_cast<int>(states.front().size());
  }
};

// Runs the recursion x_{t+1} = A* x_t + eta_{t+1} over the given noise
// vectors (T = noises.size() - 1).
Trajectory trajectory_from_noises(const LdsModel& model,
                                  std::vector<Eigen::VectorXd> noises);

Trajectory simulate(const LdsModel& model, const NoiseSpec& noise, long long T,
                    std::uint64_t seed);

// Block lower-triangular Toeplitz matrix with identity diagonal blocks and
// A^{i-j} in block position (i, j). Materialized for validation only; guarded
// at T*n <= 5000.
Eigen::MatrixXd gamma_matrix(const Eigen::MatrixXd& A, long long T);

// Random matrix rescaled to the requested spectral norm; when sparsity k is
// given, exactly k entries (chosen uniformly) are nonzero.
Eigen::MatrixXd random_stable_matrix(int n, double target_spec_norm,
                                     std::optional<int> sparsity,
                                     std::uint64_t seed);

}  // namespace ldsid
