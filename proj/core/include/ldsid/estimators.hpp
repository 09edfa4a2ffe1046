#pragma once

#include <Eigen/Dense>
#include <optional>
#include <variant>
#include <vector>

#include "ldsid/dynamics.hpp"

namespace ldsid {

// Convex constraint set K with its Euclidean projection oracle. Three
// variants: unconstrained, an affine subspace spanned by matrices orthonormal
// under the trace inner product, and a scaled entry-wise l1 ball.
class ConstraintSet {
 public:
  enum class Kind { unconstrained, subspace, l1_ball };

  static ConstraintSet unconstrained();
  // Basis matrices are re-orthonormalized with modified Gram-Schmidt on the
  // vectorized matrices. An exactly dependent basis throws; a nearly
  // dependent one (residual below 1e-6 of the input norm) sets the condition
  // warning flag.
  static ConstraintSet subspace(std::vector<Eigen::MatrixXd> basis,
                                Eigen::MatrixXd offset);
  static ConstraintSet subspace(std::vector<Eigen::MatrixXd> basis);
  static ConstraintSet l1_ball(double radius);

  Kind kind() const { return kind_; }

  // argmin_{Z in K} ||Z - A||_F.
  Eigen::MatrixXd project(const Eigen::MatrixXd& A) const;
  bool contains(const Eigen::MatrixXd& A, double tol = 1e-10) const;

  const std::vector<Eigen::MatrixXd>& basis() const { return basis_; }
  const Eigen::MatrixXd& offset() const { return offset_; }
  double radius() const { return radius_; }
  bool basis_condition_warning() const { return basis_condition_warning_; }

 private:
  ConstraintSet() = default;
  Kind kind_ = Kind::unconstrained;
  std::vector<Eigen::MatrixXd> basis_;
  Eigen::MatrixXd offset_;
  double radius_ = 0.0;
  bool basis_condition_warning_ = false;
};

// Exact Euclidean projection onto the l1 ball of the given radius, by the
// sort-and-threshold rule (largest prefix with a positive gap).
Eigen::VectorXd l1_ball_project(const Eigen::VectorXd& v, double radius);

struct DataMatrices {
  Eigen::MatrixXd X;        // [x_1 ... x_T]
  Eigen::MatrixXd X_tilde;  // [x_2 ... x_{T+1}]
  // [eta_2 ... eta_{T+1}]; present when the noises are known (simulation).
  std::optional<Eigen::MatrixXd> E;
};

DataMatrices build_data_matrices(const Trajectory& traj);

struct FixedStep {
  double eta = 0.0;
};
struct LipschitzStep {};  // eta = 1 / (2 sigma_max(X)^2)
struct BacktrackingStep {
  double beta = 0.5;  // step shrink factor, in (0, 1)
  double c = 0.5;     // sufficient-decrease fraction, in (0, 1)
};
using StepRule = std::variant<LipschitzStep, FixedStep, BacktrackingStep>;

struct SolverConfig {
  long long max_iters = 50000;
  // Gradient-mapping tolerance; when unset the scale-aware default
  // 1e-8 * (1 + ||X_tilde||_F) is used.
  std::optional<double> grad_map_tol;
  StepRule step_rule = LipschitzStep{};
  bool record_objectives = false;
};

struct EstimateResult {
  Eigen::MatrixXd A_hat;
  double objective = 0.0;
  double grad_map_norm = 0.0;
  long long iterations = 0;
  bool converged = false;
  double step_size = 0.0;
  std::vector<double> objectives;  // per accepted iterate, when recorded
};

// Closed-form least squares A_hat = X_tilde X^T (X X^T)^+, computed through
// an SVD pseudoinverse with singular values below 1e-12 * sigma_max dropped
// (minimum-norm solution under rank deficiency).
EstimateResult ols(const DataMatrices& data);

// Projected gradient descent on f(A) = ||X_tilde - A X||_F^2 over K,
// terminating when the gradient-mapping norm drops below the tolerance.
EstimateResult constrained_ls(const DataMatrices& data, const ConstraintSet& K,
                              const SolverConfig& cfg = {});

struct FirstOrderReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  // rhs - lhs
  bool violated = false;
};

// Residual check of the first-order optimality inequality
//   ||(A_hat - B)X||_F^2 <= <(A_hat - B)X, E> + ||(A*-B)X||_F ||(A_hat - B)X||_F
// satisfied by any minimizer of the constrained least-squares program.
FirstOrderReport check_first_order_inequality(const Eigen::MatrixXd& A_hat,
                                              const Eigen::MatrixXd& B,
                                              const Eigen::MatrixXd& A_star,
                                              const DataMatrices& data,
                                              double tol_rel = 1e-6);

}  // namespace ldsid
