#include "ldsid/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ldsid/errors.hpp"

namespace ldsid {

namespace {

double trace_inner(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.cwiseProduct(b).sum();
}

}  // namespace

ConstraintSet ConstraintSet::unconstrained() {
  ConstraintSet k;
  k.kind_ = Kind::unconstrained;
  return k;
}

ConstraintSet ConstraintSet::subspace(std::vector<Eigen::MatrixXd> basis,
                                      Eigen::MatrixXd offset) {
  if (basis.empty()) {
    throw ParameterError("subspace constraint needs at least one basis matrix");
  }
  const Eigen::Index n = basis.front().rows();
  if (n == 0 || basis.front().cols() != n) {
    throw DimensionError("subspace basis matrices must be square and nonempty");
  }
  for (const auto& V : basis) {
    if (V.rows() != n || V.cols() != n) {
      throw DimensionError("subspace basis matrices must share one shape");
    }
  }
  if (offset.size() == 0) offset = Eigen::MatrixXd::Zero(n, n);
  if (offset.rows() != n || offset.cols() != n) {
    throw DimensionError("subspace offset shape mismatch");
  }
  if (static_cast<Eigen::Index>(basis.size()) > n * n) {
    throw ParameterError("subspace dimension exceeds n^2");
  }

  ConstraintSet k;
  k.kind_ = Kind::subspace;
  k.offset_ = std::move(offset);
  k.basis_.reserve(basis.size());
  // Modified Gram-Schmidt with a second orthogonalization pass.
  for (auto& V : basis) {
    const double orig = V.norm();
    if (orig == 0.0) throw ParameterError("subspace basis contains a zero matrix");
    Eigen::MatrixXd W = std::move(V);
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& U : k.basis_) {
        W -= trace_inner(W, U) * U;
      }
    }
    const double res = W.norm();
    if (res <= 1e-12 * orig) {
      throw ParameterError("subspace basis is linearly dependent");
    }
    if (res <= 1e-6 * orig) k.basis_condition_warning_ = true;
    k.basis_.push_back(W / res);
  }
  return k;
}

ConstraintSet ConstraintSet::subspace(std::vector<Eigen::MatrixXd> basis) {
  return subspace(std::move(basis), Eigen::MatrixXd());
}

ConstraintSet ConstraintSet::l1_ball(double radius) {
  if (!(radius > 0.0)) throw ParameterError("l1 ball radius must be positive");
  ConstraintSet k;
  k.kind_ = Kind::l1_ball;
  k.radius_ = radius;
  return k;
}

Eigen::VectorXd l1_ball_project(const Eigen::VectorXd& v, double radius) {
  if (!(radius > 0.0)) throw ParameterError("l1 ball radius must be positive");
  if (v.lpNorm<1>() <= radius) return v;

  const Eigen::Index m = v.size();
  std::vector<double> mags(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) mags[static_cast<std::size_t>(i)] = std::abs(v[i]);
  std::sort(mags.begin(), mags.end(), std::greater<double>());

  // Largest prefix rho with mags[rho-1] - theta_rho > 0 determines the shift.
  double cumulative = 0.0;
  double theta = 0.0;
  for (Eigen::Index j = 1; j <= m; ++j) {
    cumulative += mags[static_cast<std::size_t>(j - 1)];
    const double t = (cumulative - radius) / static_cast<double>(j);
    if (mags[static_cast<std::size_t>(j - 1)] - t > 0.0) theta = t;
  }

  Eigen::VectorXd w(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double shrunk = std::max(std::abs(v[i]) - theta, 0.0);
    w[i] = v[i] >= 0.0 ? shrunk : -shrunk;
  }
  return w;
}

Eigen::MatrixXd ConstraintSet::project(const Eigen::MatrixXd& A) const {
  switch (kind_) {
    case Kind::unconstrained:
      return A;
    case Kind::subspace: {
      if (A.rows() != offset_.rows() || A.cols() != offset_.cols()) {
        throw DimensionError("project: matrix shape does not match the subspace");
      }
      const Eigen::MatrixXd D = A - offset_;
      Eigen::MatrixXd result = offset_;
      for (const auto& V : basis_) {
        result += trace_inner(D, V) * V;
      }
      return result;
    }
    case Kind::l1_ball: {
      const Eigen::Map<const Eigen::VectorXd> vec(A.data(), A.size());
      const Eigen::VectorXd projected = l1_ball_project(vec, radius_);
      return Eigen::Map<const Eigen::MatrixXd>(projected.data(), A.rows(), A.cols());
    }
  }
  return A;
}

bool ConstraintSet::contains(const Eigen::MatrixXd& A, double tol) const {
  return (project(A) - A).norm() <= tol;
}

DataMatrices build_data_matrices(const Trajectory& traj) {
  if (traj.states.size() < 3) {
    throw DimensionError(
        "build_data_matrices: trajectory needs at least 3 states (T >= 1)");
  }
  const long long T = static_cast<long long>(traj.states.size()) - 2;
  const int n = traj.n();
  DataMatrices data;
  data.X.resize(n, T);
  data.X_tilde.resize(n, T);
  for (long long t = 0; t < T; ++t) {
    data.X.col(t) = traj.states[static_cast<std::size_t>(t) + 1];
    data.X_tilde.col(t) = traj.states[static_cast<std::size_t>(t) + 2];
  }
  if (traj.noises.size() == static_cast<std::size_t>(T) + 1) {
    Eigen::MatrixXd E(n, T);
    for (long long t = 0; t < T; ++t) {
      E.col(t) = traj.noises[static_cast<std::size_t>(t) + 1];
    }
    data.E = std::move(E);
  }
  return data;
}

EstimateResult ols(const DataMatrices& data) {
  const Eigen::MatrixXd& X = data.X;
  const Eigen::MatrixXd& Xt = data.X_tilde;
  if (X.rows() != Xt.rows() || X.cols() != Xt.cols()) {
    throw DimensionError("ols: X and X_tilde shapes differ");
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double cutoff = sv.size() > 0 ? 1e-12 * sv[0] : 0.0;
  Eigen::VectorXd inv(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    inv[i] = sv[i] > cutoff ? 1.0 / sv[i] : 0.0;
  }
  const Eigen::MatrixXd pinv =
      svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();

  EstimateResult result;
  result.A_hat = Xt * pinv;
  result.objective = (Xt - result.A_hat * X).squaredNorm();
  result.grad_map_norm = (2.0 * (result.A_hat * X - Xt) * X.transpose()).norm();
  result.iterations = 0;
  result.converged = true;
  result.step_size = 0.0;
  return result;
}

EstimateResult constrained_ls(const DataMatrices& data, const ConstraintSet& K,
                              const SolverConfig& cfg) {
  const Eigen::MatrixXd& X = data.X;
  const Eigen::MatrixXd& Xt = data.X_tilde;
  if (X.rows() != Xt.rows() || X.cols() != Xt.cols()) {
    throw DimensionError("constrained_ls: X and X_tilde shapes differ");
  }
  if (cfg.max_iters < 0) throw ParameterError("constrained_ls: max_iters must be >= 0");
  if (cfg.grad_map_tol && !(*cfg.grad_map_tol > 0.0)) {
    throw ParameterError("constrained_ls: grad_map_tol must be positive");
  }

  const int n = static_cast<int>(X.rows());
  const double sigma = spectral_norm(X);
  const double tol = cfg.grad_map_tol.value_or(1e-8 * (1.0 + Xt.norm()));

  const bool backtracking = std::holds_alternative<BacktrackingStep>(cfg.step_rule);
  BacktrackingStep bt;
  double eta = 1.0;
  double eta_cap = 1.0;
  if (const auto* fixed = std::get_if<FixedStep>(&cfg.step_rule)) {
    if (!(fixed->eta > 0.0)) throw ParameterError("fixed step size must be positive");
    eta = fixed->eta;
  } else if (backtracking) {
    bt = std::get<BacktrackingStep>(cfg.step_rule);
    if (!(bt.beta > 0.0 && bt.beta < 1.0 && bt.c > 0.0 && bt.c < 1.0)) {
      throw ParameterError("backtracking parameters must lie in (0, 1)");
    }
    eta_cap = sigma > 0.0 ? 1.0 / (sigma * sigma) : 1.0;
    eta = eta_cap;
  } else {
    // Exact Lipschitz constant of the gradient is 2 sigma_max(X)^2.
    eta = sigma > 0.0 ? 1.0 / (2.0 * sigma * sigma) : 1.0;
  }

  const auto objective_at = [&](const Eigen::MatrixXd& M) {
    return (Xt - M * X).squaredNorm();
  };
  const auto gradient_at = [&](const Eigen::MatrixXd& M) {
    return Eigen::MatrixXd(2.0 * (M * X - Xt) * X.transpose());
  };

  EstimateResult result;
  Eigen::MatrixXd A = K.project(Eigen::MatrixXd::Zero(n, n));
  double f = objective_at(A);
  if (!std::isfinite(f)) throw DivergenceError("constrained_ls: non-finite objective at iteration 0", 0);
  if (cfg.record_objectives) result.objectives.push_back(f);

  long long steps = 0;
  bool converged = false;
  double grad_map = std::numeric_limits<double>::infinity();
  while (true) {
    const Eigen::MatrixXd grad = gradient_at(A);
    Eigen::MatrixXd next;
    if (backtracking) {
      eta = std::min(eta / bt.beta, eta_cap);
      for (;;) {
        next = K.project(A - eta * grad);
        const double fn = objective_at(next);
        const double step2 = (next - A).squaredNorm();
        if (step2 == 0.0 ||
            fn <= f - (bt.c / eta) * step2 + 1e-14 * std::max(1.0, f)) {
          break;
        }
        eta *= bt.beta;
        if (eta < 1e-300) {
          throw DivergenceError("constrained_ls: backtracking step underflow at iteration " +
                                    std::to_string(steps),
                                steps);
        }
      }
    } else {
      next = K.project(A - eta * grad);
    }

    grad_map = (A - next).norm() / eta;
    if (!std::isfinite(grad_map)) {
      throw DivergenceError("constrained_ls: iterate diverged (non-finite) at iteration " +
                                std::to_string(steps),
                            steps);
    }
    if (grad_map <= tol) {
      converged = true;
      break;
    }
    if (steps >= cfg.max_iters) break;

    A = std::move(next);
    f = objective_at(A);
    ++steps;
    if (cfg.record_objectives) result.objectives.push_back(f);
    if (!std::isfinite(f)) {
      throw DivergenceError("constrained_ls: objective diverged (non-finite) at iteration " +
                                std::to_string(steps),
                            steps);
    }
  }

  result.A_hat = std::move(A);
  result.objective = f;
  result.grad_map_norm = grad_map;
  result.iterations = steps;
  result.converged = converged;
  result.step_size = eta;
  return result;
}

FirstOrderReport check_first_order_inequality(const Eigen::MatrixXd& A_hat,
                                              const Eigen::MatrixXd& B,
                                              const Eigen::MatrixXd& A_star,
                                              const DataMatrices& data,
                                              double tol_rel) {
  if (!data.E) {
    throw UnsupportedCheckError(
        "check_first_order_inequality: noise matrix E is required");
  }
  const Eigen::MatrixXd diff = (A_hat - B) * data.X;
  const double lhs = diff.squaredNorm();
  const double rhs = trace_inner(diff, *data.E) +
                     ((A_star - B) * data.X).norm() * diff.norm();
  FirstOrderReport report;
  report.lhs = lhs;
  report.rhs = rhs;
  report.slack = rhs - lhs;
  report.violated = report.slack < -tol_rel * std::max(1.0, lhs);
  return report;
}

}  // namespace ldsid
