#include "ldsid/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ldsid/errors.hpp"

namespace ldsid {

namespace {
constexpr double kSqrt3 = 1.7320508075688772935;
}

const char* to_string(NoiseFamily family) {
  switch (family) {
    case NoiseFamily::gaussian: return "gaussian";
    case NoiseFamily::rademacher: return "rademacher";
    case NoiseFamily::uniform: return "uniform";
  }
  return "gaussian";
}

NoiseFamily noise_family_from_string(const std::string& name) {
  if (name == "gaussian") return NoiseFamily::gaussian;
  if (name == "rademacher") return NoiseFamily::rademacher;
  if (name == "uniform") return NoiseFamily::uniform;
  throw ParameterError("unknown noise family: " + name);
}

double NoiseSpec::sample(SplitMix64& rng) const {
  switch (family) {
    case NoiseFamily::gaussian:
      return rng.next_gaussian();
    case NoiseFamily::rademacher:
      return (rng.next() >> 63) ? 1.0 : -1.0;
    case NoiseFamily::uniform:
      return (2.0 * rng.next_double() - 1.0) * kSqrt3;
  }
  return 0.0;
}

double spectral_radius(const Eigen::MatrixXd& A) {
  if (A.rows() != A.cols()) {
    throw DimensionError("spectral_radius: matrix must be square");
  }
  if (A.rows() == 0) {
    throw DimensionError("spectral_radius: matrix must be nonempty");
  }
  Eigen::EigenSolver<Eigen::MatrixXd> eig(A, /*computeEigenvectors=*/false);
  if (eig.info() != Eigen::Success) {
    throw std::runtime_error("spectral_radius: eigensolver did not converge");
  }
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

namespace {

// Exact route for spectra the iteration cannot separate: largest eigenvalue
// of the smaller Gram matrix.
double spectral_norm_dense(const Eigen::MatrixXd& A) {
  Eigen::MatrixXd gram;
  if (A.rows() <= A.cols()) {
    gram.noalias() = A * A.transpose();
  } else {
    gram.noalias() = A.transpose() * A;
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram,
                                                           Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(eig.eigenvalues().maxCoeff(), 0.0));
}

}  // namespace

double spectral_norm(const Eigen::MatrixXd& A, double tol, int max_iters) {
  if (A.rows() == 0 || A.cols() == 0) return 0.0;
  const double frob = A.norm();
  if (frob == 0.0 || !std::isfinite(frob)) return frob;

  // Block power iteration on A^T A with Rayleigh-Ritz extraction. A small
  // block keeps convergence geometric when a pair of top singular values
  // coincide; a genuine cluster (no gap within the block span) stalls, and
  // after a budget of stalled iterations the dense Gram eigensolver takes
  // over so the result is accurate either way.
  const Eigen::Index p = std::min<Eigen::Index>({4, A.rows(), A.cols()});
  SplitMix64 rng(0x5EEDC0DEF00DULL);
  Eigen::MatrixXd V(A.cols(), p);
  for (Eigen::Index i = 0; i < V.size(); ++i) V.data()[i] = rng.next_gaussian();
  {
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(V);
    V = qr.householderQ() * Eigen::MatrixXd::Identity(A.cols(), p);
  }

  const int budget = static_cast<int>(std::min<long long>(max_iters, 150));
  double theta = 0.0;
  for (int it = 0; it < budget; ++it) {
    const Eigen::MatrixXd W = A * V;              // rows x p
    const Eigen::MatrixXd Z = A.transpose() * W;  // cols x p, = A^T A V
    const Eigen::MatrixXd B = W.transpose() * W;  // = V^T A^T A V
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ritz(B);
    theta = ritz.eigenvalues()[p - 1];
    const Eigen::VectorXd y = ritz.eigenvectors().col(p - 1);
    const double resid = (Z * y - theta * (V * y)).norm();
    if (resid <= tol * std::max(theta, frob * frob * 1e-300)) {
      return std::sqrt(std::max(theta, 0.0));
    }
    if (Z.norm() == 0.0) return 0.0;  // V landed in the null space of A^T A
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(Z);
    V = qr.householderQ() * Eigen::MatrixXd::Identity(A.cols(), p);
  }
  return spectral_norm_dense(A);
}

StabilityParamDetail stability_param_J_detailed(const Eigen::MatrixXd& A,
                                                double tol) {
  if (A.rows() != A.cols() || A.rows() == 0) {
    throw DimensionError("stability_param_J: matrix must be square and nonempty");
  }
  if (!(tol > 0.0)) {
    throw ParameterError("stability_param_J: tol must be positive");
  }
  const double rho = spectral_radius(A);
  if (rho >= 1.0) {
    throw InstabilityError("stability_param_J: spectral radius " +
                           std::to_string(rho) + " >= 1, series diverges");
  }

  const Eigen::Index n = A.rows();
  double sum = 1.0;  // i = 0 term: ||I||_2
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
  double prev_norm = 1.0;
  double ratios[5] = {0, 0, 0, 0, 0};
  int ratio_count = 0;

  constexpr int kMaxTerms = 1000000;
  for (int m = 1; m <= kMaxTerms; ++m) {
    power = power * A;
    const double nm = spectral_norm(power);
    sum += nm;
    const double ratio = prev_norm > 0.0 ? nm / prev_norm : 0.0;
    ratios[(ratio_count++) % 5] = ratio;
    prev_norm = nm;

    if (nm < 1.0) {
      const int window = std::min(ratio_count, 5);
      double r = 0.0;
      for (int i = 0; i < window; ++i) r = std::max(r, ratios[i]);
      if (r < 1.0) {
        const double tail = nm * r / (1.0 - r);
        if (tail < tol) return {sum, m, tail};
      }
      if (nm == 0.0) return {sum, m, 0.0};  // nilpotent: series is exact
    }
  }
  throw ResourceError("stability_param_J: truncation did not converge");
}

double stability_param_J(const Eigen::MatrixXd& A, double tol) {
  return stability_param_J_detailed(A, tol).value;
}

LdsModel::LdsModel(Eigen::MatrixXd A_star, double j_tol)
    : A_star_(std::move(A_star)) {
  if (A_star_.rows() != A_star_.cols() || A_star_.rows() == 0) {
    throw DimensionError("LdsModel: system matrix must be square and nonempty");
  }
  spectral_radius_ = ldsid::spectral_radius(A_star_);
  J_ = spectral_radius_ < 1.0
           ? stability_param_J(A_star_, j_tol)
           : std::numeric_limits<double>::infinity();
}

Trajectory trajectory_from_noises(const LdsModel& model,
                                  std::vector<Eigen::VectorXd> noises) {
  if (!model.strictly_stable()) {
    throw InstabilityError("trajectory_from_noises: spectral radius " +
                           std::to_string(model.spectral_radius()) + " >= 1");
  }
  if (noises.size() < 2) {
    throw ParameterError("trajectory_from_noises: need at least eta_1, eta_2 (T >= 1)");
  }
  const int n = model.n();
  for (const auto& eta : noises) {
    if (eta.size() != n) {
      throw DimensionError("trajectory_from_noises: noise dimension mismatch");
    }
  }
  Trajectory traj;
  traj.T = static_cast<long long>(noises.size()) - 1;
  traj.noises = std::move(noises);
  traj.states.reserve(traj.noises.size() + 1);
  traj.states.push_back(Eigen::VectorXd::Zero(n));
  for (const auto& eta : traj.noises) {
    Eigen::VectorXd next = model.A_star() * traj.states.back() + eta;
    traj.states.push_back(std::move(next));
  }
  return traj;
}

Trajectory simulate(const LdsModel& model, const NoiseSpec& noise, long long T,
                    std::uint64_t seed) {
  if (!model.strictly_stable()) {
    throw InstabilityError("simulate: spectral radius " +
                           std::to_string(model.spectral_radius()) +
                           " >= 1, model is not strictly stable");
  }
  if (T < 1) throw ParameterError("simulate: T must be >= 1");

  const int n = model.n();
  SplitMix64 rng(seed);
  std::vector<Eigen::VectorXd> noises;
  noises.reserve(static_cast<std::size_t>(T) + 1);
  for (long long t = 0; t <= T; ++t) {
    Eigen::VectorXd eta(n);
    for (int i = 0; i < n; ++i) eta[i] = noise.sample(rng);
    noises.push_back(std::move(eta));
  }
  Trajectory traj = trajectory_from_noises(model, std::move(noises));
  traj.seed = seed;
  traj.noise_family = noise.family;
  return traj;
}

Eigen::MatrixXd gamma_matrix(const Eigen::MatrixXd& A, long long T) {
  if (A.rows() != A.cols() || A.rows() == 0) {
    throw DimensionError("gamma_matrix: matrix must be square and nonempty");
  }
  if (T < 1) throw ParameterError("gamma_matrix: T must be >= 1");
  const long long n = A.rows();
  if (T * n > 5000) {
    throw ResourceError("gamma_matrix: T*n = " + std::to_string(T * n) +
                        " exceeds the materialization guard of 5000");
  }
  Eigen::MatrixXd gamma = Eigen::MatrixXd::Zero(T * n, T * n);
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
  for (long long d = 0; d < T; ++d) {
    for (long long i = d; i < T; ++i) {
      gamma.block(i * n, (i - d) * n, n, n) = power;
    }
    if (d + 1 < T) power = power * A;
  }
  return gamma;
}

Eigen::MatrixXd random_stable_matrix(int n, double target_spec_norm,
                                     std::optional<int> sparsity,
                                     std::uint64_t seed) {
  if (n < 1) throw ParameterError("random_stable_matrix: n must be positive");
  if (!(target_spec_norm > 0.0 && target_spec_norm < 1.0)) {
    throw ParameterError(
        "random_stable_matrix: target spectral norm must lie in (0, 1)");
  }
  const int total = n * n;
  const int k = sparsity.value_or(total);
  if (k < 1 || k > total) {
    throw ParameterError("random_stable_matrix: sparsity must lie in [1, n^2]");
  }

  SplitMix64 rng(seed);
  for (int attempt = 0; attempt < 16; ++attempt) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    // Partial Fisher-Yates over the n^2 entry positions.
    std::vector<int> idx(total);
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < k; ++i) {
      const int j = i + static_cast<int>(rng.next() % static_cast<std::uint64_t>(total - i));
      std::swap(idx[i], idx[j]);
    }
    for (int i = 0; i < k; ++i) {
      double value = rng.next_gaussian();
      while (value == 0.0) value = rng.next_gaussian();
      A(idx[i] / n, idx[i] % n) = value;
    }
    const double sigma = spectral_norm(A);
    if (sigma > 0.0) return A * (target_spec_norm / sigma);
  }
  throw std::runtime_error("random_stable_matrix: failed to draw a nonzero matrix");
}

}  // namespace ldsid
