#include "ldsid/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ldsid/errors.hpp"
#include "ldsid/rng.hpp"

namespace ldsid {

SubspaceCone make_subspace_cone(int d) {
  if (d < 1) throw ParameterError("subspace cone dimension must be positive");
  return SubspaceCone{d};
}

L1DescentCone make_l1_descent_cone(int n, int k, std::vector<int> support,
                                   std::vector<double> signs) {
  if (n < 1) throw ParameterError("l1 descent cone: n must be positive");
  if (k < 1 || k > n * n) {
    throw ParameterError("l1 descent cone: k must lie in [1, n^2]");
  }
  if (static_cast<int>(support.size()) != k || signs.size() != support.size()) {
    throw ParameterError("l1 descent cone: support and signs must have length k");
  }
  std::vector<char> seen(static_cast<std::size_t>(n) * n, 0);
  for (std::size_t i = 0; i < support.size(); ++i) {
    const int idx = support[i];
    if (idx < 0 || idx >= n * n) throw ParameterError("l1 descent cone: support index out of range");
    if (seen[static_cast<std::size_t>(idx)]) throw ParameterError("l1 descent cone: duplicate support index");
    seen[static_cast<std::size_t>(idx)] = 1;
    if (signs[i] != 1.0 && signs[i] != -1.0) {
      throw ParameterError("l1 descent cone: signs must be +1 or -1");
    }
  }
  return L1DescentCone{n, k, std::move(support), std::move(signs)};
}

L1DescentCone canonical_l1_descent_cone(int n, int k) {
  std::vector<int> support(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) support[static_cast<std::size_t>(i)] = i;
  return make_l1_descent_cone(n, k, std::move(support),
                              std::vector<double>(static_cast<std::size_t>(k), 1.0));
}

L1DescentCone descent_cone_of(const Eigen::MatrixXd& A_star) {
  if (A_star.rows() != A_star.cols() || A_star.rows() == 0) {
    throw DimensionError("descent_cone_of: matrix must be square and nonempty");
  }
  const int n = static_cast<int>(A_star.rows());
  std::vector<int> support;
  std::vector<double> signs;
  for (Eigen::Index i = 0; i < A_star.size(); ++i) {
    const double v = A_star.data()[i];
    if (v != 0.0) {
      support.push_back(static_cast<int>(i));
      signs.push_back(v > 0.0 ? 1.0 : -1.0);
    }
  }
  if (support.empty()) throw ParameterError("descent_cone_of: matrix is identically zero");
  const int k = static_cast<int>(support.size());
  return make_l1_descent_cone(n, k, std::move(support), std::move(signs));
}

double beta(int n, int k) {
  if (n < 1) throw ParameterError("beta: n must be positive");
  if (k < 1 || k > n * n) throw ParameterError("beta: k must lie in [1, n^2]");
  const double kk = static_cast<double>(k);
  const double n2 = static_cast<double>(n) * static_cast<double>(n);
  return std::sqrt(kk * std::log(n2 / kk) + kk);
}

std::pair<double, double> gamma_bounds_subspace(int d) {
  if (d < 1) throw ParameterError("gamma_bounds_subspace: d must be positive");
  return {static_cast<double>(d), std::sqrt(static_cast<double>(d))};
}

double gamma1_bound_l1(int n, int k) {
  const double b = beta(n, k);
  const double bracket = std::max(std::log(static_cast<double>(n) / b), 0.0) + 1.0;
  return static_cast<double>(n) * b * bracket;
}

Eigen::VectorXd l1_descent_cone_project(const Eigen::VectorXd& g,
                                        const std::vector<int>& support,
                                        const std::vector<double>& signs,
                                        double bisect_tol) {
  const Eigen::Index m = g.size();
  const std::size_t k = support.size();
  if (k == 0 || signs.size() != k) {
    throw ParameterError("l1_descent_cone_project: support and signs must be nonempty and matched");
  }
  std::vector<char> on_support(static_cast<std::size_t>(m), 0);
  for (int idx : support) {
    if (idx < 0 || idx >= m) throw ParameterError("l1_descent_cone_project: support index out of range");
    on_support[static_cast<std::size_t>(idx)] = 1;
  }
  if (!(bisect_tol > 0.0)) throw ParameterError("l1_descent_cone_project: tolerance must be positive");

  double support_dot = 0.0;
  double off_abs = 0.0;
  for (std::size_t i = 0; i < k; ++i) support_dot += signs[i] * g[support[i]];
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!on_support[static_cast<std::size_t>(i)]) off_abs += std::abs(g[i]);
  }
  if (support_dot + off_abs <= 0.0) return g;  // already inside the cone

  // Shift the support entries against their signs and soft-threshold the rest:
  //   u_S = g_S - theta * signs,  u_{S^c} = soft(g_{S^c}, theta).
  // The constraint value is strictly decreasing in theta; bisect to its root.
  const auto constraint_at = [&](double theta) {
    double value = support_dot - theta * static_cast<double>(k);
    for (Eigen::Index i = 0; i < m; ++i) {
      if (!on_support[static_cast<std::size_t>(i)]) {
        value += std::max(std::abs(g[i]) - theta, 0.0);
      }
    }
    return value;
  };

  double hi = 1.0;
  int doublings = 0;
  while (constraint_at(hi) > 0.0) {
    hi *= 2.0;
    if (++doublings > 200) {
      throw std::runtime_error("l1_descent_cone_project: bracket search failed");
    }
  }
  double lo = 0.0;
  while (hi - lo > bisect_tol) {
    const double mid = 0.5 * (lo + hi);
    if (constraint_at(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double theta = 0.5 * (lo + hi);

  Eigen::VectorXd u(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (on_support[static_cast<std::size_t>(i)]) {
      u[i] = g[i];
    } else {
      const double shrunk = std::max(std::abs(g[i]) - theta, 0.0);
      u[i] = g[i] >= 0.0 ? shrunk : -shrunk;
    }
  }
  for (std::size_t i = 0; i < k; ++i) u[support[i]] -= theta * signs[i];
  return u;
}

WidthEstimate gaussian_width_mc(const TangentConeDescriptor& cone,
                                long long samples, std::uint64_t seed) {
  if (samples < 1) throw ParameterError("gaussian_width_mc: samples must be >= 1");
  if (const auto* sub = std::get_if<SubspaceCone>(&cone)) {
    if (sub->d < 1) throw ParameterError("gaussian_width_mc: subspace dimension must be positive");
  }

  double sum = 0.0;
  double sum_sq = 0.0;
  for (long long s = 0; s < samples; ++s) {
    SplitMix64 rng(derive_seed(seed, {static_cast<std::uint64_t>(s)}));
    double value = 0.0;
    if (const auto* sub = std::get_if<SubspaceCone>(&cone)) {
      // An isotropic Gaussian projected onto any d-dimensional subspace has a
      // chi_d norm, so drawing the d in-subspace coordinates suffices.
      double sq = 0.0;
      for (int i = 0; i < sub->d; ++i) {
        const double gi = rng.next_gaussian();
        sq += gi * gi;
      }
      value = std::sqrt(sq);
    } else {
      const auto& dc = std::get<L1DescentCone>(cone);
      const Eigen::Index m = static_cast<Eigen::Index>(dc.n) * dc.n;
      Eigen::VectorXd g(m);
      for (Eigen::Index i = 0; i < m; ++i) g[i] = rng.next_gaussian();
      value = l1_descent_cone_project(g, dc.support, dc.signs).norm();
    }
    sum += value;
    sum_sq += value * value;
  }

  WidthEstimate estimate;
  estimate.samples = samples;
  estimate.mean = sum / static_cast<double>(samples);
  if (samples > 1) {
    const double nn = static_cast<double>(samples);
    const double var =
        std::max(0.0, (sum_sq - nn * estimate.mean * estimate.mean) / (nn - 1.0));
    estimate.std_err = std::sqrt(var / nn);
  }
  return estimate;
}

namespace {

double simpson_slice(const std::function<double(double)>& f, double a, double fa,
                     double b, double fb, double* fm_out) {
  const double m = 0.5 * (a + b);
  const double fm = f(m);
  *fm_out = fm;
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_simpson_rec(const std::function<double(double)>& f, double a,
                            double b, double fa, double fm, double fb,
                            double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  double flm = 0.0, frm = 0.0;
  const double left = simpson_slice(f, a, fa, m, fm, &flm);
  const double right = simpson_slice(f, m, fm, b, fb, &frm);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double rel_tol) {
  if (!(b > a)) return 0.0;
  // Coarse composite pass to fix the absolute tolerance scale.
  const int coarse = 64;
  double rough = 0.0;
  const double h = (b - a) / coarse;
  double prev_x = a;
  double prev_f = f(a);
  for (int i = 1; i <= coarse; ++i) {
    const double x = a + h * i;
    const double fx = f(x);
    double fm = 0.0;
    rough += simpson_slice(f, prev_x, prev_f, x, fx, &fm);
    prev_x = x;
    prev_f = fx;
  }
  const double tol = rel_tol * std::max(std::abs(rough), 1e-300);

  const double fa = f(a);
  const double fb = f(b);
  double fm = 0.0;
  const double whole = simpson_slice(f, a, fa, b, fb, &fm);
  return adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, 48);
}

}  // namespace

double dudley_gamma_bound(const std::function<double(double)>& covering_log_fn,
                          double diameter, int alpha) {
  if (alpha != 1 && alpha != 2) throw ParameterError("dudley_gamma_bound: alpha must be 1 or 2");
  if (!(diameter > 0.0)) throw ParameterError("dudley_gamma_bound: diameter must be positive");

  const double inv_alpha = 1.0 / static_cast<double>(alpha);
  const auto integrand = [&](double eps) {
    const double v = covering_log_fn(eps);
    if (!std::isfinite(v)) {
      throw IntegrationError("dudley_gamma_bound: covering bound is not finite at eps=" +
                             std::to_string(eps));
    }
    return v <= 0.0 ? 0.0 : std::pow(v, inv_alpha);
  };

  // Integrate on [t0, diameter]; the head [0, t0] must be negligible or the
  // entropy integral diverges at 0.
  double t0 = diameter * 1e-12;
  double total = adaptive_simpson(integrand, t0, diameter, 1e-6);
  for (int round = 0; round < 3; ++round) {
    const double head = integrand(t0) * t0;
    if (head <= 1e-6 * std::max(total, 1e-300)) return total;
    const double t1 = t0 * 1e-6;
    total += adaptive_simpson(integrand, t1, t0, 1e-6);
    const double next_head = integrand(t1) * t1;
    if (next_head > 0.9 * head) {
      throw IntegrationError("dudley_gamma_bound: entropy integral diverges near 0");
    }
    t0 = t1;
  }
  if (integrand(t0) * t0 > 1e-6 * std::max(total, 1e-300)) {
    throw IntegrationError("dudley_gamma_bound: entropy integral diverges near 0");
  }
  return total;
}

TheoremBound theorem1_bound(double J, double g2F, double g2S, double g1S,
                            long long T, double delta, double bias) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw ParameterError("theorem1_bound: delta must lie in (0, 1)");
  }
  if (J < 0.0 || g2F < 0.0 || g2S < 0.0 || g1S < 0.0 || bias < 0.0) {
    throw ParameterError("theorem1_bound: inputs must be nonnegative");
  }
  if (T < 1) throw ParameterError("theorem1_bound: T must be positive");

  const double log_term = std::log(1.0 / delta);
  const double Td = static_cast<double>(T);
  TheoremBound out;
  out.T_min = J * J * J * J * std::max(g2S * g2S, log_term * log_term);
  out.error_bound =
      J * ((log_term + g2F) / std::sqrt(Td) + g1S / Td) + J * J * bias;
  return out;
}

ComplexityReport subspace_complexity_report(int n, int d, double delta,
                                            const std::vector<long long>& T_list,
                                            double J) {
  if (n < 1) throw ParameterError("subspace_complexity_report: n must be positive");
  if (d < 1 || d > n * n) {
    throw ParameterError("subspace_complexity_report: d must lie in [1, n^2]");
  }
  const auto [g1, g2] = gamma_bounds_subspace(d);
  ComplexityReport report;
  report.scenario = "subspace";
  report.n = n;
  report.d_or_k = d;
  report.delta = delta;
  report.J = J;
  report.gamma2_frob_bound = g2;
  report.gamma2_spec_bound = g2;
  report.gamma1_spec_bound = g1;
  report.T_min = theorem1_bound(J, g2, g2, 0.0, 1, delta, 0.0).T_min;
  for (long long T : T_list) {
    // gamma1/T is dominated by gamma2/sqrt(T) once T >= T_min; not tabulated.
    report.error_bounds.emplace_back(
        T, theorem1_bound(J, g2, g2, 0.0, T, delta, 0.0).error_bound);
  }
  return report;
}

ComplexityReport sparse_complexity_report(int n, int k, double delta,
                                          const std::vector<long long>& T_list,
                                          double J) {
  const double b = beta(n, k);
  const double g1 = gamma1_bound_l1(n, k);
  ComplexityReport report;
  report.scenario = "sparse";
  report.n = n;
  report.d_or_k = k;
  report.delta = delta;
  report.J = J;
  report.gamma2_frob_bound = b;
  report.gamma2_spec_bound = b;
  report.gamma1_spec_bound = g1;
  report.beta_value = b;
  report.T_min = theorem1_bound(J, b, b, g1, 1, delta, 0.0).T_min;
  for (long long T : T_list) {
    report.error_bounds.emplace_back(
        T, theorem1_bound(J, b, b, g1, T, delta, 0.0).error_bound);
  }
  return report;
}

}  // namespace ldsid
