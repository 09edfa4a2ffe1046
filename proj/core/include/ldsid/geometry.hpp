#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace ldsid {

// A d-dimensional subspace viewed as its own tangent cone.
struct SubspaceCone {
  int d = 0;
};

// Tangent cone of a scaled l1 ball at a k-sparse boundary point, recorded by
// the support (indices into vec(A), length k) and the signs of the point on
// it. Directions u in the cone satisfy <signs, u_S> + ||u_{S^c}||_1 <= 0.
struct L1DescentCone {
  int n = 0;
  int k = 0;
  std::vector<int> support;
  std::vector<double> signs;
};

using TangentConeDescriptor = std::variant<SubspaceCone, L1DescentCone>;

SubspaceCone make_subspace_cone(int d);
L1DescentCone make_l1_descent_cone(int n, int k, std::vector<int> support,
                                   std::vector<double> signs);
// Canonical instance: support on the first k vec entries, all signs positive.
// The width of the descent cone is invariant under support permutations and
// sign flips, so this is the representative used for reporting.
L1DescentCone canonical_l1_descent_cone(int n, int k);
// Descriptor read off a sparse matrix lying on the boundary of its l1 ball.
L1DescentCone descent_cone_of(const Eigen::MatrixXd& A_star);

// sqrt(k ln(n^2/k) + k), natural logarithm.
double beta(int n, int k);

// (gamma1, gamma2) = (d, sqrt(d)): the d^{1/alpha} covering rates with unit
// constant.
std::pair<double, double> gamma_bounds_subspace(int d);

// n * beta * (ln(n/beta) + 1), the entropy-integral rate for the sparse case,
// with the log clamped at zero so the bracket stays >= 1.
double gamma1_bound_l1(int n, int k);

// Euclidean projection of g onto {u : <signs, u_S> + ||u_{S^c}||_1 <= 0},
// by monotone bisection on the shift/soft-threshold parameter.
Eigen::VectorXd l1_descent_cone_project(const Eigen::VectorXd& g,
                                        const std::vector<int>& support,
                                        const std::vector<double>& signs,
                                        double bisect_tol = 1e-10);

struct WidthEstimate {
  double mean = 0.0;
  double std_err = 0.0;
  long long samples = 0;
};

// Monte-Carlo estimate of the Gaussian width of (cone intersect unit Frobenius
// ball): per standard-Gaussian sample G the supremum equals the norm of the
// cone projection of G. Per-sample seeds are derived from (seed, index) so the
// estimate does not depend on scheduling.
WidthEstimate gaussian_width_mc(const TangentConeDescriptor& cone,
                                long long samples, std::uint64_t seed);

// Entropy integral int_0^diameter (covering_log_fn(eps))^{1/alpha} d eps with
// unit constant, by adaptive quadrature (relative tolerance 1e-6). Throws
// IntegrationError when the integrand diverges at 0.
double dudley_gamma_bound(const std::function<double(double)>& covering_log_fn,
                          double diameter, int alpha);

struct TheoremBound {
  double T_min = 0.0;
  double error_bound = 0.0;
};

// Sample-size threshold and error bound with every unspecified constant set
// to one:
//   T_min = J^4 max{g2S^2, ln^2(1/delta)}
//   error = J [ (ln(1/delta) + g2F)/sqrt(T) + g1S/T ] + J^2 bias.
// Both values are up-to-constant quantities.
TheoremBound theorem1_bound(double J, double g2F, double g2S, double g1S,
                            long long T, double delta, double bias);

struct ComplexityReport {
  std::string scenario;  // "subspace" | "sparse"
  int n = 0;
  int d_or_k = 0;
  double delta = 0.1;
  double J = 1.0;
  double gamma2_frob_bound = 0.0;
  double gamma2_spec_bound = 0.0;
  double gamma1_spec_bound = 0.0;
  std::optional<double> beta_value;
  std::optional<WidthEstimate> width_mc;
  double T_min = 0.0;
  std::vector<std::pair<long long, double>> error_bounds;  // (T, bound)
};

// The subspace table drops the gamma1/T term (it is dominated by the
// gamma2/sqrt(T) term once T exceeds T_min); the sparse table keeps it.
ComplexityReport subspace_complexity_report(int n, int d, double delta,
                                            const std::vector<long long>& T_list,
                                            double J);
ComplexityReport sparse_complexity_report(int n, int k, double delta,
                                          const std::vector<long long>& T_list,
                                          double J);

}  // namespace ldsid
