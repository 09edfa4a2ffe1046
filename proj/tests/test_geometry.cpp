#include "ldsid/geometry.hpp"

#include <cmath>

#include <doctest.h>

#include "ldsid/errors.hpp"
#include "ldsid/rng.hpp"
#include "oracles.hpp"

using namespace ldsid;

TEST_CASE("beta formula") {
  CHECK(beta(10, 100) == 10.0);  // k = n^2 collapses the log term
  CHECK(beta(1, 1) == 1.0);
  CHECK(beta(10, 10) ==
        doctest::Approx(std::sqrt(10.0 * std::log(10.0) + 10.0)).epsilon(1e-15));
  CHECK(beta(10, 10) == doctest::Approx(5.747).epsilon(1e-3));

  CHECK_THROWS_AS(beta(10, 0), ParameterError);
  CHECK_THROWS_AS(beta(10, 101), ParameterError);

  for (int n : {2, 5, 17, 30}) {
    double prev = 0.0;
    for (int k = 1; k <= n * n; ++k) {
      const double b = beta(n, k);
      CHECK(b >= prev - 1e-12);
      CHECK(b <= n + 1e-12);
      prev = b;
    }
  }
}

TEST_CASE("subspace gamma rates") {
  CHECK(gamma_bounds_subspace(1) == std::pair<double, double>{1.0, 1.0});
  CHECK(gamma_bounds_subspace(100) == std::pair<double, double>{100.0, 10.0});
  CHECK(gamma_bounds_subspace(64) == std::pair<double, double>{64.0, 8.0});
  CHECK_THROWS_AS(gamma_bounds_subspace(0), ParameterError);
}

TEST_CASE("sparse-case gamma1 rate") {
  CHECK(gamma1_bound_l1(10, 100) == 100.0);  // beta = n kills the log
  const double b = beta(10, 10);
  CHECK(gamma1_bound_l1(10, 10) ==
        doctest::Approx(10.0 * b * (std::log(10.0 / b) + 1.0)).epsilon(1e-15));
  CHECK(gamma1_bound_l1(10, 10) == doctest::Approx(89.3).epsilon(2e-3));

  // k of order n scales like (n ln n)^{3/2} up to a modest constant.
  for (int n : {10, 31, 100, 316, 1000}) {
    const double value = gamma1_bound_l1(n, n);
    const double scale = std::pow(n * std::log(static_cast<double>(n)), 1.5);
    CHECK(value / scale >= 0.25);
    CHECK(value / scale <= 1.25);
  }
}

TEST_CASE("descent cone projection against face enumeration") {
  SplitMix64 rng(61);
  for (int trial = 0; trial < 200; ++trial) {
    const int m = 2 + static_cast<int>(rng.next() % 4);  // ambient 2..5
    const int k = 1 + static_cast<int>(rng.next() % m);
    std::vector<int> indices(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) indices[static_cast<std::size_t>(i)] = i;
    for (int i = 0; i < k; ++i) {
      const int j = i + static_cast<int>(rng.next() % static_cast<std::uint64_t>(m - i));
      std::swap(indices[static_cast<std::size_t>(i)], indices[static_cast<std::size_t>(j)]);
    }
    std::vector<int> support(indices.begin(), indices.begin() + k);
    std::vector<double> signs;
    for (int i = 0; i < k; ++i) signs.push_back((rng.next() & 1) ? 1.0 : -1.0);

    Eigen::VectorXd g(m);
    for (int i = 0; i < m; ++i) g[i] = 2.0 * rng.next_gaussian();

    const Eigen::VectorXd fast = l1_descent_cone_project(g, support, signs);
    const Eigen::VectorXd brute =
        oracles::l1_descent_cone_project_bruteforce(g, support, signs);
    CHECK((fast - brute).norm() <= 1e-4);

    // The output is feasible up to the bisection tolerance.
    double c = 0.0;
    for (int i = 0; i < k; ++i) c += signs[static_cast<std::size_t>(i)] * fast[support[static_cast<std::size_t>(i)]];
    for (int i = 0; i < m; ++i) {
      bool on = false;
      for (int s : support) on = on || (s == i);
      if (!on) c += std::abs(fast[i]);
    }
    CHECK(c <= 1e-8);
  }

  SUBCASE("feasible points are fixed") {
    Eigen::VectorXd g(3);
    g << -2.0, 0.5, 0.5;  // <s, g_S> + |g_off|_1 = -2 + 1 <= 0
    const Eigen::VectorXd p = l1_descent_cone_project(g, {0}, {1.0});
    CHECK(p == g);
  }

  SUBCASE("descriptor validation") {
    CHECK_THROWS_AS(make_l1_descent_cone(2, 5, {0, 1, 2, 3, 0}, {1, 1, 1, 1, 1}),
                    ParameterError);
    CHECK_THROWS_AS(make_l1_descent_cone(2, 2, {0, 0}, {1.0, 1.0}), ParameterError);
    CHECK_THROWS_AS(make_l1_descent_cone(2, 1, {0}, {0.5}), ParameterError);
    const L1DescentCone cone = canonical_l1_descent_cone(3, 4);
    CHECK(cone.support == std::vector<int>{0, 1, 2, 3});

    Eigen::MatrixXd sparse = Eigen::MatrixXd::Zero(2, 2);
    sparse(0, 1) = -0.4;
    sparse(1, 1) = 0.2;
    const L1DescentCone from_matrix = descent_cone_of(sparse);
    CHECK(from_matrix.k == 2);
    CHECK(from_matrix.support == std::vector<int>{2, 3});
    CHECK(from_matrix.signs == std::vector<double>{-1.0, 1.0});
  }
}

TEST_CASE("gaussian width calibration") {
  SUBCASE("one-dimensional subspace gives the half-normal mean") {
    const WidthEstimate w = gaussian_width_mc(SubspaceCone{1}, 10000, 71);
    CHECK(std::abs(w.mean - std::sqrt(2.0 / 3.141592653589793)) <= 3.0 * w.std_err);
  }

  SUBCASE("chi means across dimensions") {
    for (int d : {1, 10, 100}) {
      const WidthEstimate w = gaussian_width_mc(SubspaceCone{d}, 10000, 72);
      CHECK(std::abs(w.mean - oracles::chi_mean(d)) <= 3.0 * w.std_err);
      CHECK(w.mean >= std::sqrt(std::max(d - 1, 0)) - 3.0 * w.std_err);
      CHECK(w.mean <= std::sqrt(static_cast<double>(d)) + 3.0 * w.std_err);
    }
  }

  SUBCASE("descent cone width stays within the beta scale") {
    const WidthEstimate w =
        gaussian_width_mc(canonical_l1_descent_cone(10, 10), 10000, 73);
    CHECK(w.mean <= 3.0 * beta(10, 10));
    CHECK(w.mean > 0.0);
  }

  SUBCASE("deterministic per seed") {
    const WidthEstimate a = gaussian_width_mc(SubspaceCone{7}, 500, 99);
    const WidthEstimate b = gaussian_width_mc(SubspaceCone{7}, 500, 99);
    CHECK(a.mean == b.mean);
    CHECK(a.std_err == b.std_err);
    CHECK_THROWS_AS(gaussian_width_mc(SubspaceCone{7}, 0, 1), ParameterError);
  }
}

TEST_CASE("entropy integral bounds") {
  SUBCASE("zero entropy integrates to zero") {
    CHECK(dudley_gamma_bound([](double) { return 0.0; }, 2.0, 2) == 0.0);
  }

  SUBCASE("subspace covering bound reproduces the d^{1/alpha} scaling") {
    for (int alpha : {1, 2}) {
      double base = 0.0;
      for (int d : {4, 16, 64, 256}) {
        const auto fn = [d](double eps) {
          return eps <= 1.0 ? d * std::log(3.0 / eps) : 0.0;
        };
        const double bound = dudley_gamma_bound(fn, 2.0, alpha);
        const double ratio = bound / std::pow(static_cast<double>(d), 1.0 / alpha);
        if (base == 0.0) base = ratio;
        CHECK(ratio == doctest::Approx(base).epsilon(0.05));
      }
    }
  }

  SUBCASE("adaptive quadrature matches a fixed fine grid") {
    const auto fn = [](double eps) {
      return eps <= 1.0 ? 4.0 * std::log(3.0 / eps) : 0.0;
    };
    const double adaptive = dudley_gamma_bound(fn, 2.0, 2);
    const double fixed = oracles::midpoint_integral(
        [&](double eps) { return std::sqrt(fn(eps)); }, 1e-9, 2.0, 400000);
    CHECK(adaptive == doctest::Approx(fixed).epsilon(1e-3));
  }

  SUBCASE("two-regime sparse covering bound lands within the stated constant") {
    const int n = 10, k = 10;
    const double b = beta(n, k);
    const auto fn = [&](double eps) {
      return std::min(b * b / (eps * eps),
                      static_cast<double>(n) * n * std::log(12.0 / eps));
    };
    const double integral = dudley_gamma_bound(fn, 2.0, 1);
    const double closed_form = gamma1_bound_l1(n, k);
    CHECK(integral <= 4.0 * closed_form);
    CHECK(integral >= closed_form / 4.0);
  }

  SUBCASE("divergent entropy is rejected") {
    CHECK_THROWS_AS(dudley_gamma_bound([](double eps) { return 1.0 / eps; }, 2.0, 1),
                    IntegrationError);
    CHECK_THROWS_AS(dudley_gamma_bound([](double) { return 1.0; }, 1.0, 3),
                    ParameterError);
    CHECK_THROWS_AS(dudley_gamma_bound([](double) { return 1.0; }, -1.0, 2),
                    ParameterError);
  }
}

TEST_CASE("theorem bound assembly") {
  SUBCASE("subspace-rate shape is reproduced exactly") {
    for (int d : {1, 9, 144}) {
      for (double delta : {0.5, 0.1, 0.01}) {
        const double g2 = std::sqrt(static_cast<double>(d));
        const TheoremBound tb = theorem1_bound(1.0, g2, g2, 0.0, 1000, delta, 0.0);
        const double expected =
            (std::log(1.0 / delta) + g2) / std::sqrt(1000.0);
        CHECK(tb.error_bound == expected);
        CHECK(tb.T_min ==
              std::max(static_cast<double>(d),
                       std::log(1.0 / delta) * std::log(1.0 / delta)));
      }
    }
  }

  SUBCASE("sparse-rate shape is reproduced exactly") {
    const int n = 20, k = 20;
    const double b = beta(n, k);
    const double g1 = gamma1_bound_l1(n, k);
    const TheoremBound tb = theorem1_bound(1.0, b, b, g1, 4000, 0.05, 0.0);
    const double expected =
        (std::log(1.0 / 0.05) + b) / std::sqrt(4000.0) + g1 / 4000.0;
    CHECK(tb.error_bound == doctest::Approx(expected).epsilon(1e-15));
  }

  SUBCASE("quadrupling T cuts the bound by a half to a quarter") {
    SplitMix64 rng(81);
    for (int trial = 0; trial < 50; ++trial) {
      const double J = 1.0 + 3.0 * rng.next_double();
      const double g2F = 10.0 * rng.next_double();
      const double g1S = 100.0 * rng.next_double();
      const long long T = 100 + static_cast<long long>(rng.next() % 10000);
      const double delta = 0.01 + 0.9 * rng.next_double();
      const double b1 = theorem1_bound(J, g2F, g2F, g1S, T, delta, 0.0).error_bound;
      const double b4 = theorem1_bound(J, g2F, g2F, g1S, 4 * T, delta, 0.0).error_bound;
      CHECK(b4 >= 0.25 * b1 - 1e-12);
      CHECK(b4 <= 0.5 * b1 + 1e-12);
    }
  }

  SUBCASE("monotone in every argument") {
    SplitMix64 rng(82);
    for (int trial = 0; trial < 200; ++trial) {
      const double J = 3.0 * rng.next_double();
      const double g2F = 10.0 * rng.next_double();
      const double g2S = g2F * rng.next_double();
      const double g1S = 50.0 * rng.next_double();
      const double bias = rng.next_double();
      const double delta = 0.01 + 0.9 * rng.next_double();
      const long long T = 10 + static_cast<long long>(rng.next() % 5000);
      const TheoremBound base = theorem1_bound(J, g2F, g2S, g1S, T, delta, bias);
      const double bump = 0.1 + rng.next_double();
      CHECK(theorem1_bound(J, g2F, g2S, g1S, 2 * T, delta, bias).error_bound <=
            base.error_bound + 1e-12);
      CHECK(theorem1_bound(J + bump, g2F, g2S, g1S, T, delta, bias).error_bound >=
            base.error_bound - 1e-12);
      CHECK(theorem1_bound(J, g2F + bump, g2S, g1S, T, delta, bias).error_bound >=
            base.error_bound - 1e-12);
      CHECK(theorem1_bound(J, g2F, g2S, g1S + bump, T, delta, bias).error_bound >=
            base.error_bound - 1e-12);
      CHECK(theorem1_bound(J, g2F, g2S, g1S, T, delta, bias + bump).error_bound >=
            base.error_bound - 1e-12);
      CHECK(theorem1_bound(J, g2F, g2S + bump, g1S, T, delta, bias).T_min >=
            base.T_min - 1e-12);
    }
  }

  SUBCASE("domain guards") {
    CHECK_THROWS_AS(theorem1_bound(1, 1, 1, 0, 100, 1.5, 0), ParameterError);
    CHECK_THROWS_AS(theorem1_bound(1, 1, 1, 0, 100, 0.0, 0), ParameterError);
    CHECK_THROWS_AS(theorem1_bound(-1, 1, 1, 0, 100, 0.5, 0), ParameterError);
    CHECK_THROWS_AS(theorem1_bound(1, 1, 1, 0, 0, 0.5, 0), ParameterError);
  }
}

TEST_CASE("complexity reports") {
  SUBCASE("subspace report") {
    const ComplexityReport report =
        subspace_complexity_report(10, 25, 0.1, {100, 400, 1600}, 1.5);
    CHECK(report.gamma2_spec_bound <= report.gamma2_frob_bound);
    CHECK(report.gamma1_spec_bound == 25.0);
    CHECK(report.T_min ==
          theorem1_bound(1.5, 5.0, 5.0, 0.0, 1, 0.1, 0.0).T_min);
    REQUIRE(report.error_bounds.size() == 3);
    for (const auto& [T, bound] : report.error_bounds) {
      CHECK(bound ==
            theorem1_bound(1.5, 5.0, 5.0, 0.0, T, 0.1, 0.0).error_bound);
    }
    CHECK(report.error_bounds[0].second > report.error_bounds[2].second);
    CHECK_THROWS_AS(subspace_complexity_report(3, 10, 0.1, {}, 1.0), ParameterError);
  }

  SUBCASE("sparse report keeps the gamma1 term") {
    const ComplexityReport report = sparse_complexity_report(20, 20, 0.05, {4000}, 2.0);
    REQUIRE(report.beta_value.has_value());
    CHECK(*report.beta_value == beta(20, 20));
    CHECK(report.gamma2_spec_bound <= report.gamma2_frob_bound);
    REQUIRE(report.error_bounds.size() == 1);
    CHECK(report.error_bounds[0].second ==
          theorem1_bound(2.0, beta(20, 20), beta(20, 20), gamma1_bound_l1(20, 20),
                         4000, 0.05, 0.0)
              .error_bound);
  }
}
