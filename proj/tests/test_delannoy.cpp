#include <cmath>
#include <numbers>

#include "doctest.h"
#include "sta/align.hpp"
#include "sta/delannoy.hpp"

using namespace sta;

TEST_CASE("delannoy_log boundary and small values") {
  CHECK(delannoy_log(1, 7) == 0.0);
  CHECK(delannoy_log(9, 1) == 0.0);
  CHECK(delannoy_log(2, 2) == doctest::Approx(std::log(3.0)).epsilon(1e-14));
  CHECK(delannoy_log(3, 3) == doctest::Approx(std::log(13.0)).epsilon(1e-14));
  CHECK(delannoy_log(3, 4) == doctest::Approx(std::log(25.0)).epsilon(1e-14));
  CHECK(delannoy_log(4, 3) == delannoy_log(3, 4));
}

TEST_CASE("delannoy_log rejects out-of-range indices") {
  CHECK_THROWS_AS(delannoy_log(0, 3), std::out_of_range);
  CHECK_THROWS_AS(delannoy_log(3, kMaxDelannoyIndex + 1), std::out_of_range);
  CHECK_THROWS_AS(central_delannoy_log(0), std::out_of_range);
}

TEST_CASE("large indices stay finite and match the central recurrence") {
  const double d2000 = delannoy_log(2000, 2000);
  CHECK(std::isfinite(d2000));
  CHECK(d2000 == doctest::Approx(central_delannoy_log(2000)).epsilon(1e-10));
  // Past the double overflow point of D_{m,m} (m ~ 520).
  CHECK(delannoy_log(600, 600) > std::log(1e308));
}

TEST_CASE("central_delannoy_log values") {
  CHECK(central_delannoy_log(1) == 0.0);
  CHECK(central_delannoy_log(2) == doctest::Approx(std::log(3.0)).epsilon(1e-14));
  CHECK(central_delannoy_log(6) == doctest::Approx(std::log(1683.0)).epsilon(1e-13));
  for (int m : {1, 5, 17, 100, 333}) {
    CHECK(central_delannoy_log(m) == doctest::Approx(delannoy_log(m, m)).epsilon(1e-10));
  }
}

TEST_CASE("table: exact integers, recursion and log consistency") {
  const DelannoyTable table(40);
  CHECK(table.exact_capacity() == 30);
  for (int m = 1; m <= 30; ++m) {
    CHECK(table.exact(1, m) == 1);
    CHECK(table.exact(m, 1) == 1);
    CHECK(table.log(1, m) == 0.0);
    CHECK(table.log(m, 1) == 0.0);
  }
  for (int m = 1; m < 30; ++m) {
    for (int n = 1; n < 30; ++n) {
      CHECK(table.exact(m + 1, n + 1) ==
            table.exact(m, n + 1) + table.exact(m + 1, n) + table.exact(m, n));
    }
  }
  double worst = 0.0;
  for (int m = 1; m <= 30; ++m) {
    for (int n = 1; n <= 30; ++n) {
      const double exact_log = std::log(table.exact(m, n).convert_to<double>());
      if (exact_log > 0.0) worst = std::max(worst, std::abs(table.log(m, n) - exact_log) / exact_log);
      CHECK(table.log(m, n) == doctest::Approx(delannoy_log(m, n)).epsilon(1e-13));
    }
  }
  CHECK(worst <= 1e-12);
  CHECK(table.exact(6, 6) == 1683);
  CHECK_THROWS_AS(table.exact(31, 2), std::out_of_range);
  CHECK_THROWS_AS(table.log(41, 1), std::out_of_range);
}

TEST_CASE("Delannoy numbers count the enumerated alignments") {
  for (int m = 1; m <= 5; ++m) {
    for (int n = 1; n <= 5; ++n) {
      const auto count = static_cast<double>(enumerate_alignments(m, n).size());
      CHECK(std::log(count) == doctest::Approx(delannoy_log(m, n)).epsilon(1e-12));
    }
  }
}

TEST_CASE("bound constants") {
  const BoundConstants bc(100);
  CHECK(bc.c == doctest::Approx(1.0 + std::numbers::sqrt2));
  CHECK(bc.sigma > 0.5);
  CHECK(bc.sigma < 0.6);
  CHECK(bc.sigma == doctest::Approx(0.5634986190759087).epsilon(1e-14));
  CHECK(bc.alpha > 0.0);
  CHECK(bc.rho > 0.0);
  CHECK(bc.H == doctest::Approx(92.0 * std::pow(100.0, bc.sigma)));
}

TEST_CASE("constants used by the growth-bound induction") {
  const BoundConstants bc(10);
  const double c2 = bc.c * bc.c;
  const double s = bc.sigma;
  // base case of the lower growth bound at m = 5
  const double base = std::exp(central_delannoy_log(6) - central_delannoy_log(5)) - c2 * 5.0 / (5.0 + s);
  CHECK(base >= 0.0);
  CHECK(base == doctest::Approx(0.004895416110369381).epsilon(1e-9));
  const double tau = (3.0 * c2 - s) / (c2 * c2);
  CHECK(tau + s - 1.0 >= 0.06);
  CHECK(tau * (s + 1.0) - 1.0 >= -0.24);
  // identity 6 c^2 - 1 = c^4
  CHECK(6.0 * c2 - 1.0 == doctest::Approx(c2 * c2).epsilon(1e-14));
}

TEST_CASE("quad_lower_bound") {
  CHECK(quad_lower_bound(0, 100) == doctest::Approx(1.0 / 300.0).epsilon(1e-15));
  CHECK(quad_lower_bound(1, 100) ==
        doctest::Approx((3.0 * std::numbers::sqrt2 - 4.0) / 300.0 + 1.0 / 300.0).epsilon(1e-14));
  // alpha * 90 + rho * 10 + 1/300, evaluated at 40 digits
  CHECK(quad_lower_bound(10, 100) == doctest::Approx(0.5386291501015240).epsilon(1e-14));
}

TEST_CASE("dirac_lower_bound") {
  const int T = 100;
  const double beta = 0.3;
  const double r = 1.0;
  const BoundConstants bc(T);
  const double lambda = std::exp(-r / beta);
  CHECK(dirac_lower_bound(0, beta, r, T) ==
        doctest::Approx(-beta * std::log(std::exp(-1.0 / (3.0 * T)) * (1.0 - lambda) + lambda * bc.H))
            .epsilon(1e-12));
  CHECK(std::abs(dirac_lower_bound(7, 1e-6, r, T)) < 1e-4);
  CHECK(std::abs(dirac_lower_bound(7, 1e-9, r, T)) < 1e-7);
  for (int k = 0; k < 200; ++k) {
    CHECK(dirac_lower_bound(k, beta, r, T) <= dirac_lower_bound_limit(beta, r, T) + 1e-12);
  }
  CHECK_THROWS_AS(dirac_lower_bound(3, beta, r, 5), DomainError);
}

TEST_CASE("beta_heuristic") {
  CHECK(beta_heuristic(100, 0.01, 1.0, 512) == doctest::Approx(0.06765859682898880).epsilon(1e-12));
  CHECK(beta_heuristic(100, 0.01, 2.0, 512) ==
        doctest::Approx(2.0 * beta_heuristic(100, 0.01, 1.0, 512)).epsilon(1e-14));
  CHECK(beta_heuristic(80, 0.01, 1.0, 100) > beta_heuristic(500, 0.01, 1.0, 100));

  // With the heuristic beta the bound saturates by k_max.
  const int T = 100;
  const double r = 1.0;
  const double beta = beta_heuristic(40, 0.01, r, T);
  const double limit = dirac_lower_bound_limit(beta, r, T);
  for (int k = 40; k <= 400; ++k) {
    const double gap = limit - dirac_lower_bound(k, beta, r, T);
    CHECK(gap >= -1e-12);
    CHECK(gap <= 0.01 * beta + 1e-12);
  }
  // Tiny eta and k_max make the denominator negative.
  CHECK_THROWS_AS(beta_heuristic(1, 1e-9, 1.0, 6), DomainError);
  CHECK_THROWS_AS(beta_heuristic(10, 0.01, 1.0, 5), DomainError);
}

TEST_CASE("shift_scale") {
  Matrix d(2, 2);
  d << 0.0, 0.5, 2.0, 0.0;
  CHECK(shift_scale(d) == 2.0);
  CHECK(shift_scale(d, ShiftScale::MinPositiveCost) == 0.5);
  CHECK_THROWS_AS(shift_scale(Matrix::Zero(2, 2)), std::invalid_argument);
}

TEST_CASE("growth bounds of the central sequence") {
  const BoundConstants bc(10);
  const double log_c2 = 2.0 * std::log(bc.c);
  for (int m = 1; m <= 300; ++m) {
    const double log_ratio = central_delannoy_log(m + 1) - central_delannoy_log(m);
    CHECK(log_ratio <= log_c2 + std::log(m / (m + 0.5)) + 1e-9);
    if (m >= 5) CHECK(log_ratio >= log_c2 + std::log(m / (m + bc.sigma)) - 1e-9);
  }
}

TEST_CASE("sandwich bounds on c^{2(T-m)} D_m / D_T") {
  const DelannoyTable table(301);
  const BoundConstants bc(10);
  const double log_c = std::log(bc.c);
  for (int T = 2; T <= 300; T += 7) {
    for (int m = 1; m < T; ++m) {
      const double lhs = 2.0 * (T - m) * log_c + table.log(m, m) - table.log(T, T);
      CHECK(lhs >= 0.5 * (std::log(static_cast<double>(T) / m) - 1.0) - 1e-9);
      if (m >= 5) CHECK(lhs <= bc.sigma * std::log((T - 1.0) / (m - 1.0)) + 1e-9);
    }
  }
}

TEST_CASE("off-diagonal product bound") {
  const DelannoyTable table(200);
  for (int T : {8, 20, 64, 150}) {
    for (int m = 1; m <= T - 2; m += std::max(1, T / 16)) {
      for (int mp = 1; m + mp <= T - 1; mp += std::max(1, T / 16)) {
        for (int k = 1; k <= std::min(T - m, mp - 1); ++k) {
          const double lhs = table.log(m, m) + table.log(mp, mp) - table.log(m + k, m) -
                             table.log(mp - k, mp);
          CHECK(lhs >= quad_lower_bound(k, T) - 1e-9);
        }
      }
    }
  }
}
