#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "sta/align.hpp"
#include "sta/delannoy.hpp"
#include "test_util.hpp"

using namespace sta;
using sta::testing::random_matrix;

TEST_CASE("softmin") {
  const std::vector<double> v{1.0, 2.0, 3.0};
  CHECK(softmin(v, 0.0) == 1.0);
  const std::vector<double> same{0.7, 0.7};
  CHECK(softmin(same, 0.25) == doctest::Approx(0.7 - 0.25 * std::log(2.0)).epsilon(1e-14));
  const std::vector<double> far{0.0, 10.0};
  CHECK(softmin(far, 1.0) == doctest::Approx(-4.539889921686465e-05).epsilon(1e-12));
  const std::vector<double> with_inf{INFINITY, 2.0};
  CHECK(softmin(with_inf, 0.5) == doctest::Approx(2.0));
  CHECK_THROWS_AS(softmin(std::vector<double>{}, 1.0), std::invalid_argument);
  // continuity at 0
  CHECK(softmin(v, 1e-9) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("CostMatrix rejects non-finite entries") {
  Matrix m = Matrix::Zero(2, 2);
  m(1, 0) = NAN;
  CHECK_THROWS_AS(CostMatrix{m}, std::invalid_argument);
  m(1, 0) = INFINITY;
  CHECK_THROWS_AS(CostMatrix{m}, std::invalid_argument);
}

TEST_CASE("sdtw_forward simple cases") {
  for (double beta : {0.0, 0.3, 5.0}) {
    Matrix one(1, 1);
    one << 2.5;
    CHECK(sdtw_forward(CostMatrix(one), beta).value == doctest::Approx(2.5));
  }
  for (int T : {1, 3, 7}) {
    const double beta = 0.8;
    const auto res = sdtw_forward(CostMatrix(Matrix::Zero(T, T)), beta);
    CHECK(res.value == doctest::Approx(-beta * delannoy_log(T, T)).epsilon(1e-12));
    CHECK(res.table.r(0, 0) == 0.0);
    CHECK(std::isinf(res.table.r(0, 1)));
    CHECK(std::isinf(res.table.r(1, 0)));
  }
}

TEST_CASE("beta = 0 gives classic DTW") {
  Matrix d(3, 3);
  d << 0, 5, 5,
       5, 0, 5,
       5, 5, 1;
  CHECK(sdtw_forward(CostMatrix(d), 0.0).value == doctest::Approx(1.0));
}

TEST_CASE("forward pass matches enumeration") {
  std::mt19937_64 rng(7);
  const Matrix d = random_matrix(rng, 4, 5);
  const CostMatrix delta(d);
  const auto brute = sdtw_bruteforce(delta, 0.7);
  const double fwd = sdtw_forward(delta, 0.7).value;
  CHECK(std::abs(fwd - brute.value) <= 1e-10 * std::abs(brute.value));
  CHECK(enumerate_alignments(4, 5).size() == 129);  // D_{4,5}

  for (int trial = 0; trial < 50; ++trial) {
    const CostMatrix c(random_matrix(rng, 5, 5, -1.0, 2.0));
    const double beta = 0.1 + trial * 0.05;
    const auto b = sdtw_bruteforce(c, beta);
    const auto g = sdtw_value_and_grad(c, beta);
    CHECK(std::abs(g.value - b.value) <= 1e-10 * (1.0 + std::abs(b.value)));
    CHECK((g.E - b.E).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("backward pass") {
  Matrix one(1, 1);
  one << -3.0;
  CHECK(sdtw_value_and_grad(CostMatrix(one), 0.4).E(0, 0) == doctest::Approx(1.0));

  std::mt19937_64 rng(11);
  const auto g = sdtw_value_and_grad(CostMatrix(random_matrix(rng, 3, 3)), 1.0);
  CHECK(g.E(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(g.E(2, 2) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(g.E.minCoeff() >= 0.0);
  CHECK(g.E.maxCoeff() <= 1.0 + 1e-12);

  const auto fwd = sdtw_forward(CostMatrix(Matrix::Zero(2, 2)), 0.0);
  CHECK_THROWS_AS(sdtw_backward(CostMatrix(Matrix::Zero(2, 2)), fwd.table), std::invalid_argument);
}

TEST_CASE("backward pass matches central finite differences") {
  std::mt19937_64 rng(3);
  const double h = 1e-5;
  const Matrix d = random_matrix(rng, 4, 4);
  const double beta = 0.5;
  const Matrix E = sdtw_value_and_grad(CostMatrix(d), beta).E;
  for (Eigen::Index i = 0; i < 4; ++i) {
    for (Eigen::Index j = 0; j < 4; ++j) {
      Matrix plus = d, minus = d;
      plus(i, j) += h;
      minus(i, j) -= h;
      const double fd = (sdtw_forward(CostMatrix(plus), beta).value -
                         sdtw_forward(CostMatrix(minus), beta).value) / (2.0 * h);
      CHECK(std::abs(fd - E(i, j)) <= 1e-6);
    }
  }
}

TEST_CASE("rectangular shapes and batch") {
  std::mt19937_64 rng(5);
  std::vector<CostMatrix> batch;
  for (int k = 0; k < 6; ++k) batch.emplace_back(random_matrix(rng, 1 + k % 4, 2 + k % 3));
  const auto serial = sdtw_value_and_grad_batch(batch, 0.3, 1);
  const auto threaded = sdtw_value_and_grad_batch(batch, 0.3, 4);
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const auto brute = sdtw_bruteforce(batch[k], 0.3);
    CHECK(serial[k].value == doctest::Approx(brute.value).epsilon(1e-10));
    CHECK((serial[k].E - brute.E).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(serial[k].value == threaded[k].value);
    CHECK(serial[k].E == threaded[k].E);
  }
}

TEST_CASE("enumerate_alignments") {
  const auto one = enumerate_alignments(1, 1);
  REQUIRE(one.size() == 1);
  CHECK(one[0](0, 0) == 1.0);
  CHECK(enumerate_alignments(2, 2).size() == 3);
  CHECK(enumerate_alignments(3, 4).size() == 25);
  for (const auto& a : enumerate_alignments(3, 4)) {
    CHECK(a(0, 0) == 1.0);
    CHECK(a(2, 3) == 1.0);
  }
  CHECK_THROWS_AS(enumerate_alignments(12, 12), std::length_error);
}

TEST_CASE("bruteforce Gibbs average limits") {
  // unique minimising path along the diagonal
  Matrix d = Matrix::Constant(4, 4, 1.0);
  for (int i = 0; i < 4; ++i) d(i, i) = 0.0;
  const auto sharp = sdtw_bruteforce(CostMatrix(d), 1e-6);
  CHECK((sharp.E - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-9);
  const auto exact = sdtw_bruteforce(CostMatrix(d), 0.0);
  CHECK(exact.E == Matrix::Identity(4, 4));
  CHECK(exact.value == 0.0);

  // equal path costs: E is the fraction of paths through each cell
  const auto flat = sdtw_bruteforce(CostMatrix(Matrix::Zero(3, 3)), 0.9);
  const auto paths = enumerate_alignments(3, 3);
  Matrix frac = Matrix::Zero(3, 3);
  for (const auto& a : paths) frac += a;
  frac /= static_cast<double>(paths.size());
  CHECK((flat.E - frac).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("constant cost shift is consistent between DP and enumeration") {
  std::mt19937_64 rng(99);
  const Matrix d = random_matrix(rng, 4, 3);
  const Matrix shifted = (d.array() + 0.75).matrix();
  CHECK(sdtw_forward(CostMatrix(shifted), 0.6).value ==
        doctest::Approx(sdtw_bruteforce(CostMatrix(shifted), 0.6).value).epsilon(1e-12));
}

TEST_CASE("dirac series and shift gap") {
  Vector x(3), y(2);
  x << 1, 2, 4;
  y << 0, 3;
  const Matrix c = squared_difference_cost(x, y);
  CHECK(c(2, 0) == 16.0);
  CHECK(c(1, 1) == 1.0);
  CHECK(dirac_series(5, 2, 3.0) == Vector(Eigen::Matrix<double, 5, 1>(0, 0, 3, 0, 0)));
  CHECK_THROWS_AS(dirac_series(5, 5), std::invalid_argument);
  CHECK(dirac_shift_gap(12, 3, 0, 0.3) == 0.0);
  CHECK_THROWS_AS(dirac_shift_gap(12, 3, 9, 0.3), std::invalid_argument);
  // the DTW limit of a shift is 0: both Diracs can be matched at zero cost
  CHECK(std::abs(dirac_shift_gap(12, 3, 4, 0.0)) == 0.0);
  for (int k = 1; k <= 6; ++k) {
    CHECK(dirac_shift_gap(12, 3, k, 0.5) >= dirac_lower_bound(k, 0.5, 1.0, 12) - 1e-12);
    CHECK(dirac_shift_gap(12, 3, k, 0.5) > 0.0);
  }
}
