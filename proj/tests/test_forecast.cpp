#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "sta/forecast.hpp"
#include "test_util.hpp"

using namespace sta;

namespace {

BlobConfig small_config() {
  BlobConfig c;
  c.classes = 4;
  c.per_class = 3;
  c.T = 6;
  c.h = 14;
  c.w = 14;
  c.spatial_shift_max = 2;
  c.temporal_crop_min = 3;
  c.blob_width = 1.0;
  c.seed = 5;
  return c;
}

ForecastConfig small_forecast(Loss loss, double eps) {
  ForecastConfig f;
  f.loss = loss;
  f.t0 = 3;
  f.k = 3;
  f.uot.epsilon = eps;
  f.uot.gamma = 0.1;
  f.uot.tol = 1e-6;
  f.uot.max_iter = 100000;
  f.beta = 0.01;
  f.max_outer = 5;
  return f;
}

// Centre of mass of an h x w frame.
std::pair<double, double> centroid(const Vector& f, int w) {
  double ci = 0.0, cj = 0.0;
  for (Eigen::Index k = 0; k < f.size(); ++k) {
    ci += f(k) * static_cast<double>(k / w);
    cj += f(k) * static_cast<double>(k % w);
  }
  return {ci / f.sum(), cj / f.sum()};
}

}  // namespace

TEST_CASE("generate_moving_blobs") {
  SUBCASE("shape of the default configuration") {
    const Dataset d = generate_moving_blobs(BlobConfig{});
    CHECK(d.size() == 100);
    CHECK(d.length() == 13);
    CHECK(d.samples.front().cols() == 900);
    CHECK(d.h == 30);
    CHECK(d.w == 30);
    validate_dataset(d);
  }
  SUBCASE("frames are unit-mass non-negative images") {
    const Dataset d = generate_moving_blobs(small_config());
    for (const auto& s : d.samples) {
      CHECK(s.minCoeff() >= 0.0);
      for (Eigen::Index t = 0; t < s.rows(); ++t) CHECK(s.row(t).sum() == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(d.labels == std::vector<int>{0, 0, 0, 1, 1, 1, 2, 2, 2, 3, 3, 3});
  }
  SUBCASE("empty classes") {
    auto c = small_config();
    c.per_class = 0;
    CHECK(generate_moving_blobs(c).size() == 0);
  }
  SUBCASE("no randomness: samples of a class coincide") {
    auto c = small_config();
    c.spatial_shift_max = 0;
    c.temporal_crop_min = c.T;
    const Dataset d = generate_moving_blobs(c);
    for (int cls = 0; cls < 4; ++cls) {
      CHECK(d.samples[cls * 3] == d.samples[cls * 3 + 1]);
      CHECK(d.samples[cls * 3] == d.samples[cls * 3 + 2]);
    }
    CHECK(d.samples[0] != d.samples[3]);
  }
  SUBCASE("deterministic in the seed") {
    const auto c = small_config();
    const Dataset a = generate_moving_blobs(c);
    const Dataset b = generate_moving_blobs(c);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.samples[i] == b.samples[i]);
    auto other = c;
    other.seed = 6;
    const Dataset e = generate_moving_blobs(other);
    bool differs = false;
    for (std::size_t i = 0; i < a.size(); ++i) differs = differs || a.samples[i] != e.samples[i];
    CHECK(differs);
  }
  SUBCASE("the blob moves over time") {
    const Dataset d = generate_moving_blobs(small_config());
    for (const auto& s : d.samples) {
      const auto first = centroid(s.row(0).transpose(), 14);
      double moved = 0.0;
      for (Eigen::Index t = 1; t < s.rows(); ++t) {
        const auto c = centroid(s.row(t).transpose(), 14);
        moved = std::max(moved, std::hypot(first.first - c.first, first.second - c.second));
      }
      CHECK(moved > 0.5);
    }
  }
  SUBCASE("infeasible shift") {
    auto c = small_config();
    c.spatial_shift_max = 10;
    CHECK_THROWS_AS(generate_moving_blobs(c), std::invalid_argument);
    c = small_config();
    c.temporal_crop_min = c.T + 1;
    CHECK_THROWS_AS(generate_moving_blobs(c), std::invalid_argument);
  }
}

TEST_CASE("loss names") {
  for (Loss l : {Loss::Sta, Loss::FramewiseUot, Loss::FramewiseL2, Loss::FlattenedL2}) {
    CHECK(parse_loss(loss_name(l)) == l);
  }
  CHECK_THROWS_AS(parse_loss("emd"), std::invalid_argument);
}

TEST_CASE("series_distance for the l2 losses") {
  Series x(2, 2), y(2, 2);
  x << 0, 0, 1, 1;
  y << 3, 4, 1, 1;
  const auto g = GroundGeometry::grid(1, 2, 0.1);
  ForecastConfig f;
  CHECK(series_distance(x, y, Loss::FramewiseL2, g, f) == doctest::Approx(5.0));
  CHECK(series_distance(x, y, Loss::FlattenedL2, g, f) == doctest::Approx(5.0));
  y(1, 0) = 2.0;
  CHECK(series_distance(x, y, Loss::FramewiseL2, g, f) == doctest::Approx(6.0));
  CHECK(series_distance(x, y, Loss::FlattenedL2, g, f) == doctest::Approx(std::sqrt(26.0)));
}

TEST_CASE("knn") {
  const Dataset d = generate_moving_blobs(small_config());
  const auto g = GroundGeometry::grid(14, 14, 0.02);
  for (Loss loss : {Loss::Sta, Loss::FramewiseUot, Loss::FramewiseL2, Loss::FlattenedL2}) {
    CAPTURE(loss_name(loss));
    const auto f = small_forecast(loss, 0.02);
    // every query finds itself first
    for (int q : {0, 5, 10}) {
      const auto nb = knn(d.samples[q], d, g, f);
      CHECK(nb.front() == q);
      CHECK(nb.size() == 3);
    }
  }
  auto f = small_forecast(Loss::FlattenedL2, 0.02);
  f.k = static_cast<int>(d.size());
  auto all = knn(d.samples[0], d, g, f);
  std::sort(all.begin(), all.end());
  for (int i = 0; i < static_cast<int>(d.size()); ++i) CHECK(all[i] == i);
  CHECK_THROWS_AS(knn(d.samples[0], d, g, f, 0), std::invalid_argument);
  f.k = static_cast<int>(d.size()) + 1;
  CHECK_THROWS_AS(knn(d.samples[0], d, g, f), std::invalid_argument);
  f.k = 2;
  f.t0 = d.length();
  CHECK_THROWS_AS(knn(d.samples[0], d, g, f), std::invalid_argument);
}

TEST_CASE("nearest breaks ties by index") {
  CHECK(nearest({2.0, 1.0, 1.0, 0.5, 1.0}, 3) == std::vector<int>{3, 1, 2});
  CHECK(nearest({2.0, 1.0, 1.0, 0.5, 1.0}, 3, 1) == std::vector<int>{3, 2, 4});
  CHECK_THROWS_AS(nearest({1.0}, 2), std::invalid_argument);
}

TEST_CASE("pairwise prefix distances match single queries and thread counts") {
  const Dataset d = generate_moving_blobs(small_config());
  const auto g = GroundGeometry::grid(14, 14, 0.02);
  auto f = small_forecast(Loss::Sta, 0.02);
  Matrix fw;
  const Matrix m = pairwise_prefix_distances(d, {1, 7}, g, f, &fw);
  const auto row = prefix_distances(d.samples[7], d, g, f);
  for (std::size_t i = 0; i < d.size(); ++i) CHECK(m(1, static_cast<Eigen::Index>(i)) == row[i]);
  f.loss = Loss::FramewiseUot;
  const auto frow = prefix_distances(d.samples[1], d, g, f);
  for (std::size_t i = 0; i < d.size(); ++i) CHECK(fw(0, static_cast<Eigen::Index>(i)) == frow[i]);
  f.loss = Loss::Sta;
  f.threads = 3;
  CHECK(pairwise_prefix_distances(d, {1, 7}, g, f) == m);
}

TEST_CASE("forecast") {
  const Dataset d = generate_moving_blobs(small_config());
  const auto g = GroundGeometry::grid(14, 14, 0.02);

  SUBCASE("l2 prediction is the mean of the neighbour suffixes") {
    const auto f = small_forecast(Loss::FlattenedL2, 0.02);
    const auto res = forecast(d.samples[4], d, g, f, 4);
    Series mean = Series::Zero(d.length(), g.size());
    for (int i : res.neighbors) mean += d.samples[static_cast<std::size_t>(i)] / 3.0;
    CHECK((res.prediction.bottomRows(3) - mean.bottomRows(3)).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK(res.prediction.topRows(3) == d.samples[4].topRows(3));
  }
  SUBCASE("identical neighbours reproduce the query") {
    Dataset copies;
    copies.h = d.h;
    copies.w = d.w;
    for (int i = 0; i < 3; ++i) {
      copies.samples.push_back(d.samples[2]);
      copies.labels.push_back(0);
    }
    for (Loss loss : {Loss::FlattenedL2, Loss::FramewiseUot, Loss::Sta}) {
      CAPTURE(loss_name(loss));
      auto f = small_forecast(loss, 0.02);
      f.uot.tol = 1e-8;
      f.beta = 1e-4;  // well below the UOT~ gap between consecutive frames
      const auto res = forecast(d.samples[2], copies, g, f);
      CHECK(res.prediction.topRows(3) == d.samples[2].topRows(3));
      CHECK((res.prediction - d.samples[2]).cwiseAbs().maxCoeff() <= 1e-5);
    }
  }
  SUBCASE("the prefix is held exactly for every loss") {
    for (Loss loss : {Loss::Sta, Loss::FramewiseUot, Loss::FramewiseL2}) {
      const auto f = small_forecast(loss, 0.02);
      const auto res = forecast(d.samples[9], d, g, f, 9);
      CHECK(res.prediction.topRows(3) == d.samples[9].topRows(3));
      CHECK(res.prediction.rows() == d.length());
      CHECK(res.prediction.minCoeff() >= 0.0);
    }
  }
}

TEST_CASE("score") {
  const int h = 12;
  const auto g = GroundGeometry::grid(h, h, 0.01);
  const UotParams prm = score_params(g);
  std::mt19937_64 rng(3);

  SUBCASE("identical prediction") {
    Series s = Series::Constant(3, h * h, 1.0 / (h * h));
    s.row(1) = sta::testing::random_vector(rng, h * h, 0.0, 1.0).transpose();
    const Score sc = score(s, s, g, prm);
    CHECK(sc.l2 == 0.0);
    CHECK(std::abs(sc.ot) <= 2.0 * prm.tol);
    CHECK(sc.frames == 3);
    CHECK(sc.warnings.empty());
  }
  SUBCASE("single pixel masses further apart score worse") {
    double last = -1.0;
    for (int dist = 0; dist <= 8; ++dist) {
      Series a = Series::Zero(1, h * h), b = Series::Zero(1, h * h);
      a(0, 2 * h + 2) = 1.0;
      b(0, 2 * h + 2 + dist) = 1.0;
      const double ot = score(a, b, g, prm).ot;
      CHECK(ot > last);
      last = ot;
    }
  }
  SUBCASE("mass scale is normalised away") {
    Series a = Series::Constant(1, h * h, 1.0), b = Series::Constant(1, h * h, 7.0);
    CHECK(std::abs(score(a, b, g, prm).ot) <= 2.0 * prm.tol);
    CHECK(score(a, b, g, prm).l2 == doctest::Approx(6.0 * h));
  }
  SUBCASE("zero frames are skipped") {
    Series a = Series::Constant(2, h * h, 1.0), b = a;
    b.row(0).setZero();
    const Score sc = score(a, b, g, prm);
    CHECK(sc.frames == 1);
    CHECK(sc.warnings.size() == 1);
    CHECK_THROWS_AS(score(a, Series::Zero(3, h * h), g, prm), std::invalid_argument);
    CHECK(score(a, b, g, prm, 1).frames == 1);
  }
}
