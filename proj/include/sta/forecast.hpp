#pragma once

// Synthetic moving-blob datasets and the kNN + barycenter forecasting
// pipeline: find the neighbours of a query from its first t0 frames, average
// them with the matching barycenter while holding the observed prefix fixed,
// and read the remaining frames off as the prediction.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sta/barycenter.hpp"
#include "sta/geometry.hpp"
#include "sta/types.hpp"
#include "sta/uot.hpp"

namespace sta {

struct BlobConfig {
  int classes = 4;
  int per_class = 25;
  int T = 13;
  int h = 30;
  int w = 30;
  int spatial_shift_max = 10;
  int temporal_crop_min = 5;
  double blob_width = 1.5;  // standard deviation in pixels
  std::uint64_t seed = 0;
};

struct Dataset {
  std::vector<Series> samples;  // each T x (h * w), pixel (i, j) at column i * w + j
  std::vector<int> labels;
  int h = 0;
  int w = 0;
  std::optional<BlobConfig> provenance;

  std::size_t size() const { return samples.size(); }
  int length() const { return samples.empty() ? 0 : static_cast<int>(samples.front().rows()); }
};

/// Each class follows its own trajectory template (line, arc, zigzag, loop,
/// then mirrored / transposed variants). Every sample is shifted by a uniform
/// offset in [0, spatial_shift_max]^2 and plays a random window of L frames of
/// its template, L uniform in [temporal_crop_min, T], resampled onto T frames.
/// Frames have unit mass. Throws std::invalid_argument when the shift leaves
/// no room for the trajectory.
Dataset generate_moving_blobs(const BlobConfig& config);

/// Throws std::invalid_argument unless all samples share their shape and are
/// finite and non-negative, and labels match the sample count.
void validate_dataset(const Dataset& data);

enum class Loss { Sta, FramewiseUot, FramewiseL2, FlattenedL2 };

Loss parse_loss(const std::string& name);
std::string loss_name(Loss loss);

struct ForecastConfig {
  Loss loss = Loss::Sta;
  int t0 = 5;
  int k = 5;
  UotParams uot;  // epsilon must match the geometry
  double beta = 0.1;
  int max_outer = 20;
  double rel_tol = 1e-5;
  int threads = 1;
};

/// Distance between two equally long series under `loss`:
///   Sta           sdtw with UOT~ frame costs
///   FramewiseUot  sum_t UOT~(x_t, y_t)
///   FramewiseL2   sum_t |x_t - y_t|_2
///   FlattenedL2   |vec(x) - vec(y)|_2
double series_distance(const Series& x, const Series& y, Loss loss,
                       const GroundGeometry& geometry, const ForecastConfig& config);

/// Distances from the first t0 frames of `query` to the first t0 frames of
/// every sample, skipping index `exclude` (pass -1 to keep all).
std::vector<double> prefix_distances(const Series& query, const Dataset& data,
                                     const GroundGeometry& geometry,
                                     const ForecastConfig& config, int exclude = -1);

/// Rows of prefix_distances for the samples listed in `queries`, computing
/// the self terms of every prefix once. Entry (q, q's own index) is
/// d(x, x), not skipped. For Sta and FramewiseUot both distances are returned
/// from one pass, `framewise` receiving the FramewiseUot matrix when non-null.
Matrix pairwise_prefix_distances(const Dataset& data, const std::vector<int>& queries,
                                 const GroundGeometry& geometry, const ForecastConfig& config,
                                 Matrix* framewise = nullptr);

/// The k smallest entries of `distances`, ties to the lower index, skipping
/// `exclude`. Throws std::invalid_argument when k exceeds the candidate count.
std::vector<int> nearest(const std::vector<double>& distances, int k, int exclude = -1);

/// Indices of the k nearest samples on the prefix, ties to the lower index.
/// Throws std::invalid_argument when k exceeds the candidate count.
std::vector<int> knn(const Series& query, const Dataset& data, const GroundGeometry& geometry,
                     const ForecastConfig& config, int exclude = -1);

/// Barycenter of the given samples under `loss` with uniform weights and the
/// first t0 frames held at the query's. For the l2 losses this is the mean.
Series forecast_from_neighbors(const Series& query, const Dataset& data,
                               const std::vector<int>& neighbors,
                               const GroundGeometry& geometry, const ForecastConfig& config);

struct Forecast {
  std::vector<int> neighbors;
  Series prediction;  // full length; rows [0, t0) equal the query
};

Forecast forecast(const Series& query, const Dataset& data, const GroundGeometry& geometry,
                  const ForecastConfig& config, int exclude = -1);

struct Score {
  double l2 = 0.0;  // mean per-frame Euclidean distance
  double ot = 0.0;  // mean per-frame UOT~ between simplex-normalised frames
  int frames = 0;   // frames entering the ot mean
  std::vector<std::string> warnings;
};

/// Parameters of the transport score: small eps, large gamma so the
/// divergence is close to balanced OT between the normalised frames.
UotParams score_params(const GroundGeometry& geometry);

/// Scores rows [from, T) of the prediction against the truth. Frames where
/// either side has zero mass are left out of the ot mean with a warning.
Score score(const Series& prediction, const Series& truth, const GroundGeometry& score_geometry,
            const UotParams& params, int from = 0, int threads = 1);

}  // namespace sta
