#pragma once

// STSD container:
//   "STSD" | u32 version | u32 N | u32 T | u32 p | N*T*p f64 (row-major)
//   [ u32 length | JSON trailer ]
// All integers and floats little-endian. Datasets and single series (N = 1)
// share the format; the trailer carries labels, grid dims and provenance.

#include <string>
#include <vector>

#include "json.hpp"
#include "sta/forecast.hpp"
#include "sta/types.hpp"

namespace sta {

inline constexpr std::uint32_t kStsdVersion = 1;

struct StsdFile {
  std::vector<Series> series;  // N entries of T x p
  nlohmann::json trailer;      // null when absent
};

/// Throws IoError with the path on failure; std::invalid_argument when the
/// series do not share their shape.
void write_stsd(const std::string& path, const StsdFile& file);
StsdFile read_stsd(const std::string& path);

/// Dataset <-> STSD. The trailer holds {"labels", "h", "w", "provenance"}.
void write_dataset(const std::string& path, const Dataset& data);
Dataset read_dataset(const std::string& path);

nlohmann::json blob_config_to_json(const BlobConfig& config);
BlobConfig blob_config_from_json(const nlohmann::json& j);

}  // namespace sta
