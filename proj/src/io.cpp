#include "sta/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

namespace sta {

namespace {

constexpr char kMagic[4] = {'S', 'T', 'S', 'D'};

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
    return v;
  }
}

template <typename T>
void put(std::ostream& out, T v) {
  v = to_little(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::string& path, const char* what) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw IoError(path + ": truncated file while reading " + what);
  }
  return to_little(v);
}

std::uint32_t checked_u32(Eigen::Index v, const char* what) {
  if (v < 0 || static_cast<std::uint64_t>(v) > std::numeric_limits<std::uint32_t>::max()) {
    throw std::invalid_argument(std::string("stsd: ") + what + " does not fit in u32");
  }
  return static_cast<std::uint32_t>(v);
}

}  // namespace

void write_stsd(const std::string& path, const StsdFile& file) {
  const Eigen::Index T = file.series.empty() ? 0 : file.series.front().rows();
  const Eigen::Index p = file.series.empty() ? 0 : file.series.front().cols();
  for (const auto& s : file.series) {
    if (s.rows() != T || s.cols() != p) {
      throw std::invalid_argument("stsd: all series must share T and p");
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path + ": cannot open for writing");
  out.write(kMagic, 4);
  put<std::uint32_t>(out, kStsdVersion);
  put<std::uint32_t>(out, checked_u32(static_cast<Eigen::Index>(file.series.size()), "N"));
  put<std::uint32_t>(out, checked_u32(T, "T"));
  put<std::uint32_t>(out, checked_u32(p, "p"));
  for (const auto& s : file.series) {
    for (Eigen::Index i = 0; i < s.size(); ++i) put<double>(out, s.data()[i]);
  }
  if (!file.trailer.is_null()) {
    const std::string text = file.trailer.dump();
    put<std::uint32_t>(out, checked_u32(static_cast<Eigen::Index>(text.size()), "trailer"));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
  }
  out.flush();
  if (!out) throw IoError(path + ": write failed");
}

StsdFile read_stsd(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open for reading");
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw IoError(path + ": not an STSD file (bad magic)");
  }
  const auto version = get<std::uint32_t>(in, path, "version");
  if (version != kStsdVersion) {
    throw IoError(path + ": unsupported STSD version " + std::to_string(version));
  }
  const auto N = get<std::uint32_t>(in, path, "N");
  const auto T = get<std::uint32_t>(in, path, "T");
  const auto p = get<std::uint32_t>(in, path, "p");
  // guard against absurd headers before allocating
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::uint64_t>(in.tellg());
  in.seekg(20, std::ios::beg);
  const std::uint64_t values = static_cast<std::uint64_t>(N) * T * p;
  if (values > (size - 20) / sizeof(double)) {
    throw IoError(path + ": header announces " + std::to_string(values) +
                  " values but the file is too short");
  }
  StsdFile file;
  file.series.reserve(N);
  for (std::uint32_t n = 0; n < N; ++n) {
    Series s(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(p));
    for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = get<double>(in, path, "data");
    file.series.push_back(std::move(s));
  }
  if (in.peek() == std::char_traits<char>::eof()) return file;
  const auto length = get<std::uint32_t>(in, path, "trailer length");
  std::string text(length, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(length))) {
    throw IoError(path + ": truncated JSON trailer");
  }
  try {
    file.trailer = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ": malformed JSON trailer: " + e.what());
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw IoError(path + ": trailing bytes after the JSON trailer");
  }
  return file;
}

nlohmann::json blob_config_to_json(const BlobConfig& c) {
  return {{"classes", c.classes},
          {"per_class", c.per_class},
          {"T", c.T},
          {"h", c.h},
          {"w", c.w},
          {"spatial_shift_max", c.spatial_shift_max},
          {"temporal_crop_min", c.temporal_crop_min},
          {"blob_width", c.blob_width},
          {"seed", c.seed}};
}

BlobConfig blob_config_from_json(const nlohmann::json& j) {
  BlobConfig c;
  c.classes = j.value("classes", c.classes);
  c.per_class = j.value("per_class", c.per_class);
  c.T = j.value("T", c.T);
  c.h = j.value("h", c.h);
  c.w = j.value("w", c.w);
  c.spatial_shift_max = j.value("spatial_shift_max", c.spatial_shift_max);
  c.temporal_crop_min = j.value("temporal_crop_min", c.temporal_crop_min);
  c.blob_width = j.value("blob_width", c.blob_width);
  c.seed = j.value("seed", c.seed);
  return c;
}

void write_dataset(const std::string& path, const Dataset& data) {
  validate_dataset(data);
  StsdFile file;
  file.series = data.samples;
  file.trailer = {{"labels", data.labels}, {"h", data.h}, {"w", data.w}};
  if (data.provenance) file.trailer["provenance"] = blob_config_to_json(*data.provenance);
  write_stsd(path, file);
}

Dataset read_dataset(const std::string& path) {
  StsdFile file = read_stsd(path);
  Dataset data;
  data.samples = std::move(file.series);
  const Eigen::Index p = data.samples.empty() ? 0 : data.samples.front().cols();
  try {
    const auto& t = file.trailer;
    if (t.is_object() && t.contains("h") && t.contains("w")) {
      data.h = t.at("h").get<int>();
      data.w = t.at("w").get<int>();
    } else {
      // no grid information: a 1 x p line
      data.h = 1;
      data.w = static_cast<int>(p);
    }
    if (t.is_object() && t.contains("labels")) {
      data.labels = t.at("labels").get<std::vector<int>>();
    } else {
      data.labels.assign(data.samples.size(), 0);
    }
    if (t.is_object() && t.contains("provenance")) {
      data.provenance = blob_config_from_json(t.at("provenance"));
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ": unexpected trailer content: " + e.what());
  }
  if (!data.samples.empty() && static_cast<Eigen::Index>(data.h) * data.w != p) {
    throw IoError(path + ": grid " + std::to_string(data.h) + "x" + std::to_string(data.w) +
                  " does not match p = " + std::to_string(p));
  }
  try {
    validate_dataset(data);
  } catch (const std::invalid_argument& e) {
    throw IoError(path + ": " + e.what());
  }
  return data;
}

}  // namespace sta
