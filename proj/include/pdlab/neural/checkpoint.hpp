#pragma once

#include "pdlab/common/error.hpp"
#include "pdlab/neural/autograd.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <algorithm>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace pdlab::nn {

enum class DType : std::uint8_t { F32 = 1, F64 = 2 };

/// One stored matrix. `bytes` holds rows*cols little-endian values.
struct StoredArray {
  std::string name;
  DType dtype = DType::F32;
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;
  std::string bytes;
};

/// File layout: magic "PDLABCK1", u32 version, u64 metadata length,
/// metadata JSON, u32 array count, arrays (u32 name length, name, u8 dtype,
/// u64 rows, u64 cols, payload), then the SHA-256 of everything before it.
/// Integers are little-endian.
struct CheckpointData {
  nlohmann::json meta = nlohmann::json::object();
  std::vector<StoredArray> arrays;

  const StoredArray* find(std::string_view name) const;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string serialize_checkpoint(const CheckpointData& data);
/// Throws CheckpointError on a bad magic, version, truncation or digest.
CheckpointData parse_checkpoint(std::string_view bytes);

void write_checkpoint(const std::filesystem::path& path, const CheckpointData& data);
CheckpointData read_checkpoint(const std::filesystem::path& path);

namespace detail {
bool host_is_little_endian();
}

template <typename T>
constexpr DType dtype_of() {
  static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>);
  return std::is_same_v<T, float> ? DType::F32 : DType::F64;
}

template <typename T>
StoredArray store_matrix(std::string name, const Matrix<T>& m) {
  StoredArray a{std::move(name), dtype_of<T>(), static_cast<std::uint64_t>(m.rows()),
                static_cast<std::uint64_t>(m.cols()), {}};
  a.bytes.resize(static_cast<std::size_t>(m.size()) * sizeof(T));
  std::memcpy(a.bytes.data(), m.data(), a.bytes.size());
  if (!detail::host_is_little_endian())
    for (std::size_t i = 0; i < a.bytes.size(); i += sizeof(T))
      std::reverse(a.bytes.begin() + static_cast<std::ptrdiff_t>(i),
                   a.bytes.begin() + static_cast<std::ptrdiff_t>(i + sizeof(T)));
  return a;
}

/// Converts to T when the stored precision differs.
template <typename T>
Matrix<T> load_matrix(const StoredArray& a) {
  const std::size_t width = a.dtype == DType::F32 ? 4 : 8;
  const std::size_t count = static_cast<std::size_t>(a.rows * a.cols);
  if (a.bytes.size() != count * width) throw CheckpointError("array '" + a.name + "' has the wrong payload size");
  std::string bytes = a.bytes;
  if (!detail::host_is_little_endian())
    for (std::size_t i = 0; i < bytes.size(); i += width)
      std::reverse(bytes.begin() + static_cast<std::ptrdiff_t>(i),
                   bytes.begin() + static_cast<std::ptrdiff_t>(i + width));
  Matrix<T> m(static_cast<Eigen::Index>(a.rows), static_cast<Eigen::Index>(a.cols));
  for (std::size_t i = 0; i < count; ++i) {
    if (a.dtype == DType::F32) {
      float x;
      std::memcpy(&x, bytes.data() + i * 4, 4);
      m.data()[i] = static_cast<T>(x);
    } else {
      double x;
      std::memcpy(&x, bytes.data() + i * 8, 8);
      m.data()[i] = static_cast<T>(x);
    }
  }
  return m;
}

}  // namespace pdlab::nn
