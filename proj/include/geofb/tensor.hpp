#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <variant>
#include <vector>

namespace geofb {

enum class DType : std::uint8_t { kF32 = 0, kU8 = 1 };

inline constexpr std::size_t kMaxTensorRank = 4;

/// Dense row-major grid of f32 or u8 values, up to rank 4.
///
/// Construction validates the shape (nonempty, every extent >= 1, element
/// count matches the payload) and, for f32, that every value is finite.
class Tensor {
 public:
  using Dims = std::vector<std::uint32_t>;

  static Tensor zeros(DType dtype, Dims dims);
  static Tensor from_f32(Dims dims, std::vector<float> values);
  static Tensor from_u8(Dims dims, std::vector<std::uint8_t> values);

  DType dtype() const noexcept { return dtype_; }
  const Dims& dims() const noexcept { return dims_; }
  std::size_t rank() const noexcept { return dims_.size(); }
  std::size_t size() const noexcept;

  std::span<const float> f32() const;
  std::span<float> f32_mut();
  std::span<const std::uint8_t> u8() const;
  std::span<std::uint8_t> u8_mut();

  // Raw little-endian payload view, as it would appear on disk on an LE host.
  std::span<const std::byte> bytes() const noexcept;

  // Bit-exact comparison (dtype, dims, and every payload byte).
  friend bool operator==(const Tensor& a, const Tensor& b);

 private:
  Tensor(DType dtype, Dims dims, std::variant<std::vector<float>, std::vector<std::uint8_t>> data);

  DType dtype_ = DType::kF32;
  Dims dims_;
  std::variant<std::vector<float>, std::vector<std::uint8_t>> data_;
};

void write_tensor(const Tensor& t, const std::filesystem::path& path);
Tensor read_tensor(const std::filesystem::path& path);

// Encode/decode the RLGT byte stream without touching the filesystem.
std::vector<std::byte> encode_tensor(const Tensor& t);
Tensor decode_tensor(std::span<const std::byte> bytes);

/// Block-mean over the last two (spatial) axes. Output is always f32;
/// accumulation is in double. Throws DimensionError if either spatial extent
/// is not divisible by `factor`.
Tensor downsample_mean(const Tensor& t, std::uint32_t factor);

// ---------------------------------------------------------------------------
// Typed rasters. Each one round-trips through Tensor for serialization.

class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height);
  BinaryMask(int width, int height, std::vector<std::uint8_t> bits);

  static BinaryMask from_tensor(const Tensor& t);
  Tensor to_tensor() const;

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return bits_.size(); }
  bool empty() const noexcept { return bits_.empty(); }

  std::uint8_t at(int x, int y) const { return bits_[static_cast<std::size_t>(y) * width_ + x]; }
  void set(int x, int y, bool on) { bits_[static_cast<std::size_t>(y) * width_ + x] = on ? 1 : 0; }

  std::span<const std::uint8_t> bits() const noexcept { return bits_; }
  std::span<std::uint8_t> bits_mut() noexcept { return bits_; }
  std::size_t count() const;

  bool same_extent(const BinaryMask& o) const noexcept {
    return width_ == o.width_ && height_ == o.height_;
  }
  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// Per-pixel depth in meters along the optical axis. 0.0 means "no depth".
class DepthMap {
 public:
  DepthMap() = default;
  DepthMap(int width, int height);
  DepthMap(int width, int height, std::vector<float> depth);

  static DepthMap from_tensor(const Tensor& t);
  Tensor to_tensor() const;

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return depth_.size(); }

  float at(int x, int y) const { return depth_[static_cast<std::size_t>(y) * width_ + x]; }
  float& at(int x, int y) { return depth_[static_cast<std::size_t>(y) * width_ + x]; }
  std::span<const float> values() const noexcept { return depth_; }
  std::span<float> values_mut() noexcept { return depth_; }

  bool same_extent(const DepthMap& o) const noexcept {
    return width_ == o.width_ && height_ == o.height_;
  }
  bool same_extent(const BinaryMask& m) const noexcept {
    return width_ == m.width() && height_ == m.height();
  }
  friend bool operator==(const DepthMap&, const DepthMap&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<float> depth_;
};

struct GridGeometry {
  int nx = 1, ny = 1, nz = 1;
  std::array<double, 3> origin{0.0, 0.0, 0.0};  // meters, min corner
  double voxel_size = 1.0;                      // meters

  std::size_t voxel_count() const noexcept {
    return static_cast<std::size_t>(nx) * ny * nz;
  }
  void validate() const;
  friend bool operator==(const GridGeometry&, const GridGeometry&) = default;
};

/// Binary voxel field. Storage order is z-major: index = (z * ny + y) * nx + x,
/// so the tensor form has dims [nz, ny, nx].
class OccupancyGrid {
 public:
  OccupancyGrid() = default;
  explicit OccupancyGrid(GridGeometry geometry);
  OccupancyGrid(GridGeometry geometry, std::vector<std::uint8_t> occ);

  static OccupancyGrid from_tensor(const Tensor& t, const GridGeometry& geometry);
  Tensor to_tensor() const;

  const GridGeometry& geometry() const noexcept { return geom_; }
  std::size_t index(int x, int y, int z) const noexcept {
    return (static_cast<std::size_t>(z) * geom_.ny + y) * geom_.nx + x;
  }
  std::uint8_t at(int x, int y, int z) const { return occ_[index(x, y, z)]; }
  void set(int x, int y, int z, bool on) { occ_[index(x, y, z)] = on ? 1 : 0; }
  std::array<double, 3> voxel_center(int x, int y, int z) const noexcept;

  std::span<const std::uint8_t> occ() const noexcept { return occ_; }
  std::span<std::uint8_t> occ_mut() noexcept { return occ_; }
  std::size_t count() const;

  friend bool operator==(const OccupancyGrid&, const OccupancyGrid&) = default;

 private:
  GridGeometry geom_;
  std::vector<std::uint8_t> occ_;
};

}  // namespace geofb
