#include "geofb/tensor.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <string>
#include <system_error>

#include "geofb/error.hpp"
#include "geofb/kernels.hpp"

namespace geofb {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kIo: return "IoError";
    case ErrorKind::kBadMagic: return "BadMagic";
    case ErrorKind::kUnsupportedVersion: return "UnsupportedVersion";
    case ErrorKind::kUnknownDType: return "UnknownDType";
    case ErrorKind::kTruncatedPayload: return "TruncatedPayload";
    case ErrorKind::kPayloadMismatch: return "PayloadMismatch";
    case ErrorKind::kDimension: return "DimensionError";
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
    case ErrorKind::kDomain: return "DomainError";
    case ErrorKind::kEmptyMask: return "EmptyMaskError";
    case ErrorKind::kEmptyInput: return "EmptyInputError";
    case ErrorKind::kBatch: return "BatchError";
    case ErrorKind::kPlacement: return "PlacementError";
    case ErrorKind::kHorizon: return "HorizonError";
    case ErrorKind::kNoLanes: return "NoLanesError";
    case ErrorKind::kFit: return "FitError";
    case ErrorKind::kDegenerate: return "DegenerateError";
    case ErrorKind::kRange: return "RangeError";
    case ErrorKind::kParse: return "ParseError";
  }
  return "Error";
}

namespace {

static_assert(std::endian::native == std::endian::little,
              "RLGT payloads are written as raw little-endian memory");

constexpr char kMagic[4] = {'R', 'L', 'G', 'T'};
constexpr std::uint8_t kVersion = 1;
constexpr std::size_t kFixedHeader = 10;  // magic, version, dtype, ndim, 3 reserved

std::size_t element_count(const Tensor::Dims& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                         [](std::size_t acc, std::uint32_t d) { return acc * d; });
}

void validate_dims(const Tensor::Dims& dims) {
  if (dims.empty() || dims.size() > kMaxTensorRank) {
    throw DimensionError("tensor rank must be in [1, 4], got " + std::to_string(dims.size()));
  }
  for (auto d : dims) {
    if (d == 0) throw DimensionError("tensor extents must be >= 1");
  }
}

std::size_t dtype_width(DType d) { return d == DType::kF32 ? 4 : 1; }

void put_u32(std::vector<std::byte>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t get_u32(const std::byte* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// Tensor

Tensor::Tensor(DType dtype, Dims dims,
               std::variant<std::vector<float>, std::vector<std::uint8_t>> data)
    : dtype_(dtype), dims_(std::move(dims)), data_(std::move(data)) {}

Tensor Tensor::zeros(DType dtype, Dims dims) {
  validate_dims(dims);
  const std::size_t n = element_count(dims);
  if (dtype == DType::kF32) return Tensor(dtype, std::move(dims), std::vector<float>(n, 0.0f));
  return Tensor(dtype, std::move(dims), std::vector<std::uint8_t>(n, 0));
}

Tensor Tensor::from_f32(Dims dims, std::vector<float> values) {
  validate_dims(dims);
  if (element_count(dims) != values.size()) {
    throw DimensionError("f32 payload has " + std::to_string(values.size()) +
                         " values, dims require " + std::to_string(element_count(dims)));
  }
  for (float v : values) {
    if (!std::isfinite(v)) throw DomainError("f32 tensor values must be finite");
  }
  return Tensor(DType::kF32, std::move(dims), std::move(values));
}

Tensor Tensor::from_u8(Dims dims, std::vector<std::uint8_t> values) {
  validate_dims(dims);
  if (element_count(dims) != values.size()) {
    throw DimensionError("u8 payload has " + std::to_string(values.size()) +
                         " values, dims require " + std::to_string(element_count(dims)));
  }
  return Tensor(DType::kU8, std::move(dims), std::move(values));
}

std::size_t Tensor::size() const noexcept { return element_count(dims_); }

std::span<const float> Tensor::f32() const {
  if (dtype_ != DType::kF32) throw InvalidArgumentError("tensor is not f32");
  return std::get<std::vector<float>>(data_);
}
std::span<float> Tensor::f32_mut() {
  if (dtype_ != DType::kF32) throw InvalidArgumentError("tensor is not f32");
  return std::get<std::vector<float>>(data_);
}
std::span<const std::uint8_t> Tensor::u8() const {
  if (dtype_ != DType::kU8) throw InvalidArgumentError("tensor is not u8");
  return std::get<std::vector<std::uint8_t>>(data_);
}
std::span<std::uint8_t> Tensor::u8_mut() {
  if (dtype_ != DType::kU8) throw InvalidArgumentError("tensor is not u8");
  return std::get<std::vector<std::uint8_t>>(data_);
}

std::span<const std::byte> Tensor::bytes() const noexcept {
  return std::visit(
      [](const auto& v) { return std::as_bytes(std::span(v.data(), v.size())); }, data_);
}

bool operator==(const Tensor& a, const Tensor& b) {
  if (a.dtype_ != b.dtype_ || a.dims_ != b.dims_) return false;
  const auto ab = a.bytes();
  const auto bb = b.bytes();
  return ab.size() == bb.size() && std::memcmp(ab.data(), bb.data(), ab.size()) == 0;
}

// ---------------------------------------------------------------------------
// RLGT encoding

std::vector<std::byte> encode_tensor(const Tensor& t) {
  std::vector<std::byte> out;
  const auto payload = t.bytes();
  out.reserve(kFixedHeader + 4 * t.rank() + payload.size());
  for (char c : kMagic) out.push_back(static_cast<std::byte>(c));
  out.push_back(static_cast<std::byte>(kVersion));
  out.push_back(static_cast<std::byte>(t.dtype()));
  out.push_back(static_cast<std::byte>(t.rank()));
  for (int i = 0; i < 3; ++i) out.push_back(std::byte{0});
  for (auto d : t.dims()) put_u32(out, d);
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

Tensor decode_tensor(std::span<const std::byte> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw BadMagicError("missing RLGT magic");
  }
  if (bytes.size() < kFixedHeader) throw TruncatedPayloadError("header shorter than 10 bytes");
  const auto version = static_cast<std::uint8_t>(bytes[4]);
  if (version != kVersion) {
    throw UnsupportedVersionError("unsupported RLGT version " + std::to_string(version));
  }
  const auto code = static_cast<std::uint8_t>(bytes[5]);
  if (code > 1) throw UnknownDTypeError("unknown dtype code " + std::to_string(code));
  const auto dtype = static_cast<DType>(code);
  const std::size_t ndim = static_cast<std::uint8_t>(bytes[6]);
  if (ndim == 0 || ndim > kMaxTensorRank) {
    throw PayloadMismatchError("invalid rank " + std::to_string(ndim));
  }
  const std::size_t header = kFixedHeader + 4 * ndim;
  if (bytes.size() < header) throw TruncatedPayloadError("extent table truncated");

  Tensor::Dims dims(ndim);
  for (std::size_t i = 0; i < ndim; ++i) {
    dims[i] = get_u32(bytes.data() + kFixedHeader + 4 * i);
    if (dims[i] == 0) throw PayloadMismatchError("zero extent in header");
  }
  // Guard the product against overflow before sizing anything.
  std::size_t n = 1;
  for (auto d : dims) {
    if (n > (std::size_t{1} << 40) / d) throw PayloadMismatchError("extents too large");
    n *= d;
  }
  const std::size_t need = n * dtype_width(dtype);
  const std::size_t have = bytes.size() - header;
  if (have < need) {
    throw TruncatedPayloadError("payload has " + std::to_string(have) + " bytes, expected " +
                                std::to_string(need));
  }
  if (have > need) {
    throw PayloadMismatchError("payload has " + std::to_string(have - need) +
                               " trailing bytes beyond the declared extents");
  }
  const std::byte* p = bytes.data() + header;
  if (dtype == DType::kF32) {
    std::vector<float> values(n);
    std::memcpy(values.data(), p, need);
    return Tensor::from_f32(std::move(dims), std::move(values));
  }
  std::vector<std::uint8_t> values(n);
  std::memcpy(values.data(), p, need);
  return Tensor::from_u8(std::move(dims), std::move(values));
}

void write_tensor(const Tensor& t, const std::filesystem::path& path) {
  const auto bytes = encode_tensor(t);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError(path.string(), std::error_code(errno, std::generic_category()).message());
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw IoError(path.string(), std::error_code(errno, std::generic_category()).message());
  }
}

Tensor read_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError(path.string(), std::error_code(errno, std::generic_category()).message());
  }
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) {
    throw IoError(path.string(), std::error_code(errno, std::generic_category()).message());
  }
  return decode_tensor(std::as_bytes(std::span(raw.data(), raw.size())));
}

// ---------------------------------------------------------------------------
// downsample_mean

Tensor downsample_mean(const Tensor& t, std::uint32_t factor) {
  if (factor == 0) throw InvalidArgumentError("downsample factor must be positive");
  const auto& dims = t.dims();
  if (dims.size() < 2) throw DimensionError("downsample_mean needs at least 2 axes");
  const std::size_t h = dims[dims.size() - 2];
  const std::size_t w = dims[dims.size() - 1];
  if (h % factor != 0 || w % factor != 0) {
    throw DimensionError("spatial extents " + std::to_string(h) + "x" + std::to_string(w) +
                         " not divisible by " + std::to_string(factor));
  }
  const std::size_t oh = h / factor;
  const std::size_t ow = w / factor;
  const std::size_t planes = t.size() / (h * w);
  Tensor::Dims out_dims = dims;
  out_dims[dims.size() - 2] = static_cast<std::uint32_t>(oh);
  out_dims[dims.size() - 1] = static_cast<std::uint32_t>(ow);

  auto value_at = [&](std::size_t i) -> double {
    return t.dtype() == DType::kF32 ? static_cast<double>(t.f32()[i])
                                    : static_cast<double>(t.u8()[i]);
  };
  const double inv = 1.0 / (static_cast<double>(factor) * factor);
  std::vector<float> out(planes * oh * ow);
  for (std::size_t p = 0; p < planes; ++p) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        double acc = 0.0;
        for (std::size_t dy = 0; dy < factor; ++dy) {
          const std::size_t row = (p * h + oy * factor + dy) * w + ox * factor;
          for (std::size_t dx = 0; dx < factor; ++dx) acc += value_at(row + dx);
        }
        out[(p * oh + oy) * ow + ox] = static_cast<float>(acc * inv);
      }
    }
  }
  return Tensor::from_f32(std::move(out_dims), std::move(out));
}

// ---------------------------------------------------------------------------
// Typed rasters

BinaryMask::BinaryMask(int width, int height)
    : BinaryMask(width, height,
                 std::vector<std::uint8_t>(static_cast<std::size_t>(std::max(width, 0)) *
                                           static_cast<std::size_t>(std::max(height, 0)))) {}

BinaryMask::BinaryMask(int width, int height, std::vector<std::uint8_t> bits)
    : width_(width), height_(height), bits_(std::move(bits)) {
  if (width <= 0 || height <= 0) throw DimensionError("mask extents must be positive");
  if (bits_.size() != static_cast<std::size_t>(width) * height) {
    throw DimensionError("mask payload does not match extents");
  }
  for (auto b : bits_) {
    if (b > 1) throw DomainError("mask values must be 0 or 1");
  }
}

BinaryMask BinaryMask::from_tensor(const Tensor& t) {
  if (t.dtype() != DType::kU8 || t.rank() != 2) {
    throw DimensionError("a mask must be a rank-2 u8 tensor");
  }
  auto v = t.u8();
  return BinaryMask(static_cast<int>(t.dims()[1]), static_cast<int>(t.dims()[0]),
                    std::vector<std::uint8_t>(v.begin(), v.end()));
}

Tensor BinaryMask::to_tensor() const {
  return Tensor::from_u8({static_cast<std::uint32_t>(height_), static_cast<std::uint32_t>(width_)},
                         bits_);
}

std::size_t BinaryMask::count() const { return kernels::count_nonzero(bits_); }

DepthMap::DepthMap(int width, int height)
    : DepthMap(width, height,
               std::vector<float>(static_cast<std::size_t>(std::max(width, 0)) *
                                  static_cast<std::size_t>(std::max(height, 0)))) {}

DepthMap::DepthMap(int width, int height, std::vector<float> depth)
    : width_(width), height_(height), depth_(std::move(depth)) {
  if (width <= 0 || height <= 0) throw DimensionError("depth extents must be positive");
  if (depth_.size() != static_cast<std::size_t>(width) * height) {
    throw DimensionError("depth payload does not match extents");
  }
  for (float d : depth_) {
    if (!std::isfinite(d) || d < 0.0f) throw DomainError("depth must be finite and >= 0");
  }
}

DepthMap DepthMap::from_tensor(const Tensor& t) {
  if (t.dtype() != DType::kF32 || t.rank() != 2) {
    throw DimensionError("a depth map must be a rank-2 f32 tensor");
  }
  auto v = t.f32();
  return DepthMap(static_cast<int>(t.dims()[1]), static_cast<int>(t.dims()[0]),
                  std::vector<float>(v.begin(), v.end()));
}

Tensor DepthMap::to_tensor() const {
  return Tensor::from_f32({static_cast<std::uint32_t>(height_), static_cast<std::uint32_t>(width_)},
                          depth_);
}

void GridGeometry::validate() const {
  if (nx < 1 || ny < 1 || nz < 1) throw DimensionError("voxel counts must be >= 1");
  if (!(voxel_size > 0.0) || !std::isfinite(voxel_size)) {
    throw InvalidArgumentError("voxel_size must be positive");
  }
  for (double o : origin) {
    if (!std::isfinite(o)) throw InvalidArgumentError("grid origin must be finite");
  }
}

OccupancyGrid::OccupancyGrid(GridGeometry geometry)
    : geom_(geometry), occ_() {
  geom_.validate();
  occ_.assign(geom_.voxel_count(), 0);
}

OccupancyGrid::OccupancyGrid(GridGeometry geometry, std::vector<std::uint8_t> occ)
    : geom_(geometry), occ_(std::move(occ)) {
  geom_.validate();
  if (occ_.size() != geom_.voxel_count()) {
    throw DimensionError("occupancy payload does not match voxel counts");
  }
  for (auto b : occ_) {
    if (b > 1) throw DomainError("occupancy values must be 0 or 1");
  }
}

OccupancyGrid OccupancyGrid::from_tensor(const Tensor& t, const GridGeometry& geometry) {
  if (t.dtype() != DType::kU8 || t.rank() != 3) {
    throw DimensionError("an occupancy grid must be a rank-3 u8 tensor");
  }
  if (static_cast<int>(t.dims()[0]) != geometry.nz || static_cast<int>(t.dims()[1]) != geometry.ny ||
      static_cast<int>(t.dims()[2]) != geometry.nx) {
    throw DimensionError("occupancy tensor dims disagree with the grid geometry");
  }
  auto v = t.u8();
  return OccupancyGrid(geometry, std::vector<std::uint8_t>(v.begin(), v.end()));
}

Tensor OccupancyGrid::to_tensor() const {
  return Tensor::from_u8({static_cast<std::uint32_t>(geom_.nz), static_cast<std::uint32_t>(geom_.ny),
                          static_cast<std::uint32_t>(geom_.nx)},
                         occ_);
}

std::array<double, 3> OccupancyGrid::voxel_center(int x, int y, int z) const noexcept {
  return {geom_.origin[0] + (x + 0.5) * geom_.voxel_size,
          geom_.origin[1] + (y + 0.5) * geom_.voxel_size,
          geom_.origin[2] + (z + 0.5) * geom_.voxel_size};
}

std::size_t OccupancyGrid::count() const { return kernels::count_nonzero(occ_); }

}  // namespace geofb
