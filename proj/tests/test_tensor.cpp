#include <gtest/gtest.h>

#include <cstring>
#include <fstream>
#include <random>

#include "geofb/error.hpp"
#include "geofb/tensor.hpp"
#include "test_util.hpp"

using namespace geofb;

namespace {

std::vector<std::uint8_t> as_u8(const std::vector<std::byte>& b) {
  std::vector<std::uint8_t> out(b.size());
  std::memcpy(out.data(), b.data(), b.size());
  return out;
}

std::vector<std::byte> as_bytes(const std::vector<std::uint8_t>& b) {
  std::vector<std::byte> out(b.size());
  std::memcpy(out.data(), b.data(), b.size());
  return out;
}

}  // namespace

TEST(Rlgt, ScalarZeroLayout) {
  const auto enc = as_u8(encode_tensor(Tensor::from_f32({1, 1}, {0.0f})));
  // magic, version 1, dtype 0, rank 2, 3 reserved, two u32 extents, payload
  const std::vector<std::uint8_t> expect{'R', 'L', 'G', 'T', 1, 0, 2, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0};
  EXPECT_EQ(enc, expect);
}

TEST(Rlgt, MaskPayloadRowMajor) {
  const auto enc = as_u8(encode_tensor(Tensor::from_u8({2, 2}, {1, 0, 0, 1})));
  ASSERT_EQ(enc.size(), 18u + 4u);
  EXPECT_EQ(enc[5], 1);
  const std::vector<std::uint8_t> payload(enc.end() - 4, enc.end());
  EXPECT_EQ(payload, (std::vector<std::uint8_t>{1, 0, 0, 1}));
}

TEST(Rlgt, FloatPayloadLittleEndian) {
  const auto enc = as_u8(encode_tensor(Tensor::from_f32({1}, {1.0f})));
  // 1.0f == 0x3f800000
  const std::vector<std::uint8_t> payload(enc.end() - 4, enc.end());
  EXPECT_EQ(payload, (std::vector<std::uint8_t>{0x00, 0x00, 0x80, 0x3f}));
}

TEST(Rlgt, RandomFloatRoundTripThroughFile) {
  test::TempDir dir("rlgt");
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<float> u(-1e6f, 1e6f);
  std::vector<float> v(60);
  for (auto& x : v) x = u(rng);
  const Tensor t = Tensor::from_f32({3, 4, 5}, v);
  write_tensor(t, dir.path() / "t.rlgt");
  const Tensor back = read_tensor(dir.path() / "t.rlgt");
  EXPECT_EQ(back, t);
  EXPECT_EQ(std::memcmp(back.bytes().data(), t.bytes().data(), t.bytes().size()), 0);
}

TEST(Rlgt, BadMagic) {
  auto enc = as_u8(encode_tensor(Tensor::from_u8({2}, {1, 0})));
  std::memcpy(enc.data(), "XXXX", 4);
  EXPECT_THROW(decode_tensor(as_bytes(enc)), BadMagicError);
}

TEST(Rlgt, TruncatedPayload) {
  auto enc = as_u8(encode_tensor(Tensor::from_f32({2, 3}, std::vector<float>(6, 1.0f))));
  enc.resize(enc.size() - 3);
  EXPECT_THROW(decode_tensor(as_bytes(enc)), TruncatedPayloadError);
}

TEST(Rlgt, TruncatedFileOnDisk) {
  test::TempDir dir("trunc");
  const auto enc = as_u8(encode_tensor(Tensor::from_f32({4}, {1, 2, 3, 4})));
  {
    std::ofstream out(dir.file("t.rlgt"), std::ios::binary);
    out.write(reinterpret_cast<const char*>(enc.data()), static_cast<std::streamsize>(enc.size() - 2));
  }
  EXPECT_THROW(read_tensor(dir.file("t.rlgt")), TruncatedPayloadError);
}

TEST(Rlgt, TrailingBytesRejected) {
  auto enc = as_u8(encode_tensor(Tensor::from_u8({2}, {1, 0})));
  enc.push_back(7);
  EXPECT_THROW(decode_tensor(as_bytes(enc)), PayloadMismatchError);
}

TEST(Rlgt, UnknownVersionAndDtype) {
  auto enc = as_u8(encode_tensor(Tensor::from_u8({2}, {1, 0})));
  auto v = enc;
  v[4] = 9;
  EXPECT_THROW(decode_tensor(as_bytes(v)), UnsupportedVersionError);
  auto d = enc;
  d[5] = 7;
  EXPECT_THROW(decode_tensor(as_bytes(d)), UnknownDTypeError);
}

TEST(Rlgt, MissingFileIsIoError) {
  EXPECT_THROW(read_tensor("/nonexistent/dir/x.rlgt"), IoError);
}

TEST(Tensor, ShapeValidation) {
  EXPECT_THROW(Tensor::from_f32({2, 2}, {1, 2, 3}), DimensionError);
  EXPECT_THROW(Tensor::from_f32({0, 2}, {}), DimensionError);
  EXPECT_THROW(Tensor::from_f32({1, 1, 1, 1, 1}, {1}), DimensionError);
  EXPECT_THROW(Tensor::from_f32({1}, {std::numeric_limits<float>::quiet_NaN()}), DomainError);
}

TEST(Downsample, FactorOneIsIdentity) {
  const Tensor t = Tensor::from_f32({2, 3}, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(downsample_mean(t, 1), t);
}

TEST(Downsample, HandMean) {
  const Tensor t = Tensor::from_f32({2, 2}, {0, 0, 4, 4});
  const Tensor d = downsample_mean(t, 2);
  ASSERT_EQ(d.dims(), (Tensor::Dims{1, 1}));
  EXPECT_EQ(d.f32()[0], 2.0f);
}

TEST(Downsample, ConstantStaysConstant) {
  const Tensor t = Tensor::from_f32({2, 12, 12}, std::vector<float>(288, 3.25f));
  for (std::uint32_t f : {1u, 2u, 3u, 4u, 6u, 12u}) {
    const Tensor d = downsample_mean(t, f);
    for (float v : d.f32()) EXPECT_EQ(v, 3.25f);
    EXPECT_EQ(d.dims()[0], 2u);
  }
}

TEST(Downsample, IndivisibleExtentRejected) {
  const Tensor t = Tensor::from_f32({3, 4}, std::vector<float>(12, 0.0f));
  EXPECT_THROW(downsample_mean(t, 2), DimensionError);
  EXPECT_THROW(downsample_mean(t, 0), InvalidArgumentError);
}

TEST(Downsample, MaskBecomesSoftChannel) {
  const Tensor t = Tensor::from_u8({2, 2}, {1, 0, 0, 1});
  const Tensor d = downsample_mean(t, 2);
  EXPECT_EQ(d.dtype(), DType::kF32);
  EXPECT_EQ(d.f32()[0], 0.5f);
}

TEST(Rasters, MaskRejectsNonBinary) {
  EXPECT_THROW(BinaryMask(2, 1, {0, 2}), DomainError);
  EXPECT_THROW(DepthMap(1, 1, {-1.0f}), DomainError);
}

TEST(Rasters, OccupancyTensorOrderIsZYX) {
  GridGeometry g{3, 2, 2, {0, 0, 0}, 1.0};
  OccupancyGrid o(g);
  o.set(2, 1, 0, true);
  const Tensor t = o.to_tensor();
  EXPECT_EQ(t.dims(), (Tensor::Dims{2, 2, 3}));
  EXPECT_EQ(t.u8()[(0 * 2 + 1) * 3 + 2], 1);
  EXPECT_EQ(OccupancyGrid::from_tensor(t, g), o);
}
