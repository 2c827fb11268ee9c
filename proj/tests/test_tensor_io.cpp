#include <gtest/gtest.h>

#include <cstring>
#include <sstream>

#include "propnet/error.hpp"
#include "propnet/random.hpp"
#include "propnet/tensor_io.hpp"
#include "test_support.hpp"

using namespace propnet;

namespace {

// Values drawn as float32 so the container's narrowing is lossless.
Tensor3 float_tensor(int n, int h, int w, std::uint64_t seed) {
  Rng rng(seed);
  Tensor3 t(n, h, w);
  for (double& v : t.data()) v = static_cast<float>(rng.uniform(-3.0, 3.0));
  return t;
}

std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

}  // namespace

TEST(TensorIo, RoundTripIsBitIdentical) {
  const Tensor3 t = float_tensor(3, 5, 7, 1);
  std::stringstream buf;
  write_tensor(buf, t);
  EXPECT_EQ(read_tensor(buf), t);
  EXPECT_EQ(decode_tensor(encode_tensor(t)), t);
}

TEST(TensorIo, LayoutIsLittleEndianHeaderThenFloats) {
  Tensor3 t(2, 1, 3);
  t(1, 0, 2) = 1.0;
  const auto bytes = encode_tensor(t);
  ASSERT_EQ(bytes.size(), 16u + 4u * 6u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "HMK1");
  EXPECT_EQ(bytes[4], 2);
  EXPECT_EQ(bytes[8], 1);
  EXPECT_EQ(bytes[12], 3);
  // 1.0f = 0x3f800000, last value of the payload.
  EXPECT_EQ(bytes[16 + 20 + 3], 0x3f);
  EXPECT_EQ(bytes[16 + 20 + 2], 0x80);
}

TEST(TensorIo, HeaderClaimingMoreMapsThanPayloadIsTruncation) {
  auto bytes = encode_tensor(float_tensor(9, 4, 4, 2));
  bytes[4] = 10;
  try {
    decode_tensor(bytes);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("truncated payload"), std::string::npos);
  }
}

TEST(TensorIo, EmptyStackRoundTrips) {
  const Tensor3 t(0, 64, 64);
  const auto bytes = encode_tensor(t);
  EXPECT_EQ(bytes.size(), 16u);
  EXPECT_EQ(decode_tensor(bytes), t);
}

TEST(TensorIo, CorruptContainersRejected) {
  auto bytes = encode_tensor(float_tensor(1, 2, 2, 3));
  auto bad_magic = bytes;
  bad_magic[3] = '2';
  EXPECT_THROW(decode_tensor(bad_magic), FormatError);
  EXPECT_THROW(decode_tensor(bytes_of("HMK")), FormatError);
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_THROW(decode_tensor(trailing), FormatError);
}

TEST(TensorIo, FileRoundTrip) {
  const auto dir = test_support::scratch_dir("tensor_io");
  const Tensor3 t = float_tensor(4, 8, 8, 5);
  write_tensor((dir / "a.hmk").string(), t);
  EXPECT_EQ(read_tensor((dir / "a.hmk").string()), t);
  EXPECT_THROW(read_tensor((dir / "missing.hmk").string()), InvalidInput);
}

TEST(Checksum, Fnv1a64KnownVectors) {
  EXPECT_EQ(fnv1a64({}), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64(bytes_of("a")), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64(bytes_of("foobar")), 0x85944171f73967e8ULL);
  EXPECT_EQ(hex64(0xaf63dc4c8601ec8cULL), "af63dc4c8601ec8c");
  EXPECT_EQ(hex64(1), "0000000000000001");
}
