#include "propnet/tensor_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include "propnet/error.hpp"

namespace propnet {

namespace {

constexpr std::array<char, 4> kMagic{'H', 'M', 'K', '1'};
constexpr std::size_t kHeaderBytes = 16;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

}  // namespace

std::vector<std::uint8_t> encode_tensor(const Tensor3& t) {
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderBytes + 4 * t.size());
  out.insert(out.end(), kMagic.begin(), kMagic.end());
  put_u32(out, static_cast<std::uint32_t>(t.channels()));
  put_u32(out, static_cast<std::uint32_t>(t.height()));
  put_u32(out, static_cast<std::uint32_t>(t.width()));
  for (double v : t.data()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  return out;
}

Tensor3 decode_tensor(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kHeaderBytes) throw FormatError("HMK1: truncated header");
  if (std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) {
    throw FormatError("HMK1: magic mismatch");
  }
  const std::uint64_t n = get_u32(bytes.data() + 4);
  const std::uint64_t h = get_u32(bytes.data() + 8);
  const std::uint64_t w = get_u32(bytes.data() + 12);
  const auto int_max = static_cast<std::uint64_t>(std::numeric_limits<int>::max());
  if (n > int_max || h > int_max || w > int_max) throw FormatError("HMK1: dimension overflow");
  const std::uint64_t count = n * h * w;
  const std::uint64_t payload = bytes.size() - kHeaderBytes;
  if (payload < 4 * count) {
    throw FormatError("HMK1: truncated payload, expected " + std::to_string(4 * count) +
                      " bytes, found " + std::to_string(payload));
  }
  if (payload > 4 * count) throw FormatError("HMK1: trailing bytes after payload");

  Tensor3 t(static_cast<int>(n), static_cast<int>(h), static_cast<int>(w));
  const std::uint8_t* p = bytes.data() + kHeaderBytes;
  for (std::size_t i = 0; i < count; ++i, p += 4) {
    t.data()[i] = static_cast<double>(std::bit_cast<float>(get_u32(p)));
  }
  return t;
}

void write_tensor(std::ostream& out, const Tensor3& t) {
  const auto bytes = encode_tensor(t);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("HMK1: write failed");
}

void write_tensor(const std::string& path, const Tensor3& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot open '" + path + "' for writing");
  write_tensor(out, t);
}

Tensor3 read_tensor(std::istream& in) {
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_tensor(bytes);
}

Tensor3 read_tensor(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  return read_tensor(in);
}

std::uint64_t fnv1a64(const std::vector<std::uint8_t>& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << value;
  return os.str();
}

}  // namespace propnet
