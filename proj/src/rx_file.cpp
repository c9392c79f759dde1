// SPDX-License-Identifier: Apache-2.0
#include "mimosync/rx_file.hpp"

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "mimosync/errors.hpp"

namespace mimosync {

namespace {

constexpr std::array<char, 8> kMagic = {'M', 'S', 'Y', 'N', 'C', 'R', 'X', '1'};

// The on-disk format is little-endian; every supported target is too, so
// byte-level memcpy round-trips are exact.
static_assert(sizeof(double) == 8, "f64 payload assumes 8-byte double");

void put_u32(std::ostream& os, std::uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
               static_cast<char>((v >> 16) & 0xff),
               static_cast<char>((v >> 24) & 0xff)};
  os.write(b, 4);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void write_rx_file(const std::string& path, const CVector& recv, int n_rx) {
  if (n_rx <= 0 || recv.size() % n_rx != 0)
    throw DimensionMismatch("received vector length " +
                            std::to_string(recv.size()) +
                            " is not a multiple of n_rx " +
                            std::to_string(n_rx));
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  os.write(kMagic.data(), kMagic.size());
  put_u32(os, static_cast<std::uint32_t>(recv.size() / n_rx));
  put_u32(os, static_cast<std::uint32_t>(n_rx));
  for (Eigen::Index i = 0; i < recv.size(); ++i) {
    const double re = recv[i].real(), im = recv[i].imag();
    os.write(reinterpret_cast<const char*>(&re), 8);
    os.write(reinterpret_cast<const char*>(&im), 8);
  }
  if (!os) throw IoError("short write to '" + path + "'");
}

RxRecord read_rx_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path + "' for reading");
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic)
    throw IoError("'" + path + "' is not a received-vector file");
  RxRecord rec;
  rec.n = static_cast<int>(get_u32(is));
  rec.n_rx = static_cast<int>(get_u32(is));
  if (!is || rec.n <= 0 || rec.n_rx <= 0)
    throw IoError("'" + path + "' has a corrupt header");
  const std::int64_t total =
      static_cast<std::int64_t>(rec.n) * static_cast<std::int64_t>(rec.n_rx);
  if (total > (1 << 28))
    throw IoError("'" + path + "' declares an implausibly large payload");
  rec.recv.resize(total);
  for (std::int64_t i = 0; i < total; ++i) {
    double re = 0, im = 0;
    is.read(reinterpret_cast<char*>(&re), 8);
    is.read(reinterpret_cast<char*>(&im), 8);
    if (!is) throw IoError("'" + path + "' is truncated");
    rec.recv[i] = Complex(re, im);
  }
  return rec;
}

}  // namespace mimosync
