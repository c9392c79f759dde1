// SPDX-License-Identifier: Apache-2.0
//
// Binary container for a stacked received vector. Layout, little-endian:
//   8 bytes  magic "MSYNCRX1"
//   u32      samples per receive antenna
//   u32      receive antenna count
//   f64 x 2  per sample, re then im, antenna-major
#pragma once

#include <string>

#include "mimosync/numerics.hpp"

namespace mimosync {

// Writes `recv` as `n_rx` stacked blocks of `recv.size()/n_rx` samples.
// Throws DimensionMismatch if the length does not divide evenly, IoError
// on filesystem failure.
void write_rx_file(const std::string& path, const CVector& recv, int n_rx);

struct RxRecord {
  CVector recv;
  int n = 0;     // samples per antenna
  int n_rx = 0;  // recv.size() == n * n_rx
};

// Reads a file written by write_rx_file. Throws IoError on a bad magic,
// truncated payload, or filesystem failure.
RxRecord read_rx_file(const std::string& path);

}  // namespace mimosync
