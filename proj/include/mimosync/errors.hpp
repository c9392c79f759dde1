// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace mimosync {

// Base error. `code()` is a stable machine-greppable tag; the CLI prints it
// on stderr as "error: [CODE] message" and exits nonzero.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& msg)
      : std::runtime_error(msg), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error("E_CONFIG", msg) {}
};

class DimensionMismatch : public Error {
 public:
  explicit DimensionMismatch(const std::string& msg) : Error("E_DIMENSION", msg) {}
};

// Normal-equation matrix is numerically rank deficient (condition number
// above the ceiling, or a nonpositive eigenvalue).
class RankDeficient : public Error {
 public:
  explicit RankDeficient(const std::string& msg) : Error("E_RANK_DEFICIENT", msg) {}
};

class SingularFim : public Error {
 public:
  explicit SingularFim(const std::string& msg) : Error("E_SINGULAR_FIM", msg) {}
};

class ZeroDenominator : public Error {
 public:
  explicit ZeroDenominator(const std::string& msg) : Error("E_ZERO_DENOM", msg) {}
};

class EmptyGrid : public Error {
 public:
  explicit EmptyGrid(const std::string& msg) : Error("E_EMPTY_GRID", msg) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error("E_IO", msg) {}
};

}  // namespace mimosync
