// SPDX-FileCopyrightText: 2026 gas authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace gas {

// All recoverable failures (bad files, shape mismatches, contract
// violations) surface as Error so callers can map them to exit codes.
enum class ErrorKind {
  io,
  parse,
  shape,
  contract,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
  throw Error(kind, msg);
}

inline double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

// softplus(x) = log(1 + e^x), evaluated without overflow for large |x|.
inline double softplus(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

// d softplus / dx
inline double sigmoid(double x) {
  if (x >= 0.0) {
    double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  double e = std::exp(x);
  return e / (1.0 + e);
}

// Inverse of softplus; y must be positive.
inline double inv_softplus(double y) {
  if (y > 30.0) return y;
  return std::log(std::expm1(y));
}

}  // namespace gas
