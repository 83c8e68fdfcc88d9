// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace cpsofdm {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Invalid dimensions, index sets or configuration values.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Mathematically undefined inputs (zero-energy blocks, singular systems, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Independent generator for (master seed, stream tag, index). Results depend
/// only on these three values, never on scheduling.
std::mt19937_64 make_rng(std::uint64_t master, std::uint64_t stream, std::uint64_t index);

/// Stream tags used by the simulation harness.
enum class Stream : std::uint64_t { Bits = 1, Channel = 2, Noise = 3, Probe = 4 };

inline std::mt19937_64 make_rng(std::uint64_t master, Stream stream, std::uint64_t index) {
  return make_rng(master, static_cast<std::uint64_t>(stream), index);
}

/// Circular complex Gaussian sample with E|z|^2 = variance.
cplx complex_gaussian(std::mt19937_64& rng, double variance);

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view text);

inline double db_to_linear_power(double db) { return std::pow(10.0, db / 10.0); }
inline double db_to_linear_amplitude(double db) { return std::pow(10.0, db / 20.0); }

}  // namespace cpsofdm
