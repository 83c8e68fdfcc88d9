// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>

#include "cpsofdm/common.hpp"
#include "cpsofdm/metrics.hpp"
#include "cpsofdm/waveform.hpp"

namespace cpsofdm {

/// S x S permutation with (C v)_i = v_<i - shift>_S.
RMatrix downshift_matrix(int shift, int size);

/// sum_{n=0}^{length-1} e^{-j (omega - center) n}, exactly `length` at omega = center.
cplx dirichlet_window(double omega, double center, int length);
/// d/d omega of dirichlet_window().
cplx dirichlet_window_slope(double omega, double center, int length);

/// Spectral response vector u(w) of the transmit chain: |X(e^{jw})| = |u(w)^H c|
/// for x = Phi c. Entry kM+m is (w_m(w)^H C_{kM} p)^*.
CVector build_u_vector(double omega, const CVector& proto, const WaveformParams& params);
/// d/d omega of build_u_vector().
CVector build_u_slope(double omega, const CVector& proto, const WaveformParams& params);

/// OSBEE quadratic-form matrix: OSBEE(c) = c^H full c = cbar^H data cbar.
struct EMatrix {
  CMatrix full;  // S x S Hermitian
  CMatrix data;  // D x D restriction to data positions
  int oversample = 0;
  OsbRegion region;
  double min_eigenvalue = 0.0;  // of `data`, before any jitter
  double jitter = 0.0;          // diagonal loading added to `data` (0 if none)
};

/// Integrates u(w) u(w)^H over the region with the rule from make_quadrature()
/// (same nodes as osbee_direct), symmetrizes, restricts to data positions, and
/// loads the diagonal by 1e-12 trace if the restriction is not numerically
/// positive definite. Throws ParameterError for an empty region.
EMatrix build_e_matrix(const CVector& proto, const WaveformParams& params, const OsbRegion& region,
                       int oversample);

/// Content key over everything the E matrix depends on (hex SHA-256).
std::string e_matrix_key(const CVector& proto, const WaveformParams& params, const OsbRegion& region,
                         int oversample);

/// Binary matrix file, little-endian:
///   char[4] "CPSM" | uint32 version (1) | char[64] hex key | uint64 rows | uint64 cols |
///   rows*cols (float64 re, float64 im), row-major.
void write_matrix_file(const std::filesystem::path& path, const std::string& key, const CMatrix& m);
/// Throws ParameterError on malformed files or (if `expected_key` is nonempty) key mismatch.
CMatrix read_matrix_file(const std::filesystem::path& path, const std::string& expected_key = {});

/// Loads `dir/E_<key>.bin` if present, otherwise builds and writes it.
EMatrix cached_e_matrix(const std::filesystem::path& dir, const CVector& proto, const WaveformParams& params,
                        const OsbRegion& region, int oversample);

}  // namespace cpsofdm
