// SPDX-License-Identifier: Apache-2.0
#pragma once

// Data-parallel kernels. Every kernel has a plain serial reference in
// `serial::` and an OpenMP version in `parallel::` with the same signature.
// Parallel versions reduce in a fixed order, so their output does not depend
// on the thread count.

#include <span>
#include <vector>

#include "cpsofdm/common.hpp"
#include "cpsofdm/metrics.hpp"
#include "cpsofdm/waveform.hpp"

namespace cpsofdm {

namespace serial {

/// sum_j w_j u(w_j) u(w_j)^H + sum_e s_e (u' u^H + u u'^H)(w_e), one node at a time.
CMatrix accumulate_e_matrix(const QuadratureRule& rule, const CVector& proto, const WaveformParams& params);

/// (1/B) sum_b |X_b(e^{jw})|^2 on w_k = theta0 + 2 pi k / count, by direct summation.
std::vector<double> psd_average_uniform(std::span<const CVector> blocks, double theta0, int count);

std::vector<CVector> transmit_batch(const FastTransmitter& tx, std::span<const CVector> sources);

std::vector<double> rcm_batch(std::span<const CVector> blocks);

}  // namespace serial

namespace parallel {

CMatrix accumulate_e_matrix(const QuadratureRule& rule, const CVector& proto, const WaveformParams& params);

/// Zero-padded (or time-folded) FFT per block; blocks are processed in chunks
/// and summed per frequency in block order.
std::vector<double> psd_average_uniform(std::span<const CVector> blocks, double theta0, int count);

std::vector<CVector> transmit_batch(const FastTransmitter& tx, std::span<const CVector> sources);

std::vector<double> rcm_batch(std::span<const CVector> blocks);

}  // namespace parallel

/// Number of OpenMP threads the parallel kernels will use.
int worker_count();
/// Sets the OpenMP thread count; values < 1 leave the runtime default.
void set_worker_count(int threads);

}  // namespace cpsofdm
