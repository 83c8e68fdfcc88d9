// SPDX-License-Identifier: Apache-2.0
#include "cpsofdm/kernels.hpp"

#include <algorithm>
#include <cmath>

#include <omp.h>

#include "cpsofdm/fft.hpp"
#include "cpsofdm/osbee_quadratic.hpp"

namespace cpsofdm {

int worker_count() { return omp_get_max_threads(); }

void set_worker_count(int threads) {
  if (threads >= 1) omp_set_num_threads(threads);
}

namespace {

void add_slope_terms(CMatrix& e, const QuadratureRule& rule, const CVector& proto, const WaveformParams& params) {
  for (size_t k = 0; k < rule.slope_nodes.size(); ++k) {
    const CVector u = build_u_vector(rule.slope_nodes[k], proto, params);
    const CVector du = build_u_slope(rule.slope_nodes[k], proto, params);
    e.noalias() += rule.slope_weights[k] * (du * u.adjoint() + u * du.adjoint());
  }
}

}  // namespace

namespace serial {

CMatrix accumulate_e_matrix(const QuadratureRule& rule, const CVector& proto, const WaveformParams& params) {
  const int s = params.subband_size;
  CMatrix e = CMatrix::Zero(s, s);
  for (size_t j = 0; j < rule.nodes.size(); ++j) {
    const CVector u = build_u_vector(rule.nodes[j], proto, params);
    e.noalias() += rule.weights[j] * (u * u.adjoint());
  }
  add_slope_terms(e, rule, proto, params);
  return e;
}

std::vector<double> psd_average_uniform(std::span<const CVector> blocks, double theta0, int count) {
  const auto grid = uniform_grid(theta0, count);
  return psd_average(blocks, grid);
}

std::vector<CVector> transmit_batch(const FastTransmitter& tx, std::span<const CVector> sources) {
  std::vector<CVector> out;
  out.reserve(sources.size());
  for (const auto& s : sources) out.push_back(tx(s));
  return out;
}

std::vector<double> rcm_batch(std::span<const CVector> blocks) {
  std::vector<double> out;
  out.reserve(blocks.size());
  for (const auto& b : blocks) out.push_back(rcm(b));
  return out;
}

}  // namespace serial

namespace parallel {

CMatrix accumulate_e_matrix(const QuadratureRule& rule, const CVector& proto, const WaveformParams& params) {
  const int s = params.subband_size;
  const auto nodes = static_cast<Eigen::Index>(rule.nodes.size());
  CMatrix weighted(s, nodes);
#pragma omp parallel for schedule(static)
  for (Eigen::Index j = 0; j < nodes; ++j) {
    const auto jj = static_cast<size_t>(j);
    weighted.col(j) = std::sqrt(rule.weights[jj]) * build_u_vector(rule.nodes[jj], proto, params);
  }
  CMatrix e = weighted * weighted.adjoint();
  add_slope_terms(e, rule, proto, params);
  return e;
}

std::vector<double> psd_average_uniform(std::span<const CVector> blocks, double theta0, int count) {
  if (blocks.empty()) throw ParameterError("psd: no blocks");
  if (count < 1) throw ParameterError("psd: grid size must be positive");
  const Fft fft(count);
  constexpr size_t kChunk = 256;
  std::vector<double> acc(static_cast<size_t>(count), 0.0);
  RMatrix chunk_esd(count, static_cast<Eigen::Index>(kChunk));

  for (size_t start = 0; start < blocks.size(); start += kChunk) {
    const size_t len = std::min(kChunk, blocks.size() - start);
#pragma omp parallel
    {
      CVector folded(count);
      CVector spectrum(count);
#pragma omp for schedule(static)
      for (long c = 0; c < static_cast<long>(len); ++c) {
        const CVector& x = blocks[start + static_cast<size_t>(c)];
        folded.setZero();
        for (Eigen::Index n = 0; n < x.size(); ++n)
          folded(n % count) += x(n) * std::polar(1.0, -theta0 * double(n));
        fft.forward(folded.data(), spectrum.data());
        chunk_esd.col(c) = spectrum.cwiseAbs2();
      }
    }
#pragma omp parallel for schedule(static)
    for (int k = 0; k < count; ++k) {
      double sum = acc[static_cast<size_t>(k)];
      for (size_t c = 0; c < len; ++c) sum += chunk_esd(k, static_cast<Eigen::Index>(c));
      acc[static_cast<size_t>(k)] = sum;
    }
  }
  for (auto& v : acc) v /= double(blocks.size());
  return acc;
}

std::vector<CVector> transmit_batch(const FastTransmitter& tx, std::span<const CVector> sources) {
  std::vector<CVector> out(sources.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < static_cast<long>(sources.size()); ++i)
    out[static_cast<size_t>(i)] = tx(sources[static_cast<size_t>(i)]);
  return out;
}

std::vector<double> rcm_batch(std::span<const CVector> blocks) {
  std::vector<double> out(blocks.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < static_cast<long>(blocks.size()); ++i) out[static_cast<size_t>(i)] = rcm(blocks[static_cast<size_t>(i)]);
  return out;
}

}  // namespace parallel
}  // namespace cpsofdm
