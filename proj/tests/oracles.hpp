// SPDX-License-Identifier: Apache-2.0
#pragma once

// Independent reference computations used only by the tests. Each one is
// written from the defining formula, without reusing library code paths.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "cpsofdm/common.hpp"

namespace oracle {

using cpsofdm::cplx;
using cpsofdm::CMatrix;
using cpsofdm::CVector;
using cpsofdm::kPi;
using cpsofdm::RMatrix;
using cpsofdm::RVector;

inline CVector random_vector(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  CVector v(n);
  for (auto& x : v) x = cplx(g(rng), g(rng));
  return v;
}

inline CMatrix random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> g(0.0, 1.0);
  CMatrix m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = cplx(g(rng), g(rng));
  return m;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

inline double rel_err(const CMatrix& a, const CMatrix& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

/// Raw cubic metric as the rms of the cubed, rms-normalized envelope.
inline double rcm_rms_form(const CVector& x) {
  double ms = 0.0;
  for (const auto& v : x) ms += std::norm(v);
  const double rms = std::sqrt(ms / double(x.size()));
  double acc = 0.0;
  for (const auto& v : x) {
    const double cube = std::pow(std::abs(v) / rms, 3.0);
    acc += cube * cube;
  }
  return std::sqrt(acc / double(x.size()));
}

/// Normalized N-point DFT matrix, entry e^{-j 2 pi k n / N} / sqrt(N).
inline CMatrix dft_matrix(int n) {
  CMatrix w(n, n);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i) w(k, i) = std::polar(1.0 / std::sqrt(double(n)), -2.0 * kPi * double(k) * double(i) / n);
  return w;
}

/// |sum_n x_n e^{-j w n}|^2 term by term.
inline double esd_naive(const CVector& x, double omega) {
  cplx acc(0.0);
  for (Eigen::Index n = 0; n < x.size(); ++n) acc += x(n) * std::exp(cplx(0.0, -omega * double(n)));
  return std::norm(acc);
}

/// Fine composite Simpson rule of esd over [lo, hi], divided by 2 pi.
inline double esd_integral(const CVector& x, double lo, double hi, int panels) {
  if (panels % 2) ++panels;
  const double h = (hi - lo) / panels;
  double acc = esd_naive(x, lo) + esd_naive(x, hi);
  for (int k = 1; k < panels; ++k) acc += (k % 2 ? 4.0 : 2.0) * esd_naive(x, lo + k * h);
  return acc * h / 3.0 / (2.0 * kPi);
}

/// y[n] = sum_l h[l] x[n - l], truncated to the input length.
inline CVector convolve_naive(const CVector& x, const CVector& h) {
  CVector y = CVector::Zero(x.size());
  for (Eigen::Index n = 0; n < x.size(); ++n)
    for (Eigen::Index l = 0; l < h.size() && l <= n; ++l) y(n) += h(l) * x(n - l);
  return y;
}

/// Q = (A^H A + r I)^{-1} A^H with an explicit inverse.
inline CMatrix mmse_dense(const CMatrix& a, double ridge) {
  CMatrix gram = CMatrix::Zero(a.cols(), a.cols());
  for (Eigen::Index i = 0; i < a.cols(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      for (Eigen::Index k = 0; k < a.rows(); ++k) gram(i, j) += std::conj(a(k, i)) * a(k, j);
  gram += ridge * CMatrix::Identity(a.cols(), a.cols());
  return gram.fullPivLu().inverse() * a.adjoint();
}

/// Central differences of f at z with step h.
inline RVector central_gradient(const std::function<double(const RVector&)>& f, const RVector& z, double h) {
  RVector g(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    RVector a = z, b = z;
    a(i) += h;
    b(i) -= h;
    g(i) = (f(a) - f(b)) / (2.0 * h);
  }
  return g;
}

/// Entry (i, j) of a Hermitian form q(v) = v^H A v recovered by polarization.
inline cplx polarize(const std::function<double(const CVector&)>& q, Eigen::Index n, Eigen::Index i, Eigen::Index j) {
  auto basis = [n](Eigen::Index k) {
    CVector v = CVector::Zero(n);
    v(k) = 1.0;
    return v;
  };
  const CVector ei = basis(i), ej = basis(j);
  const double qi = q(ei), qj = q(ej);
  const double re = 0.5 * (q(ei + ej) - qi - qj);
  const double im = 0.5 * (q(ei + cplx(0.0, 1.0) * ej) - qi - qj);
  // v = e_i + j e_j gives q_i + q_j - 2 Im(A_ij).
  return {re, -im};
}

/// Global minimum of `objective` over {c in C^2 : feasible(c)} by uniform
/// sampling of a bounding region followed by a compass search from the best
/// `starts` samples. `center` and `radius` bound the feasible set.
struct RandomSearchResult {
  CVector best;
  double value = 0.0;
  long feasible_samples = 0;
};
inline RandomSearchResult random_search_2(const std::function<double(const CVector&)>& objective,
                                          const std::function<bool(const CVector&)>& feasible, const CVector& center,
                                          const RMatrix& to_ball, long samples, int starts, std::uint64_t seed) {
  // to_ball maps the unit 4-ball onto a region containing the feasible set.
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto point = [&](const RVector& y) {
    const RVector z = to_ball * y;
    CVector c = center;
    c(0) += cplx(z(0), z(2));
    c(1) += cplx(z(1), z(3));
    return c;
  };
  std::vector<std::pair<double, RVector>> pool;
  RandomSearchResult res;
  for (long s = 0; s < samples; ++s) {
    RVector y(4);
    for (int k = 0; k < 4; ++k) y(k) = g(rng);
    y *= std::pow(u(rng), 0.25) / y.norm();
    const CVector c = point(y);
    if (!feasible(c)) continue;
    ++res.feasible_samples;
    pool.emplace_back(objective(c), y);
  }
  std::sort(pool.begin(), pool.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  pool.resize(std::min<size_t>(pool.size(), static_cast<size_t>(starts)));
  res.value = std::numeric_limits<double>::infinity();
  for (auto& [value, y] : pool) {
    double step = 0.05;
    RVector cur = y;
    double fcur = value;
    while (step > 1e-10) {
      bool improved = false;
      // Coordinate directions plus random ones; the random directions let the
      // search slide along curved constraint boundaries.
      std::vector<RVector> dirs;
      for (int k = 0; k < 4; ++k) {
        RVector d = RVector::Zero(4);
        d(k) = 1.0;
        dirs.push_back(d);
        dirs.push_back(-d);
      }
      for (int k = 0; k < 16; ++k) {
        RVector d(4);
        for (int i = 0; i < 4; ++i) d(i) = g(rng);
        dirs.push_back(d / d.norm());
      }
      for (const auto& d : dirs) {
        const RVector cand = cur + step * d;
        const CVector c = point(cand);
        if (!feasible(c)) continue;
        const double f = objective(c);
        if (f < fcur) {
          cur = cand;
          fcur = f;
          improved = true;
        }
      }
      if (!improved) step *= 0.5;
    }
    if (fcur < res.value) {
      res.value = fcur;
      res.best = point(cur);
    }
  }
  return res;
}

}  // namespace oracle
