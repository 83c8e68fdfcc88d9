// SPDX-License-Identifier: Apache-2.0
#include "cpsofdm/osbee_quadratic.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>


#include "cpsofdm/kernels.hpp"

namespace cpsofdm {

RMatrix downshift_matrix(int shift, int size) {
  if (size < 1 || shift < 0 || shift >= size) throw ParameterError("downshift: shift out of range");
  RMatrix c = RMatrix::Zero(size, size);
  for (int i = 0; i < size; ++i) c(i, (i - shift + size) % size) = 1.0;
  return c;
}

namespace {

double wrap_angle(double theta) { return theta - kTwoPi * std::floor((theta + kPi) / kTwoPi); }

}  // namespace

cplx dirichlet_window(double omega, double center, int length) {
  if (length < 1) throw ParameterError("dirichlet: length must be positive");
  const double theta = wrap_angle(omega - center);
  const double l = length;
  const cplx phase = std::polar(1.0, -0.5 * theta * (l - 1.0));
  if (std::abs(theta) < 1e-7) {
    // sin(L t/2)/sin(t/2) = L (1 - (L^2 - 1) t^2 / 24) + O(t^4)
    return phase * (l * (1.0 - (l * l - 1.0) * theta * theta / 24.0));
  }
  return phase * (std::sin(0.5 * l * theta) / std::sin(0.5 * theta));
}

cplx dirichlet_window_slope(double omega, double center, int length) {
  if (length < 1) throw ParameterError("dirichlet: length must be positive");
  const double theta = omega - center;
  cplx acc = 0.0;
  for (int n = 1; n < length; ++n) acc += cplx(0.0, -double(n)) * std::polar(1.0, -theta * n);
  return acc;
}

namespace {

// u_{kM+m} = conj( sum_i a_i e^{-j 2 pi i m / M} p_<i-kM> ), where
// a_i = W(w - 2 pi (eta+i)/N) e^{-j 2 pi i G / N} / sqrt(N) is conj([w_m]_i) without
// its modulation factor.
CVector response_from_window(const CVector& a, const CVector& proto, const WaveformParams& params) {
  const int s = params.subband_size;
  const int kk = params.num_shifts;
  const int mm = params.num_modulations;
  CVector u(s);
  CVector folded(mm);
  for (int k = 0; k < kk; ++k) {
    folded.setZero();
    for (int i = 0; i < s; ++i) folded(i % mm) += a(i) * proto(((i - k * mm) % s + s) % s);
    for (int m = 0; m < mm; ++m) {
      cplx acc = 0.0;
      for (int r = 0; r < mm; ++r) {
        const int idx = static_cast<int>((static_cast<long long>(r) * m) % mm);
        acc += folded(r) * std::polar(1.0, -kTwoPi * idx / mm);
      }
      u(k * mm + m) = std::conj(acc);
    }
  }
  return u;
}

void check_dims(const CVector& proto, const WaveformParams& params) {
  params.validate();
  if (proto.size() != params.subband_size) throw ParameterError("u vector: prototype length must equal S");
}

// Fills e.data from e.full and loads its diagonal if it is not numerically
// positive definite.
void restrict_to_data(EMatrix& e, const WaveformParams& params) {
  const int d = params.data_count();
  e.data.resize(d, d);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c)
      e.data(r, c) = e.full(params.data_idx[static_cast<size_t>(r)], params.data_idx[static_cast<size_t>(c)]);

  Eigen::SelfAdjointEigenSolver<CMatrix> eig(e.data, Eigen::EigenvaluesOnly);
  e.min_eigenvalue = eig.eigenvalues().minCoeff();
  const double floor = 1e-12 * e.data.trace().real();
  e.jitter = 0.0;
  if (!(e.min_eigenvalue > floor)) {
    e.jitter = floor;
    e.data.diagonal().array() += floor;
    std::clog << "warning: OSBEE matrix not numerically positive definite (min eigenvalue " << e.min_eigenvalue
              << "); diagonal loaded by " << floor << '\n';
  }
}

}  // namespace

CVector build_u_vector(double omega, const CVector& proto, const WaveformParams& params) {
  check_dims(proto, params);
  const int n = params.fft_size;
  const double norm = 1.0 / std::sqrt(double(n));
  CVector a(params.subband_size);
  for (int i = 0; i < params.subband_size; ++i) {
    const double centre = kTwoPi * (params.first_subcarrier + i) / n;
    const double cp_phase = -kTwoPi * double((static_cast<long long>(i) * params.guard_len) % n) / n;
    a(i) = norm * std::polar(1.0, cp_phase) * dirichlet_window(omega, centre, params.block_len());
  }
  return response_from_window(a, proto, params);
}

CVector build_u_slope(double omega, const CVector& proto, const WaveformParams& params) {
  check_dims(proto, params);
  const int n = params.fft_size;
  const double norm = 1.0 / std::sqrt(double(n));
  CVector a(params.subband_size);
  for (int i = 0; i < params.subband_size; ++i) {
    const double centre = kTwoPi * (params.first_subcarrier + i) / n;
    const double cp_phase = -kTwoPi * double((static_cast<long long>(i) * params.guard_len) % n) / n;
    a(i) = norm * std::polar(1.0, cp_phase) * dirichlet_window_slope(omega, centre, params.block_len());
  }
  // u is conjugate-linear in a, so the slope follows from the slope of a.
  return response_from_window(a, proto, params);
}

EMatrix build_e_matrix(const CVector& proto, const WaveformParams& params, const OsbRegion& region,
                       int oversample) {
  if (region.empty()) throw ParameterError("E matrix: empty OSB region makes the emission constraint vacuous");
  check_dims(proto, params);
  const auto rule = make_quadrature(region, params.block_len(), oversample);
  EMatrix e;
  e.oversample = oversample;
  e.region = region;
  e.full = parallel::accumulate_e_matrix(rule, proto, params);
  e.full = 0.5 * (e.full + e.full.adjoint()).eval();

  restrict_to_data(e, params);
  return e;
}

std::string e_matrix_key(const CVector& proto, const WaveformParams& params, const OsbRegion& region,
                         int oversample) {
  std::ostringstream desc;
  desc.precision(17);
  desc << "cpsofdm-E-v1;N=" << params.fft_size << ";G=" << params.guard_len << ";S=" << params.subband_size
       << ";K=" << params.num_shifts << ";M=" << params.num_modulations << ";eta=" << params.first_subcarrier
       << ";os=" << oversample << ";D=";
  for (int i : params.data_idx) desc << i << ',';
  desc << ";region=";
  for (const auto& iv : region.intervals()) desc << iv.lo << ':' << iv.hi << ',';
  desc << ";p=";
  for (Eigen::Index i = 0; i < proto.size(); ++i) desc << proto(i).real() << ':' << proto(i).imag() << ',';
  return sha256_hex(desc.str());
}

namespace {

static_assert(std::endian::native == std::endian::little, "matrix files assume a little-endian host");

constexpr char kMagic[4] = {'C', 'P', 'S', 'M'};
constexpr std::uint32_t kVersion = 1;
constexpr size_t kKeyLen = 64;

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw ParameterError("matrix file: truncated");
  return v;
}

}  // namespace

void write_matrix_file(const std::filesystem::path& path, const std::string& key, const CMatrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParameterError("matrix file: cannot write " + path.string());
  out.write(kMagic, 4);
  put(out, kVersion);
  std::string padded = key.substr(0, kKeyLen);
  padded.resize(kKeyLen, '\0');
  out.write(padded.data(), kKeyLen);
  put(out, static_cast<std::uint64_t>(m.rows()));
  put(out, static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      put(out, m(r, c).real());
      put(out, m(r, c).imag());
    }
  if (!out) throw ParameterError("matrix file: write failed for " + path.string());
}

CMatrix read_matrix_file(const std::filesystem::path& path, const std::string& expected_key) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParameterError("matrix file: cannot open " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw ParameterError("matrix file: bad magic");
  if (get<std::uint32_t>(in) != kVersion) throw ParameterError("matrix file: unsupported version");
  std::string key(kKeyLen, '\0');
  in.read(key.data(), kKeyLen);
  key.erase(key.find_last_not_of('\0') + 1);
  if (!expected_key.empty() && key != expected_key.substr(0, kKeyLen))
    throw ParameterError("matrix file: key mismatch");
  const auto rows = get<std::uint64_t>(in);
  const auto cols = get<std::uint64_t>(in);
  if (rows > (1u << 20) || cols > (1u << 20)) throw ParameterError("matrix file: implausible dimensions");
  CMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double re = get<double>(in);
      const double im = get<double>(in);
      m(r, c) = cplx(re, im);
    }
  return m;
}

EMatrix cached_e_matrix(const std::filesystem::path& dir, const CVector& proto, const WaveformParams& params,
                        const OsbRegion& region, int oversample) {
  const auto key = e_matrix_key(proto, params, region, oversample);
  const auto path = dir / ("E_" + key.substr(0, 16) + ".bin");
  if (std::filesystem::exists(path)) {
    EMatrix e;
    e.full = read_matrix_file(path, key);
    e.oversample = oversample;
    e.region = region;
    restrict_to_data(e, params);
    return e;
  }
  auto e = build_e_matrix(proto, params, region, oversample);
  std::filesystem::create_directories(dir);
  write_matrix_file(path, key, e.full);
  return e;
}

}  // namespace cpsofdm
