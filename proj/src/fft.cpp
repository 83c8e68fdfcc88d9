// SPDX-License-Identifier: Apache-2.0
#include "cpsofdm/fft.hpp"

#include <mutex>

#include <fftw3.h>

namespace cpsofdm {
namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

fftw_complex* as_fftw(const cplx* p) {
  return reinterpret_cast<fftw_complex*>(const_cast<cplx*>(p));
}

}  // namespace

Fft::Fft(int size) : size_(size) {
  if (size < 1) throw ParameterError("Fft: size must be positive");
  std::lock_guard<std::mutex> lock(planner_mutex());
  auto* a = fftw_alloc_complex(static_cast<size_t>(size));
  auto* b = fftw_alloc_complex(static_cast<size_t>(size));
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  forward_plan_ = fftw_plan_dft_1d(size, a, b, FFTW_FORWARD, flags);
  inverse_plan_ = fftw_plan_dft_1d(size, a, b, FFTW_BACKWARD, flags);
  fftw_free(a);
  fftw_free(b);
}

Fft::~Fft() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
}

void Fft::forward(const cplx* in, cplx* out) const {
  fftw_execute_dft(static_cast<fftw_plan>(forward_plan_), as_fftw(in), as_fftw(out));
}

void Fft::inverse(const cplx* in, cplx* out) const {
  fftw_execute_dft(static_cast<fftw_plan>(inverse_plan_), as_fftw(in), as_fftw(out));
}

}  // namespace cpsofdm
