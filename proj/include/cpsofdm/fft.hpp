// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "cpsofdm/common.hpp"

namespace cpsofdm {

/// Unnormalized complex FFT of a fixed size backed by FFTW.
///
/// Plans are created once (planning is serialized internally); `forward` and
/// `inverse` may be called concurrently from any number of threads.
class Fft {
 public:
  explicit Fft(int size);
  ~Fft();
  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;

  int size() const { return size_; }

  /// out_k = sum_n in_n e^{-j 2 pi k n / size}. `in` and `out` must not alias.
  void forward(const cplx* in, cplx* out) const;
  /// out_n = sum_k in_k e^{+j 2 pi k n / size}. `in` and `out` must not alias.
  void inverse(const cplx* in, cplx* out) const;

 private:
  int size_;
  void* forward_plan_;
  void* inverse_plan_;
};

}  // namespace cpsofdm
