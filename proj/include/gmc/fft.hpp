#pragma once

#include <complex>
#include <cstddef>
#include <mutex>
#include <vector>

#include <fftw3.h>

namespace gmc {

/// In-place forward DFT of an n0 x n1 array stored with index i + n0 * j
/// (n1 = 1 for one dimension). FFTW planning is not thread-safe, so plan
/// creation and destruction share one lock; execution runs unlocked.
inline void fft_forward(std::vector<std::complex<double>>& buf, std::size_t n0, std::size_t n1 = 1) {
  static std::mutex planner;
  auto* data = reinterpret_cast<fftw_complex*>(buf.data());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner);
    plan = n1 == 1 ? fftw_plan_dft_1d(static_cast<int>(n0), data, data, FFTW_FORWARD, FFTW_ESTIMATE)
                   : fftw_plan_dft_2d(static_cast<int>(n1), static_cast<int>(n0), data, data, FFTW_FORWARD,
                                      FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  std::lock_guard<std::mutex> lock(planner);
  fftw_destroy_plan(plan);
}

}  // namespace gmc
