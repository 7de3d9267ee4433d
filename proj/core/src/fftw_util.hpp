#pragma once

#include <fftw3.h>

#include <mutex>

namespace imclab::detail {

// FFTW plan creation is not thread-safe; execution with explicit arrays is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace imclab::detail
