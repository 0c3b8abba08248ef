#include "hrcam/parallel.hpp"

#include <cstdlib>
#include <string>

#include <omp.h>

namespace hrcam {

std::size_t configure_threads() {
  int threads = 1;
  if (const char* env = std::getenv("HRCAM_THREADS")) {
    try {
      threads = std::stoi(env);
    } catch (const std::exception&) {
      threads = 1;
    }
    if (threads < 1) threads = 1;
  }
  omp_set_num_threads(threads);
  return static_cast<std::size_t>(threads);
}

}  // namespace hrcam
