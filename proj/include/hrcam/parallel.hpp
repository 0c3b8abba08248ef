#pragma once

#include <cstddef>

namespace hrcam {

/// Applies HRCAM_THREADS (default 1) to the OpenMP runtime and returns the
/// thread count in effect. Results do not depend on the count.
std::size_t configure_threads();

}  // namespace hrcam
