#pragma once

#include <cstddef>

// Element type selection. The default build stores and trains in 32-bit
// floats; defining MCZSL_REAL_DOUBLE switches every numeric type to 64-bit
// for gradient-check builds. Each precision lives in its own inline
// namespace so both variants can be linked into one binary.
#if defined(MCZSL_REAL_DOUBLE)
#define MCZSL_PRECISION_NS f64
#else
#define MCZSL_PRECISION_NS f32
#endif

namespace mczsl {
inline namespace MCZSL_PRECISION_NS {

#if defined(MCZSL_REAL_DOUBLE)
using Real = double;
#else
using Real = float;
#endif

using Index = std::size_t;

}  // namespace MCZSL_PRECISION_NS
}  // namespace mczsl
