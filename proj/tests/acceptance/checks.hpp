#pragma once

#include <string>

namespace acceptance {

struct Outcome {
  bool pass = false;
  std::string detail;
};

// Implemented in the 64-bit translation unit.
Outcome gradient_suite();
Outcome reptile_algebra();

}  // namespace acceptance
