#pragma once

#include <cstddef>

#include "convnorm/kernel.hpp"

namespace convnorm::detail {

// Maximizer of the l1 formula: input channel j (0-based) and the index class.
struct L1Argmax {
  double value = 0.0;
  std::size_t channel = 0;
  IndexClass cls;
};

// Maximizer of the linf formula: output channel i (0-based).
struct LinfArgmax {
  double value = 0.0;
  std::size_t channel = 0;
};

// Both assume check_assumption1 has already been verified. Ties go to the
// first maximizer in (channel, anchor) order.
L1Argmax l1_argmax(const Kernel4D& kernel);
LinfArgmax linf_argmax(const Kernel4D& kernel);

}  // namespace convnorm::detail
