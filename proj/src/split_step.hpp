#pragma once

#include "pbnlc/types.hpp"

namespace pbnlc::detail {

// Symmetric split-step over `length` in `steps` equal steps. Negating alpha,
// beta2 and gamma_eff gives the exact inverse of a forward run with the same
// step count.
SampledField split_step(const SampledField& field, double alpha, double beta2, double gamma_eff, double length,
                        int steps);

}  // namespace pbnlc::detail
