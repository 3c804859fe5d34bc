#pragma once

#include "pbnlc/coefficients.hpp"

#include <cstdint>

namespace pbnlc {

struct ComplexityParams {
  int n_steps = 1;
  int n_spans = 35;
  int n_fft = 4096;
  int n_samples = 4096;

  void validate() const;
};

/// Real multiplications per symbol.
double mult_dbp(const ComplexityParams& p);
double mult_edc(const ComplexityParams& p);
double mult_pbnlc(std::int64_t m);

/// Distinct quantized groups when quantized, else the entry count.
std::int64_t count_M(const CoeffTable& table);

}  // namespace pbnlc
