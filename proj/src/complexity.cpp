#include "pbnlc/complexity.hpp"

#include <bit>
#include <cmath>

namespace pbnlc {

void ComplexityParams::validate() const {
  if (n_steps < 1 || n_spans < 1 || n_fft < 1 || n_samples < 1)
    throw ParameterError("complexity: all parameters must be positive");
  if (!std::has_single_bit(unsigned(n_fft))) throw ParameterError("complexity: n_fft must be a power of two");
}

double mult_dbp(const ComplexityParams& p) {
  p.validate();
  const double lg = std::log2(double(p.n_fft));
  return 8.0 * p.n_steps * p.n_spans * p.n_fft * (lg + 10.5) / p.n_samples;
}

double mult_edc(const ComplexityParams& p) {
  p.validate();
  const double lg = std::log2(double(p.n_fft));
  return 8.0 * p.n_fft * (lg + 1.0) / p.n_samples;
}

double mult_pbnlc(std::int64_t m) {
  if (m < 0) throw ParameterError("complexity: M must be non-negative");
  return 2.0 * (4.0 * double(m) + 3.0);
}

std::int64_t count_M(const CoeffTable& table) {
  return std::int64_t(table.quantized ? table.groups.size() : table.entries.size());
}

}  // namespace pbnlc
