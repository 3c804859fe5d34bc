#include "pbnlc/coefficients.hpp"

#include <cmath>
#include <map>

namespace pbnlc {

double default_quant_step(const CoeffTable& table) { return std::abs(table.reference) / 32.0; }

CoeffTable quantize_combine(const CoeffTable& table, double quant_step) {
  if (table.quantized) throw ParameterError("quantize_combine: table is already quantized");
  if (!(quant_step > 0.0) || !std::isfinite(quant_step))
    throw ParameterError("quantize_combine: quant_step must be positive and finite");

  auto q = [&](double v) { return std::llround(v / quant_step); };
  if (q(table.reference.real()) == 0 && q(table.reference.imag()) == 0)
    throw DegenerateQuantizationError("quantize_combine: reference coefficient quantizes to zero");

  CoeffTable out = table;
  out.quantized = true;
  out.quant_scale = quant_step;
  out.entries.clear();
  out.groups.clear();

  // Keyed by the integer pair so that grouping is exact and ordered.
  std::map<std::pair<long long, long long>, std::size_t> slot;
  for (const auto& e : table.entries) {
    const long long re = q(e.value.real()), im = q(e.value.imag());
    // A zero coefficient no longer contributes to the distortion sum.
    if (re == 0 && im == 0) continue;
    const std::complex<double> v(double(re) * quant_step, double(im) * quant_step);
    out.entries.push_back({e.idx, v});
    auto [it, inserted] = slot.try_emplace({re, im}, out.groups.size());
    if (inserted) out.groups.push_back({v, {}});
    out.groups[it->second].members.push_back(e.idx);
  }
  out.reference = {double(q(table.reference.real())) * quant_step, double(q(table.reference.imag())) * quant_step};

  // Deterministic group order: by integer key.
  std::vector<CoeffGroup> ordered;
  ordered.reserve(out.groups.size());
  for (const auto& [key, i] : slot) ordered.push_back(std::move(out.groups[i]));
  out.groups = std::move(ordered);
  return out;
}

}  // namespace pbnlc
