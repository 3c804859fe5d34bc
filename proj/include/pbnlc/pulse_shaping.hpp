#pragma once

#include "pbnlc/types.hpp"

#include <cmath>
#include <numbers>

namespace pbnlc {

/// Root-raised-cosine taps sampled at `samples_per_symbol`, spanning
/// `span_symbols` symbols (length span*sps + 1, centered), unit energy.
template <typename Scalar = double>
RealArray<Scalar> rrc_taps(Scalar rolloff, int span_symbols, int samples_per_symbol) {
  if (!(rolloff >= 0 && rolloff <= 1)) throw ParameterError("rrc_taps: rolloff must lie in [0, 1]");
  if (span_symbols < 8) throw ParameterError("rrc_taps: span_symbols must be >= 8");
  if (samples_per_symbol < 2) throw ParameterError("rrc_taps: samples_per_symbol must be >= 2");
  if (span_symbols % 2 != 0) throw ParameterError("rrc_taps: span_symbols must be even");

  const Eigen::Index n = Eigen::Index(span_symbols) * samples_per_symbol + 1;
  const Eigen::Index center = n / 2;
  const Scalar pi = std::numbers::pi_v<Scalar>;
  const Scalar b = rolloff;
  RealArray<Scalar> h(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar t = Scalar(i - center) / Scalar(samples_per_symbol);  // in symbol periods
    Scalar v;
    if (i == center) {
      v = 1 - b + 4 * b / pi;
    } else if (b > 0 && std::abs(std::abs(4 * b * t) - 1) < Scalar(1e-9)) {
      v = b / std::sqrt(Scalar(2)) *
          ((1 + 2 / pi) * std::sin(pi / (4 * b)) + (1 - 2 / pi) * std::cos(pi / (4 * b)));
    } else {
      const Scalar num = std::sin(pi * t * (1 - b)) + 4 * b * t * std::cos(pi * t * (1 + b));
      const Scalar den = pi * t * (1 - (4 * b * t) * (4 * b * t));
      v = num / den;
    }
    h[i] = v;
  }
  h /= std::sqrt(h.square().sum());
  return h;
}

/// Circular pulse shaping: the tap center is aligned with each symbol instant
/// n = k*sps. Output length is K*sps.
template <typename Scalar>
ComplexArray<Scalar> shape_one(const ComplexArray<Scalar>& symbols, const RealArray<Scalar>& taps,
                               int samples_per_symbol) {
  const Eigen::Index k_count = symbols.size();
  const Eigen::Index n = k_count * samples_per_symbol;
  const Eigen::Index center = taps.size() / 2;
  ComplexArray<Scalar> out = ComplexArray<Scalar>::Zero(n);
  if (n == 0) return out;
  for (Eigen::Index k = 0; k < k_count; ++k) {
    const std::complex<Scalar> a = symbols[k];
    if (a == std::complex<Scalar>(0)) continue;
    const Eigen::Index base = k * samples_per_symbol - center;
    for (Eigen::Index j = 0; j < taps.size(); ++j) {
      Eigen::Index idx = (base + j) % n;
      if (idx < 0) idx += n;
      out[idx] += a * taps[j];
    }
  }
  return out;
}

template <typename Scalar>
BasicSampledField<Scalar> shape(const BasicSymbolGrid<Scalar>& symbols, const RealArray<Scalar>& taps,
                                int samples_per_symbol) {
  symbols.validate();
  if (samples_per_symbol < 1) throw ParameterError("shape: samples_per_symbol must be positive");
  if (taps.size() % 2 != 1) throw ParameterError("shape: taps must have odd length");
  BasicSampledField<Scalar> f;
  f.x = shape_one(symbols.x, taps, samples_per_symbol);
  f.y = shape_one(symbols.y, taps, samples_per_symbol);
  f.sample_rate = symbols.symbol_rate * samples_per_symbol;
  return f;
}

/// Circular correlation with `taps` sampled at n = k*sps + delay. For
/// symmetric taps this is the matched filter.
template <typename Scalar>
ComplexArray<Scalar> matched_filter_one(const ComplexArray<Scalar>& samples, const RealArray<Scalar>& taps,
                                        int samples_per_symbol, Eigen::Index delay) {
  const Eigen::Index n = samples.size();
  if (n % samples_per_symbol != 0)
    throw LengthError("matched filter: sample count must be a multiple of samples_per_symbol");
  const Eigen::Index k_count = n / samples_per_symbol;
  const Eigen::Index center = taps.size() / 2;
  ComplexArray<Scalar> out(k_count);
  for (Eigen::Index k = 0; k < k_count; ++k) {
    const Eigen::Index base = k * samples_per_symbol + delay - center;
    std::complex<Scalar> acc(0);
    for (Eigen::Index j = 0; j < taps.size(); ++j) {
      Eigen::Index idx = (base + j) % n;
      if (idx < 0) idx += n;
      acc += samples[idx] * taps[j];
    }
    out[k] = acc;
  }
  return out;
}

/// Ratio between the peak power of an isolated unit-symbol pulse and the
/// average power of a unit-energy symbol stream shaped with the same taps.
/// Per-polarization average power times this factor gives P0.
template <typename Scalar>
Scalar peak_to_average_factor(const RealArray<Scalar>& taps, int samples_per_symbol) {
  const Scalar peak = taps[taps.size() / 2];
  return peak * peak * Scalar(samples_per_symbol);
}

}  // namespace pbnlc
