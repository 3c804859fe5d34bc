#pragma once

#include "pbnlc/types.hpp"

#include <algorithm>
#include <limits>
#include <cstdint>
#include <span>
#include <vector>

namespace pbnlc {

/// A labeled constellation. `points[label]` is the point carrying the bit
/// pattern `label` (most significant bit first), so the labeling is a
/// bijection by construction as long as the points are distinct.
template <typename Scalar = double>
struct BasicConstellation {
  std::vector<std::complex<Scalar>> points;
  int bits_per_symbol = 0;

  std::size_t size() const { return points.size(); }

  Scalar mean_energy() const {
    Scalar e = 0;
    for (const auto& p : points) e += std::norm(p);
    return e / Scalar(points.size());
  }

  Scalar min_distance() const {
    Scalar d = std::numeric_limits<Scalar>::infinity();
    for (std::size_t i = 0; i < points.size(); ++i)
      for (std::size_t j = i + 1; j < points.size(); ++j) d = std::min(d, std::abs(points[i] - points[j]));
    return d;
  }

  void validate() const {
    if (bits_per_symbol < 1 || points.size() != (std::size_t{1} << bits_per_symbol))
      throw ParameterError("constellation: point count must equal 2^bits_per_symbol");
    if (!(min_distance() > 0)) throw ParameterError("constellation: labeling is not a bijection");
  }
};

using Constellation = BasicConstellation<double>;

/// Square 16-QAM with per-axis binary-reflected Gray labeling, unit mean energy.
/// Bits b0 b1 select the in-phase level and b2 b3 the quadrature level with
/// 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3.
template <typename Scalar = double>
BasicConstellation<Scalar> qam16() {
  constexpr int gray_level[4] = {-3, -1, 3, 1};  // index = 2-bit pattern
  const Scalar norm = Scalar(1) / std::sqrt(Scalar(10));
  BasicConstellation<Scalar> c;
  c.bits_per_symbol = 4;
  c.points.resize(16);
  for (int label = 0; label < 16; ++label) {
    const int i_bits = (label >> 2) & 0x3;
    const int q_bits = label & 0x3;
    c.points[label] = {Scalar(gray_level[i_bits]) * norm, Scalar(gray_level[q_bits]) * norm};
  }
  return c;
}

/// Maps a bit sequence (one byte per bit, values 0/1) onto one polarization.
template <typename Scalar>
ComplexArray<Scalar> qam16_map(std::span<const std::uint8_t> bits, const BasicConstellation<Scalar>& c) {
  if (c.bits_per_symbol != 4) throw ParameterError("qam16_map: constellation must carry 4 bits/symbol");
  if (bits.size() % 4 != 0) throw LengthError("qam16_map: bit count must be a multiple of 4");
  const auto n = static_cast<Eigen::Index>(bits.size() / 4);
  ComplexArray<Scalar> out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    unsigned label = 0;
    for (int b = 0; b < 4; ++b) label = (label << 1) | (bits[4 * i + b] & 1u);
    out[i] = c.points[label];
  }
  return out;
}

/// Index of the nearest constellation point (exhaustive search).
template <typename Scalar>
int nearest_label(std::complex<Scalar> r, const BasicConstellation<Scalar>& c) {
  int best = 0;
  Scalar best_d = std::numeric_limits<Scalar>::infinity();
  for (std::size_t i = 0; i < c.points.size(); ++i) {
    const Scalar d = std::norm(r - c.points[i]);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

}  // namespace pbnlc
