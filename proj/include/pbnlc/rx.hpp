#pragma once

#include "pbnlc/constellation.hpp"
#include "pbnlc/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace pbnlc {

struct DbpConfig {
  int steps_per_span = 1;
  int samples_per_symbol = 2;

  void validate() const {
    if (steps_per_span < 1) throw ParameterError("dbp: steps_per_span must be >= 1");
    if (samples_per_symbol < 1) throw ParameterError("dbp: samples_per_symbol must be >= 1");
  }
};

/// Undoes the accumulated dispersion of `total_length` of fiber.
SampledField edc(const SampledField& field, const LinkConfig& link, double total_length);

/// Back-propagation at the field's own sample rate: spans in reverse order,
/// each undoing the amplifier gain and then running the inverse split-step.
SampledField dbp(const SampledField& field, const LinkConfig& link, const DbpConfig& cfg);

/// Ideal band-limited resampling by spectral truncation or zero padding.
/// The new length must be an integer.
SampledField resample(const SampledField& field, double target_rate);

/// Matched filter sampled at symbol instants. The residual inter-symbol
/// interference of the truncated taps is removed by inverting their
/// (circulant) autocorrelation at symbol lags, so a noiseless loopback is exact.
SymbolGrid matched_filter_downsample(const SampledField& field, const RealArray<double>& taps,
                                     int samples_per_symbol, Eigen::Index delay = 0);

/// Lag (in samples) maximizing the circular cross-correlation magnitude of
/// `received` against `reference`, both polarizations combined.
Eigen::Index estimate_sample_delay(const SampledField& received, const SampledField& reference);

struct Detection {
  SymbolGrid symbols;
  std::vector<std::uint8_t> bits_x;
  std::vector<std::uint8_t> bits_y;
};

/// Nearest-point decisions. Input is expected at unit average energy.
Detection ml_detect(const SymbolGrid& received, const Constellation& c);

/// Bits carried by each label, most significant first.
std::vector<std::uint8_t> labels_to_bits(const std::vector<int>& labels, int bits_per_symbol);

/// Scales both polarizations to unit average energy.
SymbolGrid normalize_power(const SymbolGrid& g);

/// Per-polarization least-squares complex gain against known transmitted
/// symbols over [first, last).
SymbolGrid known_data_gain(const SymbolGrid& rx, const SymbolGrid& tx, Eigen::Index first, Eigen::Index last);

struct MetricsRow {
  std::string technique;
  double launch_power_dbm = 0.0;
  double ber = 0.0;
  double snr_db = 0.0;
  double q_db = 0.0;
  /// Q gain over EDC at the same launch power (0 when not computed).
  double delta_q_db = 0.0;
  double mults_per_symbol = 0.0;
  std::uint64_t counted_bits = 0;
  std::uint64_t bit_errors = 0;
  /// SNR or Q hit the display cap (error-free frame).
  bool capped = false;
  bool operator==(const MetricsRow&) const = default;
};

inline constexpr double kSnrCapDb = 99.0;
inline constexpr double kQCapDb = 99.0;
/// Soft-decision FEC threshold used for reach estimation.
inline constexpr double kFecBerThreshold = 2e-2;

/// 20 log10(sqrt(2) erfc^-1(2 BER)).
double q_db_from_ber(double ber);

/// Raw counts of one frame; frames combine by summation.
struct FrameStats {
  std::uint64_t bit_errors = 0;
  std::uint64_t counted_bits = 0;
  double signal_energy = 0.0;
  double error_energy = 0.0;

  FrameStats& operator+=(const FrameStats& o) {
    bit_errors += o.bit_errors;
    counted_bits += o.counted_bits;
    signal_energy += o.signal_energy;
    error_energy += o.error_energy;
    return *this;
  }
};

/// Counts over symbols [edge, K - edge). `rx_soft` are the pre-decision
/// symbols after the known-data gain; the error vector is rx_soft - tx.
FrameStats frame_stats(const std::vector<std::uint8_t>& tx_bits_x, const std::vector<std::uint8_t>& tx_bits_y,
                       const Detection& rx, const SymbolGrid& tx, const SymbolGrid& rx_soft, Eigen::Index edge,
                       int bits_per_symbol = 4);

MetricsRow metrics(const FrameStats& stats, const std::string& technique = {}, double launch_power_dbm = 0.0);

}  // namespace pbnlc
