#pragma once

#include <Eigen/Core>

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

namespace pbnlc {

template <typename Scalar>
using ComplexArray = Eigen::Array<std::complex<Scalar>, Eigen::Dynamic, 1>;
template <typename Scalar>
using RealArray = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

using ArrayXcd = ComplexArray<double>;
using ArrayXd = RealArray<double>;

// Error taxonomy shared by every module.
struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct LengthError : std::length_error {
  using std::length_error::length_error;
};
struct ConfigurationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Dual-polarization symbols at one sample per symbol.
template <typename Scalar>
struct BasicSymbolGrid {
  ComplexArray<Scalar> x;
  ComplexArray<Scalar> y;
  double symbol_rate = 32e9;

  Eigen::Index size() const { return x.size(); }

  void validate() const {
    if (x.size() != y.size())
      throw LengthError("symbol grid: x and y lengths differ");
  }
};

/// Dual-polarization waveform on a uniform time grid. The frequency grid is
/// implied by the sample rate and length (FFT ordering).
template <typename Scalar>
struct BasicSampledField {
  ComplexArray<Scalar> x;
  ComplexArray<Scalar> y;
  double sample_rate = 0.0;
  double center_time_offset = 0.0;

  Eigen::Index size() const { return x.size(); }

  void validate() const {
    if (x.size() != y.size())
      throw LengthError("sampled field: x and y lengths differ");
    if (!(sample_rate > 0.0))
      throw ParameterError("sampled field: sample_rate must be positive");
  }

  Scalar energy() const { return x.abs2().sum() + y.abs2().sum(); }
  Scalar mean_power() const {
    return x.size() == 0 ? Scalar(0) : energy() / Scalar(x.size());
  }
};

using SymbolGrid = BasicSymbolGrid<double>;
using SampledField = BasicSampledField<double>;

/// Transmit pulse description. `tau` is the width of the Gaussian model pulse
/// used inside the coefficient integrals; the transmitted pulse is RRC.
struct PulseParams {
  double T = 1.0 / 32e9;
  double tau = 0.5 / 32e9;
  double P0 = 1e-3;
  double rrc_rolloff = 0.1;

  static PulseParams for_symbol_rate(double symbol_rate, double tau_over_T = 0.5) {
    PulseParams p;
    p.T = 1.0 / symbol_rate;
    p.tau = tau_over_T * p.T;
    return p;
  }

  bool operator==(const PulseParams&) const = default;

  void validate() const {
    if (!(T > 0.0) || !std::isfinite(T)) throw ParameterError("pulse: T must be positive");
    if (!(tau > 0.0) || !std::isfinite(tau)) throw ParameterError("pulse: tau must be positive");
    if (!(P0 > 0.0) || !std::isfinite(P0)) throw ParameterError("pulse: P0 must be positive");
    if (!(rrc_rolloff >= 0.0 && rrc_rolloff <= 1.0))
      throw ParameterError("pulse: rrc_rolloff must lie in [0, 1]");
  }
};

// Unit helpers. All internal quantities are SI.
inline constexpr double db_per_km_to_alpha(double db_per_km) {
  return db_per_km * std::numbers::ln10 / 10.0 / 1e3;
}
inline constexpr double ps2_per_km_to_beta2(double ps2_per_km) { return ps2_per_km * 1e-24 / 1e3; }
inline constexpr double per_w_km_to_gamma(double g) { return g / 1e3; }
inline double dbm_to_watt(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }
inline double watt_to_dbm(double w) { return 10.0 * std::log10(w / 1e-3); }

inline constexpr double kPlanck = 6.62607015e-34;
inline constexpr double kSpeedOfLight = 299792458.0;

/// Fiber and amplifier parameters. `alpha` is the power attenuation in 1/m.
struct LinkConfig {
  double alpha = db_per_km_to_alpha(0.2);
  double beta2 = ps2_per_km_to_beta2(-20.47);
  double gamma = per_w_km_to_gamma(1.22);
  double span_length = 80e3;
  int n_spans = 35;
  double noise_figure_db = 5.5;
  double center_wavelength = 1550e-9;

  double total_length() const { return span_length * n_spans; }
  double center_frequency() const { return kSpeedOfLight / center_wavelength; }
  /// Power gain restoring one span.
  double span_gain() const { return std::exp(alpha * span_length); }
  /// Manakov nonlinearity 8/9 gamma.
  double manakov_gamma() const { return 8.0 / 9.0 * gamma; }

  bool operator==(const LinkConfig&) const = default;

  void validate() const {
    auto finite = [](double v) { return std::isfinite(v); };
    if (!finite(alpha) || !finite(beta2) || !finite(gamma) || !finite(noise_figure_db) ||
        !finite(center_wavelength))
      throw ParameterError("link: non-finite physical parameter");
    if (alpha < 0.0) throw ParameterError("link: alpha must be non-negative");
    if (!(span_length > 0.0) || !finite(span_length))
      throw ParameterError("link: span_length must be positive");
    if (n_spans < 1) throw ParameterError("link: n_spans must be at least 1");
    if (!(center_wavelength > 0.0)) throw ParameterError("link: center_wavelength must be positive");
  }
};

/// Standard single-mode fiber values used throughout the experiments.
inline LinkConfig table1_link(int n_spans = 35) {
  LinkConfig l;
  l.n_spans = n_spans;
  return l;
}

}  // namespace pbnlc
