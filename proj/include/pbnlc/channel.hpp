#pragma once

#include "pbnlc/types.hpp"

#include <cstdint>

namespace pbnlc {

/// Split-step discretization of one span. The requested step is adjusted so
/// that an integer number of steps covers the span exactly.
struct SpanPlan {
  double step_size = 0.8e3;
  int steps_per_span = 100;

  static SpanPlan for_link(const LinkConfig& link, double requested_step = 0.8e3);
  void validate(const LinkConfig& link) const;
};

struct NoiseModel {
  double noise_figure_db = 5.5;
  double center_frequency = kSpeedOfLight / 1550e-9;
  std::uint64_t seed = 1;
  bool enabled = true;

  static NoiseModel for_link(const LinkConfig& link, std::uint64_t seed, bool enabled = true);
};

struct NumericOverflowError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Effective nonlinear length of a step of length h, referenced to the power at
/// the step midpoint (where the symmetric scheme applies the nonlinearity).
double midpoint_effective_length(double alpha, double h);

/// Manakov propagation over one span, symmetric split-step in the lossy frame.
SampledField ssfm_span(const SampledField& field, const LinkConfig& link, const SpanPlan& plan);

/// Lumped amplifier restoring exp(alpha * span_length); optionally adds ASE.
SampledField edfa(const SampledField& field, const LinkConfig& link, const NoiseModel& noise);

/// ASE power added per polarization over the simulation bandwidth.
double ase_power_per_polarization(const LinkConfig& link, const NoiseModel& noise, double sample_rate);

/// n_spans x (span, amplifier). Span i draws noise from derive_seed(seed, i).
SampledField propagate_link(const SampledField& field, const LinkConfig& link, const SpanPlan& plan,
                            const NoiseModel& noise);

/// Multiplies both polarizations by exp(j beta2/2 w^2 length) (pure dispersion).
void apply_dispersion(SampledField& field, double beta2, double length);

}  // namespace pbnlc
