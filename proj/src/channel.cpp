#include "pbnlc/channel.hpp"

#include "pbnlc/fft.hpp"
#include "pbnlc/random.hpp"
#include "split_step.hpp"

#include <cmath>
#include <random>

namespace pbnlc {

SpanPlan SpanPlan::for_link(const LinkConfig& link, double requested_step) {
  if (!(requested_step > 0.0) || !std::isfinite(requested_step))
    throw ParameterError("span plan: step size must be positive");
  SpanPlan p;
  p.steps_per_span = std::max(1, int(std::lround(link.span_length / requested_step)));
  p.step_size = link.span_length / p.steps_per_span;
  return p;
}

void SpanPlan::validate(const LinkConfig& link) const {
  if (!(step_size > 0.0)) throw ParameterError("span plan: step_size must be positive");
  if (steps_per_span < 1) throw ParameterError("span plan: steps_per_span must be >= 1");
  if (std::abs(steps_per_span * step_size - link.span_length) > step_size)
    throw ParameterError("span plan: steps do not cover the span");
}

NoiseModel NoiseModel::for_link(const LinkConfig& link, std::uint64_t seed, bool enabled) {
  NoiseModel n;
  n.noise_figure_db = link.noise_figure_db;
  n.center_frequency = link.center_frequency();
  n.seed = seed;
  n.enabled = enabled;
  return n;
}

double midpoint_effective_length(double alpha, double h) {
  if (alpha == 0.0) return h;
  // Integral of exp(-alpha (z - h/2)) over the step.
  return 2.0 * std::sinh(0.5 * alpha * h) / alpha;
}

namespace detail {

SampledField split_step(const SampledField& field, double alpha, double beta2, double gamma_eff, double length,
                        int steps) {
  field.validate();
  if (steps < 1) throw ParameterError("split-step: steps must be >= 1");
  SampledField out = field;
  const Eigen::Index n = field.size();
  if (n == 0 || length == 0.0) return out;

  const double h = length / steps;
  const ArrayXd w = angular_frequency_grid(n, field.sample_rate);
  const ArrayXd phase = 0.5 * beta2 * w.square();
  const double half_loss = std::exp(-0.25 * alpha * h);
  const ArrayXcd half = phase.unaryExpr([&](double p) { return std::polar(half_loss, 0.5 * h * p); });
  const ArrayXcd full = half.square();
  const double nl = gamma_eff * midpoint_effective_length(alpha, h);

  fft(out.x);
  fft(out.y);
  for (int i = 0; i < steps; ++i) {
    if (i == 0) {
      out.x *= half;
      out.y *= half;
    } else {
      out.x *= full;
      out.y *= full;
    }
    ifft(out.x);
    ifft(out.y);
    const ArrayXd phi = nl * (out.x.abs2() + out.y.abs2());
    if (!phi.allFinite())
      throw NumericOverflowError("split-step: non-finite field or phase at step " + std::to_string(i));
    const ArrayXcd rot = phi.unaryExpr([](double p) { return std::polar(1.0, p); });
    out.x *= rot;
    out.y *= rot;
    fft(out.x);
    fft(out.y);
  }
  out.x *= half;
  out.y *= half;
  ifft(out.x);
  ifft(out.y);
  if (!out.x.allFinite() || !out.y.allFinite()) throw NumericOverflowError("split-step: non-finite output field");
  return out;
}

}  // namespace detail

SampledField ssfm_span(const SampledField& field, const LinkConfig& link, const SpanPlan& plan) {
  link.validate();
  plan.validate(link);
  return detail::split_step(field, link.alpha, link.beta2, link.manakov_gamma(), link.span_length,
                            plan.steps_per_span);
}

double ase_power_per_polarization(const LinkConfig& link, const NoiseModel& noise, double sample_rate) {
  const double g = link.span_gain();
  return 0.5 * std::pow(10.0, noise.noise_figure_db / 10.0) * kPlanck * noise.center_frequency * (g - 1.0) *
         sample_rate;
}

SampledField edfa(const SampledField& field, const LinkConfig& link, const NoiseModel& noise) {
  field.validate();
  SampledField out = field;
  const double amp = std::sqrt(link.span_gain());
  out.x *= amp;
  out.y *= amp;
  if (!noise.enabled) return out;
  const double p = ase_power_per_polarization(link, noise, field.sample_rate);
  if (p <= 0.0) return out;
  std::mt19937_64 rng(noise.seed);
  std::normal_distribution<double> gauss(0.0, std::sqrt(0.5 * p));
  for (auto* pol : {&out.x, &out.y})
    for (Eigen::Index i = 0; i < pol->size(); ++i) {
      const double re = gauss(rng);
      const double im = gauss(rng);
      (*pol)[i] += std::complex<double>(re, im);
    }
  return out;
}

SampledField propagate_link(const SampledField& field, const LinkConfig& link, const SpanPlan& plan,
                            const NoiseModel& noise) {
  field.validate();
  SampledField out = field;
  // n_spans is validated >= 1 by LinkConfig; a zero-span call is an identity.
  if (link.n_spans == 0) return out;
  link.validate();
  plan.validate(link);
  for (int i = 0; i < link.n_spans; ++i) {
    out = ssfm_span(out, link, plan);
    NoiseModel span_noise = noise;
    span_noise.seed = derive_seed(noise.seed, std::uint64_t(i));
    out = edfa(out, link, span_noise);
  }
  return out;
}

void apply_dispersion(SampledField& field, double beta2, double length) {
  field.validate();
  if (field.size() == 0 || length == 0.0 || beta2 == 0.0) return;
  const ArrayXd w = angular_frequency_grid(field.size(), field.sample_rate);
  const ArrayXcd h = (0.5 * beta2 * length * w.square()).unaryExpr([](double p) { return std::polar(1.0, p); });
  fft(field.x);
  fft(field.y);
  field.x *= h;
  field.y *= h;
  ifft(field.x);
  ifft(field.y);
}

}  // namespace pbnlc
