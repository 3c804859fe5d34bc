#include "pbnlc/rx.hpp"

#include "pbnlc/channel.hpp"
#include "pbnlc/fft.hpp"
#include "pbnlc/pulse_shaping.hpp"
#include "split_step.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cmath>

namespace pbnlc {

SampledField edc(const SampledField& field, const LinkConfig& link, double total_length) {
  SampledField out = field;
  apply_dispersion(out, -link.beta2, total_length);
  return out;
}

SampledField dbp(const SampledField& field, const LinkConfig& link, const DbpConfig& cfg) {
  link.validate();
  cfg.validate();
  SampledField out = field;
  const double inv_amp = 1.0 / std::sqrt(link.span_gain());
  for (int span = link.n_spans - 1; span >= 0; --span) {
    out.x *= inv_amp;
    out.y *= inv_amp;
    out = detail::split_step(out, -link.alpha, -link.beta2, -link.manakov_gamma(), link.span_length,
                             cfg.steps_per_span);
  }
  return out;
}

namespace {

ArrayXcd resample_one(ArrayXcd x, Eigen::Index n_out) {
  const Eigen::Index n_in = x.size();
  fft(x);
  ArrayXcd y = ArrayXcd::Zero(n_out);
  // Bins strictly below the smaller Nyquist frequency; the Nyquist bin itself
  // has no unambiguous sign and is dropped.
  const Eigen::Index keep = (std::min(n_in, n_out) - 1) / 2;
  y[0] = x[0];
  for (Eigen::Index k = 1; k <= keep; ++k) {
    y[k] = x[k];
    y[n_out - k] = x[n_in - k];
  }
  ifft(y);
  return y * (double(n_out) / double(n_in));
}

}  // namespace

SampledField resample(const SampledField& field, double target_rate) {
  field.validate();
  if (!(target_rate > 0.0)) throw ParameterError("resample: target rate must be positive");
  const double exact = double(field.size()) * target_rate / field.sample_rate;
  const auto n_out = Eigen::Index(std::llround(exact));
  if (std::abs(exact - double(n_out)) > 1e-6)
    throw LengthError("resample: rate ratio does not give an integer length");
  SampledField out = field;
  out.sample_rate = target_rate;
  if (n_out == field.size()) return out;
  out.x = resample_one(field.x, n_out);
  out.y = resample_one(field.y, n_out);
  return out;
}

SymbolGrid matched_filter_downsample(const SampledField& field, const RealArray<double>& taps,
                                     int samples_per_symbol, Eigen::Index delay) {
  field.validate();
  if (samples_per_symbol < 1) throw ParameterError("matched filter: samples_per_symbol must be positive");
  if (taps.size() % 2 != 1) throw ParameterError("matched filter: taps must have odd length");
  SymbolGrid g;
  g.symbol_rate = field.sample_rate / samples_per_symbol;
  g.x = matched_filter_one(field.x, taps, samples_per_symbol, delay);
  g.y = matched_filter_one(field.y, taps, samples_per_symbol, delay);
  const Eigen::Index k = g.x.size();
  if (k == 0) return g;

  ArrayXcd c = ArrayXcd::Zero(k);
  const Eigen::Index max_lag = (taps.size() - 1) / samples_per_symbol;
  for (Eigen::Index l = -max_lag; l <= max_lag; ++l) {
    double r = 0.0;
    for (Eigen::Index j = 0; j < taps.size(); ++j) {
      const Eigen::Index i = j + l * samples_per_symbol;
      if (i >= 0 && i < taps.size()) r += taps[j] * taps[i];
    }
    c[((l % k) + k) % k] += r;
  }
  fft(c);
  if ((c.abs() < 1e-6).any()) throw ParameterError("matched filter: tap autocorrelation is not invertible");
  for (auto* pol : {&g.x, &g.y}) {
    fft(*pol);
    *pol /= c;
    ifft(*pol);
  }
  return g;
}

Eigen::Index estimate_sample_delay(const SampledField& received, const SampledField& reference) {
  received.validate();
  reference.validate();
  if (received.size() != reference.size()) throw LengthError("delay estimate: lengths differ");
  const Eigen::Index n = received.size();
  if (n == 0) return 0;
  ArrayXd mag = ArrayXd::Zero(n);
  for (int p = 0; p < 2; ++p) {
    ArrayXcd a = p == 0 ? received.x : received.y;
    ArrayXcd b = p == 0 ? reference.x : reference.y;
    fft(a);
    fft(b);
    a *= b.conjugate();
    ifft(a);
    mag += a.abs2();
  }
  Eigen::Index best;
  mag.maxCoeff(&best);
  return best > n / 2 ? best - n : best;
}

std::vector<std::uint8_t> labels_to_bits(const std::vector<int>& labels, int bits_per_symbol) {
  std::vector<std::uint8_t> bits;
  bits.reserve(labels.size() * std::size_t(bits_per_symbol));
  for (int label : labels)
    for (int b = bits_per_symbol - 1; b >= 0; --b) bits.push_back(std::uint8_t((label >> b) & 1));
  return bits;
}

Detection ml_detect(const SymbolGrid& received, const Constellation& c) {
  received.validate();
  c.validate();
  Detection d;
  d.symbols.symbol_rate = received.symbol_rate;
  d.symbols.x.resize(received.size());
  d.symbols.y.resize(received.size());
  std::vector<int> lx(std::size_t(received.size())), ly(lx.size());
  for (Eigen::Index i = 0; i < received.size(); ++i) {
    lx[std::size_t(i)] = nearest_label(received.x[i], c);
    ly[std::size_t(i)] = nearest_label(received.y[i], c);
    d.symbols.x[i] = c.points[std::size_t(lx[std::size_t(i)])];
    d.symbols.y[i] = c.points[std::size_t(ly[std::size_t(i)])];
  }
  d.bits_x = labels_to_bits(lx, c.bits_per_symbol);
  d.bits_y = labels_to_bits(ly, c.bits_per_symbol);
  return d;
}

SymbolGrid normalize_power(const SymbolGrid& g) {
  g.validate();
  SymbolGrid out = g;
  for (auto* pol : {&out.x, &out.y}) {
    const double e = pol->size() ? pol->abs2().mean() : 0.0;
    if (e > 0.0) *pol /= std::sqrt(e);
  }
  return out;
}

SymbolGrid known_data_gain(const SymbolGrid& rx, const SymbolGrid& tx, Eigen::Index first, Eigen::Index last) {
  rx.validate();
  tx.validate();
  if (rx.size() != tx.size()) throw LengthError("known-data gain: lengths differ");
  if (first < 0 || last > rx.size() || first >= last) throw ParameterError("known-data gain: empty range");
  SymbolGrid out = rx;
  auto fit = [&](ArrayXcd& r, const ArrayXcd& t) {
    const auto seg_r = r.segment(first, last - first);
    const auto seg_t = t.segment(first, last - first);
    const double den = seg_r.abs2().sum();
    if (den == 0.0) return;
    const std::complex<double> g = (seg_r.conjugate() * seg_t).sum() / den;
    r *= g;
  };
  fit(out.x, tx.x);
  fit(out.y, tx.y);
  return out;
}

double q_db_from_ber(double ber) {
  if (!(ber >= 0.0 && ber <= 1.0)) throw ParameterError("q_db_from_ber: BER must lie in [0, 1]");
  if (ber == 0.0) return kQCapDb;
  if (ber >= 0.5) return -kQCapDb;
  const double q = std::sqrt(2.0) * boost::math::erfc_inv(2.0 * ber);
  return std::min(kQCapDb, 20.0 * std::log10(q));
}

FrameStats frame_stats(const std::vector<std::uint8_t>& tx_bits_x, const std::vector<std::uint8_t>& tx_bits_y,
                       const Detection& rx, const SymbolGrid& tx, const SymbolGrid& rx_soft, Eigen::Index edge,
                       int bits_per_symbol) {
  const Eigen::Index k = tx.size();
  const auto bps = std::size_t(bits_per_symbol);
  if (rx_soft.size() != k || rx.symbols.size() != k) throw LengthError("metrics: symbol counts differ");
  if (tx_bits_x.size() != std::size_t(k) * bps || tx_bits_y.size() != tx_bits_x.size() ||
      rx.bits_x.size() != tx_bits_x.size() || rx.bits_y.size() != tx_bits_x.size())
    throw LengthError("metrics: bit counts differ");
  if (edge < 0 || 2 * edge >= k) throw ParameterError("metrics: zero counted bits");

  FrameStats s;
  const std::size_t b0 = std::size_t(edge) * bps, b1 = std::size_t(k - edge) * bps;
  for (std::size_t i = b0; i < b1; ++i) {
    s.bit_errors += (tx_bits_x[i] != rx.bits_x[i]) + (tx_bits_y[i] != rx.bits_y[i]);
  }
  s.counted_bits = 2 * (b1 - b0);
  const Eigen::Index len = k - 2 * edge;
  s.signal_energy = tx.x.segment(edge, len).abs2().sum() + tx.y.segment(edge, len).abs2().sum();
  s.error_energy = (rx_soft.x.segment(edge, len) - tx.x.segment(edge, len)).abs2().sum() +
                   (rx_soft.y.segment(edge, len) - tx.y.segment(edge, len)).abs2().sum();
  return s;
}

MetricsRow metrics(const FrameStats& s, const std::string& technique, double launch_power_dbm) {
  if (s.counted_bits == 0) throw ParameterError("metrics: zero counted bits");
  MetricsRow r;
  r.technique = technique;
  r.launch_power_dbm = launch_power_dbm;
  r.counted_bits = s.counted_bits;
  r.bit_errors = s.bit_errors;
  r.ber = double(s.bit_errors) / double(s.counted_bits);
  if (s.error_energy <= 0.0 || 10.0 * std::log10(s.signal_energy / s.error_energy) > kSnrCapDb) {
    r.snr_db = kSnrCapDb;
    r.capped = true;
  } else {
    r.snr_db = 10.0 * std::log10(s.signal_energy / s.error_energy);
  }
  r.q_db = q_db_from_ber(r.ber);
  if (r.ber == 0.0) r.capped = true;
  return r;
}

}  // namespace pbnlc
