#include "pbnlc/constellation.hpp"
#include "pbnlc/fft.hpp"
#include "pbnlc/pulse_shaping.hpp"
#include "pbnlc/random.hpp"
#include "pbnlc/rx.hpp"

#include <doctest.h>

#include <bit>
#include <random>
#include <set>

using namespace pbnlc;

namespace {

std::vector<std::uint8_t> random_bits(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::uint8_t> b(n);
  for (auto& v : b) v = std::uint8_t(rng() & 1u);
  return b;
}

double rel_diff(const ArrayXcd& a, const ArrayXcd& b) {
  const double scale = std::max(std::sqrt(b.abs2().sum()), 1e-300);
  return std::sqrt((a - b).abs2().sum()) / scale;
}

}  // namespace

TEST_CASE("qam16 labeling") {
  const auto c = qam16();
  c.validate();
  CHECK(c.size() == 16);
  CHECK(c.mean_energy() == doctest::Approx(1.0).epsilon(1e-15));

  const double s = 1.0 / std::sqrt(10.0);
  CHECK(std::abs(c.points[0] - std::complex<double>(-3 * s, -3 * s)) < 1e-15);
  CHECK(std::abs(c.points[0b0111] - std::complex<double>(-1 * s, 1 * s)) < 1e-15);
  CHECK(std::abs(c.points[0b1010] - std::complex<double>(3 * s, 3 * s)) < 1e-15);

  std::set<std::pair<double, double>> distinct;
  for (const auto& p : c.points) distinct.insert({p.real(), p.imag()});
  CHECK(distinct.size() == 16);

  // Gray: horizontally or vertically adjacent points differ in exactly one bit.
  const double d = c.min_distance();
  for (int a = 0; a < 16; ++a)
    for (int b = a + 1; b < 16; ++b)
      if (std::abs(std::abs(c.points[a] - c.points[b]) - d) < 1e-12) CHECK(std::popcount(unsigned(a ^ b)) == 1);
}

TEST_CASE("qam16 mapping") {
  const auto c = qam16();
  std::vector<std::uint8_t> zero(4, 0);
  const auto one = qam16_map<double>(zero, c);
  REQUIRE(one.size() == 1);
  CHECK(one[0] == c.points[0]);

  std::vector<std::uint8_t> bad(6, 0);
  CHECK_THROWS_AS(qam16_map<double>(bad, c), LengthError);

  const auto bits = random_bits(4000, 3);
  const auto sym = qam16_map<double>(bits, c);
  CHECK(sym.size() == 1000);
}

TEST_CASE("rrc taps") {
  CHECK_THROWS_AS(rrc_taps(-0.1, 32, 8), ParameterError);
  CHECK_THROWS_AS(rrc_taps(1.5, 32, 8), ParameterError);

  for (double r : {0.0, 0.1, 0.5, 1.0}) {
    const auto h = rrc_taps(r, 32, 8);
    CHECK(h.square().sum() == doctest::Approx(1.0).epsilon(1e-12));
    Eigen::Index imax;
    h.abs().maxCoeff(&imax);
    CHECK(imax == h.size() / 2);
  }

  // Rolloff 0 is a sinc: zero crossings at every nonzero symbol instant.
  const auto sinc = rrc_taps(0.0, 32, 8);
  for (int k = 1; k < 16; ++k) CHECK(std::abs(sinc[sinc.size() / 2 + 8 * k]) < 1e-12);

  // Self-convolution sampled at symbol instants: residual ISI comes only from
  // truncation and shrinks with the span.
  const int sps = 16;
  auto isi = [&](int span) {
    const auto h = rrc_taps(0.1, span, sps);
    const Eigen::Index n = h.size();
    ArrayXd conv = ArrayXd::Zero(2 * n - 1);
    for (Eigen::Index i = 0; i < n; ++i) conv.segment(i, n) += h[i] * h;
    const Eigen::Index mid = n - 1;
    double worst = 0.0;
    for (Eigen::Index k = 1; mid + k * sps < conv.size(); ++k)
      worst = std::max({worst, std::abs(conv[mid + k * sps]), std::abs(conv[mid - k * sps])});
    return worst / conv[mid];
  };
  CHECK(isi(32) == doctest::Approx(3.8081760181784895e-3).epsilon(1e-9));
  CHECK(isi(64) < isi(32));
  CHECK(isi(128) < isi(64));
}

TEST_CASE("pulse shaping") {
  const int sps = 8;
  const auto h = rrc_taps(0.1, 32, sps);
  const Eigen::Index k = 64;

  SymbolGrid g;
  g.x = ArrayXcd::Zero(k);
  g.y = ArrayXcd::Zero(k);
  CHECK(shape(g, h, sps).energy() == 0.0);

  g.x[20] = 1.0;
  const auto f = shape(g, h, sps);
  const Eigen::Index c = h.size() / 2;
  for (Eigen::Index j = 0; j < h.size(); ++j) {
    Eigen::Index idx = (20 * sps - c + j) % f.size();
    if (idx < 0) idx += f.size();
    CHECK(f.x[idx] == std::complex<double>(h[j]));
  }

  SymbolGrid a = g, b = g, ab = g;
  a.x[5] = {0.3, -0.7};
  b.x[40] = {-1.1, 0.2};
  b.y[7] = {0.5, 0.5};
  ab.x = a.x + b.x;
  ab.y = a.y + b.y;
  const auto fa = shape(a, h, sps), fb = shape(b, h, sps), fab = shape(ab, h, sps);
  CHECK(rel_diff(fab.x, fa.x + fb.x) < 1e-12);
  CHECK(rel_diff(fab.y, fa.y + fb.y) < 1e-12);
}

TEST_CASE("noiseless channel-free loopback") {
  const auto c = qam16();
  const int sps = 8;
  const auto h = rrc_taps(0.1, 32, sps);
  const auto bx = random_bits(4 * 1024, 11), by = random_bits(4 * 1024, 12);
  SymbolGrid g;
  g.x = qam16_map<double>(bx, c);
  g.y = qam16_map<double>(by, c);
  const auto rx = matched_filter_downsample(shape(g, h, sps), h, sps);
  CHECK(rel_diff(rx.x, g.x) < 1e-10);
  CHECK(rel_diff(rx.y, g.y) < 1e-10);
  const auto det = ml_detect(rx, c);
  CHECK(det.bits_x == bx);
  CHECK(det.bits_y == by);
}

TEST_CASE("peak to average factor") {
  const int sps = 16;
  const auto h = rrc_taps(0.1, 32, sps);
  const double f = peak_to_average_factor(h, sps);
  SymbolGrid g;
  g.x = ArrayXcd::Zero(4096);
  g.y = ArrayXcd::Zero(4096);
  g.x[128] = 1.0;
  const double peak = shape(g, h, sps).x.abs2().maxCoeff();

  const auto c = qam16();
  g.x = qam16_map<double>(random_bits(4 * 4096, 5), c);
  const auto field = shape(g, h, sps);
  const double avg = field.x.abs2().mean();
  CHECK(peak / avg == doctest::Approx(f).epsilon(0.03));
}

TEST_CASE("fft conventions") {
  const Eigen::Index n = 64;
  const double fs = 8.0;
  ArrayXcd x(n);
  const ArrayXd w = angular_frequency_grid(n, fs);
  // exp(+j w0 t) lands in the +w0 bin under the e^{-jwt} analysis kernel.
  const int bin = 5;
  for (Eigen::Index i = 0; i < n; ++i) x[i] = std::polar(1.0, w[bin] * double(i) / fs);
  ArrayXcd y = x;
  fft(y);
  Eigen::Index imax;
  y.abs().maxCoeff(&imax);
  CHECK(imax == bin);
  CHECK(std::abs(y[bin] - double(n)) < 1e-9);
  ifft(y);
  CHECK(rel_diff(y, x) < 1e-14);
  CHECK(w[n / 2 + 1] < 0.0);
}

TEST_CASE("seed derivation") {
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  static_assert(derive_seed(7, 3) == derive_seed(7, 3));
}
