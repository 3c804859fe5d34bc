#include "pbnlc/predistorter.hpp"

#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>

using namespace pbnlc;
using cd = std::complex<double>;

namespace {

constexpr int kWindow = 10;

struct Tables {
  std::shared_ptr<const CoeffTable> fo, t1, t2;
};

const Tables& raw_tables() {
  static const Tables t = [] {
    const auto pulse = PulseParams::for_symbol_rate(32e9);
    const auto link = table1_link(2);
    const QuadratureSpec q;
    Tables r;
    r.fo = std::make_shared<CoeffTable>(build_table(CoeffOrder::FO, kWindow, -40.0, pulse, link, q));
    r.t1 = std::make_shared<CoeffTable>(build_table(CoeffOrder::SoTerm1, kWindow, -40.0, pulse, link, q));
    r.t2 = std::make_shared<CoeffTable>(build_table(CoeffOrder::SoTerm2, kWindow, -40.0, pulse, link, q));
    return r;
  }();
  return t;
}

std::shared_ptr<const CoeffTable> quantized(const std::shared_ptr<const CoeffTable>& t) {
  return std::make_shared<CoeffTable>(quantize_combine(*t, default_quant_step(*t)));
}

PredistortConfig config(bool quantize = false) {
  const auto& t = raw_tables();
  PredistortConfig c;
  c.window = kWindow;
  c.peak_power = 3e-3;
  c.fo_table = quantize ? quantized(t.fo) : t.fo;
  c.so_term1_table = quantize ? quantized(t.t1) : t.t1;
  c.so_term2_table = quantize ? quantized(t.t2) : t.t2;
  c.use_term2 = true;
  return c;
}

SymbolGrid random_grid(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, std::sqrt(0.5));
  SymbolGrid s;
  s.x.resize(n);
  s.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    s.x[i] = {g(rng), g(rng)};
    s.y[i] = {g(rng), g(rng)};
  }
  return s;
}

SymbolGrid scaled(SymbolGrid s, double c) {
  s.x *= c;
  s.y *= c;
  return s;
}

double rel(const ArrayXcd& a, const ArrayXcd& b) {
  return std::sqrt((a - b).abs2().sum()) / std::sqrt(b.abs2().sum());
}

// Term-by-term sums written straight from the index definitions.
struct Naive {
  const SymbolGrid& s;
  const CoeffTable& t;
  int pol;

  cd at(const ArrayXcd& v, long i) const { return i >= 0 && i < v.size() ? v[i] : cd(0.0); }
  cd a(long i) const { return at(pol == 0 ? s.x : s.y, i); }
  cd b(long i) const { return at(pol == 0 ? s.y : s.x, i); }
  cd c(int m, int n, int k) const {
    const auto* p = t.find({m, n, k});
    return p ? *p : cd(0.0);
  }

  cd fo(long i) const {
    const int h = kWindow / 2;
    cd acc = 0.0;
    for (int m = -h; m <= h; ++m)
      for (int n = -h; n <= h; ++n)
        acc += (a(i + m) * std::conj(a(i + m + n)) + b(i + m) * std::conj(b(i + m + n))) * a(i + n) * c(m, n, 0);
    return acc;
  }
  cd term1(long i) const {
    const int h = kWindow / 2;
    cd acc = 0.0;
    for (int m = -h; m <= h; ++m)
      for (int n = -h; n <= h; ++n)
        for (int k = -h; k <= h; ++k)
          acc += 2.0 * (a(i + m) * std::conj(a(i + m + n)) + b(i + m) * std::conj(b(i + m + n))) * a(i + n) *
                 (std::norm(a(i + k)) + std::norm(b(i + k))) * c(m, n, k);
    return acc;
  }
  cd term2(long i) const {
    const int h = kWindow / 2;
    cd acc = 0.0;
    for (int m = -h; m <= h; ++m)
      for (int n = -h; n <= h; ++n)
        for (int k = -h; k <= h; ++k)
          acc += (std::conj(a(i + m)) * a(i + m + n) + std::conj(b(i + m)) * b(i + m + n)) * std::conj(a(i + n)) *
                 (a(i + k) * a(i - k) + b(i + k) * b(i - k)) * c(m, n, k);
    return acc;
  }
};

}  // namespace

TEST_CASE("sums match the naive triple loop") {
  const auto s = random_grid(32, 1);
  for (bool quant : {false, true}) {
    const auto cfg = config(quant);
    for (bool grouped : {false, true}) {
      const auto fo = fo_sum(s, *cfg.fo_table, kWindow, grouped);
      const auto t1 = so_term1_sum(s, *cfg.so_term1_table, kWindow, grouped);
      const auto t2 = so_term2_sum(s, *cfg.so_term2_table, kWindow, grouped);
      for (int pol = 0; pol < 2; ++pol) {
        ArrayXcd nfo(32), nt1(32), nt2(32);
        const Naive nf{s, *cfg.fo_table, pol}, n1{s, *cfg.so_term1_table, pol}, n2{s, *cfg.so_term2_table, pol};
        for (long i = 0; i < 32; ++i) {
          nfo[i] = nf.fo(i);
          nt1[i] = n1.term1(i);
          nt2[i] = n2.term2(i);
        }
        CHECK(rel(pol == 0 ? fo.x : fo.y, nfo) < 1e-12);
        CHECK(rel(pol == 0 ? t1.x : t1.y, nt1) < 1e-12);
        CHECK(rel(pol == 0 ? t2.x : t2.y, nt2) < 1e-12);
      }
    }
  }
}

TEST_CASE("grouped evaluation equals per-entry evaluation") {
  const auto cfg = config(true);
  const auto s = random_grid(64, 2);
  CHECK(rel(so_term1_sum(s, *cfg.so_term1_table, kWindow, true).x,
            so_term1_sum(s, *cfg.so_term1_table, kWindow, false).x) < 1e-12);
  CHECK(rel(fo_sum(s, *cfg.fo_table, kWindow, true).y, fo_sum(s, *cfg.fo_table, kWindow, false).y) < 1e-12);
}

TEST_CASE("homogeneity") {
  const auto cfg = config();
  const auto s = random_grid(48, 3);
  for (double c : {0.5, 3.0}) {
    const auto sc = scaled(s, c);
    CHECK(rel(fo_distortion(sc, cfg).x, std::pow(c, 3) * fo_distortion(s, cfg).x) < 1e-12);
    CHECK(rel(so_distortion(sc, cfg).y, std::pow(c, 5) * so_distortion(s, cfg).y) < 1e-12);
  }
}

TEST_CASE("zero input gives zero distortion") {
  const auto cfg = config();
  SymbolGrid z;
  z.x = ArrayXcd::Zero(40);
  z.y = ArrayXcd::Zero(40);
  CHECK(fo_distortion(z, cfg).x.abs().maxCoeff() == 0.0);
  CHECK(so_distortion(z, cfg).y.abs().maxCoeff() == 0.0);
  const auto p = predistort(z, cfg);
  CHECK(p.x.abs().maxCoeff() == 0.0);
  CHECK(p.y.abs().maxCoeff() == 0.0);
}

TEST_CASE("single symbol reduces to the self term") {
  auto cfg = config();
  SymbolGrid s;
  s.x = ArrayXcd::Zero(30);
  s.y = ArrayXcd::Zero(30);
  const cd a(0.6, -0.8);
  s.x[12] = a;
  auto d = fo_distortion(s, cfg);
  const cd expect = 8.0 / 9.0 * cfg.gamma * cfg.epsilon_fo * cfg.peak_power * a * std::norm(a) *
                    *cfg.fo_table->find({0, 0, 0});
  CHECK(std::abs(d.x[12] - expect) < 1e-14 * std::abs(expect));
  d.x[12] = 0.0;
  CHECK(d.x.abs().maxCoeff() < 1e-14 * std::abs(expect));
  CHECK(d.y.abs().maxCoeff() == 0.0);
}

TEST_CASE("polarization exchange symmetry") {
  const auto cfg = config();
  const auto s = random_grid(40, 4);
  SymbolGrid sw = s;
  std::swap(sw.x, sw.y);
  const auto d = so_distortion(s, cfg), dsw = so_distortion(sw, cfg);
  CHECK((d.x - dsw.y).abs().maxCoeff() == 0.0);
  CHECK((d.y - dsw.x).abs().maxCoeff() == 0.0);
  const auto f = fo_distortion(s, cfg), fsw = fo_distortion(sw, cfg);
  CHECK((f.x - fsw.y).abs().maxCoeff() == 0.0);
}

TEST_CASE("predistortion is an additive correction") {
  auto cfg = config();
  cfg.epsilon_fo = 0.7;
  cfg.epsilon_so = 1.3;
  const auto s = random_grid(50, 5);
  const auto p = predistort(s, cfg);
  const auto d1 = fo_distortion(s, cfg), d2 = so_distortion(s, cfg);
  CHECK(rel(p.x + d1.x + d2.x, s.x) < 1e-12);
  CHECK(rel(p.y + d1.y + d2.y, s.y) < 1e-12);

  const auto basis = DistortionBasis::compute(s, cfg);
  CHECK(rel(basis.predistort(cfg).x, p.x) < 1e-14);

  cfg.epsilon_fo = cfg.epsilon_so = 0.0;
  const auto same = predistort(s, cfg);
  CHECK((same.x - s.x).abs().maxCoeff() == 0.0);
  CHECK((same.y - s.y).abs().maxCoeff() == 0.0);
}

TEST_CASE("fo only without second-order tables") {
  auto cfg = config();
  cfg.so_term1_table = nullptr;
  cfg.so_term2_table = nullptr;
  cfg.use_term2 = false;
  const auto s = random_grid(30, 6);
  const auto p = predistort(s, cfg);
  CHECK(rel(p.x + fo_distortion(s, cfg).x, s.x) < 1e-12);
}

TEST_CASE("configuration errors") {
  auto cfg = config();
  cfg.fo_table = nullptr;
  CHECK_THROWS_AS(cfg.validate(), ConfigurationError);
  cfg = config();
  cfg.so_term2_table = nullptr;
  CHECK_THROWS_AS(cfg.validate(), ConfigurationError);
  cfg = config();
  cfg.window = 20;
  CHECK_THROWS_AS(cfg.validate(), ConfigurationError);
  cfg = config();
  cfg.so_term1_table = cfg.so_term2_table;
  CHECK_THROWS_AS(cfg.validate(), ConfigurationError);
  cfg = config();
  cfg.epsilon_so = -1.0;
  CHECK_NOTHROW(cfg.validate());
  cfg.epsilon_so = std::nan("");
  CHECK_THROWS_AS(cfg.validate(), ParameterError);
  CHECK(config().edge_guard() == kWindow / 2);
}

TEST_CASE("epsilon sweep") {
  const auto one = sweep_epsilon({0.8}, [](double) { return 3.0; });
  CHECK(one.best == 0.8);
  CHECK(one.best_snr_db == 3.0);

  const std::vector<double> grid{0.0, 0.5, 1.0, 1.5, 2.0};
  const auto r = sweep_epsilon(grid, [](double e) { return 10.0 - (e - 1.1) * (e - 1.1); });
  CHECK(r.best == 1.0);
  CHECK(r.grid == grid);
  REQUIRE(r.snr_db.size() == grid.size());
  // Unimodal around the optimum.
  for (std::size_t i = 1; i < grid.size(); ++i) CHECK((grid[i] <= r.best) == (r.snr_db[i] > r.snr_db[i - 1]));

  const auto tie = sweep_epsilon({1.0, 2.0}, [](double) { return 5.0; });
  CHECK(tie.best == 1.0);
  CHECK_THROWS(sweep_epsilon({}, [](double) { return 0.0; }));
}
