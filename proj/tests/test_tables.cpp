#include "pbnlc/coefficients.hpp"
#include "pbnlc/complexity.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>

using namespace pbnlc;
using cd = std::complex<double>;

namespace {

const PulseParams kPulse = PulseParams::for_symbol_rate(32e9);

LinkConfig link_of(int spans) { return table1_link(spans); }

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("pbnlc_test_" + name);
}

const CoeffTable& small_term1() {
  static const CoeffTable t = build_table(CoeffOrder::SoTerm1, 10, -40.0, kPulse, link_of(2), QuadratureSpec{});
  return t;
}

std::set<CoeffIndex> indices(const CoeffTable& t) {
  std::set<CoeffIndex> s;
  for (const auto& e : t.entries) s.insert(e.idx);
  return s;
}

}  // namespace

TEST_CASE("quadrature spec validation") {
  QuadratureSpec q;
  CHECK_NOTHROW(q.validate());
  q.gauss_order = 1;
  CHECK_THROWS_AS(q.validate(), ParameterError);
  q = {};
  q.rel_tol = 0.0;
  CHECK_THROWS_AS(q.validate(), ParameterError);
}

TEST_CASE("coefficient exchange symmetry") {
  const auto link = link_of(2);
  const QuadratureSpec q;
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> d(-50, 50);
  for (int t = 0; t < 6; ++t) {
    const int m = d(rng), n = d(rng), k = d(rng);
    for (auto order : {CoeffOrder::SoTerm1, CoeffOrder::SoTerm2}) {
      const cd a = so_coeff(order, {m, n, k}, kPulse, link, q);
      const cd b = so_coeff(order, {n, m, k}, kPulse, link, q);
      CHECK(std::abs(a - b) <= 1e-9 * std::abs(a) + 1e-300);
    }
    const cd a = fo_coeff(m, n, kPulse, link, q);
    const cd b = fo_coeff(n, m, kPulse, link, q);
    CHECK(std::abs(a - b) <= 1e-9 * std::abs(a) + 1e-300);
  }
}

TEST_CASE("panel doubling converges") {
  const auto link = link_of(2);
  QuadratureSpec q;
  for (const CoeffIndex idx : {CoeffIndex{0, 0, 0}, CoeffIndex{1, -2, 1}, CoeffIndex{3, 1, -2}}) {
    const cd c3 = so_coeff_at_level(CoeffOrder::SoTerm1, idx, kPulse, link, q, 3);
    const cd c4 = so_coeff_at_level(CoeffOrder::SoTerm1, idx, kPulse, link, q, 4);
    CHECK(std::abs(c4 - c3) < 1e-6 * std::abs(c4));
  }
  q.max_level = 1;
  q.rel_tol = 1e-15;
  CHECK_THROWS_AS(so_coeff(CoeffOrder::SoTerm2, {2, 2, 2}, kPulse, link, q), QuadratureError);
}

TEST_CASE("table entries match direct quadrature") {
  const auto& t = small_term1();
  REQUIRE(!t.empty());
  CHECK(t.find({0, 0, 0}) != nullptr);
  CHECK(*t.find({0, 0, 0}) == t.reference);
  CHECK(std::is_sorted(t.entries.begin(), t.entries.end(),
                       [](const CoeffEntry& a, const CoeffEntry& b) { return a.idx < b.idx; }));
  std::mt19937_64 rng(9);
  for (int i = 0; i < 8; ++i) {
    const auto& e = t.entries[rng() % t.entries.size()];
    const cd direct = so_coeff(CoeffOrder::SoTerm1, e.idx, kPulse, t.link, QuadratureSpec{});
    CHECK(std::abs(e.value - direct) < 2e-6 * std::abs(direct));
    const auto* swapped = t.find({e.idx.n, e.idx.m, e.idx.k});
    REQUIRE(swapped != nullptr);
    CHECK(*swapped == e.value);
  }
  CHECK(t.find({6, 0, 0}) == nullptr);
}

TEST_CASE("no truncation keeps every index") {
  const auto link = link_of(1);
  const auto so = build_table(CoeffOrder::SoTerm2, 4, -300.0, kPulse, link, QuadratureSpec{});
  CHECK(so.size() == 125);
  const auto fo = build_table(CoeffOrder::FO, 4, -300.0, kPulse, link, QuadratureSpec{});
  CHECK(fo.size() == 25);
  for (const auto& e : fo.entries) CHECK(e.idx.k == 0);
}

TEST_CASE("truncation monotonicity") {
  const auto& t = small_term1();
  const auto t20 = truncate(t, -20.0);
  const auto t10 = truncate(t, -10.0);
  const auto a = indices(t), b = indices(t20), c = indices(t10);
  CHECK(std::includes(a.begin(), a.end(), b.begin(), b.end()));
  CHECK(std::includes(b.begin(), b.end(), c.begin(), c.end()));
  CHECK(c.size() < a.size());
  CHECK(count_M(t10) < count_M(t));
  // Truncating below the build threshold cannot recover dropped entries.
  CHECK(truncate(t, -60.0).size() == t.size());
  CHECK_THROWS_AS(truncate(t, 3.0), ParameterError);
}

TEST_CASE("retained count grows with distance") {
  std::size_t prev = 0;
  for (int spans : {1, 2, 4}) {
    const auto t = build_table(CoeffOrder::SoTerm1, 20, -40.0, kPulse, link_of(spans), QuadratureSpec{});
    CHECK(t.size() > prev);
    prev = t.size();
  }
}

TEST_CASE("build argument checks") {
  const auto link = link_of(1);
  CHECK_THROWS_AS(build_table(CoeffOrder::FO, 7, -40.0, kPulse, link, {}), ParameterError);
  CHECK_THROWS_AS(build_table(CoeffOrder::FO, 10, 5.0, kPulse, link, {}), ParameterError);
}

TEST_CASE("quantization and grouping") {
  const auto& t = small_term1();
  const double step = default_quant_step(t);
  CHECK(step == doctest::Approx(std::abs(t.reference) / 32.0));

  const auto q = quantize_combine(t, step);
  CHECK(q.quantized);
  CHECK(q.quant_scale == step);
  CHECK(!q.groups.empty());
  CHECK(count_M(q) == std::int64_t(q.groups.size()));
  std::size_t members = 0;
  for (const auto& g : q.groups) {
    members += g.members.size();
    for (const auto& idx : g.members) CHECK(*q.find(idx) == g.value);
  }
  CHECK(members == q.size());
  for (const auto& e : q.entries) {
    CHECK(e.value != cd(0.0));
    const cd orig = *t.find(e.idx);
    CHECK(std::abs(orig.real() - e.value.real()) <= 0.5 * step + 1e-30);
    CHECK(std::abs(orig.imag() - e.value.imag()) <= 0.5 * step + 1e-30);
  }
  CHECK_THROWS_AS(quantize_combine(q, step), ParameterError);
  CHECK_THROWS_AS(quantize_combine(t, 0.0), ParameterError);
  CHECK_THROWS_AS(quantize_combine(t, 100.0 * std::abs(t.reference)), DegenerateQuantizationError);
}

TEST_CASE("vanishing step keeps distinct values apart") {
  const auto& t = small_term1();
  const auto q = quantize_combine(t, std::abs(t.reference) * 1e-13);
  CHECK(q.size() == t.size());
  std::set<std::pair<double, double>> distinct;
  for (const auto& e : t.entries) distinct.insert({e.value.real(), e.value.imag()});
  CHECK(q.groups.size() == distinct.size());
}

TEST_CASE("values within half a step share a group") {
  CoeffTable t;
  t.reference = {1.0, 0.0};
  t.entries = {{{0, 0, 0}, {1.0, 0.0}}, {{0, 1, 0}, {0.26, 0.49}}, {{1, 0, 0}, {0.34, 0.51}}, {{1, 1, 0}, {0.0, 0.02}}};
  const auto q = quantize_combine(t, 0.25);
  REQUIRE(q.groups.size() == 2);
  CHECK(q.size() == 3);  // (1,1,0) rounds to zero and is dropped
  const auto& pair = q.groups[0].members.size() == 2 ? q.groups[0] : q.groups[1];
  CHECK(pair.members.size() == 2);
  CHECK(pair.value == cd(0.25, 0.5));
}

TEST_CASE("lut round trip") {
  const auto& t = small_term1();
  const auto path = temp_path("roundtrip.lut");
  save_table(t, path);
  CHECK(load_table(path) == t);

  const auto q = quantize_combine(t, default_quant_step(t));
  save_table(q, path);
  CHECK(load_table(path) == q);

  CoeffTable empty;
  empty.order = CoeffOrder::FO;
  save_table(empty, path);
  const auto e = load_table(path);
  CHECK(e.empty());
  CHECK(e == empty);
  std::filesystem::remove(path);
}

TEST_CASE("lut corruption is detected") {
  const auto& t = small_term1();
  const auto path = temp_path("corrupt.lut");
  save_table(t, path);
  const auto size = std::filesystem::file_size(path);

  std::filesystem::resize_file(path, size - 100);
  CHECK_THROWS_AS(load_table(path), LutFormatError);

  save_table(t, path);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(std::streamoff(size / 2));
    char c;
    f.read(&c, 1);
    f.seekp(std::streamoff(size / 2));
    c = char(c ^ 0x40);
    f.write(&c, 1);
  }
  CHECK_THROWS_AS(load_table(path), LutFormatError);

  {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f << "not a table";
  }
  CHECK_THROWS_AS(load_table(path), LutFormatError);
  std::filesystem::remove(path);
  CHECK_THROWS(load_table(path));
}
