#include "pbnlc/coefficients.hpp"

#include <doctest.h>

#include <random>

using namespace pbnlc;
using cd = std::complex<double>;

// Reference values from tests/oracles/integrand_oracle.py (40-digit
// arithmetic; the closed form and an independent Gaussian-algebra evaluation
// agree to all printed digits).

namespace {

const PulseParams kPulse = PulseParams::for_symbol_rate(32e9);
const LinkConfig kLink = table1_link(8);
constexpr double km = 1e3;

double rel(cd a, cd b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_CASE("term1 integrand against high-precision values") {
  CHECK(rel(term1_integrand(40 * km, 20 * km, {1, 1, 1}, kPulse, kLink),
            cd(0.00057208550101889413, 0.001846042319277153)) < 1e-10);
  CHECK(rel(term1_integrand(40 * km, 20 * km, {0, 0, 0}, kPulse, kLink),
            cd(-0.0041913342575731243, -0.00026968841418837823)) < 1e-10);
  CHECK(rel(term1_integrand(300 * km, 100 * km, {3, -2, 2}, kPulse, kLink),
            cd(3.5133227249801624e-5, -1.1668448229905952e-5)) < 1e-9);
}

TEST_CASE("term2 integrand against high-precision values") {
  CHECK(rel(term2_integrand(60 * km, 10 * km, {2, -1, 1}, kPulse, kLink),
            cd(-7.690481591282781e-7, 2.0388189939362357e-6)) < 1e-9);
  CHECK(rel(term2_integrand(40 * km, 20 * km, {0, 0, 0}, kPulse, kLink),
            cd(0.0040597805611508977, 0.00064829967452738248)) < 1e-10);
  CHECK(rel(term2_integrand(300 * km, 100 * km, {3, -2, 2}, kPulse, kLink),
            cd(-4.8850356364291694e-8, -3.1486643874544114e-8)) < 1e-9);
}

TEST_CASE("fo integrand against high-precision value") {
  CHECK(rel(fo_integrand(10 * km, 1, 2, kPulse, kLink, 80 * km),
            cd(0.0036551926343801924, -0.0029283049900562508)) < 1e-10);
}

TEST_CASE("m <-> n exchange symmetry of the integrands") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> idx(-50, 50);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    const int m = idx(rng), n = idx(rng), k = idx(rng);
    const double z = u(rng) * kLink.total_length();
    const double s = u(rng) * z;
    const cd a1 = term1_integrand(z, s, {m, n, k}, kPulse, kLink);
    const cd b1 = term1_integrand(z, s, {n, m, k}, kPulse, kLink);
    const cd a2 = term2_integrand(z, s, {m, n, k}, kPulse, kLink);
    const cd b2 = term2_integrand(z, s, {n, m, k}, kPulse, kLink);
    const cd af = fo_integrand(s, m, n, kPulse, kLink, z);
    const cd bf = fo_integrand(s, n, m, kPulse, kLink, z);
    CHECK(std::abs(a1 - b1) <= 1e-12 * std::abs(a1) + 1e-300);
    CHECK(std::abs(a2 - b2) <= 1e-12 * std::abs(a2) + 1e-300);
    CHECK(std::abs(af - bf) <= 1e-12 * std::abs(af) + 1e-300);
  }
}

TEST_CASE("integrands at the launch point") {
  // Undispersed pulses: the self term is pure phase rotation.
  CHECK(std::abs(fo_integrand(0.0, 0, 0, kPulse, kLink, 0.0) - cd(0.0, 1.0)) < 1e-14);
  const cd t1 = term1_integrand(0.0, 0.0, {0, 0, 0}, kPulse, kLink);
  const cd t2 = term2_integrand(0.0, 0.0, {0, 0, 0}, kPulse, kLink);
  CHECK(std::isfinite(std::abs(t1)));
  CHECK(std::isfinite(std::abs(t2)));
  CHECK(std::abs(t1) > 0.0);
}

TEST_CASE("domain errors") {
  CHECK_THROWS_AS(term1_integrand(10 * km, 20 * km, {0, 0, 0}, kPulse, kLink), NumericDomainError);
  CHECK_THROWS_AS(term2_integrand(10 * km, -1.0, {0, 0, 0}, kPulse, kLink), NumericDomainError);
  try {
    term1_integrand(10 * km, 20 * km, {1, 2, 3}, kPulse, kLink);
    FAIL("no exception");
  } catch (const NumericDomainError& e) {
    CHECK(e.z == 10 * km);
    CHECK(e.s == 20 * km);
    CHECK(e.idx == CoeffIndex{1, 2, 3});
  }
}

TEST_CASE("span power profile") {
  CHECK(span_power_profile(kLink, 0.0) == 1.0);
  CHECK(span_power_profile(kLink, 40 * km) == doctest::Approx(std::pow(10.0, -0.8)).epsilon(1e-14));
  // A span boundary belongs to the span it closes.
  CHECK(span_power_profile(kLink, 80 * km) == doctest::Approx(std::pow(10.0, -1.6)).epsilon(1e-14));
  CHECK(span_power_profile(kLink, 80 * km + 1.0) > 0.999);
}

TEST_CASE("coefficient order names") {
  for (auto o : {CoeffOrder::FO, CoeffOrder::SoTerm1, CoeffOrder::SoTerm2})
    CHECK(coeff_order_from_string(to_string(o)) == o);
  CHECK_THROWS_AS(coeff_order_from_string("term3"), ParameterError);
}
