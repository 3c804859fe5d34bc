#pragma once

#include "pbnlc/coefficients.hpp"

#include <complex>
#include <vector>

namespace pbnlc::detail {

using cd = std::complex<double>;

// Every integrand factors as
//   prefactor * exp(qS*(m^2+n^2) + qP*m*n + qK*k^2 + qQ*k*(m+n))
// with coefficients depending only on (z, s). The batched table builder
// relies on this; the scalar integrands use the explicit index polynomials.
struct ExponentParts {
  cd prefactor;
  cd qS, qP, qK, qQ;
};

// Dispersion in units of the model pulse: a = beta2 z / tau^2, b = beta2 s / tau^2.
struct Normalized {
  double a;
  double b;
  double r;  // (T / tau)^2
};

inline Normalized normalize(double z, double s, const PulseParams& p, const LinkConfig& l) {
  const double t2 = p.tau * p.tau;
  return {l.beta2 * z / t2, l.beta2 * s / t2, (p.T * p.T) / t2};
}

// Radicands of the principal square roots, exposed for the branch audit.
struct Term1Radicand {
  cd A;  // A~ / tau^6
  cd B;  // B~ / tau^2
};
Term1Radicand term1_radicand(const Normalized& n);

struct Term2Radicand {
  cd Ah, Bh, Ch, Dh, Eh, Bt;
};
Term2Radicand term2_radicand(const Normalized& n);

ExponentParts term1_parts(const Normalized& n);
ExponentParts term2_parts(const Normalized& n);
// FO: qK = qQ = 0.
ExponentParts fo_parts(const Normalized& n);

// Composite Gauss-Legendre nodes.
struct Node2 {
  double z, s, w;
};
struct Node1 {
  double s, w;
};

struct GaussRule {
  std::vector<double> x;  // on [-1, 1]
  std::vector<double> w;
};
const GaussRule& gauss_rule(int order);

// Triangle 0 <= s <= z <= L, grouped by z: nodes with equal z are contiguous
// and ordered by increasing s (one quadrature line per z node).
std::vector<Node2> triangle_nodes(const PulseParams& p, const LinkConfig& l, const QuadratureSpec& q,
                                  int level);
std::vector<Node1> line_nodes(const PulseParams& p, const LinkConfig& l, const QuadratureSpec& q, int level);

// Throws NumericDomainError if a radicand sequence crosses the negative real
// axis between consecutive nodes of one line.
class BranchAudit {
 public:
  void reset() { has_prev_ = false; }
  void check(cd radicand, double z, double s, const CoeffIndex& idx);

 private:
  bool has_prev_ = false;
  cd prev_;
};

}  // namespace pbnlc::detail
