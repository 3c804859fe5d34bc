#include "coeff_detail.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <map>
#include <mutex>
#include <sstream>

namespace pbnlc {

void QuadratureSpec::validate() const {
  if (gauss_order < 2 || gauss_order > 64 || gauss_order_tail < 2 || gauss_order_tail > 64)
    throw ParameterError("quadrature: Gauss orders must lie in [2, 64]");
  if (panels_z < 2 || panels_s < 2) throw ParameterError("quadrature: panel counts must be >= 2");
  if (!(rel_tol > 0.0)) throw ParameterError("quadrature: rel_tol must be positive");
  if (max_level < 1 || max_level > 12) throw ParameterError("quadrature: max_level must lie in [1, 12]");
}

namespace detail {

const GaussRule& gauss_rule(int order) {
  static std::mutex mutex;
  static std::map<int, GaussRule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(order);
  if (it != cache.end()) return it->second;

  // Golub-Welsch: nodes are eigenvalues of the Legendre Jacobi matrix.
  Eigen::MatrixXd jm = Eigen::MatrixXd::Zero(order, order);
  for (int i = 1; i < order; ++i) {
    const double beta = i / std::sqrt(4.0 * i * i - 1.0);
    jm(i, i - 1) = beta;
    jm(i - 1, i) = beta;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jm);
  GaussRule rule;
  rule.x.resize(order);
  rule.w.resize(order);
  for (int i = 0; i < order; ++i) {
    rule.x[i] = es.eigenvalues()[i];
    const double v0 = es.eigenvectors()(0, i);
    rule.w[i] = 2.0 * v0 * v0;
  }
  // Symmetrize to remove eigensolver rounding asymmetry.
  for (int i = 0; i < order / 2; ++i) {
    const int j = order - 1 - i;
    const double x = 0.5 * (rule.x[j] - rule.x[i]);
    const double w = 0.5 * (rule.w[i] + rule.w[j]);
    rule.x[i] = -x;
    rule.x[j] = x;
    rule.w[i] = rule.w[j] = w;
  }
  if (order % 2 == 1) rule.x[order / 2] = 0.0;
  return cache.emplace(order, std::move(rule)).first->second;
}

namespace {

int scaled_panels(int base, int level) { return base << level; }

// Appends the nodes of `panels` Gauss panels on [lo, hi]. With `grade_scale`
// > 0 the panel edges are uniform in log(1 + s / grade_scale), which
// concentrates nodes where the short-distance chirp varies fastest.
template <typename Emit>
void composite(double lo, double hi, int panels, double grade_scale, const GaussRule& rule, Emit emit) {
  auto edge = [&](int i) {
    if (i == 0) return lo;
    if (i == panels) return hi;
    const double f = double(i) / panels;
    if (grade_scale > 0.0) {
      const double p0 = std::log1p(lo / grade_scale);
      const double p1 = std::log1p(hi / grade_scale);
      return grade_scale * std::expm1(p0 + f * (p1 - p0));
    }
    return lo + f * (hi - lo);
  };
  for (int i = 0; i < panels; ++i) {
    const double a = edge(i), b = edge(i + 1);
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    for (std::size_t g = 0; g < rule.x.size(); ++g) emit(mid + half * rule.x[g], half * rule.w[g]);
  }
}

double grade_scale(const PulseParams& p, const LinkConfig& l) {
  return l.beta2 == 0.0 ? 0.0 : p.tau * p.tau / std::abs(l.beta2);
}

// Nodes of the s-line [0, z] with panels aligned to span boundaries.
template <typename Emit>
void s_line(double z, const PulseParams& p, const LinkConfig& l, const QuadratureSpec& q, int level, Emit emit) {
  const auto& head = gauss_rule(q.gauss_order);
  const auto& tail = gauss_rule(q.gauss_order_tail);
  const int full = scaled_panels(q.panels_s, level);
  const double ls = l.span_length;
  const double sg = grade_scale(p, l);
  for (int i = 0;; ++i) {
    const double lo = i * ls;
    if (lo >= z) break;
    const double hi = std::min((i + 1) * ls, z);
    const int panels = std::max(1, int(std::ceil(full * (hi - lo) / ls - 1e-9)));
    composite(lo, hi, panels, i == 0 ? sg : 0.0, i == 0 ? head : tail, emit);
  }
}

}  // namespace

std::vector<Node2> triangle_nodes(const PulseParams& p, const LinkConfig& l, const QuadratureSpec& q,
                                  int level) {
  const int pz = scaled_panels(q.panels_z, level);
  std::vector<Node2> nodes;
  for (int span = 0; span < l.n_spans; ++span) {
    const double lo = span * l.span_length, hi = (span + 1) * l.span_length;
    const auto& rule = gauss_rule(span == 0 ? q.gauss_order : q.gauss_order_tail);
    composite(lo, hi, pz, span == 0 ? grade_scale(p, l) : 0.0, rule, [&](double z, double wz) {
      s_line(z, p, l, q, level, [&](double s, double ws) { nodes.push_back({z, s, wz * ws}); });
    });
  }
  return nodes;
}

std::vector<Node1> line_nodes(const PulseParams& p, const LinkConfig& l, const QuadratureSpec& q, int level) {
  std::vector<Node1> nodes;
  s_line(l.total_length(), p, l, q, level, [&](double s, double w) { nodes.push_back({s, w}); });
  return nodes;
}

void BranchAudit::check(cd radicand, double z, double s, const CoeffIndex& idx) {
  if (!std::isfinite(radicand.real()) || !std::isfinite(radicand.imag()) || radicand == cd(0.0)) {
    throw NumericDomainError("square-root argument is zero or non-finite", z, s, idx);
  }
  if (has_prev_ && radicand.real() < 0.0 && prev_.real() < 0.0 &&
      std::signbit(radicand.imag()) != std::signbit(prev_.imag())) {
    std::ostringstream os;
    os << "square-root branch cut crossed between consecutive nodes near z=" << z << " m, s=" << s << " m";
    throw NumericDomainError(os.str(), z, s, idx);
  }
  prev_ = radicand;
  has_prev_ = true;
}

}  // namespace detail

namespace {

using detail::cd;

// Audits every square-root argument of one integrand along an s-line.
struct LineAudit {
  detail::BranchAudit r[3];
  void reset() {
    for (auto& a : r) a.reset();
  }
  void check(CoeffOrder order, const detail::Normalized& nz, double z, double s, const CoeffIndex& idx) {
    if (order == CoeffOrder::SoTerm1) {
      const auto t = detail::term1_radicand(nz);
      r[0].check(-t.A * t.B, z, s, idx);
    } else if (order == CoeffOrder::SoTerm2) {
      const auto t = detail::term2_radicand(nz);
      r[0].check(t.Ah, z, s, idx);
      r[1].check(t.Bh * t.Ch, z, s, idx);
      r[2].check(-t.Bt * t.Dh, z, s, idx);
    } else {
      const double b = nz.b;
      r[0].check(cd(1.0 + 3.0 * b * b, 2.0 * b), z, s, idx);
    }
  }
};

void check_index(const CoeffIndex& idx) {
  constexpr int kLimit = 1 << 14;
  if (std::abs(idx.m) > kLimit || std::abs(idx.n) > kLimit || std::abs(idx.k) > kLimit)
    throw ParameterError("coefficient index out of range");
}

template <typename LevelFn>
cd converge(const QuadratureSpec& quad, LevelFn at_level, const char* what) {
  cd prev = at_level(0);
  double change = 0.0;
  for (int level = 1; level <= quad.max_level; ++level) {
    const cd cur = at_level(level);
    change = std::abs(cur - prev) / std::max(std::abs(cur), 1e-300);
    if (std::abs(cur - prev) <= quad.rel_tol * std::abs(cur)) return cur;
    prev = cur;
  }
  std::ostringstream os;
  os << what << ": no convergence to rel_tol " << quad.rel_tol << " after " << quad.max_level
     << " panel doublings (last relative change " << change << ')';
  throw QuadratureError(os.str(), prev, change);
}

}  // namespace

std::complex<double> so_coeff_at_level(CoeffOrder order, const CoeffIndex& idx, const PulseParams& pulse,
                                       const LinkConfig& link, const QuadratureSpec& quad, int level) {
  if (order == CoeffOrder::FO) return fo_coeff_at_level(idx.m, idx.n, pulse, link, quad, level);
  pulse.validate();
  link.validate();
  quad.validate();
  check_index(idx);
  const auto nodes = detail::triangle_nodes(pulse, link, quad, level);
  auto f = order == CoeffOrder::SoTerm1 ? term1_integrand : term2_integrand;
  LineAudit audit;
  cd sum = 0.0;
  double last_z = -1.0;
  for (const auto& nd : nodes) {
    if (nd.z != last_z) {
      audit.reset();
      last_z = nd.z;
    }
    audit.check(order, detail::normalize(nd.z, nd.s, pulse, link), nd.z, nd.s, idx);
    sum += nd.w * f(nd.z, nd.s, idx, pulse, link);
  }
  return sum;
}

std::complex<double> fo_coeff_at_level(int m, int n, const PulseParams& pulse, const LinkConfig& link,
                                       const QuadratureSpec& quad, int level) {
  pulse.validate();
  link.validate();
  quad.validate();
  const CoeffIndex idx{m, n, 0};
  check_index(idx);
  const double L = link.total_length();
  LineAudit audit;
  cd sum = 0.0;
  for (const auto& nd : detail::line_nodes(pulse, link, quad, level)) {
    audit.check(CoeffOrder::FO, detail::normalize(L, nd.s, pulse, link), L, nd.s, idx);
    sum += nd.w * fo_integrand(nd.s, m, n, pulse, link, L);
  }
  return sum;
}

std::complex<double> so_coeff(CoeffOrder order, const CoeffIndex& idx, const PulseParams& pulse,
                              const LinkConfig& link, const QuadratureSpec& quad) {
  return converge(
      quad, [&](int level) { return so_coeff_at_level(order, idx, pulse, link, quad, level); }, "so_coeff");
}

std::complex<double> fo_coeff(int m, int n, const PulseParams& pulse, const LinkConfig& link,
                              const QuadratureSpec& quad) {
  return converge(
      quad, [&](int level) { return fo_coeff_at_level(m, n, pulse, link, quad, level); }, "fo_coeff");
}

}  // namespace pbnlc
