#include "coeff_detail.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pbnlc {
namespace {

using detail::cd;
using detail::ExponentParts;

constexpr Eigen::Index kChunk = 512;
// Below this log-magnitude exp() of the k = 0 term may lose precision or
// underflow, so the k recurrence cannot start from it.
constexpr double kRecurrenceFloor = -680.0;

// Pair-independent per-node data of one refinement level.
struct NodeSet {
  Eigen::Index size() const { return logpw.size(); }
  ArrayXcd logpw;  // log(weight * loss * prefactor)
  ArrayXcd qS, qP, qK, qQ;
  ArrayXcd eK;  // exp(qK)
  ArrayXcd G;   // exp(2 qK)
};

ExponentParts parts_for(CoeffOrder order, const detail::Normalized& nz) {
  switch (order) {
    case CoeffOrder::SoTerm1: return detail::term1_parts(nz);
    case CoeffOrder::SoTerm2: return detail::term2_parts(nz);
    case CoeffOrder::FO: return detail::fo_parts(nz);
  }
  return {};
}

// Radicands of the square roots in each integrand, for the branch audit.
int radicands(CoeffOrder order, const detail::Normalized& nz, cd* out) {
  if (order == CoeffOrder::SoTerm1) {
    const auto t = detail::term1_radicand(nz);
    out[0] = -t.A * t.B;
    return 1;
  }
  if (order == CoeffOrder::SoTerm2) {
    const auto t = detail::term2_radicand(nz);
    out[0] = t.Ah;
    out[1] = t.Bh * t.Ch;
    out[2] = -t.Bt * t.Dh;
    return 3;
  }
  out[0] = cd(1.0 + 3.0 * nz.b * nz.b, 2.0 * nz.b);
  return 1;
}

std::unique_ptr<NodeSet> make_node_set(CoeffOrder order, const PulseParams& pulse, const LinkConfig& link,
                                       const QuadratureSpec& quad, int level) {
  struct Raw {
    double z, s, w;
  };
  std::vector<Raw> raw;
  if (order == CoeffOrder::FO) {
    const double L = link.total_length();
    for (const auto& nd : detail::line_nodes(pulse, link, quad, level)) raw.push_back({L, nd.s, nd.w});
  } else {
    for (const auto& nd : detail::triangle_nodes(pulse, link, quad, level)) raw.push_back({nd.z, nd.s, nd.w});
  }

  auto ns = std::make_unique<NodeSet>();
  const auto n = Eigen::Index(raw.size());
  ns->logpw.resize(n);
  ns->qS.resize(n);
  ns->qP.resize(n);
  ns->qK.resize(n);
  ns->qQ.resize(n);

  detail::BranchAudit audit[3];
  double last_z = -1.0;
  const CoeffIndex any{0, 0, 0};
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = raw[std::size_t(i)];
    const auto nz = detail::normalize(r.z, r.s, pulse, link);
    if (r.z != last_z) {
      for (auto& a : audit) a.reset();
      last_z = r.z;
    }
    cd rad[3];
    const int nr = radicands(order, nz, rad);
    for (int j = 0; j < nr; ++j) audit[j].check(rad[j], r.z, r.s, any);

    const auto p = parts_for(order, nz);
    const double loss = order == CoeffOrder::FO
                            ? span_power_profile(link, r.s)
                            : span_power_profile(link, r.z) * span_power_profile(link, r.s);
    ns->logpw[i] = std::log(p.prefactor * (r.w * loss));
    ns->qS[i] = p.qS;
    ns->qP[i] = p.qP;
    ns->qK[i] = p.qK;
    ns->qQ[i] = p.qQ;
  }
  ns->eK = ns->qK.exp();
  ns->G = (2.0 * ns->qK).exp();
  if (!ns->logpw.allFinite() || !ns->qS.allFinite() || !ns->qP.allFinite() || !ns->qK.allFinite() ||
      !ns->qQ.allFinite())
    throw NumericDomainError("non-finite integrand parameters while preparing the quadrature grid", 0, 0, any);
  return ns;
}

// Integral over one node set of the coefficients (m, n, k), k = -h..h.
// Terms whose magnitude stays below `eps_node` for every k are skipped.
std::vector<cd> integrate_pair(const NodeSet& ns, int m, int n, int h, double eps_node) {
  const double S = double(m) * m + double(n) * n;
  const double P = double(m) * n;
  const double sigma = double(m) + n;
  const double log_eps = eps_node > 0.0 ? std::log(eps_node) : -std::numeric_limits<double>::infinity();

  std::vector<cd> acc(std::size_t(2 * h + 1), cd(0.0));
  ArrayXcd lw(kChunk), v(kChunk), r(kChunk), A(kChunk), Am(kChunk), v0(kChunk);
  Eigen::ArrayXd maxlog(kChunk), kstar(kChunk);

  for (Eigen::Index base = 0; base < ns.size(); base += kChunk) {
    const Eigen::Index c = std::min(kChunk, ns.size() - base);
    auto seg = [&](const ArrayXcd& a) { return a.segment(base, c); };
    lw.head(c) = seg(ns.logpw) + seg(ns.qS) * S + seg(ns.qP) * P;

    // Largest log-magnitude over k (the k-dependence is quadratic).
    double chunk_kmax = -double(h), chunk_kmin = double(h);
    bool any_fast = false;
    for (Eigen::Index i = 0; i < c; ++i) {
      const double a2 = ns.qK[base + i].real();
      const double a1 = ns.qQ[base + i].real() * sigma;
      double ks;
      if (a2 < 0.0) {
        ks = std::clamp(-a1 / (2.0 * a2), -double(h), double(h));
      } else {
        ks = (a1 >= 0.0) ? double(h) : -double(h);
      }
      kstar[i] = ks;
      maxlog[i] = lw[i].real() + a2 * ks * ks + a1 * ks;
      if (maxlog[i] < log_eps) {
        v0[i] = 0.0;
        continue;
      }
      if (lw[i].real() < kRecurrenceFloor) {
        // Direct evaluation for nodes whose k = 0 term is out of range.
        v0[i] = 0.0;
        const cd qk = ns.qK[base + i], qq = ns.qQ[base + i] * sigma;
        for (int k = -h; k <= h; ++k) {
          const cd e = lw[i] + qk * double(k) * double(k) + qq * double(k);
          if (e.real() >= log_eps) acc[std::size_t(k + h)] += std::exp(e);
        }
        continue;
      }
      v0[i] = std::exp(lw[i]);
      any_fast = true;
      chunk_kmax = std::max(chunk_kmax, ks);
      chunk_kmin = std::min(chunk_kmin, ks);
    }
    if (!any_fast) continue;

    const auto eK = seg(ns.eK);
    const auto G = seg(ns.G);
    const ArrayXcd eQ = (seg(ns.qQ) * sigma).exp();
    const ArrayXcd eQi = (-seg(ns.qQ) * sigma).exp();
    A.head(c) = eK * eQ;
    Am.head(c) = eK * eQi;

    acc[std::size_t(h)] += v0.head(c).sum();
    const double eps2 = eps_node * eps_node;
    // k > 0
    v.head(c) = v0.head(c);
    r.head(c) = A.head(c);
    for (int k = 1; k <= h; ++k) {
      v.head(c) *= r.head(c);
      acc[std::size_t(h + k)] += v.head(c).sum();
      r.head(c) *= G;
      if (eps_node > 0.0 && k > chunk_kmax && (k & 7) == 0 && v.head(c).abs2().maxCoeff() < eps2) break;
    }
    // k < 0
    v.head(c) = v0.head(c);
    r.head(c) = Am.head(c);
    for (int k = 1; k <= h; ++k) {
      v.head(c) *= r.head(c);
      acc[std::size_t(h - k)] += v.head(c).sum();
      r.head(c) *= G;
      if (eps_node > 0.0 && -k < chunk_kmin && (k & 7) == 0 && v.head(c).abs2().maxCoeff() < eps2) break;
    }
  }
  for (const auto& a : acc) {
    if (!std::isfinite(a.real()) || !std::isfinite(a.imag())) {
      std::ostringstream os;
      os << "non-finite coefficient sum for pair (" << m << ',' << n << ')';
      throw NumericDomainError(os.str(), 0, 0, CoeffIndex{m, n, 0});
    }
  }
  return acc;
}

class LevelCache {
 public:
  LevelCache(CoeffOrder order, const PulseParams& pulse, const LinkConfig& link, const QuadratureSpec& quad)
      : order_(order), pulse_(pulse), link_(link), quad_(quad) {}

  const NodeSet& get(int level) {
    std::lock_guard lock(mutex_);
    auto& slot = sets_[level];
    if (!slot) slot = make_node_set(order_, pulse_, link_, quad_, level);
    return *slot;
  }

  void release_above(int level) {
    std::lock_guard lock(mutex_);
    for (auto& [l, s] : sets_)
      if (l > level) s.reset();
  }

 private:
  CoeffOrder order_;
  PulseParams pulse_;
  LinkConfig link_;
  QuadratureSpec quad_;
  std::mutex mutex_;
  std::map<int, std::unique_ptr<NodeSet>> sets_;
};

struct PairResult {
  std::vector<cd> values;
  int level = 0;
  double worst_rel = 0.0;
};

// With `only_center` the stopping test looks at k = 0 alone.
PairResult converge_pair(LevelCache& cache, const QuadratureSpec& quad, int m, int n, int h, double floor_abs,
                         double eps_node, bool only_center = false) {
  PairResult out;
  std::vector<cd> prev = integrate_pair(cache.get(0), m, n, h, eps_node);
  for (int level = 1; level <= quad.max_level; ++level) {
    std::vector<cd> cur = integrate_pair(cache.get(level), m, n, h, eps_node);
    bool ok = true;
    double worst = 0.0;
    for (std::size_t i = 0; i < cur.size(); ++i) {
      if (only_center && i != std::size_t(h)) continue;
      const double scale = std::max(std::abs(cur[i]), floor_abs);
      const double d = std::abs(cur[i] - prev[i]);
      if (scale > 0.0) worst = std::max(worst, d / scale);
      if (d > quad.rel_tol * scale) ok = false;
    }
    if (ok) {
      out.values = std::move(cur);
      out.level = level;
      out.worst_rel = worst;
      return out;
    }
    prev = std::move(cur);
  }
  std::ostringstream os;
  os << "coefficient table: pair (" << m << ',' << n << ") did not converge within " << quad.max_level
     << " panel doublings";
  throw QuadratureError(os.str(), prev[std::size_t(h)], 1.0);
}

// Canonical representatives under m <-> n and (m, n, k) -> (-m, -n, -k).
std::vector<std::pair<int, int>> canonical_pairs(int h) {
  std::vector<std::pair<int, int>> pairs;
  for (int m = -h; m <= h; ++m) {
    for (int n = m; n <= h; ++n) {
      const std::pair<int, int> mirror{-n, -m};
      if (std::pair<int, int>{m, n} <= mirror) pairs.emplace_back(m, n);
    }
  }
  return pairs;
}

}  // namespace

const std::complex<double>* CoeffTable::find(const CoeffIndex& idx) const {
  auto it = std::lower_bound(entries.begin(), entries.end(), idx,
                             [](const CoeffEntry& e, const CoeffIndex& i) { return e.idx < i; });
  if (it == entries.end() || it->idx != idx) return nullptr;
  return &it->value;
}

void CoeffTable::sort_entries() {
  std::sort(entries.begin(), entries.end(), [](const CoeffEntry& a, const CoeffEntry& b) { return a.idx < b.idx; });
}

CoeffTable build_table(CoeffOrder order, int window, double mu_db, const PulseParams& pulse,
                       const LinkConfig& link, const QuadratureSpec& quad, const BuildOptions& opts,
                       BuildReport* report) {
  if (window <= 0 || window % 2 != 0) throw ParameterError("build_table: window must be even and positive");
  if (window > 2000) throw ParameterError("build_table: window too large");
  if (std::isnan(mu_db) || mu_db > 0.0) throw ParameterError("build_table: mu_db must be <= 0 dB");
  pulse.validate();
  link.validate();
  quad.validate();

  const bool fo = order == CoeffOrder::FO;
  const int h = window / 2;
  const int hk = fo ? 0 : h;
  LevelCache cache(order, pulse, link, quad);

  // Reference first: it fixes the truncation level and hence the accuracy
  // demanded of every other coefficient.
  const PairResult ref_pair = converge_pair(cache, quad, 0, 0, hk, 0.0, 0.0, true);
  const cd reference = ref_pair.values[std::size_t(hk)];
  if (!(std::abs(reference) > 0.0))
    throw NumericDomainError("build_table: reference coefficient is zero", 0, 0, CoeffIndex{});
  const double keep_abs = std::abs(reference) * std::pow(10.0, mu_db / 20.0);
  const double floor_abs = std::abs(reference) * std::pow(10.0, (mu_db - opts.guard_db) / 20.0);

  const auto pairs = canonical_pairs(h);
  std::vector<PairResult> results(pairs.size());
  std::atomic<std::size_t> done{0};
  const std::size_t n_nodes_last = std::size_t(cache.get(1).size());
  const double eps_node = 1e-3 * quad.rel_tol * floor_abs / double(std::max<std::size_t>(n_nodes_last, 1) * 4);

  std::exception_ptr failure;
  std::atomic<bool> failed{false};
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(pairs.size()); ++i) {
    if (failed.load()) continue;
    try {
      const auto [m, n] = pairs[std::size_t(i)];
      results[std::size_t(i)] = converge_pair(cache, quad, m, n, hk, floor_abs, eps_node);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
      failed = true;
    }
    const std::size_t d = ++done;
    if (opts.progress) {
#pragma omp critical
      opts.progress(d, pairs.size());
    }
  }
  if (failure) std::rethrow_exception(failure);

  CoeffTable t;
  t.order = order;
  t.window = window;
  t.mu_db = mu_db;
  t.reference = reference;
  t.pulse = pulse;
  t.link = link;

  BuildReport rep;
  rep.evaluated = pairs.size();
  std::map<CoeffIndex, cd> kept;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto [m, n] = pairs[i];
    const auto& res = results[i];
    rep.max_level_used = std::max(rep.max_level_used, res.level);
    for (int k = -hk; k <= hk; ++k) {
      const cd v = res.values[std::size_t(k + hk)];
      if (!(std::abs(v) >= keep_abs)) continue;
      for (const CoeffIndex idx : {CoeffIndex{m, n, k}, CoeffIndex{n, m, k}, CoeffIndex{-n, -m, -k},
                                   CoeffIndex{-m, -n, -k}}) {
        kept[idx] = v;
      }
    }
    rep.worst_rel_change = std::max(rep.worst_rel_change, res.worst_rel);
  }
  // The reference is retained for any mu <= 0.
  kept[CoeffIndex{0, 0, 0}] = reference;
  t.entries.reserve(kept.size());
  for (const auto& [idx, v] : kept) t.entries.push_back({idx, v});
  if (report) *report = rep;
  return t;
}

CoeffTable truncate(const CoeffTable& table, double mu_db) {
  if (table.quantized) throw ParameterError("truncate: table is already quantized");
  if (std::isnan(mu_db) || mu_db > 0.0) throw ParameterError("truncate: mu_db must be <= 0 dB");
  CoeffTable t = table;
  t.mu_db = std::max(mu_db, table.mu_db);
  const double keep_abs = std::abs(table.reference) * std::pow(10.0, t.mu_db / 20.0);
  t.entries.clear();
  for (const auto& e : table.entries)
    if (std::abs(e.value) >= keep_abs || e.idx == CoeffIndex{0, 0, 0}) t.entries.push_back(e);
  return t;
}

}  // namespace pbnlc
