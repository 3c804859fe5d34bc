#include "pbnlc/predistorter.hpp"

#include <cmath>

namespace pbnlc {

void PredistortConfig::validate() const {
  if (window <= 0 || window % 2 != 0) throw ParameterError("predistorter: window must be even and positive");
  if (!std::isfinite(epsilon_fo) || !std::isfinite(epsilon_so))
    throw ParameterError("predistorter: epsilon values must be finite");
  if (!(peak_power >= 0.0) || !std::isfinite(gamma)) throw ParameterError("predistorter: bad power or gamma");
  if (!fo_table) throw ConfigurationError("predistorter: first-order table missing");
  if (fo_table->order != CoeffOrder::FO) throw ConfigurationError("predistorter: fo_table has the wrong order");
  if (fo_table->window < window) throw ConfigurationError("predistorter: fo_table window smaller than config");
  if (so_term1_table) {
    if (so_term1_table->order != CoeffOrder::SoTerm1)
      throw ConfigurationError("predistorter: so_term1_table has the wrong order");
    if (so_term1_table->window < window)
      throw ConfigurationError("predistorter: so_term1_table window smaller than config");
  }
  if (use_term2) {
    if (!so_term1_table) throw ConfigurationError("predistorter: term 2 requires the term 1 table");
    if (!so_term2_table) throw ConfigurationError("predistorter: so_term2_table missing");
    if (so_term2_table->order != CoeffOrder::SoTerm2)
      throw ConfigurationError("predistorter: so_term2_table has the wrong order");
    if (so_term2_table->window < window)
      throw ConfigurationError("predistorter: so_term2_table window smaller than config");
  }
}

namespace {

using cd = std::complex<double>;

// Zero outside the frame.
struct Padded {
  const ArrayXcd& v;
  cd operator()(Eigen::Index i) const { return i >= 0 && i < v.size() ? v[i] : cd(0.0); }
};

bool in_window(const CoeffIndex& idx, int h) {
  return std::abs(idx.m) <= h && std::abs(idx.n) <= h && std::abs(idx.k) <= h;
}

// Both polarizations of one sum. `product(a, b, i, idx)` is the symbol
// product for output slot i on polarization a with cross polarization b.
template <typename Product>
SymbolGrid evaluate(const SymbolGrid& s, const CoeffTable& table, int window, bool grouped, Product product) {
  s.validate();
  const int h = window / 2;
  const Eigen::Index k_count = s.size();
  SymbolGrid out;
  out.symbol_rate = s.symbol_rate;
  out.x = ArrayXcd::Zero(k_count);
  out.y = ArrayXcd::Zero(k_count);
  const bool use_groups = grouped && table.quantized && !table.groups.empty();

  for (int pol = 0; pol < 2; ++pol) {
    const Padded a{pol == 0 ? s.x : s.y};
    const Padded b{pol == 0 ? s.y : s.x};
    ArrayXcd& dst = pol == 0 ? out.x : out.y;
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < k_count; ++i) {
      cd acc = 0.0;
      if (use_groups) {
        for (const auto& g : table.groups) {
          cd part = 0.0;
          for (const auto& idx : g.members)
            if (in_window(idx, h)) part += product(a, b, i, idx);
          acc += part * g.value;
        }
      } else {
        for (const auto& e : table.entries)
          if (in_window(e.idx, h)) acc += product(a, b, i, e.idx) * e.value;
      }
      dst[i] = acc;
    }
  }
  return out;
}

}  // namespace

SymbolGrid fo_sum(const SymbolGrid& symbols, const CoeffTable& table, int window, bool grouped) {
  return evaluate(symbols, table, window, grouped, [](const Padded& a, const Padded& b, Eigen::Index i,
                                                      const CoeffIndex& idx) {
    const Eigen::Index m = i + idx.m, n = i + idx.n, l = i + idx.m + idx.n;
    return (a(m) * std::conj(a(l)) + b(m) * std::conj(b(l))) * a(n);
  });
}

SymbolGrid so_term1_sum(const SymbolGrid& symbols, const CoeffTable& table, int window, bool grouped) {
  return evaluate(symbols, table, window, grouped, [](const Padded& a, const Padded& b, Eigen::Index i,
                                                      const CoeffIndex& idx) {
    const Eigen::Index m = i + idx.m, n = i + idx.n, l = i + idx.m + idx.n, k = i + idx.k;
    const double pk = std::norm(a(k)) + std::norm(b(k));
    return 2.0 * (a(m) * std::conj(a(l)) + b(m) * std::conj(b(l))) * a(n) * pk;
  });
}

SymbolGrid so_term2_sum(const SymbolGrid& symbols, const CoeffTable& table, int window, bool grouped) {
  return evaluate(symbols, table, window, grouped, [](const Padded& a, const Padded& b, Eigen::Index i,
                                                      const CoeffIndex& idx) {
    const Eigen::Index m = i + idx.m, n = i + idx.n, l = i + idx.m + idx.n;
    const Eigen::Index kp = i + idx.k, km = i - idx.k;
    const cd pair = a(kp) * a(km) + b(kp) * b(km);
    return (std::conj(a(m)) * a(l) + std::conj(b(m)) * b(l)) * std::conj(a(n)) * pair;
  });
}

DistortionBasis DistortionBasis::compute(const SymbolGrid& symbols, const PredistortConfig& cfg) {
  cfg.validate();
  symbols.validate();
  DistortionBasis d;
  d.symbols = symbols;
  d.fo = fo_sum(symbols, *cfg.fo_table, cfg.window, cfg.grouped);
  if (cfg.has_so()) {
    d.so = so_term1_sum(symbols, *cfg.so_term1_table, cfg.window, cfg.grouped);
    if (cfg.use_term2) {
      const SymbolGrid t2 = so_term2_sum(symbols, *cfg.so_term2_table, cfg.window, cfg.grouped);
      d.so.x += t2.x;
      d.so.y += t2.y;
    }
  } else {
    d.so.symbol_rate = symbols.symbol_rate;
    d.so.x = ArrayXcd::Zero(symbols.size());
    d.so.y = ArrayXcd::Zero(symbols.size());
  }
  return d;
}

namespace {

SymbolGrid scaled(const SymbolGrid& g, double c) {
  SymbolGrid out = g;
  out.x *= c;
  out.y *= c;
  return out;
}

double manakov(double gamma) { return 8.0 / 9.0 * gamma; }

}  // namespace

SymbolGrid DistortionBasis::fo_distortion(const PredistortConfig& cfg) const {
  return scaled(fo, manakov(cfg.gamma) * cfg.epsilon_fo * cfg.peak_power);
}

SymbolGrid DistortionBasis::so_distortion(const PredistortConfig& cfg) const {
  const double g = manakov(cfg.gamma);
  return scaled(so, g * g * cfg.epsilon_so * cfg.peak_power * cfg.peak_power);
}

SymbolGrid DistortionBasis::predistort(const PredistortConfig& cfg) const {
  SymbolGrid out = symbols;
  const SymbolGrid d1 = fo_distortion(cfg);
  out.x -= d1.x;
  out.y -= d1.y;
  if (cfg.has_so()) {
    const SymbolGrid d2 = so_distortion(cfg);
    out.x -= d2.x;
    out.y -= d2.y;
  }
  return out;
}

SymbolGrid fo_distortion(const SymbolGrid& symbols, const PredistortConfig& cfg) {
  cfg.validate();
  return scaled(fo_sum(symbols, *cfg.fo_table, cfg.window, cfg.grouped),
                manakov(cfg.gamma) * cfg.epsilon_fo * cfg.peak_power);
}

SymbolGrid so_distortion(const SymbolGrid& symbols, const PredistortConfig& cfg) {
  cfg.validate();
  if (!cfg.has_so()) throw ConfigurationError("predistorter: so_term1_table missing");
  return DistortionBasis::compute(symbols, cfg).so_distortion(cfg);
}

SymbolGrid predistort(const SymbolGrid& symbols, const PredistortConfig& cfg) {
  return DistortionBasis::compute(symbols, cfg).predistort(cfg);
}

EpsilonSweep sweep_epsilon(const std::vector<double>& grid, const std::function<double(double)>& snr_of) {
  if (grid.empty()) throw ParameterError("sweep_epsilon: empty grid");
  EpsilonSweep r;
  r.grid = grid;
  r.snr_db.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double snr = snr_of(grid[i]);
    r.snr_db.push_back(snr);
    if (i == 0 || snr > r.best_snr_db) {
      r.best = grid[i];
      r.best_snr_db = snr;
    }
  }
  return r;
}

}  // namespace pbnlc
