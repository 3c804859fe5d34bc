#pragma once

#include "pbnlc/coefficients.hpp"
#include "pbnlc/types.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace pbnlc {

struct PredistortConfig {
  double epsilon_fo = 1.0;
  // A single-pass transmitter correction inverts the channel only if the
  // second-order term enters with the opposite sign, so the natural value is -1.
  double epsilon_so = -1.0;
  int window = 100;
  bool use_term2 = false;
  /// Evaluate quantized tables group by group (one coefficient multiply per group).
  bool grouped = true;
  /// Pulse peak power P0 in W and the fiber gamma (1/W/m); the Manakov 8/9
  /// factor is applied internally.
  double peak_power = 1e-3;
  double gamma = 1.22e-3;
  std::shared_ptr<const CoeffTable> fo_table;
  std::shared_ptr<const CoeffTable> so_term1_table;
  std::shared_ptr<const CoeffTable> so_term2_table;

  bool has_so() const { return so_term1_table != nullptr; }
  /// Output slots within window/2 of either frame end see truncated sums.
  int edge_guard() const { return window / 2; }
  void validate() const;
};

/// Distortion sums without the gamma, P0 and epsilon factors, in symbol units.
/// fo:      sum (a_m a*_{m+n} + b_m b*_{m+n}) a_n C_fo(m, n)
/// term1:   sum 2 (a_m a*_{m+n} + b_m b*_{m+n}) a_n (|a_k|^2 + |b_k|^2) C_1(m, n, k)
/// term2:   sum (a*_m a_{m+n} + b*_m b_{m+n}) a*_n (a_k a_{-k} + b_k b_{-k}) C_2(m, n, k)
/// where a is the polarization being computed, b the other one, indices are
/// offsets from the output slot and symbols outside the frame are zero.
SymbolGrid fo_sum(const SymbolGrid& symbols, const CoeffTable& table, int window, bool grouped);
SymbolGrid so_term1_sum(const SymbolGrid& symbols, const CoeffTable& table, int window, bool grouped);
SymbolGrid so_term2_sum(const SymbolGrid& symbols, const CoeffTable& table, int window, bool grouped);

/// Raw sums for one symbol frame. Since the distortion is computed from the
/// un-predistorted symbols, any (epsilon, P0) combination is a linear
/// combination of these.
struct DistortionBasis {
  SymbolGrid symbols;
  SymbolGrid fo;
  SymbolGrid so;  // term1 plus (optionally) term2

  static DistortionBasis compute(const SymbolGrid& symbols, const PredistortConfig& cfg);
  SymbolGrid fo_distortion(const PredistortConfig& cfg) const;
  SymbolGrid so_distortion(const PredistortConfig& cfg) const;
  SymbolGrid predistort(const PredistortConfig& cfg) const;
};

SymbolGrid fo_distortion(const SymbolGrid& symbols, const PredistortConfig& cfg);
SymbolGrid so_distortion(const SymbolGrid& symbols, const PredistortConfig& cfg);

/// a - du1 - du2 per slot and polarization. FO only when no SO table is set.
SymbolGrid predistort(const SymbolGrid& symbols, const PredistortConfig& cfg);

struct EpsilonSweep {
  double best = 0.0;
  double best_snr_db = 0.0;
  std::vector<double> grid;
  std::vector<double> snr_db;
};

/// Evaluates `snr_of(eps)` on every grid point and returns the maximizer
/// (first one on ties).
EpsilonSweep sweep_epsilon(const std::vector<double>& grid, const std::function<double(double)>& snr_of);

}  // namespace pbnlc
