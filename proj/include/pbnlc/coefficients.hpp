#pragma once

#include "pbnlc/types.hpp"

#include <compare>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace pbnlc {

enum class CoeffOrder : std::uint8_t { FO = 0, SoTerm1 = 1, SoTerm2 = 2 };

std::string to_string(CoeffOrder order);
CoeffOrder coeff_order_from_string(const std::string& name);

struct CoeffIndex {
  int m = 0;
  int n = 0;
  int k = 0;
  auto operator<=>(const CoeffIndex&) const = default;
};

struct CoeffEntry {
  CoeffIndex idx;
  std::complex<double> value;
  bool operator==(const CoeffEntry&) const = default;
};

/// Indices sharing one quantized coefficient value.
struct CoeffGroup {
  std::complex<double> value;
  std::vector<CoeffIndex> members;
  bool operator==(const CoeffGroup&) const = default;
};

/// Sparse coefficient tensor. Entries are kept sorted by index so that lookup,
/// iteration order and file contents are deterministic.
struct CoeffTable {
  CoeffOrder order = CoeffOrder::SoTerm1;
  int window = 100;
  double mu_db = -40.0;
  bool quantized = false;
  double quant_scale = 0.0;
  std::complex<double> reference{0.0, 0.0};
  PulseParams pulse;
  LinkConfig link;
  std::vector<CoeffEntry> entries;
  std::vector<CoeffGroup> groups;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
  /// Nullptr when the index was truncated or lies outside the window.
  const std::complex<double>* find(const CoeffIndex& idx) const;
  void sort_entries();
  bool operator==(const CoeffTable&) const = default;
};

/// Composite Gauss-Legendre description. Panel counts are per span; each
/// refinement level doubles both. The first span, where the pulses are still
/// short and the integrand varies fastest, uses `gauss_order`; later spans
/// use `gauss_order_tail`.
struct QuadratureSpec {
  int gauss_order = 24;
  int gauss_order_tail = 12;
  int panels_z = 2;
  int panels_s = 2;
  double rel_tol = 1e-6;
  int max_level = 5;

  void validate() const;
};

struct NumericDomainError : std::domain_error {
  NumericDomainError(const std::string& what, double z_, double s_, CoeffIndex idx_)
      : std::domain_error(what), z(z_), s(s_), idx(idx_) {}
  double z;
  double s;
  CoeffIndex idx;
};

struct QuadratureError : std::runtime_error {
  QuadratureError(const std::string& what, std::complex<double> est, double rel_change)
      : std::runtime_error(what), estimate(est), achieved_rel_change(rel_change) {}
  std::complex<double> estimate;
  double achieved_rel_change;
};

struct DegenerateQuantizationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LutFormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Fraction of launch power left at distance z with lumped amplification at
/// every span end. A point on a span boundary belongs to the span it closes.
double span_power_profile(const LinkConfig& link, double z);

/// Integrands of the coefficient integrals, including the loss factor.
std::complex<double> term1_integrand(double z, double s, const CoeffIndex& idx, const PulseParams& pulse,
                                     const LinkConfig& link);
std::complex<double> term2_integrand(double z, double s, const CoeffIndex& idx, const PulseParams& pulse,
                                     const LinkConfig& link);
std::complex<double> fo_integrand(double s, int m, int n, const PulseParams& pulse, const LinkConfig& link,
                                  double z);

std::complex<double> so_coeff(CoeffOrder order, const CoeffIndex& idx, const PulseParams& pulse,
                              const LinkConfig& link, const QuadratureSpec& quad);
std::complex<double> fo_coeff(int m, int n, const PulseParams& pulse, const LinkConfig& link,
                              const QuadratureSpec& quad);

/// Integration at a fixed refinement level, no convergence loop.
std::complex<double> so_coeff_at_level(CoeffOrder order, const CoeffIndex& idx, const PulseParams& pulse,
                                       const LinkConfig& link, const QuadratureSpec& quad, int level);
std::complex<double> fo_coeff_at_level(int m, int n, const PulseParams& pulse, const LinkConfig& link,
                                       const QuadratureSpec& quad, int level);

struct BuildOptions {
  /// Convergence is demanded only for coefficients at or above
  /// (mu_db - guard_db) relative to the reference.
  double guard_db = 6.0;
  /// Progress callback: (pairs done, pairs total).
  std::function<void(std::size_t, std::size_t)> progress;
};

struct BuildReport {
  int max_level_used = 0;
  std::size_t evaluated = 0;
  /// Largest relative change between the final two levels over retained entries.
  double worst_rel_change = 0.0;
};

/// Full window, every (m, n, k) in [-L_w/2, L_w/2]^3 (k = 0 for FO), truncated
/// at mu_db relative to the (0,0,0) coefficient.
CoeffTable build_table(CoeffOrder order, int window, double mu_db, const PulseParams& pulse,
                       const LinkConfig& link, const QuadratureSpec& quad, const BuildOptions& opts = {},
                       BuildReport* report = nullptr);

/// Re-truncates an existing (unquantized) table at a stricter threshold.
CoeffTable truncate(const CoeffTable& table, double mu_db);

/// Default quantization step: |reference| / 32.
double default_quant_step(const CoeffTable& table);

CoeffTable quantize_combine(const CoeffTable& table, double quant_step);

void save_table(const CoeffTable& table, const std::filesystem::path& path);
CoeffTable load_table(const std::filesystem::path& path);

}  // namespace pbnlc
