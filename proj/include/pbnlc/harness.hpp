#pragma once

#include "pbnlc/channel.hpp"
#include "pbnlc/coefficients.hpp"
#include "pbnlc/predistorter.hpp"
#include "pbnlc/rx.hpp"

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace pbnlc {

enum class TechniqueKind { EDC, FO, SO, DBP };

struct Technique {
  TechniqueKind kind = TechniqueKind::EDC;
  int dbp_steps = 1;
  bool term2 = false;

  /// "edc", "fo", "so", "so+t2", "dbp<N>".
  std::string label() const;
  static Technique parse(const std::string& label);
  bool operator==(const Technique&) const = default;
};

struct ExperimentSpec {
  std::vector<Technique> techniques{{TechniqueKind::EDC}, {TechniqueKind::FO}, {TechniqueKind::SO}};
  LinkConfig link = table1_link(8);
  double symbol_rate = 32e9;
  double tau_over_T = 0.5;
  double rrc_rolloff = 0.1;
  int rrc_span = 32;
  int samples_per_symbol = 16;
  int dbp_samples_per_symbol = 2;
  double step_size = 0.8e3;
  bool noise = true;

  std::vector<double> launch_power_dbm{-2, -1, 0, 1, 2, 3, 4, 5, 6};
  int n_frames = 4;
  int n_symbols_per_frame = 1 << 16;
  std::uint64_t seed = 1;

  int window = 100;
  double mu_db = -40.0;
  /// Extra symbols excluded at each frame end beyond window / 2.
  int edge_guard = 16;
  bool quantize = true;
  /// Quantization step = |reference| / quant_divisor.
  double quant_divisor = 32.0;

  double epsilon_fo = 1.0;
  double epsilon_so = -1.0;
  /// When non-empty, epsilon is chosen by SNR at calibration_power_dbm
  /// (FO first, then SO with FO fixed) and then held for every power.
  std::vector<double> epsilon_fo_grid;
  std::vector<double> epsilon_so_grid;
  double calibration_power_dbm = 2.0;

  std::filesystem::path table_dir = "luts";
  QuadratureSpec quad;

  PulseParams pulse() const { return PulseParams::for_symbol_rate(symbol_rate, tau_over_T); }
  /// Symbols excluded from counting at each frame end.
  int counting_edge() const { return window / 2 + edge_guard; }
  void validate() const;
};

/// JSON text with one named key per field; missing keys keep their defaults
/// and unknown keys are rejected.
std::string spec_to_json(const ExperimentSpec& s);
ExperimentSpec spec_from_json(const std::string& text);
ExperimentSpec load_spec(const std::filesystem::path& path);

/// Unquantized coefficient tables for one link. Missing tables are null.
struct TableSet {
  std::shared_ptr<const CoeffTable> fo;
  std::shared_ptr<const CoeffTable> term1;
  std::shared_ptr<const CoeffTable> term2;
};

using Logger = std::function<void(const std::string&)>;

/// Cache file name for a table, e.g. "so-term1_n8_w100_mu-40.lut".
std::string table_file_name(CoeffOrder order, int n_spans, int window, double mu_db);

/// Loads a cached table whose link and pulse match, or builds and caches it.
/// A cached table built at a lower mu is truncated instead of rebuilt.
std::shared_ptr<const CoeffTable> obtain_table(CoeffOrder order, const ExperimentSpec& spec, const Logger& log = {});

/// Tables required by the spec's techniques.
TableSet obtain_tables(const ExperimentSpec& spec, const Logger& log = {});

/// Frames, tables and per-frame distortion sums for one spec. Evaluations
/// at different powers and epsilons share the same bits and noise streams.
class Experiment {
 public:
  Experiment(ExperimentSpec spec, TableSet tables);

  const ExperimentSpec& spec() const { return spec_; }
  /// Pulse peak power for a total launch power.
  double peak_power(double launch_power_dbm) const;

  FrameStats evaluate(const Technique& t, double launch_power_dbm, double epsilon_fo, double epsilon_so) const;
  MetricsRow row(const Technique& t, double launch_power_dbm, double epsilon_fo, double epsilon_so) const;
  double mults_per_symbol(const Technique& t) const;

  /// Tables after optional quantization, as used by the predistorter.
  const PredistortConfig& predistort_config() const { return pd_; }

 private:
  struct Frame {
    std::vector<std::uint8_t> bits_x, bits_y;
    SymbolGrid symbols;
    mutable std::optional<DistortionBasis> basis;
    mutable std::optional<DistortionBasis> basis_t2;
  };

  SymbolGrid transmit_symbols(const Frame& f, const Technique& t, double p0, double eps_fo, double eps_so) const;
  const DistortionBasis& basis(const Frame& f, bool term2) const;

  ExperimentSpec spec_;
  TableSet tables_;
  PredistortConfig pd_;
  PredistortConfig pd_t2_;
  RealArray<double> taps_fwd_;
  RealArray<double> taps_dbp_;
  std::vector<Frame> frames_;
};

struct RunResult {
  std::vector<MetricsRow> rows;
  double epsilon_fo = 1.0;
  double epsilon_so = -1.0;
  std::optional<EpsilonSweep> fo_sweep;
  std::optional<EpsilonSweep> so_sweep;
};

/// Resolves epsilon (calibrating when grids are set) on an existing experiment.
void calibrate(const Experiment& e, RunResult& r);

/// One row per (technique, launch power), techniques in spec order.
/// delta_q_db is filled against the EDC row at the same power when present.
RunResult run_experiment(const Experiment& e);
RunResult run_experiment(const ExperimentSpec& spec, const Logger& log = {});

/// Launch power maximizing SNR (parabolic refinement around the best grid
/// point) and the SNR there.
struct OptimalPoint {
  double launch_power_dbm = 0.0;
  double snr_db = 0.0;
};
OptimalPoint optimal_point(const std::vector<MetricsRow>& rows, const std::string& technique);

struct MuRow {
  double mu_db = 0.0;
  double snr_db = 0.0;
  std::int64_t coefficients = 0;
  double mults_per_symbol = 0.0;
};

/// SO at `launch_power_dbm` for each truncation threshold.
std::vector<MuRow> sweep_mu(const ExperimentSpec& spec, const std::vector<double>& mu_grid, double launch_power_dbm,
                            const Logger& log = {});

struct ReachRow {
  std::string technique;
  double reach_m = 0.0;
  /// Threshold met at the longest simulated distance: reach is at least this.
  bool lower_bound = false;
  /// Threshold missed at the shortest simulated distance: reach is below it.
  bool upper_bound = false;
};

/// Best-over-power BER per span count; reach interpolated in log BER.
std::vector<ReachRow> estimate_reach(const ExperimentSpec& spec, const std::vector<int>& span_counts,
                                     double ber_threshold = kFecBerThreshold, const Logger& log = {});

enum class ExportFormat { Csv, JsonLines };

/// Fixed CSV column order:
/// technique,launch_power_dbm,ber,snr_db,q_db,delta_q_db,mults_per_symbol,counted_bits,bit_errors,capped
inline constexpr const char* kCsvHeader =
    "technique,launch_power_dbm,ber,snr_db,q_db,delta_q_db,mults_per_symbol,counted_bits,bit_errors,capped";

void write_rows(std::ostream& os, const std::vector<MetricsRow>& rows, ExportFormat format);
void export_rows(const std::vector<MetricsRow>& rows, const std::filesystem::path& path, ExportFormat format);
std::vector<MetricsRow> read_jsonl(std::istream& is);

}  // namespace pbnlc
