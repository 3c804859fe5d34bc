// Command-line front end: table building, experiments, sweeps and complexity.

#include "pbnlc/complexity.hpp"
#include "pbnlc/harness.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

using namespace pbnlc;
using json = nlohmann::json;

namespace {

const char* kFooter = R"(Figure reproductions (desk scale unless noted):
  BER/SNR vs launch power:   pbnlc sweep-power --config desk.json --from -2 --to 6 --step 1
  truncation saturation:     pbnlc sweep-mu --config desk.json --mu-grid=-20,-30,-40,-50 --power 2
  table statistics:          pbnlc build-tables --spans 35 --orders so-term1,so-term2
  reach:                     pbnlc reach --config desk.json --span-list 20,30,40,50,60,70,80
  complexity vs distance:    pbnlc complexity --max-spans 40 --lut-dir luts
Errors are printed to stderr as {"error": {"type": ..., "message": ...}} with exit code 2.)";

struct Overrides {
  std::string config;
  std::optional<int> spans, symbols, frames, window, sps, dbp_sps, edge_guard;
  std::optional<std::uint64_t> seed;
  std::optional<double> mu, eps_fo, eps_so, cal_power, quant_divisor, step_km, tau_over_t, symbol_rate_gbaud;
  std::optional<bool> noise, quantize, term2;
  std::vector<std::string> techniques;
  std::vector<double> powers, eps_fo_grid, eps_so_grid;
  std::string table_dir;

  void add(CLI::App& app) {
    app.add_option("--config", config, "JSON experiment file (defaults apply to missing keys)");
    app.add_option("--spans", spans, "number of 80 km spans");
    app.add_option("--symbols", symbols, "symbols per frame");
    app.add_option("--frames", frames, "frames per point");
    app.add_option("--seed", seed, "master seed");
    app.add_option("--window", window, "symbol window L_w");
    app.add_option("--mu", mu, "truncation threshold (dB)");
    app.add_option("--sps", sps, "forward simulation samples per symbol");
    app.add_option("--dbp-sps", dbp_sps, "back-propagation samples per symbol");
    app.add_option("--edge-guard", edge_guard, "extra symbols dropped at each frame end");
    app.add_option("--step-km", step_km, "split-step size (km)");
    app.add_option("--tau-over-T", tau_over_t, "Gaussian model width relative to the symbol period");
    app.add_option("--symbol-rate-gbaud", symbol_rate_gbaud, "symbol rate (GBd)");
    app.add_option("--techniques", techniques, "edc, fo, so, so+t2, dbp<N>")->delimiter(',');
    app.add_option("--powers", powers, "launch powers (dBm)")->delimiter(',');
    app.add_option("--eps-fo", eps_fo, "first-order scaling factor");
    app.add_option("--eps-so", eps_so, "second-order scaling factor");
    app.add_option("--eps-fo-grid", eps_fo_grid, "first-order calibration grid")->delimiter(',');
    app.add_option("--eps-so-grid", eps_so_grid, "second-order calibration grid")->delimiter(',');
    app.add_option("--cal-power", cal_power, "calibration launch power (dBm)");
    app.add_option("--quant-divisor", quant_divisor, "quantization step = |reference| / divisor");
    app.add_flag("--noise,!--no-noise", noise, "ASE noise on/off");
    app.add_flag("--quantize,!--no-quantize", quantize, "quantize and combine coefficients");
    app.add_option("--table-dir", table_dir, "LUT cache directory");
  }

  ExperimentSpec resolve() const {
    ExperimentSpec s = config.empty() ? ExperimentSpec{} : load_spec(config);
    if (spans) s.link.n_spans = *spans;
    if (symbols) s.n_symbols_per_frame = *symbols;
    if (frames) s.n_frames = *frames;
    if (seed) s.seed = *seed;
    if (window) s.window = *window;
    if (mu) s.mu_db = *mu;
    if (sps) s.samples_per_symbol = *sps;
    if (dbp_sps) s.dbp_samples_per_symbol = *dbp_sps;
    if (edge_guard) s.edge_guard = *edge_guard;
    if (step_km) s.step_size = *step_km * 1e3;
    if (tau_over_t) s.tau_over_T = *tau_over_t;
    if (symbol_rate_gbaud) s.symbol_rate = *symbol_rate_gbaud * 1e9;
    if (!techniques.empty()) {
      s.techniques.clear();
      for (const auto& t : techniques) s.techniques.push_back(Technique::parse(t));
    }
    if (!powers.empty()) s.launch_power_dbm = powers;
    if (eps_fo) s.epsilon_fo = *eps_fo;
    if (eps_so) s.epsilon_so = *eps_so;
    if (!eps_fo_grid.empty()) s.epsilon_fo_grid = eps_fo_grid;
    if (!eps_so_grid.empty()) s.epsilon_so_grid = eps_so_grid;
    if (cal_power) s.calibration_power_dbm = *cal_power;
    if (quant_divisor) s.quant_divisor = *quant_divisor;
    if (noise) s.noise = *noise;
    if (quantize) s.quantize = *quantize;
    if (!table_dir.empty()) s.table_dir = table_dir;
    s.validate();
    return s;
  }
};

struct Output {
  std::string path;
  std::string format = "csv";

  void add(CLI::App& app) {
    app.add_option("--out", path, "output file (default stdout)");
    app.add_option("--format", format, "csv or jsonl")->check(CLI::IsMember({"csv", "jsonl"}));
  }
  void write(const std::vector<MetricsRow>& rows) const {
    const auto f = format == "csv" ? ExportFormat::Csv : ExportFormat::JsonLines;
    if (path.empty())
      write_rows(std::cout, rows, f);
    else
      export_rows(rows, path, f);
  }
};

void log_line(const std::string& s) { std::cerr << s << '\n'; }

std::string error_type(const std::exception& e) {
  if (dynamic_cast<const ParameterError*>(&e)) return "parameter";
  if (dynamic_cast<const LengthError*>(&e)) return "length";
  if (dynamic_cast<const ConfigurationError*>(&e)) return "configuration";
  if (dynamic_cast<const NumericDomainError*>(&e)) return "numeric-domain";
  if (dynamic_cast<const QuadratureError*>(&e)) return "quadrature";
  if (dynamic_cast<const DegenerateQuantizationError*>(&e)) return "degenerate-quantization";
  if (dynamic_cast<const LutFormatError*>(&e)) return "lut-format";
  if (dynamic_cast<const NumericOverflowError*>(&e)) return "numeric-overflow";
  return "runtime";
}

int fail(const std::string& type, const std::string& message) {
  std::cerr << json{{"error", {{"type", type}, {"message", message}}}}.dump() << '\n';
  return 2;
}

void print_run(const RunResult& r, const Output& out) {
  if (r.fo_sweep || r.so_sweep)
    std::cerr << "epsilon_fo " << r.epsilon_fo << ", epsilon_so " << r.epsilon_so << '\n';
  out.write(r.rows);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Perturbation-based nonlinearity compensation toolkit", "pbnlc"};
  app.footer(kFooter);
  app.require_subcommand(1);

  Overrides ov;
  Output out;

  auto* print_config = app.add_subcommand("print-config", "print the resolved experiment as JSON");
  ov.add(*print_config);

  auto* build = app.add_subcommand("build-tables", "compute and cache coefficient tables");
  ov.add(*build);
  std::vector<std::string> orders{"fo", "so-term1", "so-term2"};
  build->add_option("--orders", orders, "fo, so-term1, so-term2")->delimiter(',');

  auto* run = app.add_subcommand("run", "evaluate every technique at every launch power");
  ov.add(*run);
  out.add(*run);

  auto* sweep_power = app.add_subcommand("sweep-power", "run over an evenly spaced launch power grid");
  ov.add(*sweep_power);
  out.add(*sweep_power);
  double p_from = -2, p_to = 6, p_step = 1;
  sweep_power->add_option("--from", p_from, "first launch power (dBm)");
  sweep_power->add_option("--to", p_to, "last launch power (dBm)");
  sweep_power->add_option("--step", p_step, "grid spacing (dB)")->check(CLI::PositiveNumber);

  auto* smu = app.add_subcommand("sweep-mu", "SO SNR and coefficient count vs truncation threshold");
  ov.add(*smu);
  std::vector<double> mu_grid{-20, -30, -40, -50};
  double mu_power = 2.0;
  std::string mu_out;
  smu->add_option("--mu-grid", mu_grid, "thresholds (dB)")->delimiter(',');
  smu->add_option("--power", mu_power, "launch power (dBm)");
  smu->add_option("--out", mu_out, "CSV output file (default stdout)");

  auto* reach = app.add_subcommand("reach", "maximum distance below the BER threshold per technique");
  ov.add(*reach);
  std::vector<int> span_list{10, 20, 30, 40};
  double threshold = kFecBerThreshold;
  reach->add_option("--span-list", span_list, "span counts to simulate")->delimiter(',');
  reach->add_option("--threshold", threshold, "BER threshold");

  auto* cx = app.add_subcommand("complexity", "real multiplications per symbol vs number of spans");
  int max_spans = 40, nfft = 4096, ns = 4096;
  std::vector<int> dbp_steps{1, 2};
  std::string lut_dir;
  int cx_window = 100;
  double cx_mu = -40, cx_div = 32;
  cx->add_option("--max-spans", max_spans, "largest span count")->check(CLI::PositiveNumber);
  cx->add_option("--nfft", nfft, "FFT size");
  cx->add_option("--ns", ns, "samples per FFT block");
  cx->add_option("--dbp-steps", dbp_steps, "steps per span for the DBP columns")->delimiter(',');
  cx->add_option("--lut-dir", lut_dir, "add PB-NLC columns from cached tables in this directory");
  cx->add_option("--window", cx_window, "table window");
  cx->add_option("--mu", cx_mu, "table truncation threshold (dB)");
  cx->add_option("--quant-divisor", cx_div, "quantization step = |reference| / divisor");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what());
  }

  try {
    if (*print_config) {
      std::cout << spec_to_json(ov.resolve()) << '\n';
    } else if (*build) {
      const auto spec = ov.resolve();
      for (const auto& name : orders) {
        const auto order = coeff_order_from_string(name);
        const auto t = obtain_table(order, spec, log_line);
        json j = {{"order", name},
                  {"n_spans", spec.link.n_spans},
                  {"window", t->window},
                  {"mu_db", t->mu_db},
                  {"entries", t->size()},
                  {"reference", {t->reference.real(), t->reference.imag()}}};
        const auto q = quantize_combine(*t, std::abs(t->reference) / spec.quant_divisor);
        j["quantized_groups"] = q.groups.size();
        j["quantized_entries"] = q.size();
        std::cout << j.dump() << '\n';
      }
    } else if (*run) {
      print_run(run_experiment(ov.resolve(), log_line), out);
    } else if (*sweep_power) {
      auto spec = ov.resolve();
      if (p_to < p_from) throw ParameterError("sweep-power: --to must not be below --from");
      spec.launch_power_dbm.clear();
      for (int i = 0; p_from + i * p_step <= p_to + 1e-9; ++i) spec.launch_power_dbm.push_back(p_from + i * p_step);
      print_run(run_experiment(spec, log_line), out);
    } else if (*smu) {
      const auto rows = sweep_mu(ov.resolve(), mu_grid, mu_power, log_line);
      std::ofstream file;
      if (!mu_out.empty()) {
        file.open(mu_out, std::ios::trunc);
        if (!file) throw std::runtime_error("cannot open '" + mu_out + "'");
      }
      std::ostream& os = mu_out.empty() ? std::cout : file;
      os << "mu_db,snr_db,coefficients,mults_per_symbol\n";
      for (const auto& r : rows) os << r.mu_db << ',' << r.snr_db << ',' << r.coefficients << ',' << r.mults_per_symbol << '\n';
    } else if (*reach) {
      const auto rows = estimate_reach(ov.resolve(), span_list, threshold, log_line);
      std::cout << "technique,reach_km,bound\n";
      for (const auto& r : rows)
        std::cout << r.technique << ',' << r.reach_m / 1e3 << ','
                  << (r.lower_bound ? "lower" : r.upper_bound ? "upper" : "") << '\n';
    } else if (*cx) {
      std::cout << "n_spans,edc";
      for (int s : dbp_steps) std::cout << ",dbp" << s;
      if (!lut_dir.empty()) std::cout << ",fo,so";
      std::cout << '\n';
      for (int n = 1; n <= max_spans; ++n) {
        ComplexityParams p{1, n, nfft, ns};
        std::cout << n << ',' << mult_edc(p);
        for (int s : dbp_steps) {
          p.n_steps = s;
          std::cout << ',' << mult_dbp(p);
        }
        if (!lut_dir.empty()) {
          auto count = [&](CoeffOrder o) -> std::optional<std::int64_t> {
            const auto path = std::filesystem::path(lut_dir) / table_file_name(o, n, cx_window, cx_mu);
            if (!std::filesystem::exists(path)) return std::nullopt;
            const auto t = load_table(path);
            return count_M(quantize_combine(t, std::abs(t.reference) / cx_div));
          };
          const auto fo = count(CoeffOrder::FO), t1 = count(CoeffOrder::SoTerm1);
          std::cout << ',' << (fo ? std::to_string(mult_pbnlc(*fo)) : "");
          std::cout << ',' << (fo && t1 ? std::to_string(mult_pbnlc(*fo + *t1)) : "");
        }
        std::cout << '\n';
      }
    }
  } catch (const std::exception& e) {
    return fail(error_type(e), e.what());
  }
  return 0;
}
