#include "pbnlc/harness.hpp"

#include "pbnlc/complexity.hpp"
#include "pbnlc/constellation.hpp"
#include "pbnlc/pulse_shaping.hpp"
#include "pbnlc/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

namespace pbnlc {

using json = nlohmann::json;

std::string Technique::label() const {
  switch (kind) {
    case TechniqueKind::EDC: return "edc";
    case TechniqueKind::FO: return "fo";
    case TechniqueKind::SO: return term2 ? "so+t2" : "so";
    case TechniqueKind::DBP: return "dbp" + std::to_string(dbp_steps);
  }
  return "?";
}

Technique Technique::parse(const std::string& label) {
  if (label == "edc") return {TechniqueKind::EDC};
  if (label == "fo") return {TechniqueKind::FO};
  if (label == "so") return {TechniqueKind::SO};
  if (label == "so+t2") return {TechniqueKind::SO, 1, true};
  if (label.rfind("dbp", 0) == 0 && label.size() > 3) {
    const std::string digits = label.substr(3);
    if (digits.find_first_not_of("0123456789") == std::string::npos && digits.size() < 4) {
      const int steps = std::stoi(digits);
      if (steps >= 1) return {TechniqueKind::DBP, steps};
    }
  }
  throw ParameterError("unknown technique '" + label + "' (expected edc, fo, so, so+t2 or dbp<N>)");
}

void ExperimentSpec::validate() const {
  link.validate();
  pulse().validate();
  quad.validate();
  if (techniques.empty()) throw ParameterError("spec: technique list is empty");
  if (launch_power_dbm.empty()) throw ParameterError("spec: launch power grid is empty");
  for (double p : launch_power_dbm)
    if (!std::isfinite(p)) throw ParameterError("spec: launch powers must be finite");
  if (n_frames < 1) throw ParameterError("spec: n_frames must be >= 1");
  if (window <= 0 || window % 2 != 0) throw ParameterError("spec: window must be even and positive");
  if (edge_guard < 0) throw ParameterError("spec: edge_guard must be non-negative");
  if (n_symbols_per_frame <= window + 2 * edge_guard)
    throw ParameterError("spec: n_symbols_per_frame must exceed window + 2 * edge_guard");
  if (samples_per_symbol < 2 || dbp_samples_per_symbol < 2)
    throw ParameterError("spec: samples per symbol must be >= 2");
  if (!(symbol_rate > 0.0)) throw ParameterError("spec: symbol_rate must be positive");
  if (!(step_size > 0.0)) throw ParameterError("spec: step_size must be positive");
  if (std::isnan(mu_db) || mu_db > 0.0) throw ParameterError("spec: mu_db must be <= 0");
  if (!(quant_divisor > 0.0)) throw ParameterError("spec: quant_divisor must be positive");
  if (!std::isfinite(epsilon_fo) || !std::isfinite(epsilon_so)) throw ParameterError("spec: epsilon must be finite");
  for (double e : epsilon_fo_grid)
    if (!std::isfinite(e)) throw ParameterError("spec: epsilon grid values must be finite");
  for (double e : epsilon_so_grid)
    if (!std::isfinite(e)) throw ParameterError("spec: epsilon grid values must be finite");
}

// ---------------------------------------------------------------------------
// JSON

namespace {

constexpr double kAlphaPerDb = db_per_km_to_alpha(1.0);

json link_json(const LinkConfig& l) {
  return {{"alpha_db_per_km", l.alpha / kAlphaPerDb},
          {"beta2_ps2_per_km", l.beta2 / ps2_per_km_to_beta2(1.0)},
          {"gamma_per_w_km", l.gamma * 1e3},
          {"span_length_km", l.span_length / 1e3},
          {"n_spans", l.n_spans},
          {"noise_figure_db", l.noise_figure_db},
          {"center_wavelength_nm", l.center_wavelength * 1e9}};
}

json quad_json(const QuadratureSpec& q) {
  return {{"gauss_order", q.gauss_order}, {"gauss_order_tail", q.gauss_order_tail}, {"panels_z", q.panels_z},
          {"panels_s", q.panels_s},       {"rel_tol", q.rel_tol},                   {"max_level", q.max_level}};
}

// Reads known keys into their targets and rejects the rest.
class Fields {
 public:
  Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j.is_object()) throw ConfigurationError(where_ + ": expected an object");
  }
  template <typename T>
  Fields& opt(const char* key, T& target) {
    seen_.push_back(key);
    if (auto it = j_.find(key); it != j_.end()) {
      try {
        target = it->get<T>();
      } catch (const json::exception& e) {
        throw ConfigurationError(where_ + "." + key + ": " + e.what());
      }
    }
    return *this;
  }
  template <typename Fn>
  Fields& sub(const char* key, Fn fn) {
    seen_.push_back(key);
    if (auto it = j_.find(key); it != j_.end()) fn(*it);
    return *this;
  }
  void done() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (std::find(seen_.begin(), seen_.end(), it.key()) == seen_.end())
        throw ConfigurationError(where_ + ": unknown key '" + it.key() + "'");
  }

 private:
  const json& j_;
  std::string where_;
  std::vector<std::string> seen_;
};

}  // namespace

std::string spec_to_json(const ExperimentSpec& s) {
  json techniques = json::array();
  for (const auto& t : s.techniques) techniques.push_back(t.label());
  json j = {{"techniques", techniques},
            {"link", link_json(s.link)},
            {"symbol_rate_gbaud", s.symbol_rate / 1e9},
            {"tau_over_T", s.tau_over_T},
            {"rrc_rolloff", s.rrc_rolloff},
            {"rrc_span", s.rrc_span},
            {"samples_per_symbol", s.samples_per_symbol},
            {"dbp_samples_per_symbol", s.dbp_samples_per_symbol},
            {"step_size_km", s.step_size / 1e3},
            {"noise", s.noise},
            {"launch_power_dbm", s.launch_power_dbm},
            {"n_frames", s.n_frames},
            {"n_symbols_per_frame", s.n_symbols_per_frame},
            {"seed", s.seed},
            {"window", s.window},
            {"mu_db", s.mu_db},
            {"edge_guard", s.edge_guard},
            {"quantize", s.quantize},
            {"quant_divisor", s.quant_divisor},
            {"epsilon_fo", s.epsilon_fo},
            {"epsilon_so", s.epsilon_so},
            {"epsilon_fo_grid", s.epsilon_fo_grid},
            {"epsilon_so_grid", s.epsilon_so_grid},
            {"calibration_power_dbm", s.calibration_power_dbm},
            {"table_dir", s.table_dir.string()},
            {"quadrature", quad_json(s.quad)}};
  return j.dump(2);
}

ExperimentSpec spec_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigurationError(std::string("config: ") + e.what());
  }
  ExperimentSpec s;
  std::vector<std::string> techniques;
  double rate_gbaud = s.symbol_rate / 1e9, step_km = s.step_size / 1e3;
  std::string table_dir = s.table_dir.string();
  Fields(j, "config")
      .opt("techniques", techniques)
      .sub("link",
           [&](const json& l) {
             json d = link_json(s.link);
             double a = d["alpha_db_per_km"], b = d["beta2_ps2_per_km"], g = d["gamma_per_w_km"];
             double ls = d["span_length_km"], nf = d["noise_figure_db"], wl = d["center_wavelength_nm"];
             int n = s.link.n_spans;
             Fields(l, "config.link")
                 .opt("alpha_db_per_km", a)
                 .opt("beta2_ps2_per_km", b)
                 .opt("gamma_per_w_km", g)
                 .opt("span_length_km", ls)
                 .opt("n_spans", n)
                 .opt("noise_figure_db", nf)
                 .opt("center_wavelength_nm", wl)
                 .done();
             s.link.alpha = db_per_km_to_alpha(a);
             s.link.beta2 = ps2_per_km_to_beta2(b);
             s.link.gamma = per_w_km_to_gamma(g);
             s.link.span_length = ls * 1e3;
             s.link.n_spans = n;
             s.link.noise_figure_db = nf;
             s.link.center_wavelength = wl * 1e-9;
           })
      .opt("symbol_rate_gbaud", rate_gbaud)
      .opt("tau_over_T", s.tau_over_T)
      .opt("rrc_rolloff", s.rrc_rolloff)
      .opt("rrc_span", s.rrc_span)
      .opt("samples_per_symbol", s.samples_per_symbol)
      .opt("dbp_samples_per_symbol", s.dbp_samples_per_symbol)
      .opt("step_size_km", step_km)
      .opt("noise", s.noise)
      .opt("launch_power_dbm", s.launch_power_dbm)
      .opt("n_frames", s.n_frames)
      .opt("n_symbols_per_frame", s.n_symbols_per_frame)
      .opt("seed", s.seed)
      .opt("window", s.window)
      .opt("mu_db", s.mu_db)
      .opt("edge_guard", s.edge_guard)
      .opt("quantize", s.quantize)
      .opt("quant_divisor", s.quant_divisor)
      .opt("epsilon_fo", s.epsilon_fo)
      .opt("epsilon_so", s.epsilon_so)
      .opt("epsilon_fo_grid", s.epsilon_fo_grid)
      .opt("epsilon_so_grid", s.epsilon_so_grid)
      .opt("calibration_power_dbm", s.calibration_power_dbm)
      .opt("table_dir", table_dir)
      .sub("quadrature",
           [&](const json& q) {
             Fields(q, "config.quadrature")
                 .opt("gauss_order", s.quad.gauss_order)
                 .opt("gauss_order_tail", s.quad.gauss_order_tail)
                 .opt("panels_z", s.quad.panels_z)
                 .opt("panels_s", s.quad.panels_s)
                 .opt("rel_tol", s.quad.rel_tol)
                 .opt("max_level", s.quad.max_level)
                 .done();
           })
      .done();
  if (j.contains("techniques")) {
    s.techniques.clear();
    for (const auto& t : techniques) s.techniques.push_back(Technique::parse(t));
  }
  s.symbol_rate = rate_gbaud * 1e9;
  s.step_size = step_km * 1e3;
  s.table_dir = table_dir;
  s.validate();
  return s;
}

ExperimentSpec load_spec(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigurationError("config: cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return spec_from_json(ss.str());
}

// ---------------------------------------------------------------------------
// Tables

std::string table_file_name(CoeffOrder order, int n_spans, int window, double mu_db) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%s_n%d_w%d_mu%g.lut", to_string(order).c_str(), n_spans, window, mu_db);
  return buf;
}

namespace {

bool close(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b)); }

// Coefficients depend on the fiber and pulse model only.
bool matches(const CoeffTable& t, CoeffOrder order, const ExperimentSpec& s) {
  const auto p = s.pulse();
  return t.order == order && t.window == s.window && !t.quantized && t.mu_db <= s.mu_db &&
         close(t.link.alpha, s.link.alpha) && close(t.link.beta2, s.link.beta2) &&
         close(t.link.span_length, s.link.span_length) && t.link.n_spans == s.link.n_spans && close(t.pulse.T, p.T) &&
         close(t.pulse.tau, p.tau);
}

}  // namespace

std::shared_ptr<const CoeffTable> obtain_table(CoeffOrder order, const ExperimentSpec& spec, const Logger& log) {
  spec.validate();
  namespace fs = std::filesystem;
  const std::string prefix =
      to_string(order) + "_n" + std::to_string(spec.link.n_spans) + "_w" + std::to_string(spec.window) + "_mu";

  std::optional<CoeffTable> best;
  std::error_code ec;
  if (fs::is_directory(spec.table_dir, ec)) {
    std::vector<fs::path> candidates;
    for (const auto& e : fs::directory_iterator(spec.table_dir))
      if (e.path().filename().string().rfind(prefix, 0) == 0 && e.path().extension() == ".lut")
        candidates.push_back(e.path());
    std::sort(candidates.begin(), candidates.end());
    for (const auto& path : candidates) {
      try {
        CoeffTable t = load_table(path);
        if (matches(t, order, spec) && (!best || t.mu_db > best->mu_db)) best = std::move(t);
      } catch (const std::exception& e) {
        if (log) log("ignoring " + path.string() + ": " + e.what());
      }
    }
  }
  if (best) {
    if (log) log("loaded " + to_string(order) + " table (" + std::to_string(best->size()) + " entries)");
    if (best->mu_db < spec.mu_db) return std::make_shared<const CoeffTable>(truncate(*best, spec.mu_db));
    return std::make_shared<const CoeffTable>(std::move(*best));
  }

  if (log) log("building " + to_string(order) + " table for " + std::to_string(spec.link.n_spans) + " spans");
  BuildOptions opts;
  if (log)
    opts.progress = [&](std::size_t done, std::size_t total) {
      if (done % 250 == 0 || done == total)
        log("  " + to_string(order) + ": " + std::to_string(done) + "/" + std::to_string(total) + " index pairs");
    };
  auto t = std::make_shared<CoeffTable>(
      build_table(order, spec.window, spec.mu_db, spec.pulse(), spec.link, spec.quad, opts));
  fs::create_directories(spec.table_dir);
  save_table(*t, spec.table_dir / table_file_name(order, spec.link.n_spans, spec.window, spec.mu_db));
  return t;
}

TableSet obtain_tables(const ExperimentSpec& spec, const Logger& log) {
  TableSet ts;
  for (const auto& t : spec.techniques) {
    if (t.kind == TechniqueKind::FO || t.kind == TechniqueKind::SO)
      if (!ts.fo) ts.fo = obtain_table(CoeffOrder::FO, spec, log);
    if (t.kind == TechniqueKind::SO && !ts.term1) ts.term1 = obtain_table(CoeffOrder::SoTerm1, spec, log);
    if (t.kind == TechniqueKind::SO && t.term2 && !ts.term2) ts.term2 = obtain_table(CoeffOrder::SoTerm2, spec, log);
  }
  return ts;
}

// ---------------------------------------------------------------------------
// Experiment

namespace {

std::shared_ptr<const CoeffTable> prepare(const std::shared_ptr<const CoeffTable>& t, const ExperimentSpec& s) {
  if (!t || !s.quantize || t->quantized) return t;
  return std::make_shared<const CoeffTable>(quantize_combine(*t, std::abs(t->reference) / s.quant_divisor));
}

std::vector<std::uint8_t> random_bits(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::uint8_t> bits(n);
  for (auto& b : bits) b = std::uint8_t(rng() >> 63);
  return bits;
}

enum Stream : std::uint64_t { kBits = 0, kNoise = 1 };

}  // namespace

Experiment::Experiment(ExperimentSpec spec, TableSet tables) : spec_(std::move(spec)), tables_(std::move(tables)) {
  spec_.validate();
  taps_fwd_ = rrc_taps(spec_.rrc_rolloff, spec_.rrc_span, spec_.samples_per_symbol);
  taps_dbp_ = rrc_taps(spec_.rrc_rolloff, spec_.rrc_span, spec_.dbp_samples_per_symbol);

  pd_.window = spec_.window;
  pd_.gamma = spec_.link.gamma;
  pd_.fo_table = prepare(tables_.fo, spec_);
  pd_.so_term1_table = prepare(tables_.term1, spec_);
  pd_t2_ = pd_;
  pd_t2_.so_term2_table = prepare(tables_.term2, spec_);
  pd_t2_.use_term2 = pd_t2_.so_term2_table != nullptr;

  for (const auto& t : spec_.techniques) {
    if ((t.kind == TechniqueKind::FO || t.kind == TechniqueKind::SO) && !pd_.fo_table)
      throw ConfigurationError("experiment: technique '" + t.label() + "' needs the first-order table");
    if (t.kind == TechniqueKind::SO && !pd_.so_term1_table)
      throw ConfigurationError("experiment: technique '" + t.label() + "' needs the term-1 table");
    if (t.kind == TechniqueKind::SO && t.term2 && !pd_t2_.so_term2_table)
      throw ConfigurationError("experiment: technique '" + t.label() + "' needs the term-2 table");
  }

  const auto c = qam16();
  const std::size_t nbits = std::size_t(spec_.n_symbols_per_frame) * 4;
  frames_.resize(std::size_t(spec_.n_frames));
  for (std::size_t f = 0; f < frames_.size(); ++f) {
    auto& fr = frames_[f];
    const std::uint64_t s = derive_seed(derive_seed(spec_.seed, kBits), f);
    fr.bits_x = random_bits(nbits, derive_seed(s, 0));
    fr.bits_y = random_bits(nbits, derive_seed(s, 1));
    fr.symbols.symbol_rate = spec_.symbol_rate;
    fr.symbols.x = qam16_map<double>(fr.bits_x, c);
    fr.symbols.y = qam16_map<double>(fr.bits_y, c);
  }
}

double Experiment::peak_power(double launch_power_dbm) const {
  return 0.5 * dbm_to_watt(launch_power_dbm) * peak_to_average_factor(taps_fwd_, spec_.samples_per_symbol);
}

const DistortionBasis& Experiment::basis(const Frame& f, bool term2) const {
  auto& slot = term2 ? f.basis_t2 : f.basis;
  if (!slot) slot = DistortionBasis::compute(f.symbols, term2 ? pd_t2_ : pd_);
  return *slot;
}

SymbolGrid Experiment::transmit_symbols(const Frame& f, const Technique& t, double p0, double eps_fo,
                                        double eps_so) const {
  if (t.kind == TechniqueKind::EDC || t.kind == TechniqueKind::DBP) return f.symbols;
  PredistortConfig cfg = t.term2 ? pd_t2_ : pd_;
  cfg.peak_power = p0;
  cfg.epsilon_fo = eps_fo;
  cfg.epsilon_so = eps_so;
  if (t.kind == TechniqueKind::FO) {
    cfg.so_term1_table = nullptr;
    cfg.so_term2_table = nullptr;
    cfg.use_term2 = false;
  }
  return basis(f, t.term2).predistort(cfg);
}

FrameStats Experiment::evaluate(const Technique& t, double launch_power_dbm, double eps_fo, double eps_so) const {
  const auto& s = spec_;
  const double p_pol = 0.5 * dbm_to_watt(launch_power_dbm);
  const double amp = std::sqrt(p_pol * s.samples_per_symbol);
  const double p0 = peak_power(launch_power_dbm);
  const auto plan = SpanPlan::for_link(s.link, s.step_size);
  const auto c = qam16();
  const Eigen::Index k = s.n_symbols_per_frame, edge = s.counting_edge();

  // Distortion sums are filled before the parallel region.
  if (t.kind == TechniqueKind::FO || t.kind == TechniqueKind::SO)
    for (const auto& f : frames_) basis(f, t.term2);

  std::vector<FrameStats> per_frame(frames_.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t fi = 0; fi < std::ptrdiff_t(frames_.size()); ++fi) {
    try {
      const Frame& f = frames_[std::size_t(fi)];
      SampledField field = shape(transmit_symbols(f, t, p0, eps_fo, eps_so), taps_fwd_, s.samples_per_symbol);
      field.x *= amp;
      field.y *= amp;
      const auto noise = NoiseModel::for_link(s.link, derive_seed(derive_seed(s.seed, kNoise), std::uint64_t(fi)), s.noise);
      const SampledField received = propagate_link(field, s.link, plan, noise);

      SymbolGrid grid;
      if (t.kind == TechniqueKind::DBP) {
        SampledField r = resample(received, s.symbol_rate * s.dbp_samples_per_symbol);
        r = dbp(r, s.link, DbpConfig{t.dbp_steps, s.dbp_samples_per_symbol});
        grid = matched_filter_downsample(r, taps_dbp_, s.dbp_samples_per_symbol);
      } else {
        grid = matched_filter_downsample(edc(received, s.link, s.link.total_length()), taps_fwd_,
                                         s.samples_per_symbol);
      }
      const SymbolGrid soft = known_data_gain(grid, f.symbols, edge, k - edge);
      const Detection det = ml_detect(soft, c);
      per_frame[std::size_t(fi)] = frame_stats(f.bits_x, f.bits_y, det, f.symbols, soft, edge);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  FrameStats total;
  for (const auto& fs : per_frame) total += fs;
  return total;
}

double Experiment::mults_per_symbol(const Technique& t) const {
  ComplexityParams p;
  p.n_spans = spec_.link.n_spans;
  switch (t.kind) {
    case TechniqueKind::EDC: return mult_edc(p);
    case TechniqueKind::DBP: p.n_steps = t.dbp_steps; return mult_dbp(p);
    case TechniqueKind::FO: return mult_pbnlc(count_M(*pd_.fo_table));
    case TechniqueKind::SO: {
      std::int64_t m = count_M(*pd_.fo_table) + count_M(*pd_.so_term1_table);
      if (t.term2) m += count_M(*pd_t2_.so_term2_table);
      return mult_pbnlc(m);
    }
  }
  return 0.0;
}

MetricsRow Experiment::row(const Technique& t, double launch_power_dbm, double eps_fo, double eps_so) const {
  MetricsRow r = metrics(evaluate(t, launch_power_dbm, eps_fo, eps_so), t.label(), launch_power_dbm);
  r.mults_per_symbol = mults_per_symbol(t);
  return r;
}

void calibrate(const Experiment& e, RunResult& r) {
  const auto& s = e.spec();
  r.epsilon_fo = s.epsilon_fo;
  r.epsilon_so = s.epsilon_so;
  const auto has = [&](TechniqueKind k) {
    return std::any_of(s.techniques.begin(), s.techniques.end(), [&](const Technique& t) { return t.kind == k; });
  };
  const double pc = s.calibration_power_dbm;
  if (!s.epsilon_fo_grid.empty() && (has(TechniqueKind::FO) || has(TechniqueKind::SO))) {
    r.fo_sweep = sweep_epsilon(s.epsilon_fo_grid, [&](double eps) {
      return metrics(e.evaluate({TechniqueKind::FO}, pc, eps, 0.0)).snr_db;
    });
    r.epsilon_fo = r.fo_sweep->best;
  }
  if (!s.epsilon_so_grid.empty() && has(TechniqueKind::SO)) {
    const auto so = *std::find_if(s.techniques.begin(), s.techniques.end(),
                                  [](const Technique& t) { return t.kind == TechniqueKind::SO; });
    r.so_sweep = sweep_epsilon(s.epsilon_so_grid, [&](double eps) {
      return metrics(e.evaluate(so, pc, r.epsilon_fo, eps)).snr_db;
    });
    r.epsilon_so = r.so_sweep->best;
  }
}

RunResult run_experiment(const Experiment& e) {
  RunResult r;
  calibrate(e, r);
  const auto& s = e.spec();
  for (const auto& t : s.techniques)
    for (double p : s.launch_power_dbm) r.rows.push_back(e.row(t, p, r.epsilon_fo, r.epsilon_so));

  std::map<double, double> edc_q;
  for (const auto& row : r.rows)
    if (row.technique == "edc") edc_q[row.launch_power_dbm] = row.q_db;
  for (auto& row : r.rows)
    if (auto it = edc_q.find(row.launch_power_dbm); it != edc_q.end()) row.delta_q_db = row.q_db - it->second;
  return r;
}

RunResult run_experiment(const ExperimentSpec& spec, const Logger& log) {
  spec.validate();
  Experiment e(spec, obtain_tables(spec, log));
  return run_experiment(e);
}

OptimalPoint optimal_point(const std::vector<MetricsRow>& rows, const std::string& technique) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& r : rows)
    if (r.technique == technique) pts.emplace_back(r.launch_power_dbm, r.snr_db);
  if (pts.empty()) throw ParameterError("optimal_point: no rows for technique '" + technique + "'");
  std::sort(pts.begin(), pts.end());
  std::size_t i = 0;
  for (std::size_t j = 1; j < pts.size(); ++j)
    if (pts[j].second > pts[i].second) i = j;
  OptimalPoint best{pts[i].first, pts[i].second};
  if (i == 0 || i + 1 == pts.size()) return best;

  // Parabola through the best point and its neighbours.
  const auto [x0, y0] = pts[i - 1];
  const auto [x1, y1] = pts[i];
  const auto [x2, y2] = pts[i + 1];
  const double d01 = (y1 - y0) / (x1 - x0), d12 = (y2 - y1) / (x2 - x1);
  const double a = (d12 - d01) / (x2 - x0);
  if (!(a < 0.0)) return best;
  const double b = d01 - a * (x0 + x1);
  const double xv = std::clamp(-b / (2.0 * a), x0, x2);
  return {xv, y1 + (xv - x1) * (d01 + a * (xv - x0))};
}

std::vector<MuRow> sweep_mu(const ExperimentSpec& spec, const std::vector<double>& mu_grid, double launch_power_dbm,
                            const Logger& log) {
  if (mu_grid.empty()) throw ParameterError("sweep_mu: empty threshold grid");
  for (double mu : mu_grid)
    if (std::isnan(mu) || mu > 0.0) throw ParameterError("sweep_mu: thresholds must be <= 0 dB");
  const auto so = std::find_if(spec.techniques.begin(), spec.techniques.end(),
                               [](const Technique& t) { return t.kind == TechniqueKind::SO; });
  const Technique tech = so == spec.techniques.end() ? Technique{TechniqueKind::SO} : *so;

  ExperimentSpec base = spec;
  base.techniques = {tech};
  base.mu_db = *std::min_element(mu_grid.begin(), mu_grid.end());
  TableSet full;
  full.fo = obtain_table(CoeffOrder::FO, base, log);
  full.term1 = obtain_table(CoeffOrder::SoTerm1, base, log);
  if (tech.term2) full.term2 = obtain_table(CoeffOrder::SoTerm2, base, log);

  // Epsilon is resolved once, on the most complete table, and then held.
  RunResult cal;
  {
    Experiment e(base, full);
    calibrate(e, cal);
  }

  std::vector<MuRow> out;
  for (double mu : mu_grid) {
    ExperimentSpec s = base;
    s.mu_db = mu;
    TableSet ts = full;
    ts.term1 = std::make_shared<const CoeffTable>(truncate(*full.term1, mu));
    if (full.term2) ts.term2 = std::make_shared<const CoeffTable>(truncate(*full.term2, mu));
    Experiment e(s, ts);
    MuRow row;
    row.mu_db = mu;
    row.snr_db = metrics(e.evaluate(tech, launch_power_dbm, cal.epsilon_fo, cal.epsilon_so)).snr_db;
    row.coefficients = count_M(*prepare(ts.term1, s));
    if (tech.term2) row.coefficients += count_M(*prepare(ts.term2, s));
    row.mults_per_symbol = e.mults_per_symbol(tech);
    if (log) log("mu " + std::to_string(mu) + " dB: SNR " + std::to_string(row.snr_db) + " dB");
    out.push_back(row);
  }
  return out;
}

std::vector<ReachRow> estimate_reach(const ExperimentSpec& spec, const std::vector<int>& span_counts,
                                     double ber_threshold, const Logger& log) {
  if (span_counts.empty()) throw ParameterError("estimate_reach: empty span list");
  if (!(ber_threshold > 0.0 && ber_threshold < 0.5)) throw ParameterError("estimate_reach: bad threshold");
  std::vector<int> spans = span_counts;
  std::sort(spans.begin(), spans.end());
  spans.erase(std::unique(spans.begin(), spans.end()), spans.end());

  // best[technique][i] = lowest BER over launch power at spans[i].
  std::map<std::string, std::vector<double>> best;
  for (int n : spans) {
    ExperimentSpec s = spec;
    s.link.n_spans = n;
    if (log) log("reach: " + std::to_string(n) + " spans");
    const auto r = run_experiment(s, log);
    for (const auto& t : spec.techniques) {
      double b = 1.0;
      for (const auto& row : r.rows)
        if (row.technique == t.label()) b = std::min(b, row.ber);
      best[t.label()].push_back(b);
    }
  }

  std::vector<ReachRow> out;
  const double ls = spec.link.span_length;
  for (const auto& t : spec.techniques) {
    const auto& b = best[t.label()];
    ReachRow row;
    row.technique = t.label();
    std::size_t i = 0;
    while (i < b.size() && b[i] <= ber_threshold) ++i;
    if (i == b.size()) {
      row.reach_m = spans.back() * ls;
      row.lower_bound = true;
    } else if (i == 0) {
      row.reach_m = spans.front() * ls;
      row.upper_bound = true;
    } else {
      const double l0 = std::log10(std::max(b[i - 1], 1e-12)), l1 = std::log10(std::max(b[i], 1e-12));
      const double d0 = spans[i - 1] * ls, d1 = spans[i] * ls;
      const double f = (std::log10(ber_threshold) - l0) / (l1 - l0);
      row.reach_m = d0 + std::clamp(f, 0.0, 1.0) * (d1 - d0);
    }
    out.push_back(row);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Export

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json row_json(const MetricsRow& r) {
  return {{"technique", r.technique},
          {"launch_power_dbm", r.launch_power_dbm},
          {"ber", r.ber},
          {"snr_db", r.snr_db},
          {"q_db", r.q_db},
          {"delta_q_db", r.delta_q_db},
          {"mults_per_symbol", r.mults_per_symbol},
          {"counted_bits", r.counted_bits},
          {"bit_errors", r.bit_errors},
          {"capped", r.capped}};
}

}  // namespace

void write_rows(std::ostream& os, const std::vector<MetricsRow>& rows, ExportFormat format) {
  if (format == ExportFormat::Csv) {
    os << kCsvHeader << '\n';
    for (const auto& r : rows)
      os << r.technique << ',' << num(r.launch_power_dbm) << ',' << num(r.ber) << ',' << num(r.snr_db) << ','
         << num(r.q_db) << ',' << num(r.delta_q_db) << ',' << num(r.mults_per_symbol) << ',' << r.counted_bits << ','
         << r.bit_errors << ',' << (r.capped ? 1 : 0) << '\n';
  } else {
    for (const auto& r : rows) os << row_json(r).dump() << '\n';
  }
}

void export_rows(const std::vector<MetricsRow>& rows, const std::filesystem::path& path, ExportFormat format) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("export: cannot open '" + path.string() + "'");
  write_rows(os, rows, format);
  if (!os) throw std::runtime_error("export: write failed for '" + path.string() + "'");
}

std::vector<MetricsRow> read_jsonl(std::istream& is) {
  std::vector<MetricsRow> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    MetricsRow r;
    r.technique = j.at("technique").get<std::string>();
    r.launch_power_dbm = j.at("launch_power_dbm").get<double>();
    r.ber = j.at("ber").get<double>();
    r.snr_db = j.at("snr_db").get<double>();
    r.q_db = j.at("q_db").get<double>();
    r.delta_q_db = j.at("delta_q_db").get<double>();
    r.mults_per_symbol = j.at("mults_per_symbol").get<double>();
    r.counted_bits = j.at("counted_bits").get<std::uint64_t>();
    r.bit_errors = j.at("bit_errors").get<std::uint64_t>();
    r.capped = j.at("capped").get<bool>();
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace pbnlc
