#include "ghzlab/cli.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>

#include <CLI11.hpp>
#include <Eigen/Core>

#include "ghzlab/config.hpp"
#include "ghzlab/errors.hpp"
#include "ghzlab/experiment.hpp"
#include "ghzlab/io.hpp"
#include "ghzlab/seeding.hpp"

namespace ghzlab::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Observed fourfold rate on the device, kept next to the budget estimate.
constexpr double kObservedRateHz = 0.5;

struct Context {
  config::ExperimentConfig cfg;
  fs::path out_dir;
  std::ostream& out;
  std::vector<std::string> files;

  void write_json(const std::string& name, const json& j) {
    io::write_json(out_dir / name, j);
    files.push_back(name);
  }
  void write_text(const std::string& name, const std::string& text) {
    io::write_text(out_dir / name, text);
    files.push_back(name);
  }
};

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

json labels_json(const PauliString& p) {
  json a = json::array();
  for (Pauli x : p) a.push_back(std::string(to_string(x)));
  return a;
}

json header(const std::string& command) {
  return json{{"schema_version", io::kSchemaVersion}, {"command", command}};
}

std::optional<std::uint64_t> shots_or_exact(const config::ExperimentConfig& c, bool exact) {
  if (exact) return std::nullopt;
  return c.shots_per_setting;
}

const analysis::MeasurementRecord& find_record(const analysis::TomographySet& ts, const PauliString& labels) {
  for (const auto& r : ts.records) {
    if (r.settings == labels) return r;
  }
  throw DomainError("tomography set lacks setting " + to_string(labels));
}

PauliString uniform(Pauli p) {
  return {p, p, p, p};
}

void cmd_simulate(Context& ctx) {
  const auto& c = ctx.cfg;
  const PauliString labels = config::parse_labels(c.simulate_settings, "simulate.settings");
  const Experiment e(c.model());
  const auto d = e.distribution(labels);
  const auto counts = sim::sample_counts(d, c.shots_per_setting, child_seed(c.seed, 0));

  json j = header("simulate");
  j["settings"] = labels_json(labels);
  j["distribution"] = io::to_json(d);
  j["sampled"] = json{{"shots", c.shots_per_setting}, {"counts", counts}};
  ctx.write_json("simulate.json", j);
  ctx.write_text("simulate.csv", io::distribution_csv(d));

  ctx.out << "settings " << to_string(labels) << ", success probability " << fmt("%.6g", d.success()) << "\n";
  const auto cond = d.conditional();
  for (int o = 0; o < kOutcomes; ++o) {
    if (cond[o] >= 1e-3) ctx.out << "  " << outcome_label(o) << "  " << fmt("%.4f", cond[o]) << "\n";
  }
}

void cmd_phase_scan(Context& ctx) {
  const auto& c = ctx.cfg;
  const auto& ps = c.phase_scan;
  ExperimentModel base = c.model();
  base.fractions = Experiment(base).fractions();

  // Outer heater of the first interferometer: phase grows linearly with the
  // dissipated power and acts as an extra phase on output path 1.
  const auto cal = chip::HeaterCalibration::device_default();
  const double kappa = cal.a(0, 0) / cal.resistances[0]; // rad / mW

  const auto labels = analysis::phase_witness_settings();
  std::vector<std::pair<double, double>> points;
  json rows = json::array();
  for (int i = 0; i < ps.points; ++i) {
    const double power = ps.power_min_mw + (ps.power_max_mw - ps.power_min_mw) * i / (ps.points - 1);
    ExperimentModel m = base;
    const double shift = kappa * (power - ps.zero_phase_power_mw);
    m.stage.path_phases[0] += shift;
    const Experiment e(m);
    const auto record = ps.exact ? e.exact_record(labels) : e.sampled_record(labels, c.shots_per_setting, child_seed(c.seed, i));
    const double w = analysis::phase_witness(record);
    points.emplace_back(power, w);
    rows.push_back(json{{"power_mw", power}, {"theta_rad", m.stage.theta()}, {"witness", w}});
  }
  const auto fit = analysis::fit_phase_scan(points);

  json j = header("phase-scan");
  j["settings"] = labels_json(labels);
  j["exact"] = ps.exact;
  j["heater_slope_rad_per_mw"] = kappa;
  j["points"] = rows;
  j["fit"] = io::to_json(fit);
  ctx.write_json("phase_scan.json", j);

  std::string dat = "# power_mw witness fit\n";
  for (const auto& [p, w] : points) {
    dat += fmt("%.6f", p) + " " + fmt("%.9f", w) + " " +
           fmt("%.9f", fit.amplitude * std::cos(fit.slope * p + fit.offset)) + "\n";
  }
  ctx.write_text("phase_scan.dat", dat);

  ctx.out << "fit amplitude " << fmt("%.4f", fit.amplitude) << ", slope " << fmt("%.4f", fit.slope)
          << " rad/mW, P0 " << fmt("%.2f", fit.zero_phase_power) << " mW\n";
}

void cmd_tomography(Context& ctx) {
  const auto& c = ctx.cfg;
  const Experiment e(c.model());
  const auto ts = e.tomography(shots_or_exact(c, c.tomography.exact), c.seed);
  const auto mle = analysis::mle_reconstruct(ts);
  const PureState target = ghz_state(-e.model().stage.theta());
  const double f = fidelity_to_pure(mle.rho, target);
  const double p = purity(mle.rho);
  const auto best = analysis::max_fidelity_over_phase(mle.rho);
  const auto w = analysis::stabilizer_witness(find_record(ts, uniform(Pauli::X)), find_record(ts, uniform(Pauli::Z)));

  json errors = nullptr;
  const int n = c.tomography.mc_resamples;
  if (!c.tomography.exact && n >= 2) {
    const std::uint64_t mc_seed = child_seed(c.seed, 1u << 20);
    const double f_err = analysis::monte_carlo_error(
        ts, [&](const analysis::TomographySet& r) { return fidelity_to_pure(analysis::mle_reconstruct(r).rho, target); },
        n, mc_seed);
    const double p_err = analysis::monte_carlo_error(
        ts, [](const analysis::TomographySet& r) { return purity(analysis::mle_reconstruct(r).rho); }, n, mc_seed);
    errors = json{{"fidelity", f_err}, {"purity", p_err}, {"resamples", n}};
  }

  json j = header("tomography");
  j["exact"] = c.tomography.exact;
  j["shots_per_setting"] = c.tomography.exact ? json(nullptr) : json(c.shots_per_setting);
  j["fidelity"] = f;
  j["purity"] = p;
  j["errors"] = errors;
  j["best_phase"] = json{{"theta_rad", best.theta}, {"fidelity", best.fidelity}};
  j["witness"] = io::to_json(w);
  j["mle"] = json{{"iterations", mle.iterations},
                  {"converged", mle.converged},
                  {"log_likelihood", mle.log_likelihood},
                  {"initial_log_likelihood", mle.initial_log_likelihood}};
  ctx.write_json("tomography_counts.json", io::to_json(ts));
  ctx.write_json("rho.json", io::to_json(mle.rho.matrix()));
  ctx.write_text("rho.txt", io::matrix_table(mle.rho.matrix()));
  ctx.write_json("tomography.json", j);

  ctx.out << "fidelity " << fmt("%.4f", f) << ", purity " << fmt("%.4f", p);
  if (!errors.is_null()) {
    ctx.out << " (errors " << fmt("%.4f", errors["fidelity"].get<double>()) << ", "
            << fmt("%.4f", errors["purity"].get<double>()) << ")";
  }
  ctx.out << "\n";
  if (!mle.converged) ctx.out << "warning: MLE stopped at the iteration cap\n";
}

void cmd_witness(Context& ctx) {
  const auto& c = ctx.cfg;
  const Experiment e(c.model());
  const std::vector<PauliString> labels = {uniform(Pauli::X), uniform(Pauli::Z)};
  const auto exact = e.records(labels, std::nullopt, c.seed);
  const auto sampled = e.records(labels, c.shots_per_setting, c.seed);
  const auto we = analysis::stabilizer_witness(exact[0], exact[1]);
  const auto ws = analysis::stabilizer_witness(sampled[0], sampled[1]);

  json j = header("witness");
  j["exact"] = io::to_json(we);
  j["sampled"] = io::to_json(ws);
  j["sampled"]["shots_per_setting"] = c.shots_per_setting;
  ctx.write_json("witness.json", j);
  ctx.out << "witness " << fmt("%.4f", we.value) << " (sampled " << fmt("%.4f", ws.value) << "), fidelity bound "
          << fmt("%.4f", we.fidelity_lower_bound) << "\n";
}

void cmd_bell(Context& ctx) {
  const auto& c = ctx.cfg;
  const Experiment e(c.model());
  const auto labels = analysis::bell_settings();
  const auto be = analysis::bell_value(e.records(labels, std::nullopt, c.seed));
  const auto bs = analysis::bell_value(e.records(labels, c.shots_per_setting, c.seed));

  json j = header("bell");
  j["exact"] = io::to_json(be);
  j["sampled"] = io::to_json(bs);
  j["sampled"]["shots_per_setting"] = c.shots_per_setting;
  ctx.write_json("bell.json", j);
  ctx.out << "Bell value " << fmt("%.4f", be.value) << " (sampled " << fmt("%.4f", bs.value) << " +- "
          << fmt("%.4f", bs.standard_error) << "), classical bound 6\n";
}

void cmd_bell_sweep(Context& ctx) {
  const auto& c = ctx.cfg;
  const auto& sw = c.bell_sweep;
  ExperimentModel base = c.model();
  base.fractions = Experiment(base).fractions();
  const auto labels = analysis::bell_settings();

  json rows = json::array();
  std::string dat = "# scale min_overlap bell standard_error\n";
  for (std::size_t i = 0; i < sw.scales.size(); ++i) {
    ExperimentModel m = base;
    m.source.distinguishability_scale[sw.photon] = sw.scales[i];
    std::array<double, kQubits> x = base.fractions->x;
    for (int k = 0; k < kQubits; ++k) x[k] *= m.source.distinguishability_scale[k];
    double min_overlap = 1.0;
    for (int a = 0; a < kQubits; ++a) {
      for (int b = a + 1; b < kQubits; ++b) min_overlap = std::min(min_overlap, x[a] * x[b]);
    }
    const Experiment e(m);
    const auto r = sw.exact ? e.records(labels, std::nullopt, c.seed)
                            : e.records(labels, c.shots_per_setting, child_seed(c.seed, i));
    const auto bell = analysis::bell_value(r);
    rows.push_back(json{{"scale", sw.scales[i]},
                        {"min_overlap", min_overlap},
                        {"bell", bell.value},
                        {"standard_error", bell.standard_error}});
    dat += fmt("%.4f", sw.scales[i]) + " " + fmt("%.6f", min_overlap) + " " + fmt("%.6f", bell.value) + " " +
           fmt("%.6f", bell.standard_error) + "\n";
    ctx.out << "scale " << fmt("%.2f", sw.scales[i]) << "  min overlap " << fmt("%.4f", min_overlap) << "  I "
            << fmt("%.4f", bell.value) << "\n";
  }

  json j = header("bell-sweep");
  j["photon"] = std::string(1, static_cast<char>('A' + sw.photon));
  j["exact"] = sw.exact;
  j["points"] = rows;
  ctx.write_json("bell_sweep.json", j);
  ctx.write_text("bell_sweep.dat", dat);
}

void cmd_ablation(Context& ctx) {
  const auto& c = ctx.cfg;
  const auto& ab = c.ablation;
  ExperimentModel full = c.model();
  std::array<double, kQubits> up{}, down{};
  for (int q = 0; q < kQubits; ++q) {
    up[q] = 1.0;
    down[q] = 1.0 - 4.0 * ab.detector_error[q];
  }
  full.detectors = sim::DetectorModel::from_pairs(up, down);
  full.fractions = Experiment(restrict_noise(full, {true, true, false, false})).fractions();

  json rows = json::array();
  std::string csv = "row,multiphoton,distinguishability,couplers,detectors,fidelity,purity,reference_fidelity,"
                    "reference_purity\n";
  ctx.out << "row                   F       P       (device F, P)\n";
  const auto table = ablation_rows();
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& row = table[i];
    const Experiment e(restrict_noise(full, row.noise));
    const auto ts = e.tomography(shots_or_exact(c, ab.exact), child_seed(c.seed, i));
    const auto mle = analysis::mle_reconstruct(ts);
    const double f = fidelity_to_pure(mle.rho, ghz_state(-e.model().stage.theta()));
    const double p = purity(mle.rho);
    rows.push_back(json{{"name", row.name},
                        {"multiphoton", row.noise.multiphoton},
                        {"distinguishability", row.noise.distinguishability},
                        {"couplers", row.noise.couplers},
                        {"detectors", row.noise.detectors},
                        {"fidelity", f},
                        {"purity", p},
                        {"reference_fidelity", row.reference_fidelity},
                        {"reference_purity", row.reference_purity},
                        {"mle_converged", mle.converged}});
    auto flag = [](bool b) { return b ? "1" : "0"; };
    csv += row.name + "," + flag(row.noise.multiphoton) + "," + flag(row.noise.distinguishability) + "," +
           flag(row.noise.couplers) + "," + flag(row.noise.detectors) + "," + fmt("%.6f", f) + "," + fmt("%.6f", p) +
           "," + fmt("%.3f", row.reference_fidelity) + "," + fmt("%.3f", row.reference_purity) + "\n";
    std::string name = row.name;
    name.resize(20, ' ');
    ctx.out << name << "  " << fmt("%.4f", f) << "  " << fmt("%.4f", p) << "  (" << fmt("%.3f", row.reference_fidelity)
            << ", " << fmt("%.3f", row.reference_purity) << ")\n";
  }

  json j = header("ablation");
  j["exact"] = ab.exact;
  j["detector_efficiencies"] = full.detectors.efficiencies;
  j["rows"] = rows;
  ctx.write_json("ablation.json", j);
  ctx.write_text("ablation.csv", csv);
}

void cmd_qss(Context& ctx) {
  const auto& c = ctx.cfg;
  const Experiment e(c.model());
  const auto dists = qss::qss_distributions(e);
  const auto run = qss::run_qss(dists, c.qss.rounds, c.seed);

  json j = header("qss");
  j["report"] = io::to_json(run.report);
  j["expected_qber"] = qss::expected_qber(dists);
  ctx.write_json("qss.json", j);
  ctx.write_text("qss_transcript.csv", io::transcript_csv(run.transcript));
  ctx.out << "raw " << run.report.raw_length << ", sifted " << run.report.sifted_length << ", QBER "
          << fmt("%.4f", run.report.qber) << (run.report.secure ? " (below threshold)" : " (above threshold)") << "\n";
}

void cmd_calibrate(Context& ctx) {
  const auto& cc = ctx.cfg.calibrate;
  const chip::HeaterCalibration cal = cc.calibration_file
                                          ? io::heater_calibration_from_json(json::parse(io::read_text(*cc.calibration_file)))
                                          : chip::HeaterCalibration::device_default();
  chip::MziPhases target;
  if (!cc.settings.empty()) {
    const PauliString labels = config::parse_labels(cc.settings, "calibrate.settings");
    for (int q = 0; q < kQubits; ++q) {
      const auto s = chip::setting_for_projector(labels[q], q + 1);
      target.alpha[q] = s.alpha;
      target.phi[q] = s.phi;
    }
  } else {
    target.alpha = cc.alpha;
    target.phi = cc.phi;
  }
  const auto currents = chip::heater_solve(cal, target);
  const auto achieved = chip::heater_forward(cal, currents);
  double residual = 0.0;
  auto wrapped = [](double d) { return std::abs(std::remainder(d, 2 * std::numbers::pi)); };
  for (int q = 0; q < kQubits; ++q) {
    residual = std::max({residual, wrapped(achieved.alpha[q] - target.alpha[q]), wrapped(achieved.phi[q] - target.phi[q])});
  }
  std::array<double, chip::kHeaters> ma{};
  for (int k = 0; k < chip::kHeaters; ++k) ma[k] = currents[k] * 1e3;

  json j = header("calibrate");
  j["target"] = json{{"alpha_rad", target.alpha}, {"phi_rad", target.phi}};
  j["currents_ma"] = ma;
  j["power_mw"] = chip::dissipated_power(cal, currents) * 1e3;
  j["achieved"] = json{{"alpha_rad", achieved.alpha}, {"phi_rad", achieved.phi}};
  j["max_residual_rad"] = residual;
  ctx.write_json("calibrate.json", j);
  ctx.out << "total heater power " << fmt("%.2f", j["power_mw"].get<double>()) << " mW, max residual "
          << fmt("%.2e", residual) << " rad\n";
}

void cmd_rate(Context& ctx) {
  const auto& b = ctx.cfg.rate;
  const double rate = sim::coincidence_rate(b);
  const std::string note = "Loss-budget estimate " + fmt("%.2f", rate) + " Hz versus about " +
                           fmt("%.1f", kObservedRateHz) +
                           " Hz observed on the device; the budget omits losses that were not characterised "
                           "individually, so treat it as an upper bound.";
  json j = header("rate");
  j["rate_hz"] = rate;
  j["observed_rate_hz"] = kObservedRateHz;
  j["note"] = note;
  j["budget"] = config::serialize(ctx.cfg)["rate"];
  ctx.write_json("rate.json", j);
  ctx.out << note << "\n";
}

void cmd_config_init(Context& ctx) {
  ctx.write_text("ghzlab.json", config::config_template());
  ctx.out << "wrote " << (ctx.out_dir / "ghzlab.json").string() << "\n";
}

const std::map<std::string, std::function<void(Context&)>>& table() {
  static const std::map<std::string, std::function<void(Context&)>> t = {
      {"simulate", cmd_simulate},   {"phase-scan", cmd_phase_scan}, {"tomography", cmd_tomography},
      {"witness", cmd_witness},     {"bell", cmd_bell},             {"bell-sweep", cmd_bell_sweep},
      {"ablation", cmd_ablation},   {"qss", cmd_qss},               {"calibrate", cmd_calibrate},
      {"rate", cmd_rate},           {"config-init", cmd_config_init},
  };
  return t;
}

std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

int thread_count(const Options& o) {
  if (o.threads) {
    if (*o.threads < 1) throw ConfigError("--threads must be at least 1");
    return *o.threads;
  }
  const char* env = std::getenv(kThreadsVariable);
  if (!env || !*env) return omp_get_max_threads();
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1 || n > 4096) throw ConfigError(std::string(kThreadsVariable) + " must be a positive integer");
  return static_cast<int>(n);
}

json manifest(const Context& ctx, const Options& o, int threads) {
  return json{{"schema_version", io::kSchemaVersion},
              {"command", o.command},
              {"config_file", o.config ? json(fs::absolute(*o.config).string()) : json(nullptr)},
              {"config", config::serialize(ctx.cfg)},
              {"seed", ctx.cfg.seed},
              {"threads", threads},
              {"files", ctx.files},
              {"versions",
               {{"ghzlab", kVersion},
                {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                              std::to_string(EIGEN_MINOR_VERSION)},
                {"openmp", _OPENMP},
                {"compiler", __VERSION__}}},
              {"created_utc", utc_timestamp()}};
}

} // namespace

std::vector<std::string> commands() {
  std::vector<std::string> names;
  for (const auto& [k, v] : table()) names.push_back(k);
  return names;
}

int run(const Options& options, std::ostream& out, std::ostream& err) {
  try {
    const auto it = table().find(options.command);
    if (it == table().end()) throw ConfigError("unknown command '" + options.command + "'");
    const int threads = thread_count(options);
    omp_set_num_threads(threads);

    Context ctx{options.config ? config::parse(io::read_text(*options.config)) : config::ExperimentConfig{},
                options.out_dir, out, {}};
    std::error_code ec;
    fs::create_directories(options.out_dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + options.out_dir.string() + ": " + ec.message());

    it->second(ctx);
    ctx.files.push_back("manifest.json");
    io::write_json(options.out_dir / "manifest.json", manifest(ctx, options, threads));
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const CalibrationError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DomainError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const json::exception& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
}

int main(int argc, char** argv) {
  CLI::App app{"Simulation and analysis of a four-photon GHZ experiment on a photonic chip"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  Options options;
  std::string config_path;
  std::string out_dir = ".";
  int threads = 0;
  const std::map<std::string, std::string> help = {
      {"simulate", "outcome distribution for one measurement setting"},
      {"phase-scan", "phase witness against heater power, with cosine fit"},
      {"tomography", "81-setting tomography and maximum-likelihood reconstruction"},
      {"witness", "stabilizer witness"},
      {"bell", "Bell-like inequality"},
      {"bell-sweep", "Bell value against photon distinguishability"},
      {"ablation", "fidelity and purity with each noise source toggled"},
      {"qss", "four-party quantum secret sharing"},
      {"calibrate", "heater currents for target phases"},
      {"rate", "fourfold coincidence rate from the loss budget"},
      {"config-init", "write a commented configuration template"},
  };
  for (const auto& name : commands()) {
    CLI::App* sub = app.add_subcommand(name, help.at(name));
    sub->add_option("-c,--config", config_path, "configuration file (JSON, comments allowed)");
    sub->add_option("-o,--out", out_dir, "output directory")->capture_default_str();
    sub->add_option("-j,--threads", threads, std::string("worker threads (overrides ") + kThreadsVariable + ")");
    sub->callback([&options, name] { options.command = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }
  if (!config_path.empty()) options.config = config_path;
  options.out_dir = out_dir;
  if (threads != 0) options.threads = threads;
  return run(options, std::cout, std::cerr);
}

} // namespace ghzlab::cli
