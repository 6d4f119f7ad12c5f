#include "ghzlab/config.hpp"

#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "ghzlab/errors.hpp"

namespace ghzlab::config {

namespace {

using nlohmann::json;

// Reads the keys of one JSON object, remembering which were consumed so
// that unknown (misspelt) keys can be reported.
class Reader {
public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    used_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(field(key) + ": wrong type");
    }
  }

  template <class T>
  void get_optional(const char* key, std::optional<T>& out) {
    used_.insert(key);
    if (!j_.contains(key) || j_.at(key).is_null()) {
      out.reset();
      return;
    }
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(field(key) + ": wrong type");
    }
  }

  template <class F>
  void child(const char* key, F&& f) {
    used_.insert(key);
    if (!j_.contains(key)) return;
    Reader r(j_.at(key), field(key));
    f(r);
    r.finish();
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!used_.count(k)) throw ConfigError(field(k.c_str()) + ": unknown key");
    }
  }

  std::string field(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

private:
  std::string where() const { return path_.empty() ? "<root>" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError(field + ": " + what);
}

bool in_closed(double v, double lo, double hi) {
  return v >= lo && v <= hi;
}

json overlaps_json(const source::OverlapMap& m) {
  return json{{"ab", m.ab}, {"ac", m.ac}, {"bd", m.bd}, {"cd", m.cd}};
}

const std::map<std::string, std::string>& comments() {
  static const std::map<std::string, std::string> c = {
      {"schema_version", "Configuration format version."},
      {"seed", "Master seed; every random stream is derived from it."},
      {"shots_per_setting", "Post-selected fourfold events per measurement setting (0.5 Hz for 900 s)."},
      {"mc_resamples", "Poisson resamples used for Monte-Carlo error bars."},
      {"source", "Single-photon source."},
      {"source.g2", "Second-order autocorrelation g2(0) of the source."},
      {"source.eta", "End-to-end transmission of each photon."},
      {"source.overlaps", "Two-photon overlaps measured on the chip for pairs AB, AC, BD, CD."},
      {"source.distinguishability_scale", "Multiplier on each photon's master fraction (1 = unchanged, 0 = fully distinguishable)."},
      {"source.master_fractions", "Explicit master fractions; null fits them to the overlaps."},
      {"chip", "Preparation stage."},
      {"chip.reflectivities", "Power reflectivity of the four preparation couplers (mean of H and V)."},
      {"chip.path_phases", "Phase on each of the eight output paths, rad."},
      {"detectors", "Single-photon detectors, ordered (upper, lower) for parties 1..4."},
      {"detectors.efficiencies", "Relative efficiency of each detector."},
      {"detectors.compensate", "Retune each interferometer so the detected balance matches the target."},
      {"simulate", "simulate: outcome distribution for one setting."},
      {"simulate.settings", "Pauli label per party: X, Y, Z, -X, -Z, (X+Z)/sqrt2, (X-Z)/sqrt2 or I."},
      {"phase_scan", "phase-scan: phase witness against outer-heater power on interferometer 1."},
      {"phase_scan.power_min_mw", "First heater power, mW."},
      {"phase_scan.power_max_mw", "Last heater power, mW."},
      {"phase_scan.points", "Number of powers in the scan."},
      {"phase_scan.zero_phase_power_mw", "Heater power at which the internal phase is zero, mW."},
      {"phase_scan.exact", "Use exact probabilities instead of sampled counts."},
      {"tomography", "tomography: 81-setting reconstruction."},
      {"tomography.exact", "Use exact probabilities (scaled to 1e6 events) instead of sampled counts."},
      {"tomography.mc_resamples", "Resamples for the fidelity and purity error bars (each runs a full reconstruction)."},
      {"bell_sweep", "bell-sweep: Bell value against photon distinguishability."},
      {"bell_sweep.photon", "Photon made distinguishable, 0..3 for A..D."},
      {"bell_sweep.scales", "Distinguishability scales to visit."},
      {"bell_sweep.exact", "Use exact probabilities instead of sampled counts."},
      {"ablation", "ablation: fidelity and purity with each noise source toggled."},
      {"ablation.detector_error", "Mean detector balance error per party; the lower detector runs at 1 - 4 * error."},
      {"ablation.exact", "Use exact probabilities instead of sampled counts."},
      {"qss", "qss: four-party secret sharing."},
      {"qss.rounds", "Raw key length (rounds)."},
      {"calibrate", "calibrate: heater currents for target interferometer phases."},
      {"calibrate.settings", "Pauli label per party; an empty list uses alpha and phi instead."},
      {"calibrate.alpha", "Target input phases, rad."},
      {"calibrate.phi", "Target internal phases, rad."},
      {"calibrate.calibration_file", "Heater calibration JSON; null uses the built-in device values."},
      {"rate", "rate: fourfold coincidence rate from the loss budget."},
      {"rate.repetition_rate_hz", "Laser repetition rate, Hz."},
      {"rate.filling_factor", "Demultiplexer filling factor."},
      {"rate.first_lens_brightness", "Brightness at the first lens."},
      {"rate.eta_collection", "Collection efficiency after the first lens."},
      {"rate.eta_demux", "Demultiplexer optical efficiency."},
      {"rate.eta_chip", "Chip insertion transmission."},
      {"rate.eta_detector", "Mean detector efficiency."},
  };
  return c;
}

void emit(std::ostringstream& out, const json& v, const std::string& path, int indent) {
  if (!v.is_object()) {
    out << v.dump();
    return;
  }
  const std::string pad(indent + 2, ' ');
  out << "{\n";
  std::size_t i = 0;
  for (const auto& [k, child] : v.items()) {
    const std::string p = path.empty() ? k : path + "." + k;
    if (auto it = comments().find(p); it != comments().end()) out << pad << "// " << it->second << "\n";
    out << pad << '"' << k << "\": ";
    emit(out, child, p, indent + 2);
    out << (++i < v.size() ? ",\n" : "\n");
  }
  out << std::string(indent, ' ') << "}";
}

} // namespace

PauliString parse_labels(const std::vector<std::string>& labels, const std::string& field) {
  require(labels.size() == kQubits, field, "needs exactly 4 labels");
  PauliString p;
  for (int q = 0; q < kQubits; ++q) {
    try {
      p[q] = pauli_from_string(labels[q]);
    } catch (const DomainError&) {
      throw ConfigError(field + ": unknown label '" + labels[q] + "'");
    }
  }
  return p;
}

void ExperimentConfig::validate() const {
  require(schema_version == 1, "schema_version", "only version 1 is supported");
  require(shots_per_setting >= 1, "shots_per_setting", "must be at least 1");
  require(mc_resamples >= 2, "mc_resamples", "must be at least 2");

  require(source.g2 >= 0.0 && source.g2 < 0.5, "source.g2", "must lie in [0, 0.5)");
  require(source.eta > 0.0 && source.eta <= 1.0, "source.eta", "must lie in (0, 1]");
  const std::array<std::pair<const char*, double>, 4> ov = {
      {{"ab", source.overlaps.ab}, {"ac", source.overlaps.ac}, {"bd", source.overlaps.bd}, {"cd", source.overlaps.cd}}};
  for (const auto& [k, v] : ov) require(in_closed(v, 0, 1), std::string("source.overlaps.") + k, "must lie in [0, 1]");
  for (double s : source.distinguishability_scale) {
    require(in_closed(s, 0, 1), "source.distinguishability_scale", "entries must lie in [0, 1]");
  }
  if (master_fractions) {
    for (double x : *master_fractions) require(in_closed(x, 0, 1), "source.master_fractions", "entries must lie in [0, 1]");
  }
  for (double r : reflectivities) require(r > 0.0 && r < 1.0, "chip.reflectivities", "entries must lie in (0, 1)");
  for (double t : path_phases) require(std::isfinite(t), "chip.path_phases", "entries must be finite");
  for (double e : detector_efficiencies) {
    require(e > 0.0 && e <= 1.0, "detectors.efficiencies", "entries must lie in (0, 1]");
  }

  parse_labels(simulate_settings, "simulate.settings");

  require(phase_scan.points >= 5, "phase_scan.points", "must be at least 5");
  require(std::isfinite(phase_scan.power_min_mw) && phase_scan.power_min_mw >= 0.0, "phase_scan.power_min_mw",
          "must be finite and non-negative");
  require(std::isfinite(phase_scan.power_max_mw) && phase_scan.power_max_mw > phase_scan.power_min_mw,
          "phase_scan.power_max_mw", "must exceed power_min_mw");
  require(std::isfinite(phase_scan.zero_phase_power_mw), "phase_scan.zero_phase_power_mw", "must be finite");

  require(tomography.mc_resamples >= 0, "tomography.mc_resamples", "must be non-negative");
  require(tomography.mc_resamples != 1, "tomography.mc_resamples", "must be 0 or at least 2");

  require(bell_sweep.photon >= 0 && bell_sweep.photon < 4, "bell_sweep.photon", "must be 0..3");
  require(!bell_sweep.scales.empty(), "bell_sweep.scales", "must not be empty");
  for (double s : bell_sweep.scales) require(in_closed(s, 0, 1), "bell_sweep.scales", "entries must lie in [0, 1]");

  for (double e : ablation.detector_error) {
    require(e >= 0.0 && e < 0.25, "ablation.detector_error", "entries must lie in [0, 0.25)");
  }

  require(qss.rounds >= 1, "qss.rounds", "must be at least 1");

  if (!calibrate.settings.empty()) {
    const PauliString p = parse_labels(calibrate.settings, "calibrate.settings");
    for (Pauli x : p) require(x != Pauli::I, "calibrate.settings", "the identity has no interferometer setting");
  }
  for (double v : calibrate.alpha) require(std::isfinite(v), "calibrate.alpha", "entries must be finite");
  for (double v : calibrate.phi) require(std::isfinite(v), "calibrate.phi", "entries must be finite");

  try {
    rate.validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("rate: ") + e.what());
  }
}

ExperimentModel ExperimentConfig::model() const {
  ExperimentModel m;
  m.source = source;
  if (master_fractions) m.fractions = source::MasterFractions{*master_fractions};
  m.stage.reflectivities = reflectivities;
  m.stage.path_phases = path_phases;
  m.detectors.efficiencies = detector_efficiencies;
  m.compensate_detectors = compensate_detectors;
  return m;
}

ExperimentConfig parse(const std::string& text) {
  json root;
  try {
    root = json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig c;
  Reader r(root, "");
  r.get("schema_version", c.schema_version);
  r.get("seed", c.seed);
  r.get("shots_per_setting", c.shots_per_setting);
  r.get("mc_resamples", c.mc_resamples);
  r.child("source", [&](Reader& s) {
    s.get("g2", c.source.g2);
    s.get("eta", c.source.eta);
    s.get("distinguishability_scale", c.source.distinguishability_scale);
    s.get_optional("master_fractions", c.master_fractions);
    s.child("overlaps", [&](Reader& o) {
      o.get("ab", c.source.overlaps.ab);
      o.get("ac", c.source.overlaps.ac);
      o.get("bd", c.source.overlaps.bd);
      o.get("cd", c.source.overlaps.cd);
    });
  });
  r.child("chip", [&](Reader& s) {
    s.get("reflectivities", c.reflectivities);
    s.get("path_phases", c.path_phases);
  });
  r.child("detectors", [&](Reader& s) {
    s.get("efficiencies", c.detector_efficiencies);
    s.get("compensate", c.compensate_detectors);
  });
  r.child("simulate", [&](Reader& s) { s.get("settings", c.simulate_settings); });
  r.child("phase_scan", [&](Reader& s) {
    s.get("power_min_mw", c.phase_scan.power_min_mw);
    s.get("power_max_mw", c.phase_scan.power_max_mw);
    s.get("points", c.phase_scan.points);
    s.get("zero_phase_power_mw", c.phase_scan.zero_phase_power_mw);
    s.get("exact", c.phase_scan.exact);
  });
  r.child("tomography", [&](Reader& s) {
    s.get("exact", c.tomography.exact);
    s.get("mc_resamples", c.tomography.mc_resamples);
  });
  r.child("bell_sweep", [&](Reader& s) {
    s.get("photon", c.bell_sweep.photon);
    s.get("scales", c.bell_sweep.scales);
    s.get("exact", c.bell_sweep.exact);
  });
  r.child("ablation", [&](Reader& s) {
    s.get("detector_error", c.ablation.detector_error);
    s.get("exact", c.ablation.exact);
  });
  r.child("qss", [&](Reader& s) { s.get("rounds", c.qss.rounds); });
  r.child("calibrate", [&](Reader& s) {
    s.get("settings", c.calibrate.settings);
    s.get("alpha", c.calibrate.alpha);
    s.get("phi", c.calibrate.phi);
    s.get_optional("calibration_file", c.calibrate.calibration_file);
  });
  r.child("rate", [&](Reader& s) {
    s.get("repetition_rate_hz", c.rate.repetition_rate);
    s.get("filling_factor", c.rate.filling_factor);
    s.get("first_lens_brightness", c.rate.first_lens_brightness);
    s.get("eta_collection", c.rate.eta_collection);
    s.get("eta_demux", c.rate.eta_demux);
    s.get("eta_chip", c.rate.eta_chip);
    s.get("eta_detector", c.rate.eta_detector);
  });
  r.finish();
  c.validate();
  return c;
}

json serialize(const ExperimentConfig& c) {
  json j;
  j["schema_version"] = c.schema_version;
  j["seed"] = c.seed;
  j["shots_per_setting"] = c.shots_per_setting;
  j["mc_resamples"] = c.mc_resamples;
  j["source"] = {{"g2", c.source.g2},
                 {"eta", c.source.eta},
                 {"overlaps", overlaps_json(c.source.overlaps)},
                 {"distinguishability_scale", c.source.distinguishability_scale},
                 {"master_fractions", c.master_fractions ? json(*c.master_fractions) : json(nullptr)}};
  j["chip"] = {{"reflectivities", c.reflectivities}, {"path_phases", c.path_phases}};
  j["detectors"] = {{"efficiencies", c.detector_efficiencies}, {"compensate", c.compensate_detectors}};
  j["simulate"] = {{"settings", c.simulate_settings}};
  j["phase_scan"] = {{"power_min_mw", c.phase_scan.power_min_mw},
                     {"power_max_mw", c.phase_scan.power_max_mw},
                     {"points", c.phase_scan.points},
                     {"zero_phase_power_mw", c.phase_scan.zero_phase_power_mw},
                     {"exact", c.phase_scan.exact}};
  j["tomography"] = {{"exact", c.tomography.exact}, {"mc_resamples", c.tomography.mc_resamples}};
  j["bell_sweep"] = {{"photon", c.bell_sweep.photon}, {"scales", c.bell_sweep.scales}, {"exact", c.bell_sweep.exact}};
  j["ablation"] = {{"detector_error", c.ablation.detector_error}, {"exact", c.ablation.exact}};
  j["qss"] = {{"rounds", c.qss.rounds}};
  j["calibrate"] = {{"settings", c.calibrate.settings},
                    {"alpha", c.calibrate.alpha},
                    {"phi", c.calibrate.phi},
                    {"calibration_file", c.calibrate.calibration_file ? json(*c.calibrate.calibration_file) : json(nullptr)}};
  j["rate"] = {{"repetition_rate_hz", c.rate.repetition_rate},
               {"filling_factor", c.rate.filling_factor},
               {"first_lens_brightness", c.rate.first_lens_brightness},
               {"eta_collection", c.rate.eta_collection},
               {"eta_demux", c.rate.eta_demux},
               {"eta_chip", c.rate.eta_chip},
               {"eta_detector", c.rate.eta_detector}};
  return j;
}

std::string config_template() {
  std::ostringstream out;
  out << "// ghzlab experiment configuration. Comments are allowed; unknown keys are rejected.\n";
  emit(out, serialize(ExperimentConfig{}), "", 0);
  out << "\n";
  return out.str();
}

} // namespace ghzlab::config
