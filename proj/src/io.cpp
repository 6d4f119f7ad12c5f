#include "ghzlab/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "ghzlab/errors.hpp"

namespace ghzlab::io {

namespace {

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

PauliString labels_from_json(const json& j) {
  if (!j.is_array() || j.size() != kQubits) throw ConfigError("settings must be an array of 4 Pauli labels");
  PauliString p;
  for (int q = 0; q < kQubits; ++q) p[q] = pauli_from_string(j[q].get<std::string>());
  return p;
}

char case_char(qss::Case c) {
  return static_cast<char>(c);
}

} // namespace

json to_json(const sim::OutcomeDistribution& d) {
  json probs = json::object();
  for (int o = 0; o < kOutcomes; ++o) probs[outcome_label(o)] = d.probs[o];
  json j;
  j["probabilities"] = probs;
  j["discard_mass"] = d.discard_mass;
  j["success_probability"] = d.success();
  if (d.success() > 0.0) {
    json cond = json::object();
    const auto c = d.conditional();
    for (int o = 0; o < kOutcomes; ++o) cond[outcome_label(o)] = c[o];
    j["conditional"] = cond;
  }
  return j;
}

std::string distribution_csv(const sim::OutcomeDistribution& d) {
  std::ostringstream out;
  out << "outcome,probability,raw_probability\n";
  const double s = d.success();
  for (int o = 0; o < kOutcomes; ++o) {
    out << outcome_label(o) << ',' << fmt("%.12g", s > 0 ? d.probs[o] / s : 0.0) << ','
        << fmt("%.12g", d.probs[o]) << '\n';
  }
  return out.str();
}

json to_json(const analysis::MeasurementRecord& r) {
  json j;
  j["settings"] = labels_json(r.settings);
  j["exact"] = r.exact;
  j["counts"] = r.counts;
  return j;
}

analysis::MeasurementRecord record_from_json(const json& j) {
  analysis::MeasurementRecord r;
  r.settings = labels_from_json(j.at("settings"));
  r.exact = j.value("exact", false);
  const auto& c = j.at("counts");
  if (!c.is_array() || c.size() != kOutcomes) throw ConfigError("record counts must hold 16 entries");
  for (int o = 0; o < kOutcomes; ++o) {
    r.counts[o] = c[o].get<double>();
    if (r.counts[o] < 0.0) throw ConfigError("record counts must be non-negative");
  }
  return r;
}

json to_json(const analysis::TomographySet& ts) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["records"] = json::array();
  for (const auto& r : ts.records) j["records"].push_back(to_json(r));
  return j;
}

analysis::TomographySet tomography_from_json(const json& j) {
  analysis::TomographySet ts;
  for (const auto& r : j.at("records")) ts.records.push_back(record_from_json(r));
  return ts;
}

json to_json(const ComplexMatrix& m) {
  json re = json::array(), im = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json rr = json::array(), ri = json::array();
    for (int c = 0; c < m.cols(); ++c) {
      rr.push_back(m(r, c).real());
      ri.push_back(m(r, c).imag());
    }
    re.push_back(rr);
    im.push_back(ri);
  }
  return json{{"real", re}, {"imag", im}};
}

ComplexMatrix matrix_from_json(const json& j) {
  const auto& re = j.at("real");
  const auto& im = j.at("imag");
  const auto n = static_cast<Eigen::Index>(re.size());
  if (im.size() != re.size()) throw DimensionError("real and imaginary parts differ in size");
  ComplexMatrix m(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    if (re[r].size() != static_cast<std::size_t>(n) || im[r].size() != static_cast<std::size_t>(n)) {
      throw DimensionError("matrix must be square");
    }
    for (Eigen::Index c = 0; c < n; ++c) m(r, c) = Complex(re[r][c].get<double>(), im[r][c].get<double>());
  }
  return m;
}

std::string matrix_table(const ComplexMatrix& m) {
  std::ostringstream out;
  for (const char* part : {"Re", "Im"}) {
    out << "# " << part << "(rho)\n      ";
    for (int c = 0; c < m.cols(); ++c) out << ' ' << outcome_label(c) << "  ";
    out << '\n';
    for (int r = 0; r < m.rows(); ++r) {
      out << outcome_label(r) << "  ";
      for (int c = 0; c < m.cols(); ++c) {
        const double v = part[0] == 'R' ? m(r, c).real() : m(r, c).imag();
        out << fmt("%7.4f", std::abs(v) < 5e-5 ? 0.0 : v);
      }
      out << '\n';
    }
    out << '\n';
  }
  return out.str();
}

json to_json(const analysis::WitnessResult& w) {
  return json{{"value", w.value},
              {"fidelity_lower_bound", w.fidelity_lower_bound},
              {"g1", w.g1},
              {"stabilizer_term", w.stabilizer_term}};
}

json to_json(const analysis::BellResult& b) {
  const auto rows = analysis::bell_settings();
  json terms = json::array();
  for (int i = 0; i < analysis::kBellTerms; ++i) {
    terms.push_back(json{{"settings", labels_json(rows[i])},
                         {"coefficient", analysis::bell_coefficients()[i]},
                         {"expectation", b.terms[i]}});
  }
  return json{{"value", b.value}, {"standard_error", b.standard_error}, {"classical_bound", 6.0}, {"terms", terms}};
}

json to_json(const analysis::CosineFit& f) {
  return json{{"amplitude", f.amplitude},
              {"slope_rad_per_mw", f.slope},
              {"offset_rad", f.offset},
              {"zero_phase_power_mw", f.zero_phase_power},
              {"rms_residual", f.rms_residual}};
}

json to_json(const qss::QssReport& r) {
  return json{{"raw_length", r.raw_length}, {"sifted_length", r.sifted_length}, {"sift_rate", r.sift_rate},
              {"qber", r.qber},             {"secure", r.secure},               {"threshold", qss::kSecurityThreshold}};
}

std::string transcript_csv(const std::vector<qss::RoundRecord>& rounds) {
  std::ostringstream out;
  out << "round,bases,outcomes,case,kept,inferred,actual\n";
  for (std::size_t i = 0; i < rounds.size(); ++i) {
    const auto& r = rounds[i];
    out << i << ',' << qss::to_string(r.bases) << ',';
    for (int b : r.outcomes) out << b;
    out << ',' << case_char(r.c) << ',' << (r.kept ? 1 : 0) << ',';
    if (r.kept) out << r.inferred;
    out << ',' << r.actual << '\n';
  }
  return out.str();
}

json to_json(const chip::HeaterCalibration& cal) {
  json a = json::array(), b = json::array();
  for (int i = 0; i < 4; ++i) {
    json ra = json::array(), rb = json::array();
    for (int j = 0; j < 8; ++j) {
      ra.push_back(cal.a(i, j));
      rb.push_back(cal.b(i, j));
    }
    a.push_back(ra);
    b.push_back(rb);
  }
  json phi0 = json::array();
  for (int i = 0; i < 4; ++i) phi0.push_back(cal.phi0[i]);
  return json{{"a_krad_per_a2", a},
              {"b_krad_per_a2", b},
              {"phi0_rad", phi0},
              {"resistances_ohm", cal.resistances},
              {"dead_channels", cal.dead_channels}};
}

chip::HeaterCalibration heater_calibration_from_json(const json& j) {
  chip::HeaterCalibration cal;
  auto read_block = [&](const char* key, Eigen::Matrix<double, 4, 8>& m) {
    const auto& v = j.at(key);
    if (!v.is_array() || v.size() != 4) throw ConfigError(std::string(key) + " must be a 4x8 array");
    for (int i = 0; i < 4; ++i) {
      if (!v[i].is_array() || v[i].size() != 8) throw ConfigError(std::string(key) + " must be a 4x8 array");
      for (int k = 0; k < 8; ++k) m(i, k) = v[i][k].get<double>();
    }
  };
  read_block("a_krad_per_a2", cal.a);
  read_block("b_krad_per_a2", cal.b);
  const auto& phi0 = j.at("phi0_rad");
  if (!phi0.is_array() || phi0.size() != 4) throw ConfigError("phi0_rad must hold 4 values");
  for (int i = 0; i < 4; ++i) cal.phi0[i] = phi0[i].get<double>();
  const auto& r = j.at("resistances_ohm");
  if (!r.is_array() || r.size() != chip::kHeaters) throw ConfigError("resistances_ohm must hold 16 values");
  for (int i = 0; i < chip::kHeaters; ++i) cal.resistances[i] = r[i].get<double>();
  cal.dead_channels = j.value("dead_channels", std::vector<int>{});
  cal.validate();
  return cal;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

void write_json(const std::filesystem::path& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

} // namespace ghzlab::io
