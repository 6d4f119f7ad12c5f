#include <gtest/gtest.h>

#include <filesystem>
#include <string>

#include "ghzlab/config.hpp"
#include "ghzlab/errors.hpp"
#include "ghzlab/io.hpp"

using namespace ghzlab;
using nlohmann::json;

namespace {

std::string config_error(const std::string& text) {
  try {
    config::parse(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

} // namespace

TEST(Config, TemplateParsesToDefaults) {
  const auto t = config::config_template();
  EXPECT_NE(t.find("//"), std::string::npos);
  const auto c = config::parse(t);
  EXPECT_EQ(config::serialize(c), config::serialize(config::ExperimentConfig{}));
}

TEST(Config, DefaultsDescribeTheDevice) {
  const config::ExperimentConfig c;
  EXPECT_DOUBLE_EQ(c.source.g2, 0.005);
  EXPECT_DOUBLE_EQ(c.source.eta, 0.039);
  EXPECT_DOUBLE_EQ(c.reflectivities[2], 0.4905);
  EXPECT_EQ(c.shots_per_setting, 450u);
  EXPECT_FALSE(c.master_fractions.has_value());
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, SerializeIsIdempotent) {
  config::ExperimentConfig c;
  c.seed = 42;
  c.master_fractions = std::array<double, 4>{0.9, 0.95, 0.97, 0.99};
  c.calibrate.calibration_file = "cal.json";
  c.bell_sweep.scales = {1.0, 0.5, 0.0};
  const json once = config::serialize(c);
  const json twice = config::serialize(config::parse(once.dump()));
  EXPECT_EQ(once, twice);
  EXPECT_EQ(twice.dump(2), config::serialize(config::parse(twice.dump(2))).dump(2));
}

TEST(Config, PartialDocumentKeepsDefaults) {
  const auto c = config::parse(R"({ "seed": 7, /* block comment */ "source": { "g2": 0.0 } // trailing
  })");
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.source.g2, 0.0);
  EXPECT_DOUBLE_EQ(c.source.overlaps.ab, 0.924);
}

TEST(Config, UnknownKeysNameTheirPath) {
  EXPECT_NE(config_error(R"({"sede": 1})").find("sede"), std::string::npos);
  EXPECT_NE(config_error(R"({"source": {"g3": 0.1}})").find("source.g3"), std::string::npos);
}

TEST(Config, RangeErrorsNameTheirField) {
  EXPECT_NE(config_error(R"({"source": {"g2": 0.7}})").find("source.g2"), std::string::npos);
  EXPECT_NE(config_error(R"({"source": {"overlaps": {"bd": 1.5}}})").find("source.overlaps.bd"), std::string::npos);
  EXPECT_NE(config_error(R"({"chip": {"reflectivities": [0.5, 0.5, 1.0, 0.5]}})").find("chip.reflectivities"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"detectors": {"efficiencies": [1,1,1,1,1,1,1,0]}})").find("detectors.efficiencies"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"simulate": {"settings": ["X","X","Q","X"]}})").find("simulate.settings"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"bell_sweep": {"photon": 4}})").find("bell_sweep.photon"), std::string::npos);
  EXPECT_NE(config_error(R"({"shots_per_setting": 0})").find("shots_per_setting"), std::string::npos);
  EXPECT_NE(config_error(R"({"rate": {"eta_chip": 2}})").find("rate"), std::string::npos);
}

TEST(Config, TypeAndSyntaxErrors) {
  EXPECT_NE(config_error(R"({"seed": "abc"})").find("seed"), std::string::npos);
  EXPECT_NE(config_error(R"({"source": 3})").find("source"), std::string::npos);
  EXPECT_FALSE(config_error("{ not json").empty());
  EXPECT_FALSE(config_error(R"({"chip": {"path_phases": [0, 0]}})").empty());
}

TEST(Config, ModelCarriesOverrides) {
  const auto c = config::parse(R"({"source": {"master_fractions": [1, 0.9, 0.9, 1]},
                                   "chip": {"path_phases": [0.1, 0, 0, 0, 0, 0, 0, 0]},
                                   "detectors": {"compensate": true}})");
  const auto m = c.model();
  ASSERT_TRUE(m.fractions.has_value());
  EXPECT_DOUBLE_EQ(m.fractions->x[1], 0.9);
  EXPECT_DOUBLE_EQ(m.stage.path_phases[0], 0.1);
  EXPECT_TRUE(m.compensate_detectors);
  EXPECT_DOUBLE_EQ(m.stage.reflectivities[1], 0.505);
}

TEST(Io, RecordRoundTrip) {
  analysis::MeasurementRecord r;
  r.settings = {Pauli::XPlusZ, Pauli::MinusX, Pauli::I, Pauli::Y};
  for (int o = 0; o < kOutcomes; ++o) r.counts[o] = o * 3;
  const auto back = io::record_from_json(io::to_json(r));
  EXPECT_EQ(back.settings, r.settings);
  EXPECT_EQ(back.counts, r.counts);
  EXPECT_EQ(back.exact, r.exact);
  json bad = io::to_json(r);
  bad["counts"].erase(0);
  EXPECT_THROW(io::record_from_json(bad), ConfigError);
}

TEST(Io, MatrixRoundTrip) {
  ComplexMatrix m = ComplexMatrix::Random(16, 16);
  const auto back = io::matrix_from_json(json::parse(io::to_json(m).dump()));
  EXPECT_EQ((back - m).norm(), 0.0);
  const auto table = io::matrix_table(DensityMatrix::from_pure(ghz_state(0)).matrix());
  EXPECT_NE(table.find("0.5000"), std::string::npos);
  EXPECT_NE(table.find("# Im(rho)"), std::string::npos);
}

TEST(Io, HeaterCalibrationRoundTrip) {
  const auto cal = chip::HeaterCalibration::device_default();
  const auto back = io::heater_calibration_from_json(io::to_json(cal));
  EXPECT_EQ(back.a, cal.a);
  EXPECT_EQ(back.b, cal.b);
  EXPECT_EQ(back.phi0, cal.phi0);
  EXPECT_EQ(back.dead_channels, cal.dead_channels);
}

TEST(Io, DistributionCsv) {
  sim::OutcomeDistribution d;
  d.probs[5] = 0.0625;
  d.probs[10] = 0.0625;
  d.discard_mass = 0.875;
  const auto csv = io::distribution_csv(d);
  EXPECT_NE(csv.find("0101,0.5,0.0625"), std::string::npos);
  EXPECT_NE(csv.find("1010,0.5,0.0625"), std::string::npos);
}
