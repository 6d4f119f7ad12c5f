#pragma once

// JSON and CSV serialisation of the library's result types.

#include <filesystem>
#include <string>

#include <json.hpp>

#include "ghzlab/analysis.hpp"
#include "ghzlab/chip.hpp"
#include "ghzlab/qss.hpp"
#include "ghzlab/simulator.hpp"

namespace ghzlab::io {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

json to_json(const sim::OutcomeDistribution& d);
std::string distribution_csv(const sim::OutcomeDistribution& d);

json to_json(const analysis::MeasurementRecord& r);
analysis::MeasurementRecord record_from_json(const json& j);

json to_json(const analysis::TomographySet& ts);
analysis::TomographySet tomography_from_json(const json& j);

/// {"real": 16x16, "imag": 16x16}
json to_json(const ComplexMatrix& m);
ComplexMatrix matrix_from_json(const json& j);

/// Real and imaginary parts as two aligned text tables.
std::string matrix_table(const ComplexMatrix& m);

json to_json(const analysis::WitnessResult& w);
json to_json(const analysis::BellResult& b);
json to_json(const analysis::CosineFit& f);
json to_json(const qss::QssReport& r);
std::string transcript_csv(const std::vector<qss::RoundRecord>& rounds);

json to_json(const chip::HeaterCalibration& cal);
chip::HeaterCalibration heater_calibration_from_json(const json& j);

void write_text(const std::filesystem::path& path, const std::string& text);
/// Two-space indented JSON followed by a newline.
void write_json(const std::filesystem::path& path, const json& j);
std::string read_text(const std::filesystem::path& path);

} // namespace ghzlab::io
