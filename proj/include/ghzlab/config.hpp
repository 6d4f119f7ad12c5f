#pragma once

// Experiment configuration: one JSON document (comments allowed) whose
// defaults describe the fabricated device and its source.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ghzlab/experiment.hpp"
#include "ghzlab/simulator.hpp"
#include "ghzlab/source.hpp"

namespace ghzlab::config {

struct PhaseScanConfig {
  double power_min_mw = 0.0;
  double power_max_mw = 100.0;
  int points = 41;
  double zero_phase_power_mw = 52.81;
  bool exact = false;
};

struct TomographyConfig {
  bool exact = false;
  int mc_resamples = 20;
};

struct BellSweepConfig {
  int photon = 2; // 0..3 = A..D
  std::vector<double> scales{1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1, 0.0};
  bool exact = false;
};

struct AblationConfig {
  /// Mean balance error per party; the lower detector of party q runs at
  /// efficiency 1 - 4 * error[q].
  std::array<double, kQubits> detector_error{0.026, 0.055, 0.032, 0.016};
  bool exact = true;
};

struct QssConfig {
  std::uint64_t rounds = 4060;
};

struct CalibrateConfig {
  /// Pauli label per party; when empty the explicit phases below are used.
  std::vector<std::string> settings{"X", "X", "X", "X"};
  std::array<double, kQubits> alpha{};
  std::array<double, kQubits> phi{};
  std::optional<std::string> calibration_file;
};

struct ExperimentConfig {
  int schema_version = 1;
  std::uint64_t seed = 20240607;
  std::uint64_t shots_per_setting = 450;
  int mc_resamples = 20;

  source::SourceSpec source = source::SourceSpec::device_default();
  std::optional<std::array<double, kQubits>> master_fractions;
  std::array<double, chip::kCouplers> reflectivities = chip::PreparationStage::measured_couplers().reflectivities;
  std::array<double, kModes> path_phases{};
  std::array<double, kModes> detector_efficiencies{1, 1, 1, 1, 1, 1, 1, 1};
  bool compensate_detectors = false;

  std::vector<std::string> simulate_settings{"Z", "Z", "Z", "Z"};
  PhaseScanConfig phase_scan;
  TomographyConfig tomography;
  BellSweepConfig bell_sweep;
  AblationConfig ablation;
  QssConfig qss;
  CalibrateConfig calibrate;
  sim::LossBudget rate;

  /// Throws ConfigError naming the offending field.
  void validate() const;
  ExperimentModel model() const;
};

/// Parses JSON text (// and /* */ comments allowed). Unknown keys and
/// out-of-range values raise ConfigError with the field path.
ExperimentConfig parse(const std::string& text);
nlohmann::json serialize(const ExperimentConfig& c);

/// Commented template with every default.
std::string config_template();

PauliString parse_labels(const std::vector<std::string>& labels, const std::string& field);

} // namespace ghzlab::config
