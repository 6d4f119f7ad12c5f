#pragma once

// Glue between the physical model and the analysis layer: turns Pauli
// labels into hardware settings, runs the simulator and packages the result
// as measurement records.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ghzlab/analysis.hpp"
#include "ghzlab/chip.hpp"
#include "ghzlab/simulator.hpp"
#include "ghzlab/source.hpp"

namespace ghzlab {

struct ExperimentModel {
  source::SourceSpec source = source::SourceSpec::ideal();
  /// Taken from fit_master_fractions(source.overlaps) when empty.
  std::optional<source::MasterFractions> fractions;
  chip::PreparationStage stage = chip::PreparationStage::ideal();
  sim::DetectorModel detectors = sim::DetectorModel::ideal();
  /// Retune every MZI for the detector imbalance before measuring.
  bool compensate_detectors = false;
};

class Experiment {
public:
  explicit Experiment(ExperimentModel model);

  const ExperimentModel& model() const { return model_; }
  const source::MasterFractions& fractions() const { return fractions_; }
  const source::JointInputEnumeration& inputs() const { return inputs_; }

  chip::MeasurementSettings settings(const PauliString& labels) const;

  /// Raw simulator output, outcome bits as seen on the detectors.
  sim::OutcomeDistribution raw_distribution(const PauliString& labels) const;

  /// Distribution in the record convention: bits of -X / -Z parties are
  /// flipped so that bit 0 is the +1 eigenvector of the unsigned operator.
  sim::OutcomeDistribution distribution(const PauliString& labels) const;
  std::vector<sim::OutcomeDistribution> distributions(std::span<const PauliString> labels) const;

  analysis::MeasurementRecord exact_record(const PauliString& labels) const;
  analysis::MeasurementRecord sampled_record(const PauliString& labels, std::uint64_t shots,
                                             std::uint64_t seed) const;

  /// Exact probabilities times `exact_scale` when `shots` is empty, else
  /// multinomial counts with one child seed per setting.
  analysis::TomographySet tomography(std::optional<std::uint64_t> shots, std::uint64_t seed,
                                     double exact_scale = 1e6) const;

  std::vector<analysis::MeasurementRecord> records(std::span<const PauliString> labels,
                                                   std::optional<std::uint64_t> shots, std::uint64_t seed) const;

private:
  ExperimentModel model_;
  source::MasterFractions fractions_;
  source::JointInputEnumeration inputs_;
};

/// Imperfections that can be switched on independently.
struct NoiseSources {
  bool multiphoton = false;
  bool distinguishability = false;
  bool couplers = false;
  bool detectors = false;
};

/// Copy of `full` with every imperfection outside `keep` replaced by its
/// ideal counterpart. Transmission is kept since it only matters together
/// with multiphoton emission.
ExperimentModel restrict_noise(const ExperimentModel& full, const NoiseSources& keep);

struct AblationRow {
  std::string name;
  NoiseSources noise;
  double reference_fidelity = 0.0;
  double reference_purity = 0.0;
};

/// The six single-source and combined rows, with the fidelity and purity
/// reported for the fabricated device.
std::vector<AblationRow> ablation_rows();

/// Flips the outcome bit of every party whose label carries a minus sign.
sim::OutcomeDistribution to_record_convention(const sim::OutcomeDistribution& d, const PauliString& labels);

} // namespace ghzlab
