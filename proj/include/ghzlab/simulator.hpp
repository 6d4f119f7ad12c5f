#pragma once

// Multi-photon propagation through the chip. Photons sharing an internal
// label interfere (permanents); different labels add incoherently.

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "ghzlab/chip.hpp"
#include "ghzlab/qmath.hpp"
#include "ghzlab/source.hpp"

namespace ghzlab::sim {

inline constexpr int kMaxPhotons = 8;

using ModeOccupation = std::array<std::uint8_t, kModes>;
using OccupationDistribution = std::map<ModeOccupation, double>;

struct OutcomeDistribution {
  std::array<double, kOutcomes> probs{};
  double discard_mass = 0.0;

  double success() const;
  /// probs / success(); throws DegenerateInputError when nothing survives.
  std::array<double, kOutcomes> conditional() const;
};

struct DetectorModel {
  std::array<double, kModes> efficiencies{1, 1, 1, 1, 1, 1, 1, 1};

  static DetectorModel ideal() { return {}; }
  /// Upper detector of party q at efficiency up[q], lower at down[q].
  static DetectorModel from_pairs(const std::array<double, kQubits>& up, const std::array<double, kQubits>& down);

  void validate() const;
  bool is_ideal() const;
};

struct LossBudget {
  double repetition_rate = 79e6; // Hz
  double filling_factor = 0.67;
  double first_lens_brightness = 0.5;
  double eta_collection = 0.29;
  double eta_demux = 0.75;
  double eta_chip = 0.54;
  double eta_detector = 0.65;

  void validate() const;
};

/// Occupation after the given photons pass through u. Throws CapacityError
/// above eight photons.
OccupationDistribution scatter_distribution(const ComplexMatrix& u, std::span<const source::LabeledPhoton> photons);
OccupationDistribution scatter_distribution(const ComplexMatrix& u, const source::JointInputTerm& term);

OccupationDistribution apply_detector_efficiency(const OccupationDistribution& dist, const DetectorModel& det);

/// Outcome index for a valid occupation, -1 otherwise.
int postselected_outcome(const ModeOccupation& occ);

OutcomeDistribution threshold_and_postselect(const OccupationDistribution& dist);

/// Full pipeline on a pre-enumerated input. The click-pattern kernel runs
/// term-parallel under OpenMP when `parallel` is set; accumulation order is
/// fixed so both modes give bitwise-identical results.
OutcomeDistribution qubit_distribution(const source::JointInputEnumeration& inputs, const ComplexMatrix& u,
                                       const DetectorModel& det, bool parallel = true);

OutcomeDistribution qubit_distribution(const source::JointInputEnumeration& inputs,
                                       const chip::PreparationStage& stage, const chip::MeasurementSettings& settings,
                                       const DetectorModel& det);

OutcomeDistribution qubit_distribution(const source::SourceSpec& spec, const source::MasterFractions& fractions,
                                       const chip::PreparationStage& stage, const chip::MeasurementSettings& settings,
                                       const DetectorModel& det);

/// Independent settings evaluated in parallel, one result per setting.
std::vector<OutcomeDistribution> qubit_distributions(const source::JointInputEnumeration& inputs,
                                                     const chip::PreparationStage& stage,
                                                     std::span<const chip::MeasurementSettings> settings,
                                                     const DetectorModel& det);

namespace reference {

/// Serial pipeline built from scatter_distribution, apply_detector_efficiency
/// and threshold_and_postselect. Slow; kept as the ground truth for tests.
OutcomeDistribution qubit_distribution(const source::JointInputEnumeration& inputs, const ComplexMatrix& u,
                                       const DetectorModel& det);

} // namespace reference

/// Multinomial draw of post-selected events from the conditional
/// distribution.
std::array<std::uint64_t, kOutcomes> sample_counts(const OutcomeDistribution& dist, std::uint64_t shots,
                                                   std::uint64_t seed);

/// Fourfold coincidence rate in Hz.
double coincidence_rate(const LossBudget& budget);

} // namespace ghzlab::sim
