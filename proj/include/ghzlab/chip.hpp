#pragma once

// Photonic circuit model: the GHZ preparation stage (four directional couplers
// followed by a fixed waveguide permutation), the four Mach-Zehnder
// measurement blocks, and the thermal phase-shifter network that drives them.

#include <array>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ghzlab/qmath.hpp"

namespace ghzlab::chip {

inline constexpr int kCouplers = 4;
inline constexpr int kHeaters = 16;

/// Destination mode (0-based) of the upper and lower output of each
/// preparation coupler. Coupler k takes input modes 2k and 2k+1.
inline constexpr std::array<int, kCouplers> kUpperDestination = {0, 1, 3, 5};
inline constexpr std::array<int, kCouplers> kLowerDestination = {2, 4, 6, 7};

/// Input modes (0-based) that receive the four photons: upper port of each
/// coupler.
inline constexpr std::array<int, kQubits> kPhotonInputs = {0, 2, 4, 6};

struct PreparationStage {
  /// Phase acquired on each output mode before the measurement stage (rad).
  std::array<double, kModes> path_phases{};
  /// Power fraction left in the BAR mode, one per coupler.
  std::array<double, kCouplers> reflectivities{0.5, 0.5, 0.5, 0.5};

  static PreparationStage ideal() { return {}; }
  /// Mean of the H and V reflectivities measured on the fabricated device.
  static PreparationStage measured_couplers();

  /// Throws DomainError if a reflectivity is outside (0, 1).
  void validate() const;

  /// theta1 - theta2 - theta3 + theta4 + theta5 - theta6 - theta7 + theta8.
  double theta() const;
};

struct MziSetting {
  int party = 1; // 1..4
  double alpha = 0.0;
  double phi = 0.0;
  std::optional<Pauli> pauli;
};

using MeasurementSettings = std::array<MziSetting, kQubits>;

/// Wraps both phases into [0, 2 pi).
MziSetting make_setting(int party, double alpha, double phi, std::optional<Pauli> pauli = std::nullopt);

/// (alpha, phi) realising a projective measurement whose upper detector
/// corresponds to the +1 eigenstate of `p`. Throws DomainError for I.
MziSetting setting_for_projector(Pauli p, int party = 1);

/// Settings for a full Pauli string. Identity parties are measured in Z,
/// which is enough because their outcome is ignored.
MeasurementSettings settings_for(const PauliString& labels);

/// 2x2 transfer matrix DC * P(phi) * DC * P(alpha) of one MZI, where the
/// phase shifters sit on the upper mode and DC is the balanced coupler.
ComplexMatrix mzi_block(const MziSetting& s);

ComplexMatrix preparation_unitary(const PreparationStage& stage);
ComplexMatrix measurement_unitary(const MeasurementSettings& settings);
ComplexMatrix full_unitary(const PreparationStage& stage, const MeasurementSettings& settings);

/// Linear current^2-to-phase model of the heater network including thermal
/// crosstalk. Resistors 1..8 drive the input phases alpha, 9..16 the internal
/// phases phi.
struct HeaterCalibration {
  Eigen::Matrix<double, 4, 8> a; // krad / A^2
  Eigen::Matrix<double, 4, 8> b; // krad / A^2
  Eigen::Vector4d phi0;          // rad
  std::array<double, kHeaters> resistances{}; // ohm
  std::vector<int> dead_channels;             // 1-based resistor indices

  /// Values characterised on the fabricated chip; resistor 15 is dead.
  static HeaterCalibration device_default();

  /// Checks shapes, resistance range, dead-column zeros and diagonal-block
  /// dominance. Throws CalibrationError.
  void validate() const;
  bool is_dead(int resistor) const;
};

struct MziPhases {
  std::array<double, kQubits> alpha{};
  std::array<double, kQubits> phi{};
};

/// Phases produced by the given currents (amperes). Throws CalibrationError
/// when a dead channel carries current and DomainError for negative currents.
MziPhases heater_forward(const HeaterCalibration& cal, std::span<const double, kHeaters> currents);

/// Non-negative currents reproducing `target` modulo 2 pi. Each phase may be
/// lifted by 0..4 turns; the lift with the lowest dissipated power wins.
/// Throws SolverError when no lift is reachable.
std::array<double, kHeaters> heater_solve(const HeaterCalibration& cal, const MziPhases& target);

double dissipated_power(const HeaterCalibration& cal, std::span<const double, kHeaters> currents);

/// Probability that classical light entering the calibration port of the
/// MZI (upper port for odd parties, lower for even) reaches the upper
/// detector, weighted by the detector efficiencies.
double weighted_balance(const MziSetting& s, double eta_up, double eta_down);

/// Retunes phi so that the efficiency-weighted detector balance matches the
/// ideal-detector balance of the original setting. Never increases the
/// deviation. Throws DomainError for efficiencies outside (0, 1].
MziSetting compensate_setting(const MziSetting& setting, double eta_up, double eta_down);

} // namespace ghzlab::chip
