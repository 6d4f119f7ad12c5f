#pragma once

// Imperfect single-photon source: multiphoton emission from g2, partial
// distinguishability through a shared "master" internal state, and the
// weighted enumeration of labelled four-input states fed to the simulator.

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "ghzlab/qmath.hpp"

namespace ghzlab::source {

inline constexpr int kInputs = kQubits; // photons A, B, C, D
inline constexpr int kMixtureTerms = 6;

/// Measurable two-photon overlaps. Pairs BC and AD never meet on the chip.
struct OverlapMap {
  double ab = 1.0;
  double ac = 1.0;
  double bd = 1.0;
  double cd = 1.0;
};

struct SourceSpec {
  double g2 = 0.0;
  OverlapMap overlaps;
  double eta = 1.0; // end-to-end transmission per photon
  std::array<double, kInputs> distinguishability_scale{1.0, 1.0, 1.0, 1.0};

  static SourceSpec ideal() { return {}; }
  /// g2 = 0.005, overlaps AB/AC/BD/CD = 0.924/0.915/0.881/0.921, eta = 0.039.
  static SourceSpec device_default();

  /// Throws DomainError on any out-of-range field.
  void validate() const;
};

struct EmissionProbabilities {
  double p0 = 0.0;
  double p1 = 1.0;
  double p2 = 0.0;
};

/// Solves 2 p2 / (p1 + 2 p2)^2 = g2 with p1 + p2 = 1 and p0 = 0, keeping the
/// root with p2 < 1/2. Throws DomainError unless 0 <= g2 < 0.5.
EmissionProbabilities solve_pair_probabilities(double g2);

struct MasterFractions {
  std::array<double, kInputs> x{1.0, 1.0, 1.0, 1.0};
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct OverlapBounds {
  Interval bc;
  Interval ad;
};

/// Residual sum of squares of the four measured overlaps under x.
double fit_objective(const OverlapMap& m, const MasterFractions& f);

/// Least-squares master fractions. The four measured products only fix x up
/// to the rescaling (tA, B/t, C/t, tD); the returned point is the one on that
/// family with equal unmeasured overlaps x_B x_C = x_A x_D, or the closest
/// admissible point when the unit box cuts it off.
MasterFractions fit_master_fractions(const OverlapMap& m);

/// Range of the unmeasured overlaps x_B x_C and x_A x_D over all x in the unit
/// box that fit the measured overlaps as well as the least-squares optimum.
OverlapBounds overlap_bounds(const OverlapMap& m);

enum class InputKind : std::uint8_t {
  Vacuum,
  Master,
  Distinguishable,
  Noise,
  MasterPlusNoise,
  DistinguishablePlusNoise
};

std::string_view to_string(InputKind k);
int photon_count(InputKind k);

/// Internal-state labels: 0 is the shared master state, every other label is
/// orthogonal to all others.
inline constexpr int kMasterLabel = 0;
constexpr int distinguishable_label(int input) { return 1 + input; }
constexpr int noise_label(int input) { return 1 + kInputs + input; }

struct LabeledPhoton {
  int input = 0; // 0..3, enters the chip at chip::kPhotonInputs[input]
  int label = kMasterLabel;
};

struct MixtureTerm {
  InputKind kind = InputKind::Vacuum;
  double weight = 0.0;
};

/// Six-term mixture describing what input `input` (0..3) receives.
std::array<MixtureTerm, kMixtureTerms> input_mixture(const SourceSpec& spec, const MasterFractions& fractions,
                                                     int input);

struct JointInputTerm {
  double weight = 0.0;
  std::array<InputKind, kInputs> kinds{};
  std::vector<LabeledPhoton> photons;

  int photon_count() const { return static_cast<int>(photons.size()); }
};

struct JointInputEnumeration {
  std::vector<JointInputTerm> terms;
  std::size_t raw_count = 0;    // 6^4
  double raw_weight = 0.0;      // sums to 1
  double retained_weight = 0.0; // weight of `terms`
};

/// Photons carried by one input in the given state.
std::vector<LabeledPhoton> photons_for(InputKind kind, int input);

/// Cartesian product of the four input mixtures, keeping terms with at least
/// four photons whose weight is no smaller than 1e-8 of the largest such term.
JointInputEnumeration enumerate_joint_inputs(const SourceSpec& spec, const MasterFractions& fractions);

/// Four master photons with weight 1.
JointInputEnumeration ideal_input();

} // namespace ghzlab::source
