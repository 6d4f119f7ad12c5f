#pragma once

// Four-party secret sharing on the GHZ state |0101> + |1010>. Party 1 is the
// dealer; parties 2-4 reconstruct its bit from the parity of their own
// outcomes. Outcome bit 0 is the +1 eigenvector of sigma_x or sigma_y.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ghzlab/simulator.hpp"

namespace ghzlab {
class Experiment;
}

namespace ghzlab::qss {

enum class Basis : std::uint8_t { X, Y };
using BasisChoice = std::array<Basis, kQubits>;

enum class Case : char { A = 'a', B = 'b', C = 'c', D = 'd' };

inline constexpr int kBasisChoices = 16;
inline constexpr double kSecurityThreshold = 0.11;

/// Party 1 in the most significant bit, 1 = sigma_y.
constexpr int basis_code(const BasisChoice& b) {
  int code = 0;
  for (int q = 0; q < kQubits; ++q) code = (code << 1) | (b[q] == Basis::Y ? 1 : 0);
  return code;
}

constexpr BasisChoice basis_from_code(int code) {
  BasisChoice b{};
  for (int q = 0; q < kQubits; ++q) b[q] = ((code >> (kQubits - 1 - q)) & 1) ? Basis::Y : Basis::X;
  return b;
}

std::string to_string(const BasisChoice& b);
PauliString pauli_labels(const BasisChoice& b);

Case classify_bases(const BasisChoice& b);

/// <sigma_b1 sigma_b2 sigma_b3 sigma_b4> on the ideal state: +1, -1 or 0.
int combo_sign(const BasisChoice& b);

/// Dealer bit implied by the outcomes of parties 2..4. Throws ProtocolError
/// for case b.
int infer_dealer_bit(const BasisChoice& b, const std::array<int, 3>& outcomes_2_to_4);

struct RoundRecord {
  BasisChoice bases{};
  std::array<int, kQubits> outcomes{};
  Case c = Case::B;
  bool kept = false;
  int inferred = -1; // -1 when discarded
  int actual = 0;
};

struct QssReport {
  std::size_t raw_length = 0;
  std::size_t sifted_length = 0;
  double sift_rate = 0.0;
  double qber = 0.0;
  bool secure = false;
};

struct QssRun {
  QssReport report;
  std::vector<RoundRecord> transcript;
};

/// Outcome distributions for the 16 basis choices, indexed by basis_code.
using QssDistributions = std::array<sim::OutcomeDistribution, kBasisChoices>;

QssDistributions qss_distributions(const Experiment& experiment);

/// `rounds` rounds, each with one post-selected event. Round r draws from
/// child_seed(seed, r), so the transcript does not depend on threading.
QssRun run_qss(const QssDistributions& dists, std::size_t rounds, std::uint64_t seed);
QssRun run_qss(const Experiment& experiment, std::size_t rounds, std::uint64_t seed);

/// Exact QBER of the sifted key for the given distributions.
double expected_qber(const QssDistributions& dists);

} // namespace ghzlab::qss
