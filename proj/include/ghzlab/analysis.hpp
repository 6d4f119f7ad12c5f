#pragma once

// State characterisation from measurement records: Pauli expectations, the
// phase witness, the stabiliser witness, the Bell-like inequality, Pauli
// tomography with maximum-likelihood reconstruction, and Poissonian
// Monte-Carlo error bars.
//
// Outcome convention: bit 0 of a party is the +1 eigenvector of the unsigned
// operator (X, Y, Z, (X+Z)/sqrt2, (X-Z)/sqrt2). A -X or -Z label flips that
// party's sign when the expectation value is formed.

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "ghzlab/qmath.hpp"

namespace ghzlab::analysis {

struct MeasurementRecord {
  PauliString settings{};
  std::array<double, kOutcomes> counts{};
  bool exact = false; // counts hold probabilities rather than events

  static MeasurementRecord from_counts(const PauliString& settings, const std::array<std::uint64_t, kOutcomes>& c);
  static MeasurementRecord from_probabilities(const PauliString& settings, const std::array<double, kOutcomes>& p);

  double total() const;
};

using IdentityMask = std::array<bool, kQubits>;

/// Sum_i p_i prod_q s_q (-1)^{bit_q} over unmasked parties. Parties labelled
/// I are masked automatically. Throws DegenerateInputError for empty records.
double expectation(const MeasurementRecord& record, const IdentityMask& mask = {});

/// Settings ((X+Z)/sqrt2, -X, X, -X) of the phase witness.
PauliString phase_witness_settings();
double phase_witness(const MeasurementRecord& record);

struct CosineFit {
  double amplitude = 0.0;
  double slope = 0.0;  // rad / mW
  double offset = 0.0; // rad
  double zero_phase_power = 0.0; // mW, maximum of the fitted cosine
  double rms_residual = 0.0;
};

/// Least-squares fit of A cos(a P + b) to (power, value) points. P0 is the
/// maximum closest to the middle of the scanned range. Throws FitError when
/// the problem is degenerate.
CosineFit fit_phase_scan(std::span<const std::pair<double, double>> points);

struct WitnessResult {
  double value = 0.0;
  double fidelity_lower_bound = 0.0;
  double g1 = 0.0;              // <X X X X>
  double stabilizer_term = 0.0; // <prod_k (g_k + 1) / 2>, k = 2..4
};

WitnessResult stabilizer_witness(const MeasurementRecord& record_x, const MeasurementRecord& record_z);

inline constexpr int kBellTerms = 8;

struct BellResult {
  double value = 0.0;
  std::array<double, kBellTerms> terms{};
  double standard_error = 0.0;
};

/// The eight operator rows, in the order
/// M1M1(2..4), M0M1(2..4), M0M0M0M0, M1M0M0M0. Masked parties are I.
std::array<PauliString, kBellTerms> bell_settings();
std::array<double, kBellTerms> bell_coefficients();

/// Records are matched to rows by their settings, in any order.
BellResult bell_value(std::span<const MeasurementRecord> records);

struct TomographySet {
  std::vector<MeasurementRecord> records;

  /// Throws DomainError unless the records cover the 81 X/Y/Z tuples once.
  void validate() const;
};

/// The 81 {X,Y,Z}^4 tuples, party 1 slowest, X < Y < Z.
std::vector<PauliString> tomography_settings();

/// (1/16) sum_P <P> P over all 256 Pauli strings, averaging <P> over every
/// record compatible with P.
ComplexMatrix linear_inversion(const TomographySet& ts);

/// Multinomial log-likelihood sum n log p over every record and outcome.
double log_likelihood(const TomographySet& ts, const ComplexMatrix& rho);

struct MleOptions {
  int max_iterations = 5000;
  double relative_tolerance = 1e-10;
  double initial_mixing = 1e-4;
};

struct MleResult {
  DensityMatrix rho;
  double log_likelihood = 0.0;
  double initial_log_likelihood = 0.0;
  int iterations = 0;
  bool converged = false; // false: iteration cap reached, best iterate kept
  std::vector<double> history;
};

MleResult mle_reconstruct(const TomographySet& ts, const MleOptions& options = {});

/// Gradient of the log-likelihood with respect to the lower-triangular
/// factor T (complex form dL/dRe + i dL/dIm, diagonal kept real). Exposed for
/// testing.
ComplexMatrix mle_gradient(const TomographySet& ts, const ComplexMatrix& t);
double mle_objective(const TomographySet& ts, const ComplexMatrix& t);

using RecordStatistic = std::function<double(std::span<const MeasurementRecord>)>;

/// Sample standard deviation of `statistic` over Poisson resamples of every
/// count. Resample r uses child_seed(seed, r).
double monte_carlo_error(std::span<const MeasurementRecord> records, const RecordStatistic& statistic,
                         int n_resamples, std::uint64_t seed);

double monte_carlo_error(const TomographySet& ts, const std::function<double(const TomographySet&)>& statistic,
                         int n_resamples, std::uint64_t seed);

struct PhaseFidelity {
  double theta = 0.0;
  double fidelity = 0.0;
};

/// max_theta <GHZ(theta)|rho|GHZ(theta)>, theta in (-pi, pi]; theta = 0 when
/// the 0101/1010 coherence vanishes.
PhaseFidelity max_fidelity_over_phase(const DensityMatrix& rho);

} // namespace ghzlab::analysis
