#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ghzlab/analysis.hpp"
#include "ghzlab/errors.hpp"
#include "ghzlab/experiment.hpp"
#include "oracles.hpp"

using namespace ghzlab;
using namespace ghzlab::analysis;
using std::numbers::pi;

namespace {

oracle::Mat oracle_operator(Pauli p) {
  const double s = 1.0 / oracle::kSqrt2;
  switch (p) {
  case Pauli::I: return oracle::pauli('I');
  case Pauli::X: return oracle::pauli('X');
  case Pauli::Y: return oracle::pauli('Y');
  case Pauli::Z: return oracle::pauli('Z');
  case Pauli::MinusX: return -oracle::pauli('X');
  case Pauli::MinusZ: return -oracle::pauli('Z');
  case Pauli::XPlusZ: return s * (oracle::pauli('X') + oracle::pauli('Z'));
  case Pauli::XMinusZ: return s * (oracle::pauli('X') - oracle::pauli('Z'));
  }
  return {};
}

double oracle_expectation(const PauliString& labels, double theta = 0.0) {
  std::array<oracle::Mat, 4> f;
  for (int q = 0; q < 4; ++q) f[q] = oracle_operator(labels[q]);
  return oracle::expect(oracle::ghz(theta), oracle::kron4(f));
}

const Experiment& ideal() {
  static const Experiment e{ExperimentModel{}};
  return e;
}

Experiment with_theta(double theta) {
  ExperimentModel m;
  m.stage.path_phases[0] = theta;
  return Experiment(m);
}

} // namespace

TEST(Records, FromCountsAndTotal) {
  std::array<std::uint64_t, kOutcomes> c{};
  c[5] = 7;
  c[10] = 3;
  const auto r = MeasurementRecord::from_counts({Pauli::Z, Pauli::Z, Pauli::Z, Pauli::Z}, c);
  EXPECT_DOUBLE_EQ(r.total(), 10.0);
  EXPECT_FALSE(r.exact);
  EXPECT_DOUBLE_EQ(expectation(r), 1.0);
  IdentityMask mask = {false, true, true, true};
  EXPECT_DOUBLE_EQ(expectation(r, mask), (7.0 - 3.0) / 10.0);
}

TEST(Expectations, IdealStateMatchesOracleForTomographySettings) {
  const auto labels = tomography_settings();
  ASSERT_EQ(labels.size(), 81u);
  const auto records = ideal().records(labels, std::nullopt, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    EXPECT_NEAR(expectation(records[i]), oracle_expectation(labels[i]), 1e-12) << to_string(labels[i]);
  }
}

TEST(Expectations, SignedAndRotatedLabels) {
  const std::vector<PauliString> labels = {
      {Pauli::MinusX, Pauli::X, Pauli::MinusX, Pauli::XPlusZ},
      {Pauli::XMinusZ, Pauli::MinusZ, Pauli::I, Pauli::I},
      {Pauli::I, Pauli::MinusZ, Pauli::I, Pauli::Z},
  };
  const auto records = ideal().records(labels, std::nullopt, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    IdentityMask mask{};
    for (int q = 0; q < kQubits; ++q) mask[q] = labels[i][q] == Pauli::I;
    EXPECT_NEAR(expectation(records[i], mask), oracle_expectation(labels[i]), 1e-12) << to_string(labels[i]);
  }
}

TEST(PhaseWitness, FollowsCosineOfInternalPhase) {
  for (int k = 0; k < 12; ++k) {
    const double theta = -pi + 2 * pi * k / 12.0 + 0.1;
    const auto r = with_theta(theta).exact_record(phase_witness_settings());
    EXPECT_NEAR(phase_witness(r), std::sqrt(2.0) / 2 * std::cos(theta), 1e-9);
  }
  EXPECT_THROW(phase_witness(ideal().exact_record({Pauli::X, Pauli::X, Pauli::X, Pauli::X})), DomainError);
}

TEST(PhaseScanFit, RecoversSyntheticCosine) {
  const double amplitude = 0.65, slope = 0.1263, p0 = 52.81;
  std::vector<std::pair<double, double>> pts;
  for (int i = 0; i <= 40; ++i) {
    const double p = 2.5 * i;
    pts.emplace_back(p, amplitude * std::cos(slope * (p - p0)));
  }
  const auto fit = fit_phase_scan(pts);
  EXPECT_NEAR(fit.amplitude, amplitude, 1e-6);
  EXPECT_NEAR(fit.slope, slope, 1e-6);
  EXPECT_NEAR(fit.zero_phase_power, p0, 1e-4);
  EXPECT_LT(fit.rms_residual, 1e-8);
}

TEST(PhaseScanFit, TolerantToNoise) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> noise(0, 0.03);
  std::vector<std::pair<double, double>> pts;
  for (int i = 0; i <= 40; ++i) {
    const double p = 2.5 * i;
    pts.emplace_back(p, 0.6 * std::cos(0.12 * (p - 48.0)) + noise(rng));
  }
  const auto fit = fit_phase_scan(pts);
  EXPECT_NEAR(fit.amplitude, 0.6, 0.05);
  EXPECT_NEAR(fit.slope, 0.12, 0.005);
  EXPECT_NEAR(fit.zero_phase_power, 48.0, 1.5);
}

TEST(PhaseScanFit, DegenerateInputs) {
  std::vector<std::pair<double, double>> flat;
  for (int i = 0; i < 10; ++i) flat.emplace_back(i, 0.3);
  EXPECT_THROW(fit_phase_scan(flat), FitError);
  std::vector<std::pair<double, double>> few = {{0, 1}, {1, 0}, {2, 1}};
  EXPECT_THROW(fit_phase_scan(few), DomainError);
}

TEST(Witness, IdealValue) {
  const auto x = ideal().exact_record({Pauli::X, Pauli::X, Pauli::X, Pauli::X});
  const auto z = ideal().exact_record({Pauli::Z, Pauli::Z, Pauli::Z, Pauli::Z});
  const auto w = stabilizer_witness(x, z);
  EXPECT_NEAR(w.value, -1.0, 1e-9);
  EXPECT_NEAR(w.fidelity_lower_bound, 1.0, 1e-9);
  EXPECT_NEAR(w.g1, 1.0, 1e-12);
  EXPECT_NEAR(w.stabilizer_term, 1.0, 1e-12);
  EXPECT_THROW(stabilizer_witness(z, x), DomainError);
}

TEST(Witness, BoundHoldsForMixedStates) {
  // The witness bound never exceeds the true fidelity.
  source::SourceSpec s = source::SourceSpec::device_default();
  ExperimentModel m;
  m.source = s;
  const Experiment e(m);
  const auto w = stabilizer_witness(e.exact_record({Pauli::X, Pauli::X, Pauli::X, Pauli::X}),
                                    e.exact_record({Pauli::Z, Pauli::Z, Pauli::Z, Pauli::Z}));
  const auto rho = project_to_physical(linear_inversion(e.tomography(std::nullopt, 0)));
  EXPECT_LE(w.fidelity_lower_bound, fidelity_to_pure(rho, ghz_state(0)) + 1e-9);
}

TEST(Bell, IdealValueAndTerms) {
  const auto rows = bell_settings();
  const auto records = ideal().records(rows, std::nullopt, 0);
  const auto b = bell_value(records);
  EXPECT_NEAR(b.value, 6 * std::sqrt(2.0), 1e-9);
  EXPECT_EQ(b.standard_error, 0.0);
  for (int i = 0; i < kBellTerms; ++i) {
    EXPECT_NEAR(b.terms[i], oracle_expectation(rows[i]), 1e-9);
    EXPECT_NEAR(std::abs(b.terms[i]), 1 / std::sqrt(2.0), 1e-9);
  }
  double check = 0;
  for (int i = 0; i < kBellTerms; ++i) check += bell_coefficients()[i] * oracle_expectation(rows[i]);
  EXPECT_NEAR(check, 6 * std::sqrt(2.0), 1e-12);
}

TEST(Bell, MissingAndDuplicateRecords) {
  const auto rows = bell_settings();
  auto records = ideal().records(rows, std::nullopt, 0);
  auto dup = records;
  dup.push_back(records[0]);
  EXPECT_THROW(bell_value(dup), DomainError);
  records.pop_back();
  EXPECT_THROW(bell_value(records), DomainError);
}

TEST(Bell, StandardErrorForSampledCounts) {
  const auto rows = bell_settings();
  const auto records = ideal().records(rows, 1000, 5);
  const auto b = bell_value(records);
  double var = 0;
  for (int i = 0; i < kBellTerms; ++i) {
    const double c = bell_coefficients()[i];
    var += c * c * (1 - b.terms[i] * b.terms[i]) / 1000.0;
  }
  EXPECT_NEAR(b.standard_error, std::sqrt(var), 1e-12);
  EXPECT_NEAR(b.value, 6 * std::sqrt(2.0), 5 * b.standard_error);
}

TEST(Tomography, LinearInversionRecoversIdealState) {
  const auto ts = ideal().tomography(std::nullopt, 0);
  const ComplexMatrix rho = linear_inversion(ts);
  const ComplexMatrix want = DensityMatrix::from_pure(ghz_state(0)).matrix();
  EXPECT_LT(trace_distance(rho, want), 1e-9);
}

TEST(Tomography, SetValidation) {
  auto ts = ideal().tomography(std::nullopt, 0);
  auto short_set = ts;
  short_set.records.pop_back();
  EXPECT_THROW(short_set.validate(), DomainError);
  auto dup = ts;
  dup.records[1] = dup.records[0];
  EXPECT_THROW(dup.validate(), DomainError);
}

TEST(Mle, GradientMatchesFiniteDifferences) {
  const auto ts = Experiment(ExperimentModel{source::SourceSpec::device_default(), std::nullopt,
                                             chip::PreparationStage::measured_couplers()})
                      .tomography(300, 8);
  std::mt19937_64 rng(10);
  ComplexMatrix t = oracle::random_complex(16, rng);
  for (int r = 0; r < 16; ++r) {
    for (int c = r + 1; c < 16; ++c) t(r, c) = 0;
    t(r, r) = std::abs(t(r, r)) + 1.0;
  }
  const ComplexMatrix g = mle_gradient(ts, t);
  const double h = 1e-6;
  for (auto [r, c] : std::vector<std::pair<int, int>>{{0, 0}, {5, 5}, {10, 5}, {15, 0}, {9, 3}, {12, 11}}) {
    ComplexMatrix tp = t, tm = t;
    tp(r, c) += h;
    tm(r, c) -= h;
    const double d_re = (mle_objective(ts, tp) - mle_objective(ts, tm)) / (2 * h);
    EXPECT_NEAR(g(r, c).real(), d_re, 1e-4 * std::max(1.0, std::abs(d_re))) << r << "," << c;
    if (r == c) {
      EXPECT_EQ(g(r, c).imag(), 0.0);
      continue;
    }
    tp = t;
    tm = t;
    tp(r, c) += Complex(0, h);
    tm(r, c) -= Complex(0, h);
    const double d_im = (mle_objective(ts, tp) - mle_objective(ts, tm)) / (2 * h);
    EXPECT_NEAR(g(r, c).imag(), d_im, 1e-4 * std::max(1.0, std::abs(d_im))) << r << "," << c;
  }
  EXPECT_EQ(g(0, 1), Complex(0, 0));
}

TEST(Mle, IdealExactProbabilities) {
  const auto ts = ideal().tomography(std::nullopt, 0);
  const auto res = mle_reconstruct(ts);
  EXPECT_GE(fidelity_to_pure(res.rho, ghz_state(0)), 0.9999);
  EXPECT_GE(purity(res.rho), 0.9999);
  EXPECT_GE(res.log_likelihood, res.initial_log_likelihood);
}

TEST(Mle, LikelihoodNeverDecreases) {
  ExperimentModel m;
  m.source = source::SourceSpec::device_default();
  const auto ts = Experiment(m).tomography(450, 3);
  const auto res = mle_reconstruct(ts);
  ASSERT_FALSE(res.history.empty());
  for (std::size_t i = 1; i < res.history.size(); ++i) EXPECT_GE(res.history[i], res.history[i - 1] - 1e-9);
  EXPECT_GE(res.log_likelihood, res.initial_log_likelihood);
  EXPECT_NEAR(log_likelihood(ts, res.rho.matrix()), res.log_likelihood, 1e-6 * std::abs(res.log_likelihood));
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(res.rho.matrix());
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12);
}

TEST(MonteCarlo, DeterministicAndScalesWithShots) {
  const PauliString xs = {Pauli::X, Pauli::X, Pauli::X, Pauli::X};
  const auto stat = [](std::span<const MeasurementRecord> r) { return expectation(r[0]); };
  ExperimentModel m;
  m.source = source::SourceSpec::device_default();
  const Experiment e(m);
  const std::vector<MeasurementRecord> small = {e.sampled_record(xs, 400, 1)};
  const std::vector<MeasurementRecord> large = {e.sampled_record(xs, 40000, 1)};
  const double a = monte_carlo_error(small, stat, 400, 77);
  EXPECT_EQ(a, monte_carlo_error(small, stat, 400, 77));
  const double b = monte_carlo_error(large, stat, 400, 77);
  const double e_small = expectation(small[0]);
  // Poisson resampling of every count: sd of the ratio close to the binomial one.
  EXPECT_NEAR(a, std::sqrt((1 - e_small * e_small) / 400), 0.3 * a);
  EXPECT_NEAR(a / b, 10.0, 2.0);
}

TEST(PhaseFidelity, FindsRelativePhase) {
  for (double theta : {-2.5, -0.4, 0.0, 1.0, 3.0}) {
    const auto rho = DensityMatrix::from_pure(ghz_state(theta));
    const auto best = max_fidelity_over_phase(rho);
    EXPECT_NEAR(best.fidelity, 1.0, 1e-12);
    EXPECT_NEAR(std::abs(std::remainder(best.theta - theta, 2 * pi)), 0.0, 1e-12);
  }
  const auto mixed = max_fidelity_over_phase(DensityMatrix::maximally_mixed(16));
  EXPECT_NEAR(mixed.fidelity, 1.0 / 16, 1e-12);
  EXPECT_EQ(mixed.theta, 0.0);
}
