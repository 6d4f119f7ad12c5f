#include <gtest/gtest.h>

#include <omp.h>

#include <cmath>
#include <map>

#include "ghzlab/errors.hpp"
#include "ghzlab/experiment.hpp"
#include "ghzlab/qss.hpp"
#include "oracles.hpp"

using namespace ghzlab;
using namespace ghzlab::qss;

namespace {

// Outcome distribution of the ideal state when every party measures in X or
// Y, bit 0 being the +1 eigenvector.
std::array<double, 16> oracle_distribution(const BasisChoice& b) {
  std::array<oracle::Mat, 4> rows;
  for (int q = 0; q < 4; ++q) {
    Eigen::SelfAdjointEigenSolver<oracle::Mat> es(oracle::pauli(b[q] == Basis::X ? 'X' : 'Y'));
    oracle::Mat m(2, 2);
    m.row(0) = es.eigenvectors().col(1).adjoint();
    m.row(1) = es.eigenvectors().col(0).adjoint();
    rows[q] = m;
  }
  return oracle::measured(oracle::ghz(0.0), rows);
}

int bit(int o, int q) {
  return (o >> (3 - q)) & 1;
}

const QssDistributions& ideal_dists() {
  static const QssDistributions d = qss_distributions(Experiment(ExperimentModel{}));
  return d;
}

} // namespace

TEST(Classification, Census) {
  std::map<Case, int> census;
  for (int code = 0; code < kBasisChoices; ++code) ++census[classify_bases(basis_from_code(code))];
  EXPECT_EQ(census[Case::A], 2);
  EXPECT_EQ(census[Case::B], 8);
  EXPECT_EQ(census[Case::C], 2);
  EXPECT_EQ(census[Case::D], 4);
}

TEST(Classification, CodeRoundTrip) {
  for (int code = 0; code < kBasisChoices; ++code) EXPECT_EQ(basis_code(basis_from_code(code)), code);
  EXPECT_EQ(to_string(basis_from_code(0b1000)), "yxxx");
}

TEST(Signs, MatchStateExpectation) {
  for (int code = 0; code < kBasisChoices; ++code) {
    const auto b = basis_from_code(code);
    std::array<oracle::Mat, 4> f;
    for (int q = 0; q < 4; ++q) f[q] = oracle::pauli(b[q] == Basis::X ? 'X' : 'Y');
    const double e = oracle::expect(oracle::ghz(0.0), oracle::kron4(f));
    if (classify_bases(b) == Case::B) {
      EXPECT_NEAR(e, 0.0, 1e-12);
    } else {
      EXPECT_NEAR(e, combo_sign(b), 1e-12) << to_string(b);
    }
  }
}

TEST(Inference, AlwaysRightOnIdealState) {
  for (int code = 0; code < kBasisChoices; ++code) {
    const auto b = basis_from_code(code);
    if (classify_bases(b) == Case::B) continue;
    const auto p = oracle_distribution(b);
    for (int o = 0; o < 16; ++o) {
      if (p[o] < 1e-12) continue;
      EXPECT_EQ(infer_dealer_bit(b, {bit(o, 1), bit(o, 2), bit(o, 3)}), bit(o, 0)) << to_string(b) << " " << o;
    }
  }
}

TEST(Inference, OddBasisRoundsCarryNoInformation) {
  for (int code = 0; code < kBasisChoices; ++code) {
    const auto b = basis_from_code(code);
    if (classify_bases(b) != Case::B) continue;
    const auto p = oracle_distribution(b);
    std::array<double, 2> pa{};
    std::array<double, 8> pr{};
    for (int o = 0; o < 16; ++o) {
      pa[bit(o, 0)] += p[o];
      pr[o & 7] += p[o];
    }
    double mi = 0;
    for (int o = 0; o < 16; ++o) {
      if (p[o] > 0) mi += p[o] * std::log2(p[o] / (pa[bit(o, 0)] * pr[o & 7]));
    }
    EXPECT_NEAR(mi, 0.0, 1e-9) << to_string(b);
    EXPECT_THROW(infer_dealer_bit(b, {0, 0, 0}), ProtocolError);
  }
  EXPECT_THROW(infer_dealer_bit(basis_from_code(0), {0, 2, 0}), DomainError);
}

TEST(Simulation, IdealDistributionsMatchOracle) {
  for (int code = 0; code < kBasisChoices; ++code) {
    const auto want = oracle_distribution(basis_from_code(code));
    const auto got = ideal_dists()[code].conditional();
    for (int o = 0; o < 16; ++o) EXPECT_NEAR(got[o], want[o], 1e-12);
  }
}

TEST(Run, IdealRoundsHaveNoErrors) {
  const auto run = run_qss(ideal_dists(), 10000, 2024);
  EXPECT_EQ(run.report.raw_length, 10000u);
  EXPECT_EQ(run.report.qber, 0.0);
  EXPECT_TRUE(run.report.secure);
  const double sigma = std::sqrt(0.25 / 10000);
  EXPECT_NEAR(run.report.sift_rate, 0.5, 5 * sigma);
  EXPECT_EQ(expected_qber(ideal_dists()), 0.0);
}

TEST(Run, TranscriptIndependentOfThreads) {
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto a = run_qss(ideal_dists(), 3000, 5);
  omp_set_num_threads(4);
  const auto b = run_qss(ideal_dists(), 3000, 5);
  omp_set_num_threads(saved);
  ASSERT_EQ(a.transcript.size(), b.transcript.size());
  for (std::size_t i = 0; i < a.transcript.size(); ++i) {
    EXPECT_EQ(a.transcript[i].bases, b.transcript[i].bases);
    EXPECT_EQ(a.transcript[i].outcomes, b.transcript[i].outcomes);
  }
  EXPECT_EQ(a.report.qber, b.report.qber);
}

TEST(Run, TranscriptConsistency) {
  const auto run = run_qss(ideal_dists(), 500, 9);
  for (const auto& r : run.transcript) {
    EXPECT_EQ(r.c, classify_bases(r.bases));
    EXPECT_EQ(r.kept, r.c != Case::B);
    EXPECT_EQ(r.actual, r.outcomes[0]);
    if (!r.kept) EXPECT_EQ(r.inferred, -1);
  }
  EXPECT_THROW(run_qss(ideal_dists(), 0, 1), DomainError);
}

TEST(Noise, QberGrowsWithDistinguishability) {
  double previous = -1;
  for (double scale : {1.0, 0.75, 0.5, 0.25, 0.0}) {
    ExperimentModel m;
    m.source.distinguishability_scale[1] = scale;
    const double q = expected_qber(qss_distributions(Experiment(m)));
    EXPECT_GE(q, previous - 1e-12) << scale;
    previous = q;
  }
  EXPECT_GT(previous, 0.2);
}

TEST(Noise, DeviceNoiseStaysBelowThreshold) {
  ExperimentModel m;
  m.source = source::SourceSpec::device_default();
  m.stage = chip::PreparationStage::measured_couplers();
  const double q = expected_qber(qss_distributions(Experiment(m)));
  EXPECT_GT(q, 0.05);
  EXPECT_LT(q, kSecurityThreshold);
}
