#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ghzlab/errors.hpp"
#include "ghzlab/qmath.hpp"
#include "oracles.hpp"

using namespace ghzlab;

TEST(Permanent, MatchesPermutationSumUpToFive) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 5;
    const auto m = oracle::random_complex(n, rng);
    const Complex got = permanent(m);
    const Complex want = oracle::permanent(m);
    EXPECT_LT(std::abs(got - want), 1e-12 * std::max(1.0, std::abs(want))) << "n=" << n;
  }
}

TEST(Permanent, KnownValues) {
  EXPECT_NEAR(permanent(ComplexMatrix::Ones(3, 3)).real(), 6.0, 1e-14);
  EXPECT_NEAR(permanent(ComplexMatrix::Identity(4, 4)).real(), 1.0, 1e-14);
  EXPECT_NEAR(std::abs(permanent(ComplexMatrix(0, 0)) - Complex(1.0)), 0.0, 0.0);
  EXPECT_THROW(permanent(ComplexMatrix::Ones(2, 3)), DimensionError);
}

TEST(Pauli, StringRoundTrip) {
  for (Pauli p : kAllPaulis) EXPECT_EQ(pauli_from_string(to_string(p)), p);
  EXPECT_EQ(pauli_from_string("x"), Pauli::X);
  EXPECT_THROW(pauli_from_string("W"), DomainError);
}

TEST(Pauli, OperatorsAreHermitianInvolutions) {
  for (Pauli p : kAllPaulis) {
    const ComplexMatrix m = single_qubit_operator(p);
    EXPECT_TRUE(is_hermitian(m, 1e-14));
    EXPECT_LT((m * m - ComplexMatrix::Identity(2, 2)).norm(), 1e-14);
  }
}

TEST(Pauli, PlusEigenstate) {
  for (Pauli p : kAllPaulis) {
    if (p == Pauli::I) continue;
    const ComplexVector v = plus_eigenstate(p);
    EXPECT_NEAR(v.norm(), 1.0, 1e-14);
    EXPECT_LT((single_qubit_operator(p) * v - v).norm(), 1e-13) << to_string(p);
  }
}

TEST(Pauli, OperatorsMatchTextbookMatrices) {
  using oracle::pauli;
  const double s = 1.0 / oracle::kSqrt2;
  EXPECT_LT((single_qubit_operator(Pauli::X) - pauli('X')).norm(), 1e-15);
  EXPECT_LT((single_qubit_operator(Pauli::Y) - pauli('Y')).norm(), 1e-15);
  EXPECT_LT((single_qubit_operator(Pauli::Z) - pauli('Z')).norm(), 1e-15);
  EXPECT_LT((single_qubit_operator(Pauli::MinusX) + pauli('X')).norm(), 1e-15);
  EXPECT_LT((single_qubit_operator(Pauli::XPlusZ) - s * (pauli('X') + pauli('Z'))).norm(), 1e-15);
  EXPECT_LT((single_qubit_operator(Pauli::XMinusZ) - s * (pauli('X') - pauli('Z'))).norm(), 1e-15);
}

TEST(Pauli, StringOperatorIsKroneckerProduct) {
  const PauliString labels = {Pauli::X, Pauli::Y, Pauli::Z, Pauli::I};
  const ComplexMatrix want = oracle::kron4({oracle::pauli('X'), oracle::pauli('Y'), oracle::pauli('Z'), oracle::pauli('I')});
  EXPECT_LT((pauli_operator(labels) - want).norm(), 1e-14);
}

TEST(States, GhzMatchesOracle) {
  for (double theta : {0.0, 0.3, -2.0}) {
    const PureState psi = ghz_state(theta);
    EXPECT_LT((psi.amplitudes() - oracle::ghz(theta)).norm(), 1e-15);
  }
  EXPECT_EQ(basis_index(0, 1, 0, 1), 5);
  EXPECT_EQ(outcome_label(10), "1010");
  EXPECT_EQ(outcome_bit(0b1000, 0), 1);
}

TEST(States, PureStateRejectsUnnormalised) {
  EXPECT_THROW(PureState(ComplexVector::Ones(4)), DomainError);
}

TEST(DensityMatrices, FidelityAndPurity) {
  const PureState psi = ghz_state(0.7);
  const auto rho = DensityMatrix::from_pure(psi);
  EXPECT_NEAR(fidelity_to_pure(rho, psi), 1.0, 1e-14);
  EXPECT_NEAR(purity(rho), 1.0, 1e-14);
  EXPECT_NEAR(fidelity_to_pure(rho, ghz_state(0.7 + M_PI)), 0.0, 1e-14);
  const auto mixed = DensityMatrix::maximally_mixed(16);
  EXPECT_NEAR(purity(mixed), 1.0 / 16, 1e-15);
  EXPECT_NEAR(fidelity_to_pure(mixed, psi), 1.0 / 16, 1e-15);
}

TEST(DensityMatrices, ValidationRejectsUnphysical) {
  ComplexMatrix m = ComplexMatrix::Identity(2, 2) * 0.5;
  m(0, 1) = 0.1;
  EXPECT_THROW(DensityMatrix::from_matrix(m), DomainError);
  EXPECT_THROW(DensityMatrix::from_matrix(ComplexMatrix::Identity(2, 2)), DomainError);
  ComplexMatrix neg = ComplexMatrix::Zero(2, 2);
  neg(0, 0) = 1.5;
  neg(1, 1) = -0.5;
  EXPECT_THROW(DensityMatrix::from_matrix(neg), DomainError);
}

TEST(DensityMatrices, ProjectionIsPhysicalAndIdempotent) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    ComplexMatrix a = oracle::random_complex(16, rng);
    ComplexMatrix h = (a + a.adjoint()) * 0.5;
    const auto rho = project_to_physical(h);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(rho.matrix());
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12);
    EXPECT_NEAR(rho.matrix().trace().real(), 1.0, 1e-12);
    const auto again = project_to_physical(rho.matrix());
    EXPECT_LT(trace_distance(again.matrix(), rho.matrix()), 1e-12);
  }
  EXPECT_THROW(project_to_physical(-ComplexMatrix::Identity(4, 4)), DegenerateInputError);
}

TEST(DensityMatrices, TraceDistance) {
  const auto a = DensityMatrix::from_pure(ghz_state(0.0)).matrix();
  const auto b = DensityMatrix::from_pure(ghz_state(M_PI)).matrix();
  EXPECT_NEAR(trace_distance(a, b), 1.0, 1e-14);
  EXPECT_NEAR(trace_distance(a, a), 0.0, 1e-15);
}
