#include "ghzlab/qmath.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Eigenvalues>

#include "ghzlab/errors.hpp"

namespace ghzlab {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

ComplexVector qubit_state(double chi, double psi) {
  ComplexVector v(2);
  v << std::cos(chi), std::polar(1.0, psi) * std::sin(chi);
  return v;
}

} // namespace

std::string outcome_label(int outcome) {
  std::string s(kQubits, '0');
  for (int p = 0; p < kQubits; ++p) {
    if (outcome_bit(outcome, p)) s[p] = '1';
  }
  return s;
}

PureState::PureState(ComplexVector amplitudes) : amplitudes_(std::move(amplitudes)) {
  if (amplitudes_.size() == 0) throw DimensionError("pure state must have positive dimension");
  const double n2 = amplitudes_.squaredNorm();
  if (std::abs(n2 - 1.0) > 1e-12) {
    throw DomainError("pure state is not normalised (|psi|^2 = " + std::to_string(n2) + ")");
  }
}

DensityMatrix DensityMatrix::from_matrix(ComplexMatrix m) {
  if (m.rows() != m.cols() || m.rows() == 0) throw DimensionError("density matrix must be square");
  if (!is_hermitian(m, 1e-10)) throw DomainError("density matrix is not Hermitian");
  const Complex tr = m.trace();
  if (std::abs(tr - 1.0) > 1e-10) throw DomainError("density matrix trace differs from 1");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(m, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-10) throw DomainError("density matrix has a negative eigenvalue");
  return DensityMatrix(std::move(m));
}

DensityMatrix DensityMatrix::from_pure(const PureState& psi) {
  const auto& a = psi.amplitudes();
  return DensityMatrix(a * a.adjoint());
}

DensityMatrix DensityMatrix::maximally_mixed(int dimension) {
  if (dimension <= 0) throw DimensionError("dimension must be positive");
  return DensityMatrix(ComplexMatrix::Identity(dimension, dimension) / static_cast<double>(dimension));
}

std::string_view to_string(Pauli p) {
  switch (p) {
  case Pauli::I: return "I";
  case Pauli::X: return "X";
  case Pauli::Y: return "Y";
  case Pauli::Z: return "Z";
  case Pauli::MinusX: return "-X";
  case Pauli::MinusZ: return "-Z";
  case Pauli::XPlusZ: return "(X+Z)/sqrt2";
  case Pauli::XMinusZ: return "(X-Z)/sqrt2";
  }
  return "?";
}

Pauli pauli_from_string(std::string_view s) {
  for (Pauli p : kAllPaulis) {
    if (s == to_string(p)) return p;
  }
  if (s == "x") return Pauli::X;
  if (s == "y") return Pauli::Y;
  if (s == "z") return Pauli::Z;
  if (s == "i") return Pauli::I;
  throw DomainError("unknown Pauli label '" + std::string(s) + "'");
}

std::string to_string(const PauliString& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ',';
    out += to_string(s[i]);
  }
  return out;
}

int pauli_sign(Pauli p) {
  return (p == Pauli::MinusX || p == Pauli::MinusZ) ? -1 : 1;
}

Pauli unsigned_pauli(Pauli p) {
  if (p == Pauli::MinusX) return Pauli::X;
  if (p == Pauli::MinusZ) return Pauli::Z;
  return p;
}

ComplexMatrix single_qubit_operator(Pauli p) {
  const Complex i(0.0, 1.0);
  ComplexMatrix x(2, 2), y(2, 2), z(2, 2);
  x << 0, 1, 1, 0;
  y << 0, -i, i, 0;
  z << 1, 0, 0, -1;
  switch (p) {
  case Pauli::I: return ComplexMatrix::Identity(2, 2);
  case Pauli::X: return x;
  case Pauli::Y: return y;
  case Pauli::Z: return z;
  case Pauli::MinusX: return -x;
  case Pauli::MinusZ: return -z;
  case Pauli::XPlusZ: return (x + z) * kInvSqrt2;
  case Pauli::XMinusZ: return (x - z) * kInvSqrt2;
  }
  throw DomainError("invalid Pauli label");
}

ComplexVector plus_eigenstate(Pauli p) {
  using std::numbers::pi;
  switch (p) {
  case Pauli::X: return qubit_state(pi / 4, 0);
  case Pauli::MinusX: return qubit_state(-pi / 4, 0);
  case Pauli::Y: return qubit_state(pi / 4, pi / 2);
  case Pauli::Z: return qubit_state(0, 0);
  case Pauli::MinusZ: return qubit_state(pi / 2, 0);
  case Pauli::XPlusZ: return qubit_state(pi / 8, 0);
  case Pauli::XMinusZ: return qubit_state(3 * pi / 8, 0);
  case Pauli::I: break;
  }
  throw DomainError("identity has no distinguished +1 eigenstate");
}

ComplexMatrix pauli_operator(std::span<const Pauli> labels) {
  if (labels.empty()) throw DimensionError("pauli_operator needs at least one qubit");
  ComplexMatrix out = single_qubit_operator(labels[0]);
  for (std::size_t q = 1; q < labels.size(); ++q) {
    const ComplexMatrix f = single_qubit_operator(labels[q]);
    ComplexMatrix next(out.rows() * 2, out.cols() * 2);
    for (int r = 0; r < out.rows(); ++r) {
      for (int c = 0; c < out.cols(); ++c) {
        next.block<2, 2>(2 * r, 2 * c) = out(r, c) * f;
      }
    }
    out = std::move(next);
  }
  return out;
}

Complex permanent(const ComplexMatrix& m) {
  if (m.rows() != m.cols()) throw DimensionError("permanent requires a square matrix");
  const int n = static_cast<int>(m.rows());
  if (n > 16) throw DimensionError("permanent limited to n <= 16");
  if (n == 0) return {1.0, 0.0};

  // Ryser: perm(A) = (-1)^n sum_S (-1)^|S| prod_i sum_{j in S} a_ij,
  // visiting subsets in Gray-code order so each step toggles one column.
  std::vector<Complex> row_sums(n, Complex{});
  Complex total{};
  std::uint32_t prev_gray = 0;
  const std::uint32_t count = 1u << n;
  for (std::uint32_t k = 1; k < count; ++k) {
    const std::uint32_t gray = k ^ (k >> 1);
    const std::uint32_t diff = gray ^ prev_gray;
    const int col = std::countr_zero(diff);
    const double dir = (gray & diff) ? 1.0 : -1.0;
    for (int i = 0; i < n; ++i) row_sums[i] += dir * m(i, col);
    Complex prod = row_sums[0];
    for (int i = 1; i < n; ++i) prod *= row_sums[i];
    total += (std::popcount(gray) & 1) ? -prod : prod;
    prev_gray = gray;
  }
  return (n & 1) ? -total : total;
}

double fidelity_to_pure(const DensityMatrix& rho, const PureState& psi) {
  if (rho.dimension() != psi.dimension()) throw DimensionError("fidelity: dimension mismatch");
  const auto& a = psi.amplitudes();
  const Complex f = a.dot(rho.matrix() * a);
  if (std::abs(f.imag()) > 1e-10) throw DomainError("fidelity has a non-negligible imaginary part");
  return std::clamp(f.real(), 0.0, 1.0);
}

double purity(const DensityMatrix& rho) {
  // Tr(rho^2) = sum |rho_ij|^2 for Hermitian rho.
  return rho.matrix().squaredNorm();
}

DensityMatrix project_to_physical(const ComplexMatrix& h) {
  if (h.rows() != h.cols() || h.rows() == 0) throw DimensionError("project_to_physical: matrix must be square");
  if (!is_hermitian(h, 1e-8)) throw DomainError("project_to_physical: input is not Hermitian");
  const ComplexMatrix sym = (h + h.adjoint()) * 0.5;
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(sym);
  Eigen::VectorXd w = es.eigenvalues().cwiseMax(0.0);
  const double total = w.sum();
  if (total <= 0.0) throw DegenerateInputError("project_to_physical: no positive spectrum left");
  w /= total;
  const ComplexMatrix& v = es.eigenvectors();
  ComplexMatrix rho = v * w.cast<Complex>().asDiagonal() * v.adjoint();
  rho = (rho + rho.adjoint()).eval() * 0.5;
  return DensityMatrix::from_matrix(std::move(rho));
}

PureState ghz_state(double theta) {
  ComplexVector a = ComplexVector::Zero(kOutcomes);
  a[basis_index(0, 1, 0, 1)] = kInvSqrt2;
  a[basis_index(1, 0, 1, 0)] = std::polar(kInvSqrt2, theta);
  a /= a.norm();
  return PureState(std::move(a));
}

double trace_distance(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("trace_distance: dimension mismatch");
  ComplexMatrix d = a - b;
  d = (d + d.adjoint()).eval() * 0.5;
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(d, Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

bool is_unitary(const ComplexMatrix& u, double tol) {
  if (u.rows() != u.cols()) return false;
  return (u.adjoint() * u - ComplexMatrix::Identity(u.rows(), u.cols())).norm() <= tol;
}

bool is_hermitian(const ComplexMatrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

} // namespace ghzlab
