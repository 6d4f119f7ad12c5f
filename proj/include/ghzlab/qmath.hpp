#pragma once

// Dense complex linear algebra shared by the whole library: pure states,
// density matrices, Pauli strings and matrix permanents.
//
// Qubit ordering: |q1 q2 q3 q4> maps to index q1*8 + q2*4 + q3*2 + q4, so
// qubit 1 is the most significant bit.

#include <array>
#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace ghzlab {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

inline constexpr int kQubits = 4;
inline constexpr int kModes = 2 * kQubits;
inline constexpr int kOutcomes = 1 << kQubits;

/// Index of the basis state |q1 q2 q3 q4>.
constexpr int basis_index(int q1, int q2, int q3, int q4) {
  return q1 * 8 + q2 * 4 + q3 * 2 + q4;
}

/// Bit of qubit `party` (0-based, party 0 is the most significant) in an
/// outcome index.
constexpr int outcome_bit(int outcome, int party) {
  return (outcome >> (kQubits - 1 - party)) & 1;
}

std::string outcome_label(int outcome);

class PureState {
public:
  /// Throws DomainError unless the squared norm is 1 within 1e-12.
  explicit PureState(ComplexVector amplitudes);

  int dimension() const { return static_cast<int>(amplitudes_.size()); }
  const ComplexVector& amplitudes() const { return amplitudes_; }
  Complex operator[](int i) const { return amplitudes_[i]; }

private:
  ComplexVector amplitudes_;
};

class DensityMatrix {
public:
  /// Validates hermiticity, unit trace and positivity (tolerance 1e-10).
  static DensityMatrix from_matrix(ComplexMatrix m);
  static DensityMatrix from_pure(const PureState& psi);
  static DensityMatrix maximally_mixed(int dimension);

  int dimension() const { return static_cast<int>(rho_.rows()); }
  const ComplexMatrix& matrix() const { return rho_; }
  Complex operator()(int r, int c) const { return rho_(r, c); }

private:
  explicit DensityMatrix(ComplexMatrix m) : rho_(std::move(m)) {}
  ComplexMatrix rho_;
};

/// Single-qubit observables used by the measurement stage. Every label except
/// I is Hermitian with eigenvalues +1 and -1.
enum class Pauli : std::uint8_t { I, X, Y, Z, MinusX, MinusZ, XPlusZ, XMinusZ };

inline constexpr std::array<Pauli, 8> kAllPaulis = {
    Pauli::I,      Pauli::X,      Pauli::Y,      Pauli::Z,
    Pauli::MinusX, Pauli::MinusZ, Pauli::XPlusZ, Pauli::XMinusZ};

using PauliString = std::array<Pauli, kQubits>;

std::string_view to_string(Pauli p);
/// Accepts the names produced by to_string ("I", "X", "-X", "(X+Z)/sqrt2", ...)
/// plus the lower-case aliases "x", "y", "z". Throws DomainError otherwise.
Pauli pauli_from_string(std::string_view s);
std::string to_string(const PauliString& s);

/// Sign applied when an outcome is recorded in the eigenbasis of the unsigned
/// operator: -1 for MinusX and MinusZ, +1 otherwise.
int pauli_sign(Pauli p);
/// MinusX -> X, MinusZ -> Z, identity for the rest.
Pauli unsigned_pauli(Pauli p);

ComplexMatrix single_qubit_operator(Pauli p);

/// Eigenvector of `p` with eigenvalue +1, written cos(chi)|0> + e^{i psi} sin(chi)|1>.
ComplexVector plus_eigenstate(Pauli p);

/// Kronecker product of the single-qubit operators, qubit 1 leftmost.
ComplexMatrix pauli_operator(std::span<const Pauli> labels);

/// Permanent by Ryser's formula with Gray-code subset order, O(2^n n).
/// Throws DimensionError for non-square input or n > 16.
Complex permanent(const ComplexMatrix& m);

double fidelity_to_pure(const DensityMatrix& rho, const PureState& psi);
double purity(const DensityMatrix& rho);

/// Eigen-decomposes a Hermitian matrix, clamps negative eigenvalues to zero
/// and renormalises the trace. Throws DegenerateInputError when nothing is
/// left after clamping.
DensityMatrix project_to_physical(const ComplexMatrix& h);

/// (|0101> + e^{i theta}|1010>) / sqrt(2).
PureState ghz_state(double theta = 0.0);

double trace_distance(const ComplexMatrix& a, const ComplexMatrix& b);
bool is_unitary(const ComplexMatrix& u, double tol = 1e-12);
bool is_hermitian(const ComplexMatrix& m, double tol);

} // namespace ghzlab
