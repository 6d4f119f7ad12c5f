#include "ghzlab/chip.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "ghzlab/errors.hpp"

namespace ghzlab::chip {

namespace {

using std::numbers::pi;
constexpr double kTwoPi = 2.0 * pi;
constexpr int kMaxLift = 4;

double wrap_2pi(double x) {
  double r = std::fmod(x, kTwoPi);
  if (r < 0) r += kTwoPi;
  if (r >= kTwoPi) r -= kTwoPi;
  return r;
}

double circular_distance(double a, double b) {
  const double d = wrap_2pi(a - b);
  return std::min(d, kTwoPi - d);
}

ComplexMatrix balanced_coupler() {
  const double h = std::numbers::sqrt2 / 2.0;
  ComplexMatrix dc(2, 2);
  dc << Complex(h, 0), Complex(0, h), Complex(0, h), Complex(h, 0);
  return dc;
}

ComplexMatrix upper_phase(double x) {
  ComplexMatrix p = ComplexMatrix::Identity(2, 2);
  p(0, 0) = std::polar(1.0, x);
  return p;
}

struct BlockSolution {
  bool feasible = false;
  double power = std::numeric_limits<double>::infinity();
  Eigen::Matrix<double, 8, 1> y = Eigen::Matrix<double, 8, 1>::Zero();
};

// Minimum of sum_j r_j y_j subject to m y = rhs, y >= 0, restricted to the
// active columns. The optimum of this linear programme sits on a vertex, so
// every 4-column basis is tried.
BlockSolution min_power_vertex(const Eigen::Matrix<double, 4, 8>& m, const Eigen::Vector4d& rhs,
                               const std::array<double, 8>& r, const std::array<bool, 8>& active) {
  BlockSolution best;
  std::vector<int> cols;
  for (int j = 0; j < 8; ++j) {
    if (active[j]) cols.push_back(j);
  }
  const int n = static_cast<int>(cols.size());
  const double scale = std::max(1.0, rhs.cwiseAbs().maxCoeff());
  for (int i0 = 0; i0 < n; ++i0)
    for (int i1 = i0 + 1; i1 < n; ++i1)
      for (int i2 = i1 + 1; i2 < n; ++i2)
        for (int i3 = i2 + 1; i3 < n; ++i3) {
          const std::array<int, 4> basis = {cols[i0], cols[i1], cols[i2], cols[i3]};
          Eigen::Matrix4d sub;
          for (int k = 0; k < 4; ++k) sub.col(k) = m.col(basis[k]);
          Eigen::FullPivLU<Eigen::Matrix4d> lu(sub);
          if (!lu.isInvertible()) continue;
          const Eigen::Vector4d z = lu.solve(rhs);
          if (z.minCoeff() < -1e-14 * scale) continue;
          Eigen::Matrix<double, 8, 1> y = Eigen::Matrix<double, 8, 1>::Zero();
          double power = 0;
          for (int k = 0; k < 4; ++k) {
            y[basis[k]] = std::max(0.0, z[k]);
            power += r[basis[k]] * y[basis[k]];
          }
          if ((m * y - rhs).cwiseAbs().maxCoeff() > 1e-10 * scale) continue;
          if (power < best.power - 1e-18) {
            best.feasible = true;
            best.power = power;
            best.y = y;
          }
        }
  return best;
}

// Squared currents for one bank of eight resistors.
Eigen::Matrix<double, 8, 1> solve_bank(const Eigen::Matrix<double, 4, 8>& m_krad, const Eigen::Vector4d& target,
                                       const std::array<double, 8>& r, const std::array<bool, 8>& active) {
  const Eigen::Matrix<double, 4, 8> m = m_krad * 1e3;
  Eigen::Vector4d base;
  for (int i = 0; i < 4; ++i) base[i] = wrap_2pi(target[i]);

  BlockSolution best;
  for (int l0 = 0; l0 <= kMaxLift; ++l0)
    for (int l1 = 0; l1 <= kMaxLift; ++l1)
      for (int l2 = 0; l2 <= kMaxLift; ++l2)
        for (int l3 = 0; l3 <= kMaxLift; ++l3) {
          const Eigen::Vector4d rhs = base + kTwoPi * Eigen::Vector4d(l0, l1, l2, l3);
          const BlockSolution s = min_power_vertex(m, rhs, r, active);
          if (s.feasible && s.power < best.power * (1.0 - 1e-12)) best = s;
        }
  if (!best.feasible) throw SolverError("heater_solve: target phases unreachable within 4 turns");
  return best.y;
}

} // namespace

PreparationStage PreparationStage::measured_couplers() {
  PreparationStage s;
  s.reflectivities = {(0.499 + 0.501) / 2, (0.505 + 0.505) / 2, (0.490 + 0.491) / 2, (0.502 + 0.504) / 2};
  return s;
}

void PreparationStage::validate() const {
  for (double r : reflectivities) {
    if (!(r > 0.0 && r < 1.0)) throw DomainError("coupler reflectivity must lie in (0, 1)");
  }
  for (double t : path_phases) {
    if (!std::isfinite(t)) throw DomainError("path phase must be finite");
  }
}

double PreparationStage::theta() const {
  const auto& t = path_phases;
  return t[0] - t[1] - t[2] + t[3] + t[4] - t[5] - t[6] + t[7];
}

MziSetting make_setting(int party, double alpha, double phi, std::optional<Pauli> pauli) {
  if (party < 1 || party > kQubits) throw DomainError("party index must be in 1..4");
  return MziSetting{party, wrap_2pi(alpha), wrap_2pi(phi), pauli};
}

MziSetting setting_for_projector(Pauli p, int party) {
  switch (p) {
  case Pauli::X: return make_setting(party, 0, pi / 2, p);
  case Pauli::MinusX: return make_setting(party, 0, 3 * pi / 2, p);
  case Pauli::Y: return make_setting(party, pi / 2, pi / 2, p);
  case Pauli::Z: return make_setting(party, 0, pi, p);
  case Pauli::MinusZ: return make_setting(party, 0, 0, p);
  case Pauli::XPlusZ: return make_setting(party, 0, 3 * pi / 4, p);
  case Pauli::XMinusZ: return make_setting(party, 0, pi / 4, p);
  case Pauli::I: break;
  }
  throw DomainError("no MZI setting for the identity");
}

MeasurementSettings settings_for(const PauliString& labels) {
  MeasurementSettings s;
  for (int q = 0; q < kQubits; ++q) {
    const Pauli p = labels[q] == Pauli::I ? Pauli::Z : labels[q];
    s[q] = setting_for_projector(p, q + 1);
  }
  return s;
}

ComplexMatrix mzi_block(const MziSetting& s) {
  const ComplexMatrix dc = balanced_coupler();
  return dc * upper_phase(s.phi) * dc * upper_phase(s.alpha);
}

ComplexMatrix preparation_unitary(const PreparationStage& stage) {
  stage.validate();
  ComplexMatrix u = ComplexMatrix::Zero(kModes, kModes);
  for (int k = 0; k < kCouplers; ++k) {
    const double bar = std::sqrt(stage.reflectivities[k]);
    const Complex cross(0.0, std::sqrt(1.0 - stage.reflectivities[k]));
    const int in_up = 2 * k;
    const int in_low = 2 * k + 1;
    const int up = kUpperDestination[k];
    const int low = kLowerDestination[k];
    u(up, in_up) = bar;
    u(up, in_low) = cross;
    u(low, in_up) = cross;
    u(low, in_low) = bar;
  }
  for (int m = 0; m < kModes; ++m) u.row(m) *= std::polar(1.0, stage.path_phases[m]);
  return u;
}

ComplexMatrix measurement_unitary(const MeasurementSettings& settings) {
  ComplexMatrix u = ComplexMatrix::Zero(kModes, kModes);
  for (const MziSetting& s : settings) {
    if (s.party < 1 || s.party > kQubits) throw DomainError("party index must be in 1..4");
    const int off = 2 * (s.party - 1);
    u.block(off, off, 2, 2) = mzi_block(s);
  }
  return u;
}

ComplexMatrix full_unitary(const PreparationStage& stage, const MeasurementSettings& settings) {
  return measurement_unitary(settings) * preparation_unitary(stage);
}

HeaterCalibration HeaterCalibration::device_default() {
  HeaterCalibration c;
  c.a << 53.031, -54.123, -10.807, -4.293, -2.302, -1.307, -1.000, -0.733, //
      2.915, 9.016, 49.504, -48.858, -9.342, -3.271, -1.604, -0.801,        //
      1.094, 1.304, 4.330, 9.644, 51.987, -53.094, -11.325, -3.920,         //
      0.828, 1.124, 1.604, 2.203, 4.162, 11.675, 54.696, -51.980;
  c.b << 53.604, -52.942, -12.937, -4.535, -2.067, -1.504, 0, -0.730, //
      3.779, 10.918, 52.829, -54.752, -9.796, -3.963, 0, -1.201,      //
      1.165, 1.870, 3.826, 11.283, 48.144, -54.833, 0, -3.791,        //
      0.706, 0.926, 1.338, 2.199, 3.731, 11.630, 0, -52.863;
  c.phi0 << 3.8656, 2.838, 0.798, 0.990;
  // Individual values are not characterised; all sit in the 410-430 ohm band.
  c.resistances.fill(420.0);
  c.dead_channels = {15};
  return c;
}

bool HeaterCalibration::is_dead(int resistor) const {
  return std::find(dead_channels.begin(), dead_channels.end(), resistor) != dead_channels.end();
}

void HeaterCalibration::validate() const {
  for (double r : resistances) {
    if (!(r >= 410.0 && r <= 430.0)) throw CalibrationError("heater resistance outside [410, 430] ohm");
  }
  for (int d : dead_channels) {
    if (d < 1 || d > kHeaters) throw CalibrationError("dead channel index outside 1..16");
    if (d > 8) {
      if (b.col(d - 9).cwiseAbs().maxCoeff() != 0.0) {
        throw CalibrationError("column of a dead phi resistor must be zero");
      }
    } else if (a.col(d - 1).cwiseAbs().maxCoeff() != 0.0) {
      throw CalibrationError("column of a dead alpha resistor must be zero");
    }
  }
  if (!a.allFinite() || !b.allFinite() || !phi0.allFinite()) throw CalibrationError("non-finite calibration entry");
  for (int k = 0; k < 2; ++k) {
    const auto& m = k == 0 ? a : b;
    for (int i = 0; i < 4; ++i) {
      // Own heaters of a dead resistor carry no weight and are skipped.
      double own = std::numeric_limits<double>::infinity();
      int live = 0;
      for (int j : {2 * i, 2 * i + 1}) {
        if (is_dead(8 * k + j + 1)) continue;
        own = std::min(own, std::abs(m(i, j)));
        ++live;
      }
      if (live == 0) throw CalibrationError("MZI has no live heater");
      for (int j = 0; j < 8; ++j) {
        if (j == 2 * i || j == 2 * i + 1) continue;
        if (!(own > std::abs(m(i, j)))) throw CalibrationError("calibration row is not dominated by its own heaters");
      }
    }
  }
}

MziPhases heater_forward(const HeaterCalibration& cal, std::span<const double, kHeaters> currents) {
  Eigen::Matrix<double, 8, 1> sq_alpha, sq_phi;
  for (int j = 0; j < kHeaters; ++j) {
    const double i = currents[j];
    if (!(i >= 0.0) || !std::isfinite(i)) throw DomainError("heater currents must be finite and non-negative");
    if (i != 0.0 && cal.is_dead(j + 1)) {
      throw CalibrationError("current requested on dead resistor R" + std::to_string(j + 1));
    }
    (j < 8 ? sq_alpha[j] : sq_phi[j - 8]) = i * i;
  }
  const Eigen::Vector4d alpha = cal.a * sq_alpha * 1e3;
  const Eigen::Vector4d phi = cal.phi0 + cal.b * sq_phi * 1e3;
  MziPhases out;
  for (int q = 0; q < kQubits; ++q) {
    out.alpha[q] = alpha[q];
    out.phi[q] = phi[q];
  }
  return out;
}

std::array<double, kHeaters> heater_solve(const HeaterCalibration& cal, const MziPhases& target) {
  Eigen::Vector4d ta, tp;
  for (int q = 0; q < kQubits; ++q) {
    if (!std::isfinite(target.alpha[q]) || !std::isfinite(target.phi[q])) {
      throw DomainError("heater_solve: target phases must be finite");
    }
    ta[q] = target.alpha[q];
    tp[q] = target.phi[q] - cal.phi0[q];
  }
  std::array<double, 8> r_alpha{}, r_phi{};
  std::array<bool, 8> act_alpha{}, act_phi{};
  for (int j = 0; j < 8; ++j) {
    r_alpha[j] = cal.resistances[j];
    r_phi[j] = cal.resistances[j + 8];
    act_alpha[j] = !cal.is_dead(j + 1);
    act_phi[j] = !cal.is_dead(j + 9);
  }
  const auto ya = solve_bank(cal.a, ta, r_alpha, act_alpha);
  const auto yp = solve_bank(cal.b, tp, r_phi, act_phi);
  std::array<double, kHeaters> currents{};
  for (int j = 0; j < 8; ++j) {
    currents[j] = std::sqrt(ya[j]);
    currents[j + 8] = std::sqrt(yp[j]);
  }

  const MziPhases check = heater_forward(cal, currents);
  for (int q = 0; q < kQubits; ++q) {
    if (circular_distance(check.alpha[q], target.alpha[q]) > 1e-6 ||
        circular_distance(check.phi[q], target.phi[q]) > 1e-6) {
      throw SolverError("heater_solve: solution does not reproduce the target within 1e-6 rad");
    }
  }
  return currents;
}

double dissipated_power(const HeaterCalibration& cal, std::span<const double, kHeaters> currents) {
  double p = 0;
  for (int j = 0; j < kHeaters; ++j) p += cal.resistances[j] * currents[j] * currents[j];
  return p;
}

double weighted_balance(const MziSetting& s, double eta_up, double eta_down) {
  const ComplexMatrix m = mzi_block(s);
  const int port = (s.party % 2 == 1) ? 0 : 1;
  const double p_up = std::norm(m(0, port));
  const double p_down = std::norm(m(1, port));
  const double up = eta_up * p_up;
  const double total = up + eta_down * p_down;
  return total > 0 ? up / total : 0.0;
}

MziSetting compensate_setting(const MziSetting& setting, double eta_up, double eta_down) {
  for (double e : {eta_up, eta_down}) {
    if (!(e > 0.0 && e <= 1.0)) throw DomainError("detector efficiency must lie in (0, 1]");
  }
  if (eta_up == eta_down) return setting;
  const double target = weighted_balance(setting, 1.0, 1.0);
  if (target <= 0.0 || target >= 1.0) return setting;

  // Required raw upper-click probability s such that the weighted balance
  // equals the target; then invert s(phi) on the calibration port.
  const double s = target * eta_down / (eta_up * (1.0 - target) + target * eta_down);
  const bool upper_port = setting.party % 2 == 1;
  const double half = upper_port ? std::asin(std::sqrt(s)) : std::acos(std::sqrt(s));
  const std::array<double, 2> candidates = {wrap_2pi(2.0 * half), wrap_2pi(2.0 * (pi - half))};
  double best_phi = candidates[0];
  for (double c : candidates) {
    if (circular_distance(c, setting.phi) < circular_distance(best_phi, setting.phi)) best_phi = c;
  }
  MziSetting out = setting;
  out.phi = best_phi;
  const double before = std::abs(weighted_balance(setting, eta_up, eta_down) - target);
  const double after = std::abs(weighted_balance(out, eta_up, eta_down) - target);
  return after <= before ? out : setting;
}

} // namespace ghzlab::chip
