#include "ghzlab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <numeric>
#include <set>

#include <Eigen/Cholesky>

#include "ghzlab/errors.hpp"
#include "ghzlab/seeding.hpp"

namespace ghzlab::analysis {

namespace {

using std::numbers::pi;

constexpr std::array<Pauli, 3> kTomoBases = {Pauli::X, Pauli::Y, Pauli::Z};

int party_value(int outcome, int party0) {
  return outcome_bit(outcome, party0) ? -1 : 1;
}

bool is_masked(const MeasurementRecord& r, const IdentityMask& mask, int q) {
  return mask[q] || r.settings[q] == Pauli::I;
}

// Eigenvector of the unsigned operator for outcome bit b.
ComplexVector outcome_vector(Pauli label, int bit) {
  const ComplexVector plus = plus_eigenstate(unsigned_pauli(label));
  if (bit == 0) return plus;
  ComplexVector minus(2);
  minus << -std::conj(plus[1]), std::conj(plus[0]);
  return minus;
}

ComplexVector product_vector(const PauliString& labels, int outcome) {
  ComplexVector v = ComplexVector::Ones(1);
  for (int q = 0; q < kQubits; ++q) {
    const ComplexVector f = outcome_vector(labels[q], outcome_bit(outcome, q) ? 1 : 0);
    ComplexVector next(v.size() * 2);
    for (Eigen::Index i = 0; i < v.size(); ++i) next.segment<2>(2 * i) = v[i] * f;
    v = std::move(next);
  }
  return v;
}

// Projector columns and counts of every (record, outcome) cell.
struct LikelihoodData {
  ComplexMatrix projectors; // 16 x K
  Eigen::VectorXd counts;   // K
  double total = 0.0;
};

LikelihoodData likelihood_data(const TomographySet& ts) {
  const Eigen::Index k = static_cast<Eigen::Index>(ts.records.size()) * kOutcomes;
  LikelihoodData d;
  d.projectors.resize(kOutcomes, k);
  d.counts.resize(k);
  Eigen::Index col = 0;
  for (const auto& r : ts.records) {
    for (int o = 0; o < kOutcomes; ++o, ++col) {
      d.projectors.col(col) = product_vector(r.settings, o);
      d.counts[col] = r.counts[o];
    }
  }
  d.total = d.counts.sum();
  return d;
}

double objective(const LikelihoodData& d, const ComplexMatrix& t) {
  const double tr = t.squaredNorm();
  const Eigen::VectorXd q = (t * d.projectors).colwise().squaredNorm().transpose();
  double ll = 0.0;
  for (Eigen::Index k = 0; k < q.size(); ++k) {
    if (d.counts[k] == 0.0) continue;
    if (q[k] <= 0.0) return -std::numeric_limits<double>::infinity();
    ll += d.counts[k] * std::log(q[k] / tr);
  }
  return ll;
}

ComplexMatrix lower_mask(ComplexMatrix g) {
  for (int r = 0; r < g.rows(); ++r) {
    for (int c = r + 1; c < g.cols(); ++c) g(r, c) = 0.0;
    g(r, r) = g(r, r).real();
  }
  return g;
}

ComplexMatrix gradient(const LikelihoodData& d, const ComplexMatrix& t) {
  const double tr = t.squaredNorm();
  const Eigen::VectorXd q = (t * d.projectors).colwise().squaredNorm().transpose();
  Eigen::VectorXd w(q.size());
  for (Eigen::Index k = 0; k < q.size(); ++k) w[k] = d.counts[k] == 0.0 ? 0.0 : d.counts[k] / q[k];
  const ComplexMatrix r = d.projectors * w.cast<Complex>().asDiagonal() * d.projectors.adjoint();
  const ComplexMatrix g = 2.0 * t * (r - (d.total / tr) * ComplexMatrix::Identity(kOutcomes, kOutcomes));
  return lower_mask(g);
}

// Lower-triangular T with T^dagger T = rho, from the Cholesky factor of the
// index-reversed matrix.
ComplexMatrix lower_factor(const ComplexMatrix& rho) {
  const Eigen::Index n = rho.rows();
  ComplexMatrix rev(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) rev(i, j) = rho(n - 1 - i, n - 1 - j);
  Eigen::LLT<ComplexMatrix> llt(rev);
  if (llt.info() != Eigen::Success) throw SolverError("MLE initialiser is not positive definite");
  const ComplexMatrix l = llt.matrixL();
  ComplexMatrix t(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) t(i, j) = std::conj(l(n - 1 - j, n - 1 - i));
  return t;
}

DensityMatrix rho_from_factor(const ComplexMatrix& t) {
  ComplexMatrix rho = t.adjoint() * t;
  rho /= rho.trace().real();
  rho = (rho + rho.adjoint()).eval() * 0.5;
  return DensityMatrix::from_matrix(std::move(rho));
}

void require_counts(std::span<const MeasurementRecord> records) {
  for (const auto& r : records) {
    if (r.exact) throw DomainError("Monte-Carlo errors need event counts, not probabilities");
  }
}

MeasurementRecord poisson_resample(const MeasurementRecord& r, Rng& rng) {
  MeasurementRecord out = r;
  for (auto& c : out.counts) {
    if (c <= 0.0) continue;
    std::poisson_distribution<long long> pois(c);
    c = static_cast<double>(pois(rng));
  }
  // A resample with no events at all carries no information; keep one.
  if (out.total() <= 0.0) out.counts = r.counts;
  return out;
}

double sample_std(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / (n - 1.0));
}

double wrap_pi(double x) {
  double r = std::remainder(x, 2.0 * pi);
  if (r <= -pi) r += 2.0 * pi;
  return r;
}

} // namespace

MeasurementRecord MeasurementRecord::from_counts(const PauliString& settings,
                                                 const std::array<std::uint64_t, kOutcomes>& c) {
  MeasurementRecord r;
  r.settings = settings;
  for (int o = 0; o < kOutcomes; ++o) r.counts[o] = static_cast<double>(c[o]);
  r.exact = false;
  return r;
}

MeasurementRecord MeasurementRecord::from_probabilities(const PauliString& settings,
                                                        const std::array<double, kOutcomes>& p) {
  MeasurementRecord r;
  r.settings = settings;
  r.counts = p;
  r.exact = true;
  return r;
}

double MeasurementRecord::total() const {
  return std::accumulate(counts.begin(), counts.end(), 0.0);
}

double expectation(const MeasurementRecord& record, const IdentityMask& mask) {
  const double total = record.total();
  if (!(total > 0.0)) throw DegenerateInputError("expectation: record has no events");
  double sign = 1.0;
  for (int q = 0; q < kQubits; ++q) {
    if (!is_masked(record, mask, q)) sign *= pauli_sign(record.settings[q]);
  }
  double e = 0.0;
  for (int o = 0; o < kOutcomes; ++o) {
    if (record.counts[o] == 0.0) continue;
    int v = 1;
    for (int q = 0; q < kQubits; ++q) {
      if (!is_masked(record, mask, q)) v *= party_value(o, q);
    }
    e += record.counts[o] * v;
  }
  return sign * e / total;
}

PauliString phase_witness_settings() {
  return {Pauli::XPlusZ, Pauli::MinusX, Pauli::X, Pauli::MinusX};
}

double phase_witness(const MeasurementRecord& record) {
  if (record.settings != phase_witness_settings()) {
    throw DomainError("phase witness needs settings ((X+Z)/sqrt2, -X, X, -X)");
  }
  return expectation(record);
}

CosineFit fit_phase_scan(std::span<const std::pair<double, double>> points) {
  if (points.size() < 5) throw DomainError("phase-scan fit needs at least 5 points");
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::VectorXd p(n), y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    p[i] = points[i].first;
    y[i] = points[i].second;
    if (!std::isfinite(p[i]) || !std::isfinite(y[i])) throw DomainError("phase-scan points must be finite");
  }
  const double span = p.maxCoeff() - p.minCoeff();
  const double y_scale = y.cwiseAbs().maxCoeff();
  const double y_mean = y.mean();
  if (!(span > 0.0) || (y.array() - y_mean).abs().maxCoeff() <= 1e-12 * std::max(1.0, y_scale)) {
    throw FitError("phase-scan fit is degenerate (no variation in power or signal)");
  }

  std::vector<double> sorted(p.data(), p.data() + n);
  std::sort(sorted.begin(), sorted.end());
  double min_gap = span;
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    const double g = sorted[i] - sorted[i - 1];
    if (g > 0.0) min_gap = std::min(min_gap, g);
  }

  // Coarse scan over the slope with the amplitude and phase solved linearly.
  const double a_lo = 0.5 * pi / span;
  const double a_hi = std::max(a_lo * 2.0, pi / min_gap);
  constexpr int kGrid = 4000;
  double best_sse = std::numeric_limits<double>::infinity();
  Eigen::Vector3d theta(0, 0, 0); // A, a, b
  for (int g = 0; g <= kGrid; ++g) {
    const double a = a_lo + (a_hi - a_lo) * g / kGrid;
    Eigen::MatrixXd m(n, 2);
    m.col(0) = (a * p).array().cos();
    m.col(1) = (a * p).array().sin();
    const Eigen::Matrix2d nm = m.transpose() * m;
    if (std::abs(nm.determinant()) < 1e-12 * nm.squaredNorm()) continue;
    const Eigen::Vector2d c = nm.ldlt().solve(m.transpose() * y);
    const double sse = (m * c - y).squaredNorm();
    if (sse < best_sse) {
      best_sse = sse;
      theta = Eigen::Vector3d(std::hypot(c[0], c[1]), a, std::atan2(-c[1], c[0]));
    }
  }
  if (!std::isfinite(best_sse)) throw FitError("phase-scan fit: singular normal equations");

  // Levenberg-Marquardt polish on (A, a, b).
  auto residual = [&](const Eigen::Vector3d& th) {
    return Eigen::VectorXd(th[0] * (th[1] * p.array() + th[2]).cos() - y.array());
  };
  double lambda = 1e-6;
  Eigen::VectorXd r = residual(theta);
  double sse = r.squaredNorm();
  for (int it = 0; it < 500; ++it) {
    Eigen::MatrixXd j(n, 3);
    const Eigen::ArrayXd arg = theta[1] * p.array() + theta[2];
    j.col(0) = arg.cos();
    j.col(1) = -theta[0] * p.array() * arg.sin();
    j.col(2) = -theta[0] * arg.sin();
    const Eigen::Matrix3d h = j.transpose() * j;
    if (std::abs(h.determinant()) <= 1e-300 || !h.allFinite()) throw FitError("phase-scan fit: singular normal equations");
    const Eigen::Vector3d grad = j.transpose() * r;
    bool accepted = false;
    for (int k = 0; k < 40; ++k) {
      Eigen::Matrix3d damped = h;
      damped.diagonal() *= (1.0 + lambda);
      const Eigen::Vector3d cand = theta - damped.ldlt().solve(grad);
      const Eigen::VectorXd rc = residual(cand);
      const double sc = rc.squaredNorm();
      if (sc <= sse) {
        const double gain = sse - sc;
        theta = cand;
        r = rc;
        sse = sc;
        lambda = std::max(lambda * 0.1, 1e-15);
        accepted = true;
        if (gain <= 1e-30 + 1e-16 * sse) it = 500;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) break;
  }

  CosineFit fit;
  double amp = theta[0], a = theta[1], b = theta[2];
  if (a < 0) {
    a = -a;
    b = -b;
  }
  if (amp < 0) {
    amp = -amp;
    b += pi;
  }
  b = wrap_pi(b);
  fit.amplitude = amp;
  fit.slope = a;
  fit.offset = b;
  const double mid = 0.5 * (p.maxCoeff() + p.minCoeff());
  const double k = std::round((a * mid + b) / (2.0 * pi));
  fit.zero_phase_power = (2.0 * pi * k - b) / a;
  fit.rms_residual = std::sqrt(sse / static_cast<double>(n));
  return fit;
}

WitnessResult stabilizer_witness(const MeasurementRecord& record_x, const MeasurementRecord& record_z) {
  const PauliString xs = {Pauli::X, Pauli::X, Pauli::X, Pauli::X};
  const PauliString zs = {Pauli::Z, Pauli::Z, Pauli::Z, Pauli::Z};
  if (record_x.settings != xs || record_z.settings != zs) {
    throw DomainError("stabilizer witness needs the all-X and all-Z records");
  }
  WitnessResult w;
  w.g1 = expectation(record_x);
  // g_k = -Z_{k-1} Z_k; the product of (g_k + 1)/2 is 1 exactly when every
  // neighbouring pair is anti-correlated.
  const double total = record_z.total();
  if (!(total > 0.0)) throw DegenerateInputError("stabilizer witness: empty Z record");
  double hit = 0.0;
  for (int o = 0; o < kOutcomes; ++o) {
    bool ok = true;
    for (int q = 1; q < kQubits; ++q) ok = ok && (party_value(o, q - 1) * party_value(o, q) == -1);
    if (ok) hit += record_z.counts[o];
  }
  w.stabilizer_term = hit / total;
  w.value = 3.0 - 2.0 * ((w.g1 + 1.0) / 2.0 + w.stabilizer_term);
  w.fidelity_lower_bound = (1.0 - w.value) / 2.0;
  return w;
}

std::array<PauliString, kBellTerms> bell_settings() {
  constexpr Pauli I = Pauli::I;
  constexpr Pauli M1 = Pauli::XMinusZ, M0 = Pauli::XPlusZ;
  return {{
      {M1, Pauli::MinusZ, I, I},
      {M1, I, Pauli::Z, I},
      {M1, I, I, Pauli::MinusZ},
      {M0, Pauli::MinusZ, I, I},
      {M0, I, Pauli::Z, I},
      {M0, I, I, Pauli::MinusZ},
      {M0, Pauli::MinusX, Pauli::X, Pauli::MinusX},
      {M1, Pauli::MinusX, Pauli::X, Pauli::MinusX},
  }};
}

std::array<double, kBellTerms> bell_coefficients() {
  return {-1, -1, -1, 1, 1, 1, 3, 3};
}

BellResult bell_value(std::span<const MeasurementRecord> records) {
  const auto rows = bell_settings();
  const auto coef = bell_coefficients();
  BellResult b;
  double var = 0.0;
  for (int i = 0; i < kBellTerms; ++i) {
    const MeasurementRecord* match = nullptr;
    for (const auto& r : records) {
      if (r.settings == rows[i]) {
        if (match) throw DomainError("bell_value: duplicate record for " + to_string(rows[i]));
        match = &r;
      }
    }
    if (!match) throw DomainError("bell_value: missing record for " + to_string(rows[i]));
    const double e = expectation(*match);
    b.terms[i] = e;
    b.value += coef[i] * e;
    if (!match->exact) var += coef[i] * coef[i] * std::max(0.0, 1.0 - e * e) / match->total();
  }
  b.standard_error = std::sqrt(var);
  return b;
}

void TomographySet::validate() const {
  if (records.size() != 81) throw DomainError("tomography set must hold 81 records");
  std::set<PauliString> seen;
  for (const auto& r : records) {
    for (Pauli p : r.settings) {
      if (p != Pauli::X && p != Pauli::Y && p != Pauli::Z) {
        throw DomainError("tomography settings must be X, Y or Z");
      }
    }
    if (!seen.insert(r.settings).second) throw DomainError("duplicate tomography setting " + to_string(r.settings));
    if (!(r.total() > 0.0)) throw DegenerateInputError("tomography record without events");
  }
}

std::vector<PauliString> tomography_settings() {
  std::vector<PauliString> out;
  for (Pauli a : kTomoBases)
    for (Pauli b : kTomoBases)
      for (Pauli c : kTomoBases)
        for (Pauli d : kTomoBases) out.push_back({a, b, c, d});
  return out;
}

ComplexMatrix linear_inversion(const TomographySet& ts) {
  ts.validate();
  constexpr std::array<Pauli, 4> kAll = {Pauli::I, Pauli::X, Pauli::Y, Pauli::Z};
  ComplexMatrix rho = ComplexMatrix::Zero(kOutcomes, kOutcomes);
  for (int idx = 0; idx < 256; ++idx) {
    PauliString p;
    IdentityMask mask{};
    for (int q = 0; q < kQubits; ++q) {
      p[q] = kAll[(idx >> (2 * (kQubits - 1 - q))) & 3];
      mask[q] = p[q] == Pauli::I;
    }
    double sum = 0.0;
    int n = 0;
    for (const auto& r : ts.records) {
      bool compatible = true;
      for (int q = 0; q < kQubits; ++q) compatible = compatible && (mask[q] || r.settings[q] == p[q]);
      if (!compatible) continue;
      sum += expectation(r, mask);
      ++n;
    }
    rho += (sum / n) * pauli_operator(p);
  }
  return rho / 16.0;
}

double log_likelihood(const TomographySet& ts, const ComplexMatrix& rho) {
  double ll = 0.0;
  for (const auto& r : ts.records) {
    for (int o = 0; o < kOutcomes; ++o) {
      if (r.counts[o] == 0.0) continue;
      const ComplexVector v = product_vector(r.settings, o);
      const double p = std::real(v.dot(rho * v));
      if (p <= 0.0) return -std::numeric_limits<double>::infinity();
      ll += r.counts[o] * std::log(p);
    }
  }
  return ll;
}

ComplexMatrix mle_gradient(const TomographySet& ts, const ComplexMatrix& t) {
  return gradient(likelihood_data(ts), t);
}

double mle_objective(const TomographySet& ts, const ComplexMatrix& t) {
  return objective(likelihood_data(ts), t);
}

MleResult mle_reconstruct(const TomographySet& ts, const MleOptions& options) {
  ts.validate();
  const LikelihoodData data = likelihood_data(ts);
  const DensityMatrix rho0 = project_to_physical(linear_inversion(ts));
  const double ll0 = log_likelihood(ts, rho0.matrix());

  const double eps = options.initial_mixing;
  const ComplexMatrix start =
      (1.0 - eps) * rho0.matrix() + eps * ComplexMatrix::Identity(kOutcomes, kOutcomes) / double(kOutcomes);
  ComplexMatrix t = lower_factor(start);
  t /= t.norm();
  double ll = objective(data, t);

  MleResult res{rho0, ll0, ll0, 0, false, {}};
  res.history.push_back(ll);
  double step = 1.0 / std::max(1.0, data.total);
  for (int it = 0; it < options.max_iterations; ++it) {
    const ComplexMatrix g = gradient(data, t);
    const double g2 = g.squaredNorm();
    if (g2 == 0.0) {
      res.converged = true;
      break;
    }
    // Backtracking (Armijo) line search; the factor is renormalised since
    // the likelihood is invariant under T -> cT.
    bool accepted = false;
    double ll_new = ll;
    ComplexMatrix t_new;
    for (int k = 0; k < 60; ++k) {
      t_new = t + step * g;
      t_new /= t_new.norm();
      ll_new = objective(data, t_new);
      if (ll_new >= ll + 1e-4 * step * g2) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    res.iterations = it + 1;
    if (!accepted) {
      res.converged = true;
      break;
    }
    const double change = std::abs(ll_new - ll) / std::max(1.0, std::abs(ll));
    t = t_new;
    ll = ll_new;
    res.history.push_back(ll);
    step *= 2.0;
    if (change < options.relative_tolerance) {
      res.converged = true;
      break;
    }
  }

  if (ll >= ll0) {
    res.rho = rho_from_factor(t);
    res.log_likelihood = ll;
  }
  return res;
}

double monte_carlo_error(std::span<const MeasurementRecord> records, const RecordStatistic& statistic,
                         int n_resamples, std::uint64_t seed) {
  if (n_resamples < 2) throw DomainError("Monte-Carlo error needs at least 2 resamples");
  require_counts(records);
  std::vector<double> values(n_resamples);
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (int s = 0; s < n_resamples; ++s) {
    try {
      Rng rng(child_seed(seed, static_cast<std::uint64_t>(s)));
      std::vector<MeasurementRecord> resampled;
      resampled.reserve(records.size());
      for (const auto& r : records) resampled.push_back(poisson_resample(r, rng));
      values[s] = statistic(resampled);
    } catch (...) {
#pragma omp critical(ghzlab_mc_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return sample_std(values);
}

double monte_carlo_error(const TomographySet& ts, const std::function<double(const TomographySet&)>& statistic,
                         int n_resamples, std::uint64_t seed) {
  return monte_carlo_error(
      std::span<const MeasurementRecord>(ts.records),
      [&](std::span<const MeasurementRecord> rs) {
        TomographySet t;
        t.records.assign(rs.begin(), rs.end());
        return statistic(t);
      },
      n_resamples, seed);
}

PhaseFidelity max_fidelity_over_phase(const DensityMatrix& rho) {
  if (rho.dimension() != kOutcomes) throw DimensionError("max_fidelity_over_phase expects a 4-qubit state");
  const auto& m = rho.matrix();
  const int a = basis_index(0, 1, 0, 1);
  const int b = basis_index(1, 0, 1, 0);
  const Complex c = m(a, b);
  const double pops = 0.5 * (m(a, a).real() + m(b, b).real());
  if (std::abs(c) <= 1e-15) return {0.0, pops};
  // <GHZ(theta)|rho|GHZ(theta)> = pops + Re(e^{i theta} c).
  double theta = wrap_pi(-std::arg(c));
  return {theta, pops + std::abs(c)};
}

} // namespace ghzlab::analysis
