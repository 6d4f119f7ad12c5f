#include "ghzlab/source.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ghzlab/errors.hpp"

namespace ghzlab::source {

namespace {

constexpr int kA = 0, kB = 1, kC = 2, kD = 3;
constexpr int kGridSteps = 11;
constexpr int kMaxRefine = 200;

struct Pair {
  int i, j;
  double OverlapMap::*field;
};
constexpr std::array<Pair, 4> kMeasuredPairs = {
    {{kA, kB, &OverlapMap::ab}, {kA, kC, &OverlapMap::ac}, {kB, kD, &OverlapMap::bd}, {kC, kD, &OverlapMap::cd}}};

void check_overlaps(const OverlapMap& m) {
  for (const auto& p : kMeasuredPairs) {
    const double v = m.*p.field;
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("measured overlaps must lie in [0, 1]");
  }
}

using Vec4 = Eigen::Vector4d;

double objective(const OverlapMap& m, const Vec4& x) {
  double f = 0;
  for (const auto& p : kMeasuredPairs) {
    const double r = x[p.i] * x[p.j] - m.*p.field;
    f += r * r;
  }
  return f;
}

// Box-constrained Levenberg-Marquardt on the four products.
Vec4 refine(const OverlapMap& m, Vec4 x) {
  double lambda = 1e-3;
  double f = objective(m, x);
  for (int it = 0; it < kMaxRefine; ++it) {
    Eigen::Matrix<double, 4, 4> jac = Eigen::Matrix<double, 4, 4>::Zero();
    Vec4 res;
    for (int k = 0; k < 4; ++k) {
      const auto& p = kMeasuredPairs[k];
      res[k] = x[p.i] * x[p.j] - m.*p.field;
      jac(k, p.i) = x[p.j];
      jac(k, p.j) = x[p.i];
    }
    const Vec4 g = jac.transpose() * res;
    if (g.norm() < 1e-15) break;
    const Eigen::Matrix4d h = jac.transpose() * jac;
    bool improved = false;
    for (int tries = 0; tries < 30; ++tries) {
      Eigen::Matrix4d damped = h;
      damped.diagonal().array() += lambda * (1.0 + h.diagonal().array());
      Vec4 cand = x - damped.ldlt().solve(g);
      cand = cand.cwiseMax(0.0).cwiseMin(1.0);
      const double fc = objective(m, cand);
      if (fc < f) {
        const double gain = f - fc;
        x = cand;
        f = fc;
        lambda = std::max(lambda * 0.3, 1e-12);
        improved = true;
        if (gain < 1e-30) it = kMaxRefine;
        break;
      }
      lambda *= 10.0;
    }
    if (!improved) break;
  }
  return x;
}

// Admissible range of the rescaling t that keeps (tA, B/t, C/t, tD) inside
// the unit box.
struct GaugeRange {
  double lo, hi;
};

GaugeRange gauge_range(const Vec4& x) {
  const double lo = std::max(x[kB], x[kC]);
  const double top = std::max(x[kA], x[kD]);
  const double hi = top > 0 ? 1.0 / top : std::numeric_limits<double>::infinity();
  return {lo, hi};
}

Vec4 apply_gauge(const Vec4& x, double t) {
  return Vec4(t * x[kA], x[kB] / t, x[kC] / t, t * x[kD]);
}

Vec4 canonical_gauge(const Vec4& x) {
  if (x[kA] * x[kD] <= 0.0 || x[kB] * x[kC] <= 0.0) return x;
  const auto range = gauge_range(x);
  double t = std::pow((x[kB] * x[kC]) / (x[kA] * x[kD]), 0.25);
  t = std::clamp(t, range.lo, range.hi);
  return apply_gauge(x, t).cwiseMin(1.0);
}

bool lex_less(const Vec4& a, const Vec4& b) {
  for (int i = 0; i < 4; ++i) {
    if (a[i] != b[i]) return a[i] < b[i];
  }
  return false;
}

Vec4 best_fit(const OverlapMap& m) {
  Vec4 best = Vec4::Zero();
  double best_f = std::numeric_limits<double>::infinity();
  for (int a = 0; a < kGridSteps; ++a)
    for (int b = 0; b < kGridSteps; ++b)
      for (int c = 0; c < kGridSteps; ++c)
        for (int d = 0; d < kGridSteps; ++d) {
          const Vec4 start(a / 10.0, b / 10.0, c / 10.0, d / 10.0);
          const Vec4 x = canonical_gauge(refine(m, start));
          const double f = objective(m, x);
          if (!std::isfinite(best_f)) {
            best = x;
            best_f = f;
            continue;
          }
          const double tol = 1e-14 * std::max(1.0, best_f);
          if (f < best_f - tol || (std::abs(f - best_f) <= tol && lex_less(x, best))) {
            best = x;
            best_f = std::min(f, best_f);
          }
        }
  return best;
}

} // namespace

SourceSpec SourceSpec::device_default() {
  SourceSpec s;
  s.g2 = 0.005;
  s.overlaps = {0.924, 0.915, 0.881, 0.921};
  s.eta = 0.039;
  return s;
}

void SourceSpec::validate() const {
  if (!(g2 >= 0.0 && g2 < 0.5)) throw DomainError("g2 must lie in [0, 0.5)");
  check_overlaps(overlaps);
  if (!(eta > 0.0 && eta <= 1.0)) throw DomainError("eta must lie in (0, 1]");
  for (double s : distinguishability_scale) {
    if (!(s >= 0.0 && s <= 1.0)) throw DomainError("distinguishability scale must lie in [0, 1]");
  }
}

EmissionProbabilities solve_pair_probabilities(double g2) {
  if (!(g2 >= 0.0 && g2 < 0.5)) throw DomainError("g2 must lie in [0, 0.5)");
  // 2 p2 = g2 (1 + p2)^2; the roots multiply to 1, the small one is
  // g2 / ((1 - g2) + sqrt(1 - 2 g2)).
  const double p2 = g2 / ((1.0 - g2) + std::sqrt(1.0 - 2.0 * g2));
  return {0.0, 1.0 - p2, p2};
}

double fit_objective(const OverlapMap& m, const MasterFractions& f) {
  return objective(m, Vec4(f.x[0], f.x[1], f.x[2], f.x[3]));
}

MasterFractions fit_master_fractions(const OverlapMap& m) {
  check_overlaps(m);
  const Vec4 x = best_fit(m);
  const OverlapBounds bounds = overlap_bounds(m);
  const double bc = x[kB] * x[kC];
  const double ad = x[kA] * x[kD];
  constexpr double slack = 1e-9;
  if (bc < bounds.bc.lo - slack || bc > bounds.bc.hi + slack || ad < bounds.ad.lo - slack ||
      ad > bounds.ad.hi + slack) {
    throw FitError("fitted master fractions violate the unmeasured-overlap bounds");
  }
  MasterFractions out;
  for (int i = 0; i < 4; ++i) out.x[i] = x[i];
  return out;
}

OverlapBounds overlap_bounds(const OverlapMap& m) {
  check_overlaps(m);
  const Vec4 x = best_fit(m);
  if (!x.allFinite()) throw FitError("no master fractions reproduce the measured overlaps");
  // Every least-squares solution lies on the rescaling family through x, so
  // the unmeasured products sweep monotonically with t.
  if (x[kA] * x[kD] <= 0.0 || x[kB] * x[kC] <= 0.0) {
    // A zero fraction decouples the cycle; the zero side stays pinned while
    // the other product can take any value up to the box limit.
    const GaugeRange r = gauge_range(x);
    const double bc_lo = x[kB] * x[kC] / (r.hi * r.hi);
    const double bc_hi = x[kB] * x[kC] / (r.lo * r.lo);
    const double ad_lo = x[kA] * x[kD] * r.lo * r.lo;
    const double ad_hi = std::isfinite(r.hi) ? x[kA] * x[kD] * r.hi * r.hi : x[kA] * x[kD];
    return {{std::min(bc_lo, bc_hi), std::max(bc_lo, bc_hi)}, {ad_lo, ad_hi}};
  }
  const GaugeRange r = gauge_range(x);
  const double bc = x[kB] * x[kC];
  const double ad = x[kA] * x[kD];
  OverlapBounds b;
  b.bc = {bc / (r.hi * r.hi), std::min(1.0, bc / (r.lo * r.lo))};
  b.ad = {ad * r.lo * r.lo, std::min(1.0, ad * r.hi * r.hi)};
  return b;
}

std::string_view to_string(InputKind k) {
  switch (k) {
  case InputKind::Vacuum: return "vacuum";
  case InputKind::Master: return "master";
  case InputKind::Distinguishable: return "distinguishable";
  case InputKind::Noise: return "noise";
  case InputKind::MasterPlusNoise: return "master+noise";
  case InputKind::DistinguishablePlusNoise: return "distinguishable+noise";
  }
  return "?";
}

int photon_count(InputKind k) {
  switch (k) {
  case InputKind::Vacuum: return 0;
  case InputKind::Master:
  case InputKind::Distinguishable:
  case InputKind::Noise: return 1;
  case InputKind::MasterPlusNoise:
  case InputKind::DistinguishablePlusNoise: return 2;
  }
  return 0;
}

std::vector<LabeledPhoton> photons_for(InputKind kind, int input) {
  switch (kind) {
  case InputKind::Vacuum: return {};
  case InputKind::Master: return {{input, kMasterLabel}};
  case InputKind::Distinguishable: return {{input, distinguishable_label(input)}};
  case InputKind::Noise: return {{input, noise_label(input)}};
  case InputKind::MasterPlusNoise: return {{input, kMasterLabel}, {input, noise_label(input)}};
  case InputKind::DistinguishablePlusNoise:
    return {{input, distinguishable_label(input)}, {input, noise_label(input)}};
  }
  return {};
}

std::array<MixtureTerm, kMixtureTerms> input_mixture(const SourceSpec& spec, const MasterFractions& fractions,
                                                     int input) {
  if (input < 0 || input >= kInputs) throw DomainError("input index must be in 0..3");
  const EmissionProbabilities e = solve_pair_probabilities(spec.g2);
  const double eta = spec.eta;
  const double x = std::clamp(fractions.x[input] * spec.distinguishability_scale[input], 0.0, 1.0);
  const double p1 = e.p1;
  const double p2 = e.p2;

  std::array<MixtureTerm, kMixtureTerms> t;
  t[0] = {InputKind::Vacuum, 1.0 - (eta * p1 + eta * eta * p2 + 2.0 * eta * (1.0 - eta) * p2)};
  t[1] = {InputKind::Master, eta * x * p1 + eta * (1.0 - eta) * x * p2};
  t[2] = {InputKind::Distinguishable, eta * (1.0 - x) * p1 + eta * (1.0 - eta) * (1.0 - x) * p2};
  t[3] = {InputKind::Noise, eta * (1.0 - eta) * p2};
  t[4] = {InputKind::MasterPlusNoise, eta * eta * x * p2};
  t[5] = {InputKind::DistinguishablePlusNoise, eta * eta * (1.0 - x) * p2};
  for (auto& term : t) term.weight = std::max(0.0, term.weight);
  return t;
}

JointInputEnumeration enumerate_joint_inputs(const SourceSpec& spec, const MasterFractions& fractions) {
  spec.validate();
  std::array<std::array<MixtureTerm, kMixtureTerms>, kInputs> mix;
  for (int i = 0; i < kInputs; ++i) mix[i] = input_mixture(spec, fractions, i);

  JointInputEnumeration out;
  std::vector<JointInputTerm> candidates;
  double max_weight = 0.0;
  for (int a = 0; a < kMixtureTerms; ++a)
    for (int b = 0; b < kMixtureTerms; ++b)
      for (int c = 0; c < kMixtureTerms; ++c)
        for (int d = 0; d < kMixtureTerms; ++d) {
          const std::array<int, 4> idx = {a, b, c, d};
          JointInputTerm term;
          term.weight = 1.0;
          int photons = 0;
          for (int i = 0; i < kInputs; ++i) {
            term.kinds[i] = mix[i][idx[i]].kind;
            term.weight *= mix[i][idx[i]].weight;
            photons += photon_count(term.kinds[i]);
          }
          ++out.raw_count;
          out.raw_weight += term.weight;
          if (photons < kInputs || term.weight <= 0.0) continue;
          for (int i = 0; i < kInputs; ++i) {
            for (const auto& p : photons_for(term.kinds[i], i)) term.photons.push_back(p);
          }
          max_weight = std::max(max_weight, term.weight);
          candidates.push_back(std::move(term));
        }
  const double cutoff = 1e-8 * max_weight;
  for (auto& t : candidates) {
    if (t.weight < cutoff) continue;
    out.retained_weight += t.weight;
    out.terms.push_back(std::move(t));
  }
  return out;
}

JointInputEnumeration ideal_input() {
  JointInputEnumeration e;
  JointInputTerm t;
  t.weight = 1.0;
  t.kinds.fill(InputKind::Master);
  for (int i = 0; i < kInputs; ++i) t.photons.push_back({i, kMasterLabel});
  e.terms.push_back(std::move(t));
  e.raw_count = 1;
  e.raw_weight = 1.0;
  e.retained_weight = 1.0;
  return e;
}

} // namespace ghzlab::source
