#include "ghzlab/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "ghzlab/errors.hpp"
#include "ghzlab/seeding.hpp"

namespace ghzlab::sim {

namespace {

constexpr int kMasks = 1 << kModes;
constexpr int kSlots = kOutcomes + 1; // 16 outcomes + discard

using Contribution = std::array<double, kSlots>;

double factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

// Calls f(occ) for every way of placing n photons into kModes modes.
template <class F>
void for_each_occupation(int n, F&& f) {
  ModeOccupation occ{};
  auto rec = [&](auto&& self, int mode, int left) -> void {
    if (mode == kModes - 1) {
      occ[mode] = static_cast<std::uint8_t>(left);
      f(occ);
      return;
    }
    for (int k = left; k >= 0; --k) {
      occ[mode] = static_cast<std::uint8_t>(k);
      self(self, mode + 1, left - k);
    }
  };
  rec(rec, 0, n);
}

// Output distribution of indistinguishable photons entering `inputs` (mode
// indices, repeats allowed).
std::vector<std::pair<ModeOccupation, double>> group_distribution(const ComplexMatrix& u,
                                                                  const std::vector<int>& inputs) {
  const int n = static_cast<int>(inputs.size());
  std::array<int, kModes> in_count{};
  for (int m : inputs) ++in_count[m];
  double in_norm = 1.0;
  for (int c : in_count) in_norm *= factorial(c);

  std::vector<std::pair<ModeOccupation, double>> out;
  ComplexMatrix sub(n, n);
  std::vector<int> rows;
  rows.reserve(n);
  for_each_occupation(n, [&](const ModeOccupation& occ) {
    rows.clear();
    double out_norm = 1.0;
    for (int m = 0; m < kModes; ++m) {
      for (int k = 0; k < occ[m]; ++k) rows.push_back(m);
      out_norm *= factorial(occ[m]);
    }
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) sub(r, c) = u(rows[r], inputs[c]);
    const double p = std::norm(permanent(sub)) / (in_norm * out_norm);
    if (p > 0.0) out.emplace_back(occ, p);
  });
  return out;
}

// Photons grouped by internal label; each group lists its input modes.
std::vector<std::vector<int>> label_groups(std::span<const source::LabeledPhoton> photons) {
  std::map<int, std::vector<int>> by_label;
  for (const auto& p : photons) {
    if (p.input < 0 || p.input >= source::kInputs) throw DomainError("photon input index must be in 0..3");
    by_label[p.label].push_back(chip::kPhotonInputs[p.input]);
  }
  std::vector<std::vector<int>> groups;
  for (auto& [label, modes] : by_label) {
    std::sort(modes.begin(), modes.end());
    groups.push_back(std::move(modes));
  }
  return groups;
}

ModeOccupation add(const ModeOccupation& a, const ModeOccupation& b) {
  ModeOccupation r;
  for (int m = 0; m < kModes; ++m) r[m] = static_cast<std::uint8_t>(a[m] + b[m]);
  return r;
}

int outcome_from_mask(unsigned mask) {
  int outcome = 0;
  for (int q = 0; q < kQubits; ++q) {
    const bool up = mask & (1u << (2 * q));
    const bool down = mask & (1u << (2 * q + 1));
    if (up == down) return -1;
    if (down) outcome |= 1 << (kQubits - 1 - q);
  }
  return outcome;
}

// Base-3 key over the eight input-mode counts of a label group.
int group_key(const std::vector<int>& inputs) {
  std::array<int, kModes> c{};
  for (int m : inputs) ++c[m];
  int key = 0;
  for (int m = kModes - 1; m >= 0; --m) key = key * 3 + c[m];
  return key;
}

using SparseMasks = std::vector<std::pair<std::uint16_t, double>>;

// Click-pattern distribution of one label group after detector thinning.
SparseMasks group_click_masks(const ComplexMatrix& u, const std::vector<int>& inputs, const DetectorModel& det) {
  std::array<double, kMasks> dense{};
  for (const auto& [occ, p] : group_distribution(u, inputs)) {
    std::array<int, kModes> modes{};
    std::array<double, kModes> click{};
    int k = 0;
    for (int m = 0; m < kModes; ++m) {
      if (occ[m] == 0) continue;
      modes[k] = m;
      click[k] = 1.0 - std::pow(1.0 - det.efficiencies[m], occ[m]);
      ++k;
    }
    for (unsigned sub = 0; sub < (1u << k); ++sub) {
      double w = p;
      unsigned mask = 0;
      for (int j = 0; j < k; ++j) {
        if (sub & (1u << j)) {
          w *= click[j];
          mask |= 1u << modes[j];
        } else {
          w *= 1.0 - click[j];
        }
      }
      dense[mask] += w;
    }
  }
  SparseMasks out;
  for (int m = 0; m < kMasks; ++m) {
    if (dense[m] > 0.0) out.emplace_back(static_cast<std::uint16_t>(m), dense[m]);
  }
  return out;
}

Contribution term_contribution(const std::vector<int>& group_ids, const std::vector<SparseMasks>& tables,
                               double weight) {
  std::array<double, kMasks> acc{};
  std::array<double, kMasks> next{};
  acc[0] = 1.0;
  for (int id : group_ids) {
    next.fill(0.0);
    for (int a = 0; a < kMasks; ++a) {
      if (acc[a] == 0.0) continue;
      for (const auto& [m, p] : tables[id]) next[a | m] += acc[a] * p;
    }
    acc = next;
  }
  Contribution c{};
  for (int m = 0; m < kMasks; ++m) {
    if (acc[m] == 0.0) continue;
    const int o = outcome_from_mask(static_cast<unsigned>(m));
    c[o < 0 ? kOutcomes : o] += weight * acc[m];
  }
  return c;
}

// Pairwise reduction so the sum does not depend on how terms were scheduled.
Contribution pairwise_sum(const std::vector<Contribution>& v, std::size_t lo, std::size_t hi) {
  if (hi - lo == 0) return Contribution{};
  if (hi - lo == 1) return v[lo];
  const std::size_t mid = lo + (hi - lo) / 2;
  Contribution a = pairwise_sum(v, lo, mid);
  const Contribution b = pairwise_sum(v, mid, hi);
  for (int i = 0; i < kSlots; ++i) a[i] += b[i];
  return a;
}

OutcomeDistribution normalised(const Contribution& c, double total_weight) {
  if (!(total_weight > 0.0)) throw DegenerateInputError("input enumeration carries no weight");
  OutcomeDistribution d;
  for (int o = 0; o < kOutcomes; ++o) d.probs[o] = c[o] / total_weight;
  d.discard_mass = c[kOutcomes] / total_weight;
  return d;
}

double enumeration_weight(const source::JointInputEnumeration& inputs) {
  double w = 0;
  for (const auto& t : inputs.terms) w += t.weight;
  return w;
}

} // namespace

double OutcomeDistribution::success() const {
  return std::accumulate(probs.begin(), probs.end(), 0.0);
}

std::array<double, kOutcomes> OutcomeDistribution::conditional() const {
  const double s = success();
  if (!(s > 0.0)) throw DegenerateInputError("no post-selected events");
  std::array<double, kOutcomes> c;
  for (int o = 0; o < kOutcomes; ++o) c[o] = probs[o] / s;
  return c;
}

DetectorModel DetectorModel::from_pairs(const std::array<double, kQubits>& up,
                                        const std::array<double, kQubits>& down) {
  DetectorModel d;
  for (int q = 0; q < kQubits; ++q) {
    d.efficiencies[2 * q] = up[q];
    d.efficiencies[2 * q + 1] = down[q];
  }
  d.validate();
  return d;
}

void DetectorModel::validate() const {
  for (double e : efficiencies) {
    if (!(e > 0.0 && e <= 1.0)) throw DomainError("detector efficiency must lie in (0, 1]");
  }
}

bool DetectorModel::is_ideal() const {
  return std::all_of(efficiencies.begin(), efficiencies.end(), [](double e) { return e == 1.0; });
}

void LossBudget::validate() const {
  if (!(repetition_rate > 0.0)) throw DomainError("repetition rate must be positive");
  for (double f : {filling_factor, first_lens_brightness, eta_collection, eta_demux, eta_chip, eta_detector}) {
    if (!(f > 0.0 && f <= 1.0)) throw DomainError("loss-budget fractions must lie in (0, 1]");
  }
}

OccupationDistribution scatter_distribution(const ComplexMatrix& u, std::span<const source::LabeledPhoton> photons) {
  if (u.rows() != kModes || u.cols() != kModes) throw DimensionError("scatter_distribution expects an 8x8 unitary");
  if (photons.empty()) throw DomainError("scatter_distribution needs at least one photon");
  if (photons.size() > static_cast<std::size_t>(kMaxPhotons)) {
    throw CapacityError("scatter_distribution supports at most 8 photons");
  }
  OccupationDistribution acc;
  acc[ModeOccupation{}] = 1.0;
  for (const auto& group : label_groups(photons)) {
    OccupationDistribution next;
    const auto g = group_distribution(u, group);
    for (const auto& [occ_a, pa] : acc) {
      for (const auto& [occ_b, pb] : g) next[add(occ_a, occ_b)] += pa * pb;
    }
    acc = std::move(next);
  }
  return acc;
}

OccupationDistribution scatter_distribution(const ComplexMatrix& u, const source::JointInputTerm& term) {
  return scatter_distribution(u, std::span<const source::LabeledPhoton>(term.photons));
}

OccupationDistribution apply_detector_efficiency(const OccupationDistribution& dist, const DetectorModel& det) {
  det.validate();
  if (det.is_ideal()) return dist;
  OccupationDistribution out;
  for (const auto& [occ, p] : dist) {
    // Independent binomial thinning of every mode.
    std::vector<std::pair<ModeOccupation, double>> partial = {{ModeOccupation{}, p}};
    for (int m = 0; m < kModes; ++m) {
      const int n = occ[m];
      if (n == 0) continue;
      const double eta = det.efficiencies[m];
      std::vector<std::pair<ModeOccupation, double>> next;
      for (const auto& [o, w] : partial) {
        for (int k = 0; k <= n; ++k) {
          const double binom = factorial(n) / (factorial(k) * factorial(n - k));
          const double pk = binom * std::pow(eta, k) * std::pow(1.0 - eta, n - k);
          if (pk == 0.0) continue;
          ModeOccupation o2 = o;
          o2[m] = static_cast<std::uint8_t>(k);
          next.emplace_back(o2, w * pk);
        }
      }
      partial = std::move(next);
    }
    for (const auto& [o, w] : partial) out[o] += w;
  }
  return out;
}

int postselected_outcome(const ModeOccupation& occ) {
  unsigned mask = 0;
  for (int m = 0; m < kModes; ++m) {
    if (occ[m] > 0) mask |= 1u << m;
  }
  return outcome_from_mask(mask);
}

OutcomeDistribution threshold_and_postselect(const OccupationDistribution& dist) {
  OutcomeDistribution d;
  for (const auto& [occ, p] : dist) {
    const int o = postselected_outcome(occ);
    if (o < 0) {
      d.discard_mass += p;
    } else {
      d.probs[o] += p;
    }
  }
  return d;
}

OutcomeDistribution qubit_distribution(const source::JointInputEnumeration& inputs, const ComplexMatrix& u,
                                       const DetectorModel& det, bool parallel) {
  if (u.rows() != kModes || u.cols() != kModes) throw DimensionError("qubit_distribution expects an 8x8 unitary");
  det.validate();

  // Terms share label groups (e.g. the master photons on a given set of
  // inputs), so each distinct group is scattered once.
  std::unordered_map<int, int> key_to_id;
  std::vector<std::vector<int>> unique_groups;
  std::vector<std::vector<int>> term_groups(inputs.terms.size());
  for (std::size_t t = 0; t < inputs.terms.size(); ++t) {
    const auto& term = inputs.terms[t];
    if (term.photons.size() > static_cast<std::size_t>(kMaxPhotons)) {
      throw CapacityError("input term exceeds 8 photons");
    }
    for (auto& g : label_groups(term.photons)) {
      const int key = group_key(g);
      auto [it, inserted] = key_to_id.emplace(key, static_cast<int>(unique_groups.size()));
      if (inserted) unique_groups.push_back(std::move(g));
      term_groups[t].push_back(it->second);
    }
  }

  const long n_groups = static_cast<long>(unique_groups.size());
  const long n_terms = static_cast<long>(inputs.terms.size());
  std::vector<SparseMasks> tables(unique_groups.size());
  std::vector<Contribution> contributions(inputs.terms.size());

#pragma omp parallel for schedule(dynamic) if (parallel)
  for (long g = 0; g < n_groups; ++g) tables[g] = group_click_masks(u, unique_groups[g], det);

#pragma omp parallel for schedule(dynamic, 8) if (parallel)
  for (long t = 0; t < n_terms; ++t) {
    contributions[t] = term_contribution(term_groups[t], tables, inputs.terms[t].weight);
  }

  return normalised(pairwise_sum(contributions, 0, contributions.size()), enumeration_weight(inputs));
}

OutcomeDistribution qubit_distribution(const source::JointInputEnumeration& inputs,
                                       const chip::PreparationStage& stage, const chip::MeasurementSettings& settings,
                                       const DetectorModel& det) {
  return qubit_distribution(inputs, chip::full_unitary(stage, settings), det);
}

OutcomeDistribution qubit_distribution(const source::SourceSpec& spec, const source::MasterFractions& fractions,
                                       const chip::PreparationStage& stage, const chip::MeasurementSettings& settings,
                                       const DetectorModel& det) {
  return qubit_distribution(source::enumerate_joint_inputs(spec, fractions), stage, settings, det);
}

std::vector<OutcomeDistribution> qubit_distributions(const source::JointInputEnumeration& inputs,
                                                     const chip::PreparationStage& stage,
                                                     std::span<const chip::MeasurementSettings> settings,
                                                     const DetectorModel& det) {
  std::vector<OutcomeDistribution> out(settings.size());
  const long n = static_cast<long>(settings.size());
  // Settings are the outer parallel loop; the term loop inside runs serially.
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    out[i] = qubit_distribution(inputs, chip::full_unitary(stage, settings[i]), det, false);
  }
  return out;
}

namespace reference {

OutcomeDistribution qubit_distribution(const source::JointInputEnumeration& inputs, const ComplexMatrix& u,
                                       const DetectorModel& det) {
  Contribution total{};
  for (const auto& term : inputs.terms) {
    const OutcomeDistribution d = threshold_and_postselect(apply_detector_efficiency(scatter_distribution(u, term), det));
    for (int o = 0; o < kOutcomes; ++o) total[o] += term.weight * d.probs[o];
    total[kOutcomes] += term.weight * d.discard_mass;
  }
  return normalised(total, enumeration_weight(inputs));
}

} // namespace reference

std::array<std::uint64_t, kOutcomes> sample_counts(const OutcomeDistribution& dist, std::uint64_t shots,
                                                   std::uint64_t seed) {
  if (shots == 0) throw DomainError("sample_counts needs a positive number of shots");
  const auto p = dist.conditional();
  Rng rng(seed);
  std::array<std::uint64_t, kOutcomes> counts{};
  std::uint64_t left = shots;
  for (int o = 0; o < kOutcomes && left > 0; ++o) {
    double rest = 0.0;
    for (int k = o + 1; k < kOutcomes; ++k) rest += p[k];
    if (rest <= 0.0) {
      counts[o] = left;
      break;
    }
    const double q = std::clamp(p[o] / (p[o] + rest), 0.0, 1.0);
    std::binomial_distribution<std::uint64_t> binom(left, q);
    counts[o] = binom(rng);
    left -= counts[o];
  }
  return counts;
}

double coincidence_rate(const LossBudget& b) {
  b.validate();
  const double per_photon = b.first_lens_brightness * b.eta_collection * b.eta_demux * b.eta_chip * b.eta_detector;
  return b.repetition_rate * b.filling_factor * std::pow(per_photon, 4) / 8.0;
}

} // namespace ghzlab::sim
