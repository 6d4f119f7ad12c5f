#include "ghzlab/experiment.hpp"

#include "ghzlab/seeding.hpp"

namespace ghzlab {

Experiment::Experiment(ExperimentModel model) : model_(std::move(model)) {
  model_.source.validate();
  model_.stage.validate();
  model_.detectors.validate();
  fractions_ = model_.fractions ? *model_.fractions : source::fit_master_fractions(model_.source.overlaps);
  inputs_ = source::enumerate_joint_inputs(model_.source, fractions_);
}

chip::MeasurementSettings Experiment::settings(const PauliString& labels) const {
  chip::MeasurementSettings s = chip::settings_for(labels);
  if (model_.compensate_detectors) {
    for (int q = 0; q < kQubits; ++q) {
      s[q] = chip::compensate_setting(s[q], model_.detectors.efficiencies[2 * q],
                                      model_.detectors.efficiencies[2 * q + 1]);
    }
  }
  return s;
}

sim::OutcomeDistribution Experiment::raw_distribution(const PauliString& labels) const {
  return sim::qubit_distribution(inputs_, chip::full_unitary(model_.stage, settings(labels)), model_.detectors);
}

sim::OutcomeDistribution Experiment::distribution(const PauliString& labels) const {
  return to_record_convention(raw_distribution(labels), labels);
}

std::vector<sim::OutcomeDistribution> Experiment::distributions(std::span<const PauliString> labels) const {
  std::vector<chip::MeasurementSettings> s;
  s.reserve(labels.size());
  for (const auto& l : labels) s.push_back(settings(l));
  auto out = sim::qubit_distributions(inputs_, model_.stage, s, model_.detectors);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = to_record_convention(out[i], labels[i]);
  return out;
}

analysis::MeasurementRecord Experiment::exact_record(const PauliString& labels) const {
  return analysis::MeasurementRecord::from_probabilities(labels, distribution(labels).conditional());
}

analysis::MeasurementRecord Experiment::sampled_record(const PauliString& labels, std::uint64_t shots,
                                                       std::uint64_t seed) const {
  return analysis::MeasurementRecord::from_counts(labels, sim::sample_counts(distribution(labels), shots, seed));
}

std::vector<analysis::MeasurementRecord> Experiment::records(std::span<const PauliString> labels,
                                                             std::optional<std::uint64_t> shots,
                                                             std::uint64_t seed) const {
  const auto dists = distributions(labels);
  std::vector<analysis::MeasurementRecord> out;
  out.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (shots) {
      out.push_back(
          analysis::MeasurementRecord::from_counts(labels[i], sim::sample_counts(dists[i], *shots, child_seed(seed, i))));
    } else {
      out.push_back(analysis::MeasurementRecord::from_probabilities(labels[i], dists[i].conditional()));
    }
  }
  return out;
}

analysis::TomographySet Experiment::tomography(std::optional<std::uint64_t> shots, std::uint64_t seed,
                                               double exact_scale) const {
  const auto labels = analysis::tomography_settings();
  analysis::TomographySet ts;
  ts.records = records(labels, shots, seed);
  if (!shots) {
    for (auto& r : ts.records) {
      for (auto& c : r.counts) c *= exact_scale;
      r.exact = false;
    }
  }
  return ts;
}

sim::OutcomeDistribution to_record_convention(const sim::OutcomeDistribution& d, const PauliString& labels) {
  int flip = 0;
  for (int q = 0; q < kQubits; ++q) {
    if (pauli_sign(labels[q]) < 0) flip |= 1 << (kQubits - 1 - q);
  }
  if (flip == 0) return d;
  sim::OutcomeDistribution out;
  out.discard_mass = d.discard_mass;
  for (int o = 0; o < kOutcomes; ++o) out.probs[o ^ flip] = d.probs[o];
  return out;
}

ExperimentModel restrict_noise(const ExperimentModel& full, const NoiseSources& keep) {
  ExperimentModel m = full;
  if (!keep.multiphoton) m.source.g2 = 0.0;
  if (!keep.distinguishability) {
    m.source.overlaps = source::OverlapMap{};
    m.source.distinguishability_scale.fill(1.0);
    m.fractions = source::MasterFractions{};
  }
  if (!keep.couplers) m.stage = chip::PreparationStage::ideal();
  if (!keep.detectors) {
    m.detectors = sim::DetectorModel::ideal();
    m.compensate_detectors = false;
  }
  return m;
}

std::vector<AblationRow> ablation_rows() {
  return {
      {"couplers", {false, false, true, false}, 0.999, 0.999},
      {"multiphoton", {true, false, false, false}, 0.966, 0.93},
      {"distinguishability", {false, true, false, false}, 0.906, 0.829},
      {"detectors", {false, false, false, true}, 0.891, 0.811},
      {"all_but_detectors", {true, true, true, false}, 0.876, 0.78},
      {"all", {true, true, true, true}, 0.83, 0.72},
  };
}

} // namespace ghzlab
