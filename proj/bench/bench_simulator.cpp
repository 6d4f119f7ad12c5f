// Serial reference pipeline versus the fast kernel, serial and OpenMP, on
// the device noise model.

#include <benchmark/benchmark.h>
#include <omp.h>

#include "ghzlab/analysis.hpp"
#include "ghzlab/chip.hpp"
#include "ghzlab/simulator.hpp"
#include "ghzlab/source.hpp"

using namespace ghzlab;

namespace {

struct Fixture {
  source::JointInputEnumeration inputs;
  ComplexMatrix u;
  std::vector<chip::MeasurementSettings> settings;
  chip::PreparationStage stage = chip::PreparationStage::measured_couplers();
};

const Fixture& fixture() {
  static const Fixture f = [] {
    Fixture f;
    const auto spec = source::SourceSpec::device_default();
    f.inputs = source::enumerate_joint_inputs(spec, source::fit_master_fractions(spec.overlaps));
    f.u = chip::full_unitary(f.stage, chip::settings_for({Pauli::X, Pauli::Y, Pauli::XPlusZ, Pauli::Z}));
    for (const auto& row : analysis::tomography_settings()) f.settings.push_back(chip::settings_for(row));
    return f;
  }();
  return f;
}

void BM_Reference(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(sim::reference::qubit_distribution(f.inputs, f.u, sim::DetectorModel::ideal()));
  }
}

void BM_FastSerial(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(sim::qubit_distribution(f.inputs, f.u, sim::DetectorModel::ideal(), false));
  }
}

void BM_FastParallel(benchmark::State& state) {
  const auto& f = fixture();
  omp_set_num_threads(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(sim::qubit_distribution(f.inputs, f.u, sim::DetectorModel::ideal(), true));
  }
}

void BM_TomographySettings(benchmark::State& state) {
  const auto& f = fixture();
  omp_set_num_threads(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(sim::qubit_distributions(f.inputs, f.stage, f.settings, sim::DetectorModel::ideal()));
  }
}

} // namespace

BENCHMARK(BM_Reference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FastSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FastParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TomographySettings)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
