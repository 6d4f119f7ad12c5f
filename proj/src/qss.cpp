#include "ghzlab/qss.hpp"

#include <algorithm>
#include <bit>

#include "ghzlab/errors.hpp"
#include "ghzlab/experiment.hpp"
#include "ghzlab/seeding.hpp"

namespace ghzlab::qss {

namespace {

// Gaussian integers are enough to evaluate X/Y strings on |0101> + |1010>
// exactly at compile time.
struct GaussInt {
  int re = 0;
  int im = 0;
  constexpr GaussInt operator*(GaussInt o) const { return {re * o.re - im * o.im, re * o.im + im * o.re}; }
  constexpr GaussInt operator+(GaussInt o) const { return {re + o.re, im + o.im}; }
  constexpr GaussInt conj() const { return {re, -im}; }
};

constexpr std::array<int, kBasisChoices> make_sign_table() {
  std::array<GaussInt, kOutcomes> psi{};
  psi[0b0101] = {1, 0};
  psi[0b1010] = {1, 0};
  std::array<int, kBasisChoices> table{};
  for (int code = 0; code < kBasisChoices; ++code) {
    // Apply the product operator: every factor flips its qubit; sigma_y
    // adds i on |0> and -i on |1>.
    std::array<GaussInt, kOutcomes> out{};
    for (int in = 0; in < kOutcomes; ++in) {
      if (psi[in].re == 0 && psi[in].im == 0) continue;
      GaussInt phase{1, 0};
      for (int q = 0; q < kQubits; ++q) {
        const int shift = kQubits - 1 - q;
        if ((code >> shift) & 1) phase = phase * (((in >> shift) & 1) ? GaussInt{0, -1} : GaussInt{0, 1});
      }
      const int target = in ^ (kOutcomes - 1);
      out[target] = out[target] + phase * psi[in];
    }
    GaussInt e{};
    for (int k = 0; k < kOutcomes; ++k) e = e + psi[k].conj() * out[k];
    // <psi|P|psi> / <psi|psi>; the norm is 2 and P is Hermitian.
    table[code] = e.re / 2;
  }
  return table;
}

constexpr std::array<int, kBasisChoices> kSignTable = make_sign_table();

int draw_outcome(const std::array<double, kOutcomes>& cond, double u) {
  double acc = 0.0;
  int last = -1;
  for (int o = 0; o < kOutcomes; ++o) {
    if (cond[o] <= 0.0) continue;
    acc += cond[o];
    last = o;
    if (u < acc) return o;
  }
  return last;
}

} // namespace

std::string to_string(const BasisChoice& b) {
  std::string s;
  for (Basis x : b) s += (x == Basis::X ? 'x' : 'y');
  return s;
}

PauliString pauli_labels(const BasisChoice& b) {
  PauliString p;
  for (int q = 0; q < kQubits; ++q) p[q] = b[q] == Basis::X ? Pauli::X : Pauli::Y;
  return p;
}

Case classify_bases(const BasisChoice& b) {
  const int code = basis_code(b);
  const int ys = std::popcount(static_cast<unsigned>(code));
  if (ys == 0 || ys == 4) return Case::A;
  if (ys != 2) return Case::B;
  // Same-basis pairs {1,3} or {2,4} hold correlated qubits.
  return (code == 0b0101 || code == 0b1010) ? Case::C : Case::D;
}

int combo_sign(const BasisChoice& b) {
  return kSignTable[basis_code(b)];
}

int infer_dealer_bit(const BasisChoice& b, const std::array<int, 3>& outcomes) {
  if (classify_bases(b) == Case::B) throw ProtocolError("round with one odd basis carries no dealer information");
  int parity = 0;
  for (int o : outcomes) {
    if (o != 0 && o != 1) throw DomainError("outcome bits must be 0 or 1");
    parity ^= o;
  }
  return parity ^ (combo_sign(b) == 1 ? 0 : 1);
}

QssDistributions qss_distributions(const Experiment& experiment) {
  std::vector<PauliString> labels;
  for (int code = 0; code < kBasisChoices; ++code) labels.push_back(pauli_labels(basis_from_code(code)));
  const auto d = experiment.distributions(labels);
  QssDistributions out;
  std::copy(d.begin(), d.end(), out.begin());
  return out;
}

QssRun run_qss(const QssDistributions& dists, std::size_t rounds, std::uint64_t seed) {
  if (rounds == 0) throw DomainError("QSS needs at least one round");
  std::array<std::array<double, kOutcomes>, kBasisChoices> cond;
  for (int c = 0; c < kBasisChoices; ++c) cond[c] = dists[c].conditional();

  QssRun run;
  run.transcript.resize(rounds);
  const long n = static_cast<long>(rounds);
#pragma omp parallel for schedule(static)
  for (long r = 0; r < n; ++r) {
    Rng rng(child_seed(seed, static_cast<std::uint64_t>(r)));
    const int code = static_cast<int>(rng() >> 60);
    RoundRecord& rec = run.transcript[r];
    rec.bases = basis_from_code(code);
    // Drawing from the post-selected distribution is the same as waiting
    // for the first valid fourfold coincidence.
    const int outcome = draw_outcome(cond[code], uniform01(rng));
    for (int q = 0; q < kQubits; ++q) rec.outcomes[q] = outcome_bit(outcome, q) ? 1 : 0;
    rec.c = classify_bases(rec.bases);
    rec.kept = rec.c != Case::B;
    rec.actual = rec.outcomes[0];
    if (rec.kept) rec.inferred = infer_dealer_bit(rec.bases, {rec.outcomes[1], rec.outcomes[2], rec.outcomes[3]});
  }

  QssReport& rep = run.report;
  std::size_t errors = 0;
  for (const auto& rec : run.transcript) {
    if (!rec.kept) continue;
    ++rep.sifted_length;
    if (rec.inferred != rec.actual) ++errors;
  }
  rep.raw_length = rounds;
  rep.sift_rate = static_cast<double>(rep.sifted_length) / static_cast<double>(rounds);
  rep.qber = rep.sifted_length ? static_cast<double>(errors) / static_cast<double>(rep.sifted_length) : 0.0;
  rep.secure = rep.sifted_length > 0 && rep.qber <= kSecurityThreshold;
  return run;
}

QssRun run_qss(const Experiment& experiment, std::size_t rounds, std::uint64_t seed) {
  return run_qss(qss_distributions(experiment), rounds, seed);
}

double expected_qber(const QssDistributions& dists) {
  double err = 0.0;
  double kept = 0.0;
  for (int code = 0; code < kBasisChoices; ++code) {
    const BasisChoice b = basis_from_code(code);
    if (classify_bases(b) == Case::B) continue;
    const auto cond = dists[code].conditional();
    kept += 1.0;
    for (int o = 0; o < kOutcomes; ++o) {
      const int actual = outcome_bit(o, 0) ? 1 : 0;
      const std::array<int, 3> rest = {outcome_bit(o, 1) ? 1 : 0, outcome_bit(o, 2) ? 1 : 0, outcome_bit(o, 3) ? 1 : 0};
      if (infer_dealer_bit(b, rest) != actual) err += cond[o];
    }
  }
  return err / kept;
}

} // namespace ghzlab::qss
