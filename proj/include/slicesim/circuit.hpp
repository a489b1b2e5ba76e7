#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "slicesim/gates.hpp"
#include "slicesim/layout.hpp"
#include "slicesim/types.hpp"

namespace slicesim {

// q1 < 0 marks a single-qubit gate. For two-qubit gates the first operand
// q0 carries the more significant bit of the 4x4 matrix index.
struct Gate {
  int q0 = 0;
  int q1 = -1;
  CMatrix u;
  std::string tag;

  bool is_two_qubit() const { return q1 >= 0; }
  bool touches(int q) const { return q0 == q || q1 == q; }
};

struct Circuit {
  int n_qubits = 0;
  std::vector<std::vector<Gate>> layers;
  std::vector<std::pair<int, int>> coords;  // optional display hints
};

struct SycamoreOptions {
  double theta = kPi / 2;
  double phi = kPi / 6;
  double delta_range = 0.1;  // deltas drawn uniformly from [-range, range]
  bool final_single_layer = true;
};

Gate make_single_qubit_gate(int q, SqrtGateKind kind);
Gate make_fsim_gate(int a, int b, const GateParams& params);

// Alternating single-qubit and coupler layers; cycle k couples along
// pattern kPatternSequence[(k-1) mod 8]. Single-qubit gates are drawn
// independently and uniformly from {sqrt X, sqrt Y, sqrt W}; each coupler
// instance draws fresh deltas. Draw order is fixed (qubits ascending, then
// couplings in pattern file order) so a seed pins the whole circuit.
Circuit generate_sycamore(const QubitLayout& layout, int cycles,
                          std::uint64_t seed, const SycamoreOptions& = {});

// Absorbs every single-qubit gate into the next two-qubit gate on that
// qubit (the trailing layer folds backwards into the last one). Each cycle
// is re-emitted as two half layers, so the result has two-qubit gates only
// and twice as many layers as there were cycles. Fails if some qubit has
// single-qubit gates but never couples.
Circuit merge_single_qubit_gates(const Circuit& circuit);

int gate_count(const Circuit& circuit);
int two_qubit_gate_count(const Circuit& circuit);

void save_circuit(const Circuit& circuit, const std::string& path);
Circuit load_circuit(const std::string& path);

}  // namespace slicesim
