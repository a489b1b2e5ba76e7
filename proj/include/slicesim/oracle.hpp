#pragma once

#include <vector>

#include "slicesim/circuit.hpp"
#include "slicesim/types.hpp"

namespace slicesim {

// Full statevectors above this size would not fit a test budget.
inline constexpr int kDenseOracleMaxQubits = 26;

struct DenseState {
  int n_qubits = 0;
  std::vector<amp> amps;  // index bit q is qubit q
};

DenseState dense_zero_state(int n_qubits);

// qubits[j] supplies bit j (least significant first) of the matrix index.
void apply_unitary_dense(DenseState& state, const std::vector<int>& qubits,
                         const CMatrix& u);

void apply_gate_dense(DenseState& state, const Gate& gate);

DenseState dense_simulate(const Circuit& circuit,
                          int max_qubits = kDenseOracleMaxQubits);

double state_norm(const DenseState& state);
double max_amp_diff(const DenseState& a, const DenseState& b);

}  // namespace slicesim
