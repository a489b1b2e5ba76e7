#include "slicesim/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "slicesim/errors.hpp"

namespace slicesim {

DenseState dense_zero_state(int n_qubits) {
  if (n_qubits < 1 || n_qubits > kDenseOracleMaxQubits)
    fail(ErrorKind::capacity, "dense state limited to " +
                                  std::to_string(kDenseOracleMaxQubits) +
                                  " qubits");
  DenseState s;
  s.n_qubits = n_qubits;
  s.amps.assign(std::size_t(1) << n_qubits, amp(0.0));
  s.amps[0] = 1.0;
  return s;
}

void apply_unitary_dense(DenseState& state, const std::vector<int>& qubits,
                         const CMatrix& u) {
  int k = static_cast<int>(qubits.size());
  if (u.dim != (1 << k))
    fail(ErrorKind::validation, "matrix size does not match qubit count");
  for (int q : qubits)
    if (q < 0 || q >= state.n_qubits)
      fail(ErrorKind::validation, "gate qubit out of range");
  std::vector<int> sorted(qubits.begin(), qubits.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    fail(ErrorKind::validation, "gate qubits repeat");
  const int dim = 1 << k;
  std::vector<std::uint64_t> strides(k);
  for (int j = 0; j < k; ++j) strides[j] = std::uint64_t(1) << qubits[j];
  std::vector<amp> in(dim), out(dim);
  const std::uint64_t bases = std::uint64_t(1) << (state.n_qubits - k);
  for (std::uint64_t i = 0; i < bases; ++i) {
    std::uint64_t base = i;
    for (int j = 0; j < k; ++j) base = insert_bit(base, sorted[j], 0);
    for (int m = 0; m < dim; ++m) {
      std::uint64_t addr = base;
      for (int j = 0; j < k; ++j)
        if (m & (1 << j)) addr |= strides[j];
      in[m] = state.amps[addr];
    }
    for (int r = 0; r < dim; ++r) {
      amp acc(0.0);
      for (int c = 0; c < dim; ++c) acc += u.at(r, c) * in[c];
      out[r] = acc;
    }
    for (int m = 0; m < dim; ++m) {
      std::uint64_t addr = base;
      for (int j = 0; j < k; ++j)
        if (m & (1 << j)) addr |= strides[j];
      state.amps[addr] = out[m];
    }
  }
}

void apply_gate_dense(DenseState& state, const Gate& gate) {
  if (gate.is_two_qubit())
    // The first operand holds the more significant matrix bit.
    apply_unitary_dense(state, {gate.q1, gate.q0}, gate.u);
  else
    apply_unitary_dense(state, {gate.q0}, gate.u);
}

DenseState dense_simulate(const Circuit& circuit, int max_qubits) {
  if (circuit.n_qubits > max_qubits)
    fail(ErrorKind::capacity,
         "circuit too wide for the dense oracle: " +
             std::to_string(circuit.n_qubits) + " qubits");
  DenseState s = dense_zero_state(circuit.n_qubits);
  for (const auto& layer : circuit.layers)
    for (const Gate& g : layer) apply_gate_dense(s, g);
  return s;
}

double state_norm(const DenseState& state) {
  double sum = 0.0;
  for (const amp& v : state.amps) sum += std::norm(v);
  return std::sqrt(sum);
}

double max_amp_diff(const DenseState& a, const DenseState& b) {
  if (a.n_qubits != b.n_qubits)
    fail(ErrorKind::validation, "states differ in qubit count");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.amps.size(); ++i)
    worst = std::max(worst, std::abs(a.amps[i] - b.amps[i]));
  return worst;
}

}  // namespace slicesim
