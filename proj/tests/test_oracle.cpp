#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "slicesim/circuit.hpp"
#include "slicesim/errors.hpp"
#include "slicesim/gates.hpp"
#include "slicesim/layout.hpp"
#include "slicesim/oracle.hpp"

using namespace slicesim;

namespace {

// Independent reference: embeds u on the listed qubits (LSB-first slots) by
// expanding it to the full 2^n matrix entry by entry, then multiplies.
DenseState apply_by_full_matrix(const DenseState& state,
                                const std::vector<int>& qubits,
                                const CMatrix& u) {
  int k = static_cast<int>(qubits.size());
  DenseState out = state;
  for (auto& v : out.amps) v = 0.0;
  for (std::uint64_t col = 0; col < state.amps.size(); ++col) {
    if (state.amps[col] == amp(0.0)) continue;
    int uc = 0;
    for (int j = 0; j < k; ++j) uc |= bit(col, qubits[j]) << j;
    for (int ur = 0; ur < (1 << k); ++ur) {
      std::uint64_t row = col;
      for (int j = 0; j < k; ++j) row = set_bit(row, qubits[j], (ur >> j) & 1);
      out.amps[row] += u.at(ur, uc) * state.amps[col];
    }
  }
  return out;
}

}  // namespace

TEST_CASE("zero state") {
  DenseState s = dense_zero_state(3);
  CHECK(s.amps.size() == 8);
  CHECK(s.amps[0] == amp(1.0));
  CHECK(state_norm(s) == 1.0);
  CHECK_THROWS_AS(dense_zero_state(0), Error);
  CHECK_THROWS_AS(dense_zero_state(kDenseOracleMaxQubits + 1), Error);
}

TEST_CASE("single-qubit application respects bit positions") {
  DenseState s = dense_zero_state(2);
  apply_unitary_dense(s, {0}, hadamard());
  CHECK(std::abs(s.amps[0] - 1 / std::sqrt(2.0)) < 1e-15);
  CHECK(std::abs(s.amps[1] - 1 / std::sqrt(2.0)) < 1e-15);
  CHECK(std::abs(s.amps[2]) == 0.0);

  s = dense_zero_state(2);
  apply_unitary_dense(s, {1}, hadamard());
  CHECK(std::abs(s.amps[1]) == 0.0);
  CHECK(std::abs(s.amps[2] - 1 / std::sqrt(2.0)) < 1e-15);

  s = dense_zero_state(3);
  apply_unitary_dense(s, {2}, pauli_x());
  CHECK(s.amps[4] == amp(1.0));
}

TEST_CASE("two-qubit application uses LSB-first slot order") {
  // cnot_gate: first operand (more significant matrix bit) controls, so the
  // LSB-first list {target, control} puts the control in slot 1.
  DenseState s = dense_zero_state(2);
  apply_unitary_dense(s, {1}, pauli_x());  // control qubit 1 on
  apply_unitary_dense(s, {0, 1}, cnot_gate());
  CHECK(s.amps[3] == amp(1.0));  // target flipped

  s = dense_zero_state(2);
  apply_unitary_dense(s, {0}, pauli_x());  // target on, control off
  apply_unitary_dense(s, {0, 1}, cnot_gate());
  CHECK(s.amps[1] == amp(1.0));  // unchanged

  s = dense_zero_state(2);
  apply_unitary_dense(s, {0}, pauli_x());
  apply_unitary_dense(s, {0, 1}, swap_gate());
  CHECK(s.amps[2] == amp(1.0));
}

TEST_CASE("gate wrapper maps first operand to the significant bit") {
  GateParams p;
  Gate g = make_fsim_gate(2, 0, p);  // coupler between qubits 2 and 0
  DenseState s = dense_zero_state(3);
  apply_unitary_dense(s, {2}, pauli_x());  // |q2=1, q0=0> = matrix index 2
  apply_gate_dense(s, g);
  // theta = pi/2 swaps the excitation onto q0 with amplitude -i.
  CHECK(std::abs(s.amps[1] - amp(0, -1)) < 1e-15);
  CHECK(std::abs(s.amps[4]) < 1e-15);
}

TEST_CASE("agrees with full-matrix embedding on random circuits") {
  QubitLayout l = make_grid_layout(2, 3);
  for (std::uint64_t seed : {4ULL, 5ULL}) {
    Circuit c = generate_sycamore(l, 4, seed);
    DenseState fast = dense_zero_state(c.n_qubits);
    DenseState slow = dense_zero_state(c.n_qubits);
    for (const auto& layer : c.layers)
      for (const Gate& g : layer) {
        apply_gate_dense(fast, g);
        std::vector<int> qs = g.is_two_qubit() ? std::vector<int>{g.q1, g.q0}
                                               : std::vector<int>{g.q0};
        slow = apply_by_full_matrix(slow, qs, g.u);
      }
    CHECK(max_amp_diff(fast, slow) < 1e-13);
  }
}

TEST_CASE("three-qubit kernels apply correctly") {
  // Build a random-ish 8x8 unitary from known factors: (H x X x H) times a
  // doubly controlled phase assembled by hand.
  CMatrix u = CMatrix::identity(8);
  u.at(7, 7) = amp(0, 1);
  DenseState s = dense_zero_state(4);
  for (int q : {0, 1, 3}) apply_unitary_dense(s, {q}, hadamard());
  DenseState ref = apply_by_full_matrix(s, {0, 1, 3}, u);
  apply_unitary_dense(s, {0, 1, 3}, u);
  CHECK(max_amp_diff(s, ref) == 0.0);
  // The phase landed on |q3 q1 q0> = |111>, untouched q2 = 0: index 1011.
  CHECK(std::abs(s.amps[0b1011] - amp(0, 1) / std::sqrt(8.0)) < 1e-15);
}

TEST_CASE("norm is preserved by generated circuits") {
  QubitLayout l = make_grid_layout(3, 3);
  Circuit c = generate_sycamore(l, 8, 123);
  DenseState s = dense_simulate(c);
  CHECK(std::abs(state_norm(s) - 1.0) < 1e-12);
  // Depth 8 on 9 qubits scrambles well past any basis state.
  double peak = 0.0;
  for (const amp& v : s.amps) peak = std::max(peak, std::abs(v));
  CHECK(peak < 0.5);
}

TEST_CASE("oracle rejects bad applications") {
  DenseState s = dense_zero_state(2);
  CHECK_THROWS_AS(apply_unitary_dense(s, {0}, cz_gate()), Error);
  CHECK_THROWS_AS(apply_unitary_dense(s, {0, 2}, cz_gate()), Error);
  CHECK_THROWS_AS(apply_unitary_dense(s, {1, 1}, cz_gate()), Error);
  Circuit wide;
  wide.n_qubits = kDenseOracleMaxQubits + 2;
  CHECK_THROWS_AS(dense_simulate(wide), Error);
  DenseState t = dense_zero_state(3);
  CHECK_THROWS_AS(max_amp_diff(s, t), Error);
}
