#pragma once

#include <string>

#include "slicesim/types.hpp"

namespace slicesim {

// Parameters of the two-qubit coupler unitary. Angles are radians. theta is
// the iSWAP-like swap angle, phi the conditional phase; the three detunings
// give every gate instance its own calibration offsets.
struct GateParams {
  double theta = kPi / 2;
  double phi = kPi / 6;
  double delta_plus = 0.0;
  double delta_minus = 0.0;
  double delta_minus_off = 0.0;
};

// 4x4 unitary of the coupler gate in basis |00>,|01>,|10>,|11>, where the
// first operand supplies the more significant bit. Unitary for every
// parameter choice.
CMatrix fsim_unitary(const GateParams& p);

enum class SqrtGateKind { sqrt_x, sqrt_y, sqrt_w };

// Principal square roots: sqrt_gate(k)^2 reproduces X, Y, or W = (X+Y)/sqrt(2)
// exactly, with no residual global phase.
CMatrix sqrt_gate(SqrtGateKind kind);

const char* sqrt_gate_name(SqrtGateKind kind);

// Fixed single- and two-qubit matrices used by tests and the tensor layer.
CMatrix pauli_x();
CMatrix pauli_y();
CMatrix pauli_z();
CMatrix hadamard();
CMatrix cz_gate();
CMatrix cnot_gate();   // first operand (more significant bit) controls
CMatrix swap_gate();

}  // namespace slicesim
