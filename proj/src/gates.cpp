#include "slicesim/gates.hpp"

#include <cmath>

#include "slicesim/errors.hpp"

namespace slicesim {

CMatrix mat_mul(const CMatrix& lhs, const CMatrix& rhs) {
  if (lhs.dim != rhs.dim) fail(ErrorKind::validation, "matrix dim mismatch");
  CMatrix out(lhs.dim);
  for (int r = 0; r < lhs.dim; ++r)
    for (int k = 0; k < lhs.dim; ++k) {
      amp v = lhs.at(r, k);
      if (v == amp{}) continue;
      for (int c = 0; c < lhs.dim; ++c) out.at(r, c) += v * rhs.at(k, c);
    }
  return out;
}

CMatrix dagger(const CMatrix& m) {
  CMatrix out(m.dim);
  for (int r = 0; r < m.dim; ++r)
    for (int c = 0; c < m.dim; ++c) out.at(r, c) = std::conj(m.at(c, r));
  return out;
}

double max_abs_diff(const CMatrix& lhs, const CMatrix& rhs) {
  if (lhs.dim != rhs.dim) fail(ErrorKind::validation, "matrix dim mismatch");
  double d = 0;
  for (std::size_t i = 0; i < lhs.a.size(); ++i)
    d = std::max(d, std::abs(lhs.a[i] - rhs.a[i]));
  return d;
}

double unitarity_defect(const CMatrix& m) {
  return max_abs_diff(mat_mul(dagger(m), m), CMatrix::identity(m.dim));
}

CMatrix fsim_unitary(const GateParams& p) {
  const amp i1(0.0, 1.0);
  CMatrix u(4);
  u.at(0, 0) = 1.0;
  u.at(1, 1) = std::exp(i1 * (p.delta_plus + p.delta_minus)) * std::cos(p.theta);
  u.at(1, 2) = -i1 * std::exp(i1 * (p.delta_plus - p.delta_minus_off)) * std::sin(p.theta);
  u.at(2, 1) = -i1 * std::exp(i1 * (p.delta_plus + p.delta_minus_off)) * std::sin(p.theta);
  u.at(2, 2) = std::exp(i1 * (p.delta_plus - p.delta_minus)) * std::cos(p.theta);
  u.at(3, 3) = std::exp(i1 * (2.0 * p.delta_plus - p.phi));
  return u;
}

namespace {

// Principal square root of a Hermitian unitary with eigenvalues +-1:
// sqrt(G) = (I + G)/2 + i (I - G)/2, so the square gives back G itself.
CMatrix principal_sqrt_involution(const CMatrix& g) {
  const amp i1(0.0, 1.0);
  CMatrix out(g.dim);
  for (int r = 0; r < g.dim; ++r)
    for (int c = 0; c < g.dim; ++c) {
      amp id = (r == c) ? amp(1.0) : amp(0.0);
      out.at(r, c) = 0.5 * (id + g.at(r, c)) + 0.5 * i1 * (id - g.at(r, c));
    }
  return out;
}

}  // namespace

CMatrix pauli_x() {
  CMatrix m(2);
  m.at(0, 1) = 1.0;
  m.at(1, 0) = 1.0;
  return m;
}

CMatrix pauli_y() {
  CMatrix m(2);
  m.at(0, 1) = amp(0.0, -1.0);
  m.at(1, 0) = amp(0.0, 1.0);
  return m;
}

CMatrix pauli_z() {
  CMatrix m(2);
  m.at(0, 0) = 1.0;
  m.at(1, 1) = -1.0;
  return m;
}

CMatrix hadamard() {
  const double s = 1.0 / std::sqrt(2.0);
  CMatrix m(2);
  m.at(0, 0) = s;
  m.at(0, 1) = s;
  m.at(1, 0) = s;
  m.at(1, 1) = -s;
  return m;
}

CMatrix cz_gate() {
  CMatrix m = CMatrix::identity(4);
  m.at(3, 3) = -1.0;
  return m;
}

CMatrix cnot_gate() {
  CMatrix m(4);
  m.at(0, 0) = 1.0;
  m.at(1, 1) = 1.0;
  m.at(2, 3) = 1.0;
  m.at(3, 2) = 1.0;
  return m;
}

CMatrix swap_gate() {
  CMatrix m(4);
  m.at(0, 0) = 1.0;
  m.at(1, 2) = 1.0;
  m.at(2, 1) = 1.0;
  m.at(3, 3) = 1.0;
  return m;
}

CMatrix sqrt_gate(SqrtGateKind kind) {
  switch (kind) {
    case SqrtGateKind::sqrt_x:
      return principal_sqrt_involution(pauli_x());
    case SqrtGateKind::sqrt_y:
      return principal_sqrt_involution(pauli_y());
    case SqrtGateKind::sqrt_w: {
      // W = (X + Y)/sqrt(2).
      const double s = 1.0 / std::sqrt(2.0);
      CMatrix w(2);
      w.at(0, 1) = amp(s, -s);
      w.at(1, 0) = amp(s, s);
      return principal_sqrt_involution(w);
    }
  }
  fail(ErrorKind::config, "unknown sqrt gate kind");
}

const char* sqrt_gate_name(SqrtGateKind kind) {
  switch (kind) {
    case SqrtGateKind::sqrt_x: return "sx";
    case SqrtGateKind::sqrt_y: return "sy";
    case SqrtGateKind::sqrt_w: return "sw";
  }
  return "?";
}

}  // namespace slicesim
