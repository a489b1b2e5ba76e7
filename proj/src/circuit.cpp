#include "slicesim/circuit.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <utility>

#include "slicesim/errors.hpp"
#include "slicesim/rng.hpp"

namespace slicesim {
namespace {

// Tensor product with the first factor on the more significant bit.
CMatrix kron2(const CMatrix& hi, const CMatrix& lo) {
  CMatrix out(4);
  for (int ar = 0; ar < 2; ++ar)
    for (int br = 0; br < 2; ++br)
      for (int ac = 0; ac < 2; ++ac)
        for (int bc = 0; bc < 2; ++bc)
          out.at(ar * 2 + br, ac * 2 + bc) = hi.at(ar, ac) * lo.at(br, bc);
  return out;
}

CMatrix embed_on_slot(const CMatrix& u2, bool high_slot) {
  return high_slot ? kron2(u2, CMatrix::identity(2))
                   : kron2(CMatrix::identity(2), u2);
}

}  // namespace

Gate make_single_qubit_gate(int q, SqrtGateKind kind) {
  return Gate{q, -1, sqrt_gate(kind), sqrt_gate_name(kind)};
}

Gate make_fsim_gate(int a, int b, const GateParams& params) {
  return Gate{a, b, fsim_unitary(params), "fsim"};
}

Circuit generate_sycamore(const QubitLayout& layout, int cycles,
                          std::uint64_t seed, const SycamoreOptions& opt) {
  validate_layout(layout);
  if (cycles < 1) fail(ErrorKind::validation, "need at least one cycle");
  Circuit c;
  c.n_qubits = layout.n_qubits;
  c.coords = layout.coords;
  Rng rng(seed);
  auto single_layer = [&] {
    std::vector<Gate> layer;
    layer.reserve(c.n_qubits);
    for (int q = 0; q < c.n_qubits; ++q)
      layer.push_back(make_single_qubit_gate(
          q, static_cast<SqrtGateKind>(rng.next_below(3))));
    return layer;
  };
  for (int k = 1; k <= cycles; ++k) {
    c.layers.push_back(single_layer());
    std::vector<Gate> layer;
    for (auto [a, b] : layout.patterns[pattern_index_for_cycle(k)]) {
      GateParams params;
      params.theta = opt.theta;
      params.phi = opt.phi;
      params.delta_plus = rng.next_in(-opt.delta_range, opt.delta_range);
      params.delta_minus = rng.next_in(-opt.delta_range, opt.delta_range);
      params.delta_minus_off = rng.next_in(-opt.delta_range, opt.delta_range);
      layer.push_back(make_fsim_gate(a, b, params));
    }
    c.layers.push_back(std::move(layer));
  }
  if (opt.final_single_layer) c.layers.push_back(single_layer());
  return c;
}

Circuit merge_single_qubit_gates(const Circuit& circuit) {
  int n = circuit.n_qubits;
  std::vector<CMatrix> pending(n, CMatrix::identity(2));
  std::vector<char> dirty(n, 0);
  std::vector<std::pair<int, int>> last_pos(n, {-1, -1});
  std::vector<std::vector<Gate>> groups;
  for (const auto& layer : circuit.layers) {
    int group_idx = -1;
    for (const Gate& g : layer) {
      if (!g.is_two_qubit()) {
        pending[g.q0] = mat_mul(g.u, pending[g.q0]);
        dirty[g.q0] = 1;
        continue;
      }
      if (group_idx < 0) {
        group_idx = static_cast<int>(groups.size());
        groups.emplace_back();
      }
      Gate m = g;
      m.u = mat_mul(g.u, kron2(pending[g.q0], pending[g.q1]));
      pending[g.q0] = CMatrix::identity(2);
      pending[g.q1] = CMatrix::identity(2);
      dirty[g.q0] = dirty[g.q1] = 0;
      int pos = static_cast<int>(groups[group_idx].size());
      last_pos[g.q0] = last_pos[g.q1] = {group_idx, pos};
      groups[group_idx].push_back(std::move(m));
    }
  }
  for (int q = 0; q < n; ++q) {
    if (!dirty[q]) continue;
    if (last_pos[q].first < 0)
      fail(ErrorKind::validation,
           "qubit " + std::to_string(q) +
               " has single-qubit gates but never couples; cannot merge");
    // Trailing rotations fold backwards into the last coupler on the qubit.
    Gate& g = groups[last_pos[q].first][last_pos[q].second];
    g.u = mat_mul(embed_on_slot(pending[q], g.q0 == q), g.u);
  }
  Circuit out;
  out.n_qubits = n;
  out.coords = circuit.coords;
  for (auto& grp : groups) {
    if (grp.size() < 2) {
      out.layers.push_back(std::move(grp));
      continue;
    }
    // Gates within a group act on disjoint qubits, so the interleaved
    // halves keep the unitary while matching the two-row layer layout.
    std::vector<Gate> even, odd;
    for (std::size_t i = 0; i < grp.size(); ++i)
      (i % 2 == 0 ? even : odd).push_back(std::move(grp[i]));
    out.layers.push_back(std::move(even));
    out.layers.push_back(std::move(odd));
  }
  return out;
}

int gate_count(const Circuit& circuit) {
  int total = 0;
  for (const auto& layer : circuit.layers)
    total += static_cast<int>(layer.size());
  return total;
}

int two_qubit_gate_count(const Circuit& circuit) {
  int total = 0;
  for (const auto& layer : circuit.layers)
    for (const Gate& g : layer) total += g.is_two_qubit() ? 1 : 0;
  return total;
}

void save_circuit(const Circuit& circuit, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, "cannot write circuit file: " + path);
  out << "circuit " << circuit.n_qubits << "\n";
  for (int q = 0; q < static_cast<int>(circuit.coords.size()); ++q)
    out << "coord " << q << " " << circuit.coords[q].first << " "
        << circuit.coords[q].second << "\n";
  char buf[64];
  for (const auto& layer : circuit.layers) {
    out << "layer\n";
    for (const Gate& g : layer) {
      if (g.is_two_qubit())
        out << "u2 " << g.q0 << " " << g.q1;
      else
        out << "u1 " << g.q0;
      out << " " << (g.tag.empty() ? "-" : g.tag);
      for (const amp& v : g.u.a) {
        std::snprintf(buf, sizeof buf, " %.17g %.17g", v.real(), v.imag());
        out << buf;
      }
      out << "\n";
    }
  }
  if (!out) fail(ErrorKind::io, "failed writing circuit file: " + path);
}

Circuit load_circuit(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open circuit file: " + path);
  Circuit circuit;
  bool have_header = false;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ss(line);
    std::string key;
    if (!(ss >> key)) continue;
    auto bad = [&](const std::string& what) {
      fail(ErrorKind::io, path + ":" + std::to_string(line_no) + ": " + what);
    };
    if (key == "circuit") {
      if (!(ss >> circuit.n_qubits) || circuit.n_qubits <= 0)
        bad("expected positive qubit count");
      have_header = true;
    } else if (!have_header) {
      bad("file must start with a circuit line");
    } else if (key == "coord") {
      int q, r, c;
      if (!(ss >> q >> r >> c)) bad("expected: coord <q> <row> <col>");
      if (q != static_cast<int>(circuit.coords.size()))
        bad("coord lines must appear in qubit order");
      circuit.coords.emplace_back(r, c);
    } else if (key == "layer") {
      circuit.layers.emplace_back();
    } else if (key == "u1" || key == "u2") {
      if (circuit.layers.empty()) bad("gate before first layer line");
      Gate g;
      int dim = 2;
      if (key == "u2") {
        if (!(ss >> g.q0 >> g.q1)) bad("expected two qubit numbers");
        dim = 4;
      } else {
        if (!(ss >> g.q0)) bad("expected a qubit number");
      }
      if (!(ss >> g.tag)) bad("expected a gate tag");
      if (g.tag == "-") g.tag.clear();
      g.u = CMatrix(dim);
      for (amp& v : g.u.a) {
        double re, im;
        if (!(ss >> re >> im)) bad("matrix entries truncated");
        v = amp(re, im);
      }
      double extra;
      if (ss >> extra) bad("trailing numbers after matrix");
      if (g.q0 < 0 || g.q0 >= circuit.n_qubits ||
          g.q1 >= circuit.n_qubits || (dim == 4 && g.q1 < 0) ||
          g.q0 == g.q1)
        bad("gate qubit out of range");
      circuit.layers.back().push_back(std::move(g));
    } else {
      bad("unknown directive: " + key);
    }
  }
  if (!have_header) fail(ErrorKind::io, "empty circuit file: " + path);
  return circuit;
}

}  // namespace slicesim
