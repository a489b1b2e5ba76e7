#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "slicesim/circuit.hpp"
#include "slicesim/types.hpp"

namespace slicesim {

// Hyperedge label. An edge may appear in the slot lists of any number of
// tensors; all those slots carry the same index value, and the edge is
// summed once, when the last tensor using it is folded in.
using EdgeId = int;

struct NetTensor {
  std::vector<EdgeId> edges;  // slot j supplies index bit j (LSB first)
  std::vector<amp> data;      // dense, size 2^rank
  std::string tag;

  int rank() const { return static_cast<int>(edges.size()); }
};

// Wires and gate tensors of a circuit. frontier[q] is the edge carrying
// qubit q's current value; ent_pairs counts deferred-gate index pairs that
// have not been eliminated yet.
struct TensorNetwork {
  int n_qubits = 0;
  std::vector<NetTensor> tensors;
  std::vector<EdgeId> frontier;
  std::vector<EdgeId> ent_edges;  // open deferred-index labels, two per gate
  EdgeId next_edge = 0;
};

// Gate matrix as slot-ordered tensor data: entry [in | out << k] = u(out, in).
std::vector<amp> gate_tensor_data(const CMatrix& u, int k);

TensorNetwork empty_network(int n_qubits);  // one |0> tensor per qubit

// Appends the gate as a dense tensor with fresh output wires.
void insert_gate(TensorNetwork& net, const Gate& gate);

enum class InsertionKind { dense, diagonal_tied, permuted_wires };

// Diagonal gates tie onto the existing wires without new edges, and gates
// that only permute index bits (up to per-value phases) rewire the frontier
// plus a diagonal phase factor. Everything else falls back to dense.
InsertionKind insert_gate_compact(TensorNetwork& net, const Gate& gate,
                                  double tol = 0.0);

TensorNetwork network_from_circuit(const Circuit& circuit,
                                   bool compact = false);

// Splits a two-qubit gate across a cut: the operand line phi_qubit keeps
// its pre-gate value open as one deferred index and receives the gate's
// output through a second deferred index tied forward by an identity; the
// other operand absorbs the full gate tensor. Contracting the deferred
// index pair reproduces the direct gate application. Adds two ent edges.
void defer_gate(TensorNetwork& net, const Gate& gate, int phi_qubit);

// Contracts the sub-network given by tensor ids. Edges used outside the
// subset, and frontier wires, stay open; shared edges internal to the
// subset are summed. Pairwise merges, smallest ranks first.
NetTensor contract(const TensorNetwork& net, const std::vector<int>& ids);

// Contracts everything down to the state tensor with slot j = qubit j.
NetTensor contract_all(const TensorNetwork& net);

NetTensor reorder_slots(const NetTensor& t,
                        const std::vector<EdgeId>& new_order);

// True when every entry above tol has equal bits in each paired slot.
bool is_diagonal(const NetTensor& t,
                 const std::vector<std::pair<int, int>>& slot_pairs,
                 double tol = 0.0);

// Support map of a separable tensor: input index j maps to the single
// output index image[j] with weight factor[j].
struct SeparableMap {
  std::vector<std::uint32_t> image;
  std::vector<amp> factor;
};

// Treats the tensor as a matrix from in_slots to out_slots and checks that
// every input column has at most one entry above tol.
std::optional<SeparableMap> is_separable(const NetTensor& t,
                                         const std::vector<int>& in_slots,
                                         const std::vector<int>& out_slots,
                                         double tol = 0.0);

// True when the map is a pure bit permutation times per-value factors;
// perm (if given) receives the output bit fed by each input bit.
bool map_is_bit_permutation(const SeparableMap& map, int n_bits,
                            std::vector<int>* perm = nullptr);

}  // namespace slicesim
