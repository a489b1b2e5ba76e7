#include "slicesim/tensornet.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "slicesim/errors.hpp"

namespace slicesim {
namespace {

// Pairwise merge results above this rank would not fit a test budget.
constexpr int kMaxMergeRank = 26;

int find_slot(const std::vector<EdgeId>& edges, EdgeId e) {
  for (int j = 0; j < static_cast<int>(edges.size()); ++j)
    if (edges[j] == e) return j;
  return -1;
}

// Contracts two tensors. Shared edges that keep() rejects are summed out;
// everything else stays open. A kept shared edge ties the two slots to one
// index, which is how hyperedges and diagonal factors work.
template <typename Keep>
NetTensor merge_pair(const NetTensor& a, const NetTensor& b, Keep&& keep) {
  std::vector<EdgeId> out_edges, sum_edges;
  for (EdgeId e : a.edges) {
    if (find_slot(b.edges, e) >= 0 && !keep(e))
      sum_edges.push_back(e);
    else
      out_edges.push_back(e);
  }
  for (EdgeId e : b.edges)
    if (find_slot(a.edges, e) < 0) out_edges.push_back(e);
  int n_out = static_cast<int>(out_edges.size());
  int n_sum = static_cast<int>(sum_edges.size());
  if (n_out > kMaxMergeRank || n_out + n_sum > kMaxMergeRank + 4)
    fail(ErrorKind::capacity, "contraction intermediate too large: rank " +
                                  std::to_string(n_out));
  std::vector<EdgeId> combined = out_edges;
  combined.insert(combined.end(), sum_edges.begin(), sum_edges.end());
  auto positions = [&](const NetTensor& t) {
    std::vector<int> pos(t.edges.size());
    for (std::size_t j = 0; j < t.edges.size(); ++j)
      pos[j] = find_slot(combined, t.edges[j]);
    return pos;
  };
  std::vector<int> pos_a = positions(a), pos_b = positions(b);
  NetTensor r;
  r.edges = out_edges;
  r.tag = a.tag.empty() ? b.tag : a.tag;
  r.data.assign(std::size_t(1) << n_out, amp(0.0));
  const std::uint64_t total = std::uint64_t(1) << (n_out + n_sum);
  const std::uint64_t out_mask = (std::uint64_t(1) << n_out) - 1;
  for (std::uint64_t idx = 0; idx < total; ++idx) {
    std::uint64_t ia = 0, ib = 0;
    for (std::size_t j = 0; j < pos_a.size(); ++j)
      ia |= ((idx >> pos_a[j]) & 1u) << j;
    for (std::size_t j = 0; j < pos_b.size(); ++j)
      ib |= ((idx >> pos_b[j]) & 1u) << j;
    r.data[idx & out_mask] += a.data[ia] * b.data[ib];
  }
  return r;
}

}  // namespace

std::vector<amp> gate_tensor_data(const CMatrix& u, int k) {
  std::vector<amp> data(std::size_t(1) << (2 * k));
  for (int out = 0; out < u.dim; ++out)
    for (int in = 0; in < u.dim; ++in)
      data[std::size_t(in) | (std::size_t(out) << k)] = u.at(out, in);
  return data;
}

TensorNetwork empty_network(int n_qubits) {
  if (n_qubits < 1) fail(ErrorKind::validation, "network needs qubits");
  TensorNetwork net;
  net.n_qubits = n_qubits;
  for (int q = 0; q < n_qubits; ++q) {
    NetTensor t;
    t.edges = {q};
    t.data = {amp(1.0), amp(0.0)};
    t.tag = "init";
    net.tensors.push_back(std::move(t));
    net.frontier.push_back(q);
  }
  net.next_edge = n_qubits;
  return net;
}

namespace {

std::vector<int> gate_qubits_lsb(const Gate& gate) {
  // The first operand is the more significant matrix bit.
  if (gate.is_two_qubit()) return {gate.q1, gate.q0};
  return {gate.q0};
}

void check_gate_qubits(const TensorNetwork& net, const Gate& gate) {
  for (int q : gate_qubits_lsb(gate))
    if (q < 0 || q >= net.n_qubits)
      fail(ErrorKind::validation, "gate qubit out of range");
  if (gate.is_two_qubit() && gate.q0 == gate.q1)
    fail(ErrorKind::validation, "two-qubit gate repeats a qubit");
}

}  // namespace

void insert_gate(TensorNetwork& net, const Gate& gate) {
  check_gate_qubits(net, gate);
  std::vector<int> qs = gate_qubits_lsb(gate);
  int k = static_cast<int>(qs.size());
  NetTensor t;
  t.tag = gate.tag;
  t.data = gate_tensor_data(gate.u, k);
  for (int q : qs) t.edges.push_back(net.frontier[q]);
  for (int q : qs) {
    EdgeId e = net.next_edge++;
    t.edges.push_back(e);
    net.frontier[q] = e;
  }
  net.tensors.push_back(std::move(t));
}

InsertionKind insert_gate_compact(TensorNetwork& net, const Gate& gate,
                                  double tol) {
  check_gate_qubits(net, gate);
  std::vector<int> qs = gate_qubits_lsb(gate);
  int k = static_cast<int>(qs.size());
  NetTensor probe;
  probe.data = gate_tensor_data(gate.u, k);
  probe.edges.assign(2 * k, 0);
  for (int j = 0; j < 2 * k; ++j) probe.edges[j] = j;
  std::vector<std::pair<int, int>> pairing;
  for (int j = 0; j < k; ++j) pairing.emplace_back(j, k + j);
  if (is_diagonal(probe, pairing, tol)) {
    NetTensor t;
    t.tag = gate.tag;
    for (int q : qs) t.edges.push_back(net.frontier[q]);
    t.data.resize(std::size_t(1) << k);
    for (std::uint64_t in = 0; in < t.data.size(); ++in)
      t.data[in] = probe.data[in | (in << k)];
    net.tensors.push_back(std::move(t));
    return InsertionKind::diagonal_tied;
  }
  std::vector<int> in_slots(k), out_slots(k);
  for (int j = 0; j < k; ++j) {
    in_slots[j] = j;
    out_slots[j] = k + j;
  }
  auto map = is_separable(probe, in_slots, out_slots, tol);
  std::vector<int> perm;
  if (map && map_is_bit_permutation(*map, k, &perm)) {
    bool unit_factors = true;
    for (const amp& f : map->factor)
      if (std::abs(f - amp(1.0)) > tol) unit_factors = false;
    if (!unit_factors) {
      NetTensor t;
      t.tag = gate.tag + "+phase";
      for (int q : qs) t.edges.push_back(net.frontier[q]);
      t.data.assign(map->factor.begin(), map->factor.end());
      net.tensors.push_back(std::move(t));
    }
    std::vector<EdgeId> old(k);
    for (int j = 0; j < k; ++j) old[j] = net.frontier[qs[j]];
    for (int j = 0; j < k; ++j) net.frontier[qs[perm[j]]] = old[j];
    return InsertionKind::permuted_wires;
  }
  insert_gate(net, gate);
  return InsertionKind::dense;
}

TensorNetwork network_from_circuit(const Circuit& circuit, bool compact) {
  TensorNetwork net = empty_network(circuit.n_qubits);
  for (const auto& layer : circuit.layers)
    for (const Gate& g : layer) {
      if (compact)
        insert_gate_compact(net, g);
      else
        insert_gate(net, g);
    }
  return net;
}

void defer_gate(TensorNetwork& net, const Gate& gate, int phi_qubit) {
  check_gate_qubits(net, gate);
  if (!gate.is_two_qubit())
    fail(ErrorKind::validation, "only two-qubit gates can be deferred");
  if (phi_qubit != gate.q0 && phi_qubit != gate.q1)
    fail(ErrorKind::validation, "deferral qubit is not a gate operand");
  int chi_qubit = phi_qubit == gate.q0 ? gate.q1 : gate.q0;
  EdgeId e_in = net.frontier[phi_qubit];  // pre-gate value stays open
  EdgeId e_out = net.next_edge++;         // gate output on the split line
  EdgeId wire_phi = net.next_edge++;
  EdgeId wire_chi = net.next_edge++;
  NetTensor ei;
  ei.tag = "defer-id";
  ei.edges = {e_in, e_out, wire_phi};
  ei.data.assign(8, amp(0.0));
  // Identity extension: forwards the deferred output onto the line, with
  // the pre-gate value slot riding along untouched.
  for (int pre = 0; pre < 2; ++pre)
    for (int v = 0; v < 2; ++v)
      ei.data[pre | (v << 1) | (v << 2)] = 1.0;
  NetTensor g;
  g.tag = gate.tag + "+defer";
  g.data = gate_tensor_data(gate.u, 2);
  if (phi_qubit == gate.q0)
    g.edges = {net.frontier[gate.q1], e_in, wire_chi, e_out};
  else
    g.edges = {e_in, net.frontier[gate.q0], e_out, wire_chi};
  net.frontier[phi_qubit] = wire_phi;
  net.frontier[chi_qubit] = wire_chi;
  net.ent_edges.push_back(e_in);
  net.ent_edges.push_back(e_out);
  net.tensors.push_back(std::move(ei));
  net.tensors.push_back(std::move(g));
}

NetTensor contract(const TensorNetwork& net, const std::vector<int>& ids) {
  if (ids.empty()) fail(ErrorKind::validation, "nothing to contract");
  std::unordered_set<int> in_subset;
  for (int id : ids) {
    if (id < 0 || id >= static_cast<int>(net.tensors.size()))
      fail(ErrorKind::validation, "tensor id out of range");
    if (!in_subset.insert(id).second)
      fail(ErrorKind::validation, "tensor id repeats");
  }
  std::unordered_set<EdgeId> external(net.frontier.begin(),
                                      net.frontier.end());
  for (int t = 0; t < static_cast<int>(net.tensors.size()); ++t)
    if (!in_subset.count(t))
      for (EdgeId e : net.tensors[t].edges) external.insert(e);
  std::vector<NetTensor> work;
  for (int id : ids) work.push_back(net.tensors[id]);
  while (work.size() > 1) {
    // Smallest-rank tensor first; prefer a partner it shares an edge with.
    std::size_t i = 0;
    for (std::size_t t = 1; t < work.size(); ++t)
      if (work[t].rank() < work[i].rank()) i = t;
    std::size_t j = work.size();
    bool j_shares = false;
    for (std::size_t t = 0; t < work.size(); ++t) {
      if (t == i) continue;
      bool shares = false;
      for (EdgeId e : work[t].edges)
        if (find_slot(work[i].edges, e) >= 0) shares = true;
      if (j == work.size() || (shares && !j_shares) ||
          (shares == j_shares && work[t].rank() < work[j].rank())) {
        j = t;
        j_shares = shares;
      }
    }
    auto keep = [&](EdgeId e) {
      if (external.count(e)) return true;
      for (std::size_t t = 0; t < work.size(); ++t)
        if (t != i && t != j && find_slot(work[t].edges, e) >= 0) return true;
      return false;
    };
    NetTensor merged = merge_pair(work[i], work[j], keep);
    work[i] = std::move(merged);
    work.erase(work.begin() + j);
  }
  for (EdgeId e : work[0].edges)
    if (!external.count(e))
      fail(ErrorKind::validation, "dangling internal edge after contraction");
  return std::move(work[0]);
}

NetTensor contract_all(const TensorNetwork& net) {
  std::vector<int> ids(net.tensors.size());
  for (std::size_t t = 0; t < ids.size(); ++t) ids[t] = static_cast<int>(t);
  NetTensor full = contract(net, ids);
  return reorder_slots(full, net.frontier);
}

NetTensor reorder_slots(const NetTensor& t,
                        const std::vector<EdgeId>& new_order) {
  if (new_order.size() != t.edges.size())
    fail(ErrorKind::validation, "slot reorder must keep every edge");
  std::vector<int> dest(t.edges.size());
  for (std::size_t j = 0; j < t.edges.size(); ++j) {
    dest[j] = find_slot(new_order, t.edges[j]);
    if (dest[j] < 0)
      fail(ErrorKind::validation, "slot reorder lost an edge");
  }
  NetTensor r;
  r.edges = new_order;
  r.tag = t.tag;
  r.data.assign(t.data.size(), amp(0.0));
  for (std::uint64_t idx = 0; idx < t.data.size(); ++idx) {
    std::uint64_t out = 0;
    for (std::size_t j = 0; j < dest.size(); ++j)
      out |= ((idx >> j) & 1u) << dest[j];
    r.data[out] = t.data[idx];
  }
  return r;
}

bool is_diagonal(const NetTensor& t,
                 const std::vector<std::pair<int, int>>& slot_pairs,
                 double tol) {
  for (auto [s1, s2] : slot_pairs)
    if (s1 < 0 || s2 < 0 || s1 >= t.rank() || s2 >= t.rank())
      fail(ErrorKind::validation, "slot pair out of range");
  for (std::uint64_t idx = 0; idx < t.data.size(); ++idx) {
    if (std::abs(t.data[idx]) <= tol) continue;
    for (auto [s1, s2] : slot_pairs)
      if (((idx >> s1) & 1u) != ((idx >> s2) & 1u)) return false;
  }
  return true;
}

std::optional<SeparableMap> is_separable(const NetTensor& t,
                                         const std::vector<int>& in_slots,
                                         const std::vector<int>& out_slots,
                                         double tol) {
  std::vector<char> used(t.rank(), 0);
  for (int s : in_slots) {
    if (s < 0 || s >= t.rank() || used[s])
      fail(ErrorKind::validation, "bad input slot list");
    used[s] = 1;
  }
  for (int s : out_slots) {
    if (s < 0 || s >= t.rank() || used[s])
      fail(ErrorKind::validation, "bad output slot list");
    used[s] = 1;
  }
  if (static_cast<std::size_t>(t.rank()) != in_slots.size() + out_slots.size())
    fail(ErrorKind::validation, "slots must split into inputs and outputs");
  const std::uint64_t n_in = std::uint64_t(1) << in_slots.size();
  const std::uint64_t n_out = std::uint64_t(1) << out_slots.size();
  SeparableMap map;
  map.image.assign(n_in, 0);
  map.factor.assign(n_in, amp(0.0));
  for (std::uint64_t in = 0; in < n_in; ++in) {
    bool found = false;
    for (std::uint64_t out = 0; out < n_out; ++out) {
      std::uint64_t idx = 0;
      for (std::size_t j = 0; j < in_slots.size(); ++j)
        idx |= ((in >> j) & 1u) << in_slots[j];
      for (std::size_t j = 0; j < out_slots.size(); ++j)
        idx |= ((out >> j) & 1u) << out_slots[j];
      if (std::abs(t.data[idx]) <= tol) continue;
      if (found) return std::nullopt;  // two outputs share this input
      found = true;
      map.image[in] = static_cast<std::uint32_t>(out);
      map.factor[in] = t.data[idx];
    }
  }
  return map;
}

bool map_is_bit_permutation(const SeparableMap& map, int n_bits,
                            std::vector<int>* perm) {
  if (map.image.empty() || map.image[0] != 0) return false;
  std::vector<int> p(n_bits, -1);
  std::vector<char> hit(n_bits, 0);
  for (int j = 0; j < n_bits; ++j) {
    std::uint32_t im = map.image[std::uint32_t(1) << j];
    if (im == 0 || (im & (im - 1)) != 0) return false;
    int bit = 0;
    while (!((im >> bit) & 1u)) ++bit;
    if (bit >= n_bits || hit[bit]) return false;
    hit[bit] = 1;
    p[j] = bit;
  }
  for (std::uint32_t in = 0; in < map.image.size(); ++in) {
    std::uint32_t expect = 0;
    for (int j = 0; j < n_bits; ++j)
      if ((in >> j) & 1u) expect |= std::uint32_t(1) << p[j];
    if (map.image[in] != expect) return false;
  }
  if (perm) *perm = p;
  return true;
}

}  // namespace slicesim
