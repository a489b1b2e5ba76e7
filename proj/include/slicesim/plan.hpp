#pragma once

#include <string>
#include <utility>
#include <vector>

#include "slicesim/circuit.hpp"
#include "slicesim/costmodel.hpp"
#include "slicesim/layout.hpp"

namespace slicesim {

// One execution script line. Argument layout per kind:
//   define       [value...]            first line: qubit count; second: the
//                                      union of every disk index set
//   new_tensor   [nl ng q...]          nl local + ng global qubits; a fresh
//                                      all-zeros tensor, or a merge when the
//                                      qubits already belong to live tensors
//   new_cache    [k q...]              opens a kernel over k <= 5 qubits
//   gate         [a b]                 next queued coupler on the pair; only
//                                      valid inside an open kernel
//   entgl_ei     [q l1 l2]             defer a coupler on the side of q: the
//                                      pre-gate value stays open under label
//                                      l1 and the output arrives through l2
//   entgl_e2q    [q p l1 l2]           absorb the deferred coupler into the
//                                      tensor owning q (p is the far operand)
//   entgl_assert [nq ne q... l...]     shape check of one live tensor
//   slice        [q...]                free re-bucket of socket-global bits
//   all2all      [q...]                paid exchange to a new socket set
//   disk_write   [q...]                full write cycle; args are the bits
//                                      held fixed during the pass
//   disk_read    [q...]                full read cycle; args become the new
//                                      fixed bits for the next pass
// Labels are negative; deferral g uses -(2g-1) and -2g.
enum class PlanKind {
  define,
  new_tensor,
  new_cache,
  gate,
  entgl_ei,
  entgl_e2q,
  entgl_assert,
  slice,
  all2all,
  disk_write,
  disk_read,
};

struct PlanLine {
  PlanKind kind;
  std::vector<int> args;
};

struct Plan {
  std::vector<PlanLine> lines;
};

Plan parse_plan_text(const std::string& text,
                     const std::string& name = "plan");
Plan load_plan(const std::string& path);
std::string plan_text(const Plan& plan);
void save_plan(const Plan& plan, const std::string& path);

// Walks the plan symbolically, validating every line against the live
// tensor set, and emits the per-phase accounting rows that feed the cost
// model. The socket width is the size of the first slice line, the disk
// slice width the size of the first write.
PhaseTable summarize(const Plan& plan);

// Non-throwing audit of a plan against the merged circuit it should run.
// Returns one "plan line N: ..." report per violation, empty when the plan
// is structurally sound and consumes exactly the circuit's couplers. A
// clean audit means execution can only fail on runtime grounds (storage,
// capacity, numerics).
std::vector<std::string> validate_plan(const Plan& plan,
                                       const Circuit& merged);

// Builds an executable plan for a two-qubit-only circuit: a prefix of the
// layers runs as two independent halves with every crossing coupler
// deferred, the halves merge, and the remaining gates run in an order
// consistent with each qubit's gate sequence, spilling to disk whenever the
// fixed bits block further progress.
struct PartitionSpec {
  std::vector<int> phi_qubits;   // the half that keeps deferred index pairs
  int defer_layers = 2;          // split prefix, in layers
  int socket_bits_per_half = 1;  // width of the pre-merge exchanges
  std::vector<int> disk_first;   // pass-fixed bit sets; empty = no store
  std::vector<int> disk_second;
  int exchange_every = 0;        // post-merge exchange cadence, in kernels
  bool final_write = false;
  int max_kernel_qubits = 5;
};
Plan expand_partition(const Circuit& merged, const PartitionSpec& spec);

// Builds an accounting plan that follows a target row profile. Kernel
// qubit sets and coupler pairs are drawn from the layout (windows over
// coupled qubit chains, reused round robin), so the script is structurally
// valid, but line counts follow the shape rather than a generated circuit.
struct RowShape {
  int kernels = 0;
  int gates = 0;
  std::vector<int> socket;  // exchange target before the row; empty = keep
};
struct PassShape {
  std::vector<int> disk;          // fixed bits during the pass
  std::vector<int> first_socket;  // free re-bucket right after the read
  std::vector<RowShape> rows;
};
struct RunShape {
  std::vector<int> phi_qubits;
  std::vector<std::pair<int, int>> deferred;  // (phi side, chi side)
  RowShape t1, t2;                // socket = the pre-merge exchange sets
  std::vector<int> premerge_slice;
  std::vector<int> disk_union;
  std::vector<PassShape> passes;  // pass 0 inherits its disk set as merge
                                  // globals and needs no leading read
  bool final_write = true;
};
Plan shape_run_plan(const QubitLayout& layout, const RunShape& shape);

// Published run shapes for the two production grids.
RunShape run_shape_53();
RunShape run_shape_54();

}  // namespace slicesim
