#pragma once

#include <string>

#include "slicesim/circuit.hpp"
#include "slicesim/oracle.hpp"
#include "slicesim/plan.hpp"
#include "slicesim/slicestore.hpp"

namespace slicesim {

struct EngineOptions {
  StorePrecision store_precision = StorePrecision::f32;
  std::string storage_root;  // required only when the plan hops the store
  int capacity_bits = 26;    // per-tensor allocation cap, in index bits
  double unitarity_tolerance = 1e-12;
};

struct EngineStats {
  int kernels = 0;
  int gates = 0;
  int deferrals = 0;
  int exchanges = 0;
  int disk_writes = 0;  // full cycles, each touching every slice file
  int disk_reads = 0;
  double max_kernel_defect = 0.0;  // worst unitarity defect seen
};

struct ExecutionResult {
  DenseState state;
  EngineStats stats;
};

// Runs the plan numerically. Gate and deferral lines consume the circuit's
// couplers in per-qubit sequence order, so the plan must apply exactly the
// gates of the circuit, each at a moment consistent with its qubit order.
// The final tensor must span every qubit with no open labels; it is
// returned with index bit q = qubit q, directly comparable to the dense
// reference. The store root holds one slice file per disk index value;
// rerunning a plan against an existing root reuses the store in place.
ExecutionResult execute_plan(const Plan& plan, const Circuit& merged,
                             const EngineOptions& options = {});

}  // namespace slicesim
