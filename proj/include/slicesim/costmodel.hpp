#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace slicesim {

enum class PhaseKind { gates, contraction, disk_write, disk_read };

// One accounting row of a sliced run: a gate phase, the cross-tensor
// contraction, or a disk hop. all2alls is fractional because tensors
// narrower than the full state exchange proportionally less traffic.
struct PhaseSummary {
  std::string label;
  PhaseKind kind = PhaseKind::gates;
  int kernels = 0;
  bool slow_class = false;  // true: full-width gate rate; false: narrow rate
  int num_gates = 0;
  int rank_per_socket = 0;
  double all2alls = 0.0;
  int disk_transfers = 0;
  int contraction_flops_log2 = -1;  // -1 when the row contracts nothing
  int unagg_amp_bits = 0;           // per-disk-slice amplitude bits
};

// Machine rates. Times are seconds, rates bytes or FLOP per second.
struct MachineProfile {
  double sockets = 8192.0;
  double t_gate_45q = 0.22482;
  double t_gate_30q = 0.025097;
  double contraction_rate = 1.1673e17;
  double injection_rate_per_socket = 3758096384.0;  // 3.5 * 2^30
  double disk_rate = 2199023255552.0;               // 2 * 2^40
  double disk_bytes_per_amp = 8.0;
  double mem_bytes_per_amp = 16.0;
  double hpl_tflops = 148600.0;  // LINPACK throughput, TFLOP/s
};

MachineProfile load_profile(const std::string& path);
void save_profile(const MachineProfile& profile, const std::string& path);

// Measured per-gate times move between machines by their LINPACK ratio.
double scale_gate_time(double t_source, double hpl_source, double hpl_target);

// Cross-tensor contraction work: one complex multiply-add (8 real ops) per
// (full state index, open pair-index value) combination.
double contraction_flops(int n_qubits, int entanglement_bits);

// Bytes to hold every amplitude on disk at the profile's storage density.
double disk_footprint(int n_qubits, const MachineProfile& profile);

struct CostRow {
  std::string label;
  PhaseKind kind = PhaseKind::gates;
  std::string gate_class;  // "45q", "30q", or "-"
  int kernels = 0;
  int num_gates = 0;
  int rank_per_socket = 0;
  double seconds = 0.0;
  double days = 0.0;
  double percent = 0.0;
  double achieved_pflops = 0.0;  // unaggregated FLOP over wall time
};

struct CostReport {
  int n_qubits = 0;
  int disk_slice_bits = 0;
  std::vector<CostRow> rows;
  double compute_seconds = 0.0;
  double all2all_seconds = 0.0;
  double disk_seconds = 0.0;
  double total_seconds = 0.0;
  double compute_days = 0.0;
  double all2all_days = 0.0;
  double disk_days = 0.0;
  double total_days = 0.0;
  double disk_footprint_bytes = 0.0;
  double total_rank = 0.0;  // log2 of summed per-socket tensor bytes
  double compute_achieved_pflops = 0.0;
};

// Wall time of one full cross-socket exchange or disk pass of the state.
double all2all_unit_seconds(int n_qubits, const MachineProfile& profile);
double disk_transfer_unit_seconds(int n_qubits, const MachineProfile& profile);

CostReport estimate_cost(const std::vector<PhaseSummary>& phases,
                         int n_qubits, int disk_slice_bits,
                         const MachineProfile& profile);

struct PhaseTable {
  int n_qubits = 0;
  int disk_slice_bits = 0;
  std::vector<PhaseSummary> phases;
};

PhaseTable load_phase_table(const std::string& path);
void save_phase_table(const PhaseTable& table, const std::string& path);

// Depth sweep: per-row totals with the narrow-class kernel count pinned to
// one per qubit and the contraction cost fixed by the qubit count.
struct SweepRow {
  int cycles = 0;
  int disk_transfers = 0;
  double all2alls = 0.0;
  int kernels = 0;
};

struct SweepTable {
  int n_qubits = 0;
  int disk_slice_bits = 0;
  int contraction_flops_log2 = 0;
  std::vector<SweepRow> rows;
};

SweepTable load_sweep_table(const std::string& path);
void save_sweep_table(const SweepTable& table, const std::string& path);

struct SweepResult {
  SweepRow row;
  double compute_days = 0.0;
  double all2all_days = 0.0;
  double disk_days = 0.0;
  double total_days = 0.0;
};

std::vector<SweepResult> estimate_sweep(const SweepTable& table,
                                        const MachineProfile& profile);

// Exact decimal rendering of dyadic fractions like 0.0009765625.
std::string format_exact(double value);

std::string render_cost_table(const CostReport& report);
std::string render_cost_csv(const CostReport& report);
std::string render_sweep_table(const std::vector<SweepResult>& results,
                               int n_qubits);
std::string render_sweep_csv(const std::vector<SweepResult>& results,
                             int n_qubits);

}  // namespace slicesim
