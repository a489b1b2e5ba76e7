// Batch front end: circuit generation, run-time estimation, sliced
// execution, and oracle verification. Exit codes: 0 success, 1 usage or
// configuration, 2 validation, 3 I/O, 4 verification mismatch.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "slicesim/circuit.hpp"
#include "slicesim/costmodel.hpp"
#include "slicesim/engine.hpp"
#include "slicesim/errors.hpp"
#include "slicesim/layout.hpp"
#include "slicesim/oracle.hpp"
#include "slicesim/plan.hpp"
#include "slicesim/slicestore.hpp"

using namespace slicesim;
namespace fs = std::filesystem;

namespace {

int code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config: return 1;
    case ErrorKind::validation: return 2;
    case ErrorKind::capacity: return 2;
    case ErrorKind::io: return 3;
    case ErrorKind::verification: return 4;
  }
  return 2;
}

std::string first_token(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open " + path);
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ss(line);
    std::string tok;
    if (ss >> tok) return tok;
  }
  fail(ErrorKind::io, "empty file: " + path);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, "cannot write " + path);
  out << text;
}

std::string storage_root_or_env(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("SLICESIM_STORAGE_ROOT")) return env;
  return {};
}

int run_gen_circuit(const std::string& layout_path, int cycles,
                    std::uint64_t seed, const std::string& out) {
  QubitLayout layout = load_layout(layout_path);
  Circuit circuit = generate_sycamore(layout, cycles, seed);
  save_circuit(circuit, out);
  std::printf("%s: %d qubits, %d cycles, %zu layers, %d couplers -> %s\n",
              layout.name.c_str(), circuit.n_qubits, cycles,
              circuit.layers.size(), two_qubit_gate_count(circuit),
              out.c_str());
  return 0;
}

int run_estimate(const std::string& plan_path, const std::string& sweep_path,
                 const std::string& profile_path, bool csv,
                 const std::string& out) {
  MachineProfile profile;
  if (!profile_path.empty()) profile = load_profile(profile_path);

  std::string text;
  if (!sweep_path.empty()) {
    SweepTable table = load_sweep_table(sweep_path);
    std::vector<SweepResult> results = estimate_sweep(table, profile);
    text = csv ? render_sweep_csv(results, table.n_qubits)
               : render_sweep_table(results, table.n_qubits);
  } else {
    PhaseTable table;
    std::string lead = first_token(plan_path);
    if (lead == "define") {
      table = summarize(load_plan(plan_path));
    } else if (lead == "phases") {
      table = load_phase_table(plan_path);
    } else {
      fail(ErrorKind::io,
           plan_path + ": neither a plan nor a phase summary");
    }
    CostReport report = estimate_cost(table.phases, table.n_qubits,
                                      table.disk_slice_bits, profile);
    text = csv ? render_cost_csv(report) : render_cost_table(report);
  }
  if (out.empty())
    std::fputs(text.c_str(), stdout);
  else
    write_text(out, text);
  return 0;
}

Circuit load_merged_circuit(const std::string& path) {
  Circuit circuit = load_circuit(path);
  if (two_qubit_gate_count(circuit) == gate_count(circuit)) return circuit;
  return merge_single_qubit_gates(circuit);
}

struct PlanCounts {
  int kernels = 0, couplers = 0, deferrals = 0, exchanges = 0;
  int writes = 0, reads = 0;
  bool ends_with_write = false;
};

PlanCounts count_plan(const Plan& plan) {
  PlanCounts c;
  for (const PlanLine& line : plan.lines) {
    switch (line.kind) {
      case PlanKind::new_cache: ++c.kernels; break;
      case PlanKind::gate: ++c.couplers; break;
      case PlanKind::entgl_ei: ++c.deferrals; break;
      case PlanKind::all2all: ++c.exchanges; break;
      case PlanKind::disk_write: ++c.writes; break;
      case PlanKind::disk_read: ++c.reads; break;
      default: break;
    }
  }
  c.ends_with_write =
      !plan.lines.empty() && plan.lines.back().kind == PlanKind::disk_write;
  return c;
}

int run_simulate(const std::string& circuit_path, const std::string& plan_path,
                 const std::string& root_flag, bool f64) {
  Circuit merged = load_merged_circuit(circuit_path);
  Plan plan = load_plan(plan_path);
  std::vector<std::string> violations = validate_plan(plan, merged);
  if (!violations.empty()) {
    for (const std::string& v : violations)
      std::fprintf(stderr, "violation: %s\n", v.c_str());
    fail(ErrorKind::validation,
         std::to_string(violations.size()) + " plan violation(s)");
  }
  PlanCounts counts = count_plan(plan);

  EngineOptions options;
  options.storage_root = storage_root_or_env(root_flag);
  options.store_precision = f64 ? StorePrecision::f64 : StorePrecision::f32;
  ExecutionResult res = execute_plan(plan, merged, options);

  std::printf("circuit: %d qubits, %d couplers\n", merged.n_qubits,
              two_qubit_gate_count(merged));
  std::printf("plan:    kernels %d, couplers %d+%d deferred, exchanges %d, "
              "writes %d, reads %d\n",
              counts.kernels, counts.couplers, counts.deferrals,
              counts.exchanges, counts.writes, counts.reads);
  std::printf("engine:  kernels %d, couplers %d+%d deferred, exchanges %d, "
              "writes %d, reads %d\n",
              res.stats.kernels, res.stats.gates, res.stats.deferrals,
              res.stats.exchanges, res.stats.disk_writes,
              res.stats.disk_reads);
  bool match = res.stats.kernels == counts.kernels &&
               res.stats.gates == counts.couplers &&
               res.stats.deferrals == counts.deferrals &&
               res.stats.exchanges == counts.exchanges &&
               res.stats.disk_writes == counts.writes &&
               res.stats.disk_reads == counts.reads;
  std::printf("trace:   %s\n", match ? "counters match the plan summary"
                                     : "counters diverge from the plan");
  std::printf("state:   norm %.12f, max kernel defect %.3e\n",
              state_norm(res.state), res.stats.max_kernel_defect);
  if (counts.writes > 0)
    std::printf("store:   %s (%s)\n", options.storage_root.c_str(),
                counts.ends_with_write ? "holds the final amplitudes"
                                       : "scratch only");
  if (!match) fail(ErrorKind::validation, "engine trace diverged");
  return 0;
}

// Reassembles the full state from the store's canonical layout: file id
// bit k is index qubit k, offset bit j is local qubit j.
DenseState state_from_store(SliceStore& store) {
  DenseState state = dense_zero_state(store.n_qubits());
  const FileIndexScheme& scheme = store.scheme();
  store.begin_read_cycle();
  for (std::uint64_t fid = 0; fid < scheme.file_count(); ++fid) {
    std::vector<amp> buf = store.read_slice(fid);
    std::uint64_t base = 0;
    for (size_t k = 0; k < scheme.index_qubits.size(); ++k)
      base |= ((fid >> k) & 1u) << scheme.index_qubits[k];
    for (std::uint64_t off = 0; off < buf.size(); ++off) {
      std::uint64_t idx = base;
      for (size_t j = 0; j < scheme.local_qubits.size(); ++j)
        idx |= ((off >> j) & 1u) << scheme.local_qubits[j];
      state.amps[idx] = buf[off];
    }
  }
  store.end_read_cycle();
  return state;
}

int run_verify(const std::string& circuit_path, const std::string& plan_path,
               const std::string& root_flag) {
  Circuit merged = load_merged_circuit(circuit_path);
  Plan plan = load_plan(plan_path);
  summarize(plan);  // structural validation up front
  PlanCounts counts = count_plan(plan);

  if (merged.n_qubits > kDenseOracleMaxQubits) {
    std::printf("unverifiable at this size: %d qubits exceeds the %d-qubit "
                "dense oracle cap\n",
                merged.n_qubits, kDenseOracleMaxQubits);
    return 0;
  }
  DenseState ref = dense_simulate(merged);

  DenseState got;
  double tolerance;
  if (counts.ends_with_write) {
    std::string root = storage_root_or_env(root_flag);
    if (root.empty())
      fail(ErrorKind::io, "plan leaves its result on disk; set a storage "
                          "root to verify it");
    if (!fs::exists(fs::path(root) / "manifest.json"))
      fail(ErrorKind::io, "no store under " + root + "; run simulate first");
    SliceStore store = SliceStore::open(root);
    if (store.n_qubits() != merged.n_qubits)
      fail(ErrorKind::validation, "store and circuit disagree on qubits");
    got = state_from_store(store);
    tolerance = store.precision() == StorePrecision::f64 ? 1e-10 : 1e-4;
    std::printf("comparing stored amplitudes under %s\n", root.c_str());
  } else {
    ExecutionResult res = execute_plan(plan, merged, {});
    got = std::move(res.state);
    tolerance = 1e-10;
    std::printf("comparing an in-memory run (plan leaves nothing on disk)\n");
  }

  double diff = max_amp_diff(got, ref);
  std::printf("max_abs_diff %.3e (tolerance %.0e), norm %.12f\n", diff,
              tolerance, state_norm(got));
  if (diff > tolerance)
    fail(ErrorKind::verification, "amplitudes diverge from the dense oracle");
  std::printf("verified: amplitudes match the dense oracle\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sliced out-of-core quantum circuit simulator"};
  app.require_subcommand(1);

  std::string layout_path, plan_path, sweep_path, profile_path;
  std::string circuit_path, out_path, root_flag;
  int cycles = 20;
  std::uint64_t seed = 1;
  bool csv = false, f64 = false;

  CLI::App* gen = app.add_subcommand(
      "gen-circuit", "generate a random ABCDCDAB-pattern circuit");
  gen->add_option("--layout", layout_path, "layout file")->required();
  gen->add_option("--cycles", cycles, "number of coupler cycles")
      ->check(CLI::Range(1, 1 << 20));
  gen->add_option("--seed", seed, "random seed");
  gen->add_option("--out", out_path, "circuit file to write")->required();

  CLI::App* est = app.add_subcommand(
      "estimate", "cost a plan, phase summary, or depth sweep");
  est->add_option("--plan", plan_path, "plan or phase-summary file");
  est->add_option("--sweep", sweep_path, "depth-sweep file");
  est->add_option("--profile", profile_path,
                  "machine profile (default: built-in Summit rates)");
  est->add_flag("--csv", csv, "emit CSV instead of an aligned table");
  est->add_option("--out", out_path, "write the table here, not stdout");

  CLI::App* sim = app.add_subcommand(
      "simulate", "execute a plan against a circuit");
  sim->add_option("--circuit", circuit_path, "circuit file")->required();
  sim->add_option("--plan", plan_path, "plan file")->required();
  sim->add_option("--storage-root", root_flag,
                  "slice store directory (default: $SLICESIM_STORAGE_ROOT)");
  sim->add_flag("--f64", f64, "store amplitudes in double precision");

  CLI::App* ver = app.add_subcommand(
      "verify", "compare a run against the dense oracle");
  ver->add_option("--circuit", circuit_path, "circuit file")->required();
  ver->add_option("--plan", plan_path, "plan file")->required();
  ver->add_option("--storage-root", root_flag,
                  "slice store directory (default: $SLICESIM_STORAGE_ROOT)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (gen->parsed())
      return run_gen_circuit(layout_path, cycles, seed, out_path);
    if (est->parsed()) {
      if (plan_path.empty() == sweep_path.empty())
        fail(ErrorKind::config, "estimate needs exactly one of --plan/--sweep");
      return run_estimate(plan_path, sweep_path, profile_path, csv, out_path);
    }
    if (sim->parsed())
      return run_simulate(circuit_path, plan_path, root_flag, f64);
    if (ver->parsed())
      return run_verify(circuit_path, plan_path, root_flag);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return code_for(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
