#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>

#include "slicesim/circuit.hpp"
#include "slicesim/costmodel.hpp"
#include "slicesim/errors.hpp"
#include "slicesim/layout.hpp"
#include "slicesim/plan.hpp"

using namespace slicesim;

namespace {

template <typename F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected a failure");
  return ErrorKind::config;
}

struct RowExp {
  const char* label;
  PhaseKind kind;
  int kernels;
  bool slow;
  int gates;
  int rank;
  double a2a;
  int transfers;
  int cflog2;
  int unagg;
};

void check_rows(const PhaseTable& table, const std::vector<RowExp>& exp) {
  REQUIRE(table.phases.size() == exp.size());
  for (size_t i = 0; i < exp.size(); ++i) {
    INFO("row " << i << " (" << exp[i].label << ")");
    const PhaseSummary& r = table.phases[i];
    CHECK(r.label == exp[i].label);
    CHECK(r.kind == exp[i].kind);
    CHECK(r.kernels == exp[i].kernels);
    CHECK(r.slow_class == exp[i].slow);
    CHECK(r.num_gates == exp[i].gates);
    CHECK(r.rank_per_socket == exp[i].rank);
    CHECK(r.all2alls == exp[i].a2a);
    CHECK(r.disk_transfers == exp[i].transfers);
    CHECK(r.contraction_flops_log2 == exp[i].cflog2);
    CHECK(r.unagg_amp_bits == exp[i].unagg);
  }
}

constexpr double kA2aNarrow53 = 1.0 / 1024.0;  // 2^-10
constexpr double kA2aNarrow54 = 1.0 / 512.0;   // 2^-9

const char* kTinyPlan =
    "# two halves, two deferred couplers, merge, one disk hop\n"
    "define  -       4\n"
    "define  -       0 3\n"
    "new     tensor  2 0 0 1\n"
    "new     cache   2 0 1\n"
    "gate    2Q      0 1\n"
    "entgl   EI      1 -1 -2\n"
    "new     tensor  2 0 2 3\n"
    "new     cache   2 2 3\n"
    "gate    2Q      2 3\n"
    "entgl   E2Q     2 1 -1 -2\n"
    "entgl   tensor  2 2 0 1 -1 -2\n"
    "entgl   tensor  2 2 2 3 -1 -2\n"
    "all2all -       0\n"
    "all2all -       3\n"
    "slice   -       0 3\n"
    "new     tensor  3 1 1 2 3 0\n"
    "slice   -\n"
    "new     cache   2 1 2\n"
    "gate    2Q      1 2\n"
    "all2all -       3\n"
    "new     cache   2 1 2\n"
    "gate    2Q      1 2\n"
    "write   -       0\n"
    "read    -       3\n"
    "new     cache   2 0 1\n"
    "gate    2Q      0 1\n"
    "write   -       3\n";

}  // namespace

TEST_CASE("plan text round trip is byte stable") {
  Plan plan = parse_plan_text(kTinyPlan);
  REQUIRE(plan.lines.size() == 27);
  std::string text = plan_text(plan);
  Plan again = parse_plan_text(text);
  REQUIRE(again.lines.size() == plan.lines.size());
  for (size_t i = 0; i < plan.lines.size(); ++i) {
    CHECK(again.lines[i].kind == plan.lines[i].kind);
    CHECK(again.lines[i].args == plan.lines[i].args);
  }
  CHECK(plan_text(again) == text);

  auto dir = std::filesystem::temp_directory_path() / "slicesim_plan_rt";
  std::filesystem::create_directories(dir);
  auto path = (dir / "tiny.plan").string();
  save_plan(plan, path);
  Plan loaded = load_plan(path);
  CHECK(plan_text(loaded) == text);
  std::filesystem::remove_all(dir);
}

TEST_CASE("plan parser enforces the line grammar") {
  auto bad = [](const char* text) {
    return kind_of([&] { parse_plan_text(text); });
  };
  CHECK(bad("bogus   x       1\n") == ErrorKind::validation);
  CHECK(bad("define\n") == ErrorKind::validation);
  CHECK(bad("define  -       x\n") == ErrorKind::validation);
  CHECK(bad("new     cache   6 0 1 2 3 4 5\n") == ErrorKind::validation);
  CHECK(bad("new     tensor  2 0 0\n") == ErrorKind::validation);
  CHECK(bad("gate    2Q      0\n") == ErrorKind::validation);
  CHECK(bad("entgl   EI      0 1 -2\n") == ErrorKind::validation);
  CHECK(bad("entgl   E2Q     0 1 -1 -1\n") == ErrorKind::validation);
  CHECK(bad("all2all -\n") == ErrorKind::validation);
  CHECK(bad("write   -\n") == ErrorKind::validation);
  CHECK(bad("") == ErrorKind::validation);
  CHECK(parse_plan_text("define - 4 # trailing comment\n").lines.size() == 1);
}

TEST_CASE("summarize validates plan structure") {
  auto bad = [](const std::string& text) {
    return kind_of([&] { summarize(parse_plan_text(text)); });
  };
  // gates only run inside kernels, on live local qubits
  CHECK(bad("define - 4\nnew tensor 2 0 0 1\ngate 2Q 0 1\n") ==
        ErrorKind::validation);
  CHECK(bad("define - 4\nnew tensor 2 0 0 1\nnew cache 2 0 1\ngate 2Q 0 2\n") ==
        ErrorKind::validation);
  CHECK(bad("define - 4\nnew tensor 2 0 0 1\nnew cache 2 0 2\n") ==
        ErrorKind::validation);
  // socket bits are not local
  CHECK(bad("define - 4\nnew tensor 2 0 0 1\nall2all - 1\nnew cache 2 0 1\n") ==
        ErrorKind::validation);
  // an exchange must move the socket somewhere new
  CHECK(bad("define - 4\nnew tensor 2 0 0 1\nall2all - 1\nall2all - 1\n") ==
        ErrorKind::validation);
  // an exchange stays inside one tensor
  CHECK(bad("define - 4\nnew tensor 2 0 0 1\nnew tensor 2 0 2 3\n"
            "all2all - 1 2\n") == ErrorKind::validation);
  // deferral labels pair up across exactly two tensors
  CHECK(bad("define - 4\nnew tensor 2 0 0 1\nentgl E2Q 0 1 -1 -2\n") ==
        ErrorKind::validation);
  CHECK(bad("define - 4\nnew tensor 2 0 0 1\nentgl EI 0 -1 -2\n"
            "entgl E2Q 1 0 -1 -2\n") == ErrorKind::validation);
  CHECK(bad("define - 4\nnew tensor 2 0 0 1\nentgl EI 0 -1 -2\n"
            "entgl EI 1 -1 -2\n") == ErrorKind::validation);
  // unresolved deferrals fail at the merge and at the end of the plan
  CHECK(bad("define - 4\nnew tensor 2 0 0 1\nentgl EI 0 -1 -2\n") ==
        ErrorKind::validation);
  // tensor assertions must match a live tensor exactly
  CHECK(bad("define - 4\nnew tensor 2 0 0 1\nentgl tensor 2 1 0 1 -1\n") ==
        ErrorKind::validation);
  // fresh tensors carry no globals; merges fold exactly two tensors
  CHECK(bad("define - 4\nnew tensor 1 1 0 1\n") == ErrorKind::validation);
  CHECK(bad("define - 6\nnew tensor 2 0 0 1\nnew tensor 2 0 2 3\n"
            "new tensor 2 0 4 5\nnew tensor 6 0 0 1 2 3 4 5\n") ==
        ErrorKind::validation);
  // disk passes live on the merged state, writes before reads
  CHECK(bad("define - 4\ndefine - 0\nnew tensor 4 0 0 1 2 3\nwrite - 0\n") ==
        ErrorKind::validation);
  CHECK(bad("define - 4\ndefine - 0 1\nnew tensor 2 0 0 1\n"
            "new tensor 2 0 2 3\nnew tensor 4 0 0 1 2 3\nread - 0\n") ==
        ErrorKind::validation);
  // the write set matches the fixed bits declared at the merge
  CHECK(bad("define - 4\ndefine - 0 1\nnew tensor 2 0 0 1\n"
            "new tensor 2 0 2 3\nnew tensor 3 1 1 2 3 0\nwrite - 1\n") ==
        ErrorKind::validation);
  // after a write, only a read (or the end of the plan) is legal
  CHECK(bad("define - 4\ndefine - 0 1\nnew tensor 2 0 0 1\n"
            "new tensor 2 0 2 3\nnew tensor 3 1 1 2 3 0\nwrite - 0\n"
            "new cache 2 1 2\ngate 2Q 1 2\n") == ErrorKind::validation);
  // a free re-bucket cannot interrupt a row in flight
  CHECK(bad("define - 4\nnew tensor 2 0 0 1\nnew tensor 2 0 2 3\n"
            "new tensor 4 0 0 1 2 3\nnew cache 2 1 2\ngate 2Q 1 2\n"
            "slice - 0\n") == ErrorKind::validation);
  // define lines lead the plan
  CHECK(bad("new tensor 2 0 0 1\ndefine - 4\n") == ErrorKind::validation);
  CHECK(bad("define - 4\ndefine - 0 0\n") == ErrorKind::validation);
}

TEST_CASE("summarize accounts a small disk plan") {
  PhaseTable table = summarize(parse_plan_text(kTinyPlan));
  CHECK(table.n_qubits == 4);
  CHECK(table.disk_slice_bits == 1);
  // pre-merge exchange weight: widest tensor holds 2 qubits + 2 labels of
  // 4 qubits -> min(1, 2^(4+2-4)) caps at 1. Ranks: pre-merge 2 qubits +
  // 2 labels - 2 socket bits = 2; post-merge 4 qubits - 1 disk - 2 socket
  // = 1; everything sits far below the wide-class threshold.
  std::vector<RowExp> exp = {
      {"1", PhaseKind::gates, 1, false, 1, 2, 1.0, 0, -1, 3},
      {"2", PhaseKind::gates, 1, false, 1, 2, 1.0, 0, -1, 3},
      {"contraction", PhaseKind::contraction, 0, false, 0, 5, 0.0, 0, 9, 0},
      {"3.3", PhaseKind::gates, 1, false, 1, 1, 0.0, 0, -1, 3},
      {"3.4", PhaseKind::gates, 1, false, 1, 1, 1.0, 0, -1, 3},
      {"w1", PhaseKind::disk_write, 0, false, 0, 0, 1.0, 1, -1, 0},
      {"r1", PhaseKind::disk_read, 0, false, 0, 0, 1.0, 1, -1, 0},
      {"4.4", PhaseKind::gates, 1, false, 1, 1, 0.0, 0, -1, 3},
      {"w2", PhaseKind::disk_write, 0, false, 0, 0, 1.0, 1, -1, 0},
  };
  check_rows(table, exp);
}

TEST_CASE("summarize emits rows for unmerged plans") {
  PhaseTable table = summarize(parse_plan_text(
      "define - 4\n"
      "new tensor 2 0 0 1\n"
      "new tensor 2 0 2 3\n"
      "new cache 2 2 3\ngate 2Q 2 3\n"
      "new cache 2 0 1\ngate 2Q 0 1\ngate 2Q 0 1\n"));
  REQUIRE(table.phases.size() == 2);
  CHECK(table.phases[0].label == "1");
  CHECK(table.phases[0].kernels == 1);
  CHECK(table.phases[0].num_gates == 2);
  CHECK(table.phases[1].label == "2");
  CHECK(table.phases[1].num_gates == 1);
  CHECK(table.disk_slice_bits == 0);
}

TEST_CASE("53-qubit production plan reproduces the published run") {
  QubitLayout layout = make_grid_layout(6, 9, 1, {{18, 27}, {19, 28}});
  Plan plan = shape_run_plan(layout, run_shape_53());
  PhaseTable table = summarize(plan);
  CHECK(table.n_qubits == 53);
  CHECK(table.disk_slice_bits == 8);

  std::vector<RowExp> exp = {
      {"1", PhaseKind::gates, 28, false, 84, 28, kA2aNarrow53, 0, -1, 33},
      {"2", PhaseKind::gates, 25, false, 84, 27, kA2aNarrow53, 0, -1, 32},
      {"contraction", PhaseKind::contraction, 0, false, 0, 31, 0.0, 0, 70, 0},
      {"3.3", PhaseKind::gates, 16, true, 63, 32, 0.0, 0, -1, 45},
      {"3.4", PhaseKind::gates, 6, true, 23, 32, 1.0, 0, -1, 45},
      {"3.5", PhaseKind::gates, 8, true, 26, 32, 1.0, 0, -1, 45},
      {"w1", PhaseKind::disk_write, 0, false, 0, 0, 1.0, 1, -1, 0},
      {"r1", PhaseKind::disk_read, 0, false, 0, 0, 1.0, 1, -1, 0},
      {"4.4", PhaseKind::gates, 11, true, 49, 32, 0.0, 0, -1, 45},
      {"4.5", PhaseKind::gates, 10, true, 45, 32, 1.0, 0, -1, 45},
      {"w2", PhaseKind::disk_write, 0, false, 0, 0, 1.0, 1, -1, 0},
      {"r2", PhaseKind::disk_read, 0, false, 0, 0, 1.0, 1, -1, 0},
      {"5.5", PhaseKind::gates, 9, true, 35, 32, 0.0, 0, -1, 45},
      {"5.6", PhaseKind::gates, 7, true, 21, 32, 1.0, 0, -1, 45},
      {"w3", PhaseKind::disk_write, 0, false, 0, 0, 1.0, 1, -1, 0},
  };
  check_rows(table, exp);

  double a2a_sum = 0.0;
  int kernels = 0, transfers = 0, gates = 0;
  for (const auto& r : table.phases) {
    a2a_sum += r.all2alls;
    kernels += r.kernels;
    transfers += r.disk_transfers;
    gates += r.num_gates;
  }
  CHECK(a2a_sum == 9.0 + 2.0 * kA2aNarrow53);
  CHECK(kernels == 120);
  CHECK(transfers == 5);
  CHECK(gates == 430);

  MachineProfile profile;
  CostReport rep =
      estimate_cost(table.phases, table.n_qubits, table.disk_slice_bits,
                    profile);
  CHECK(std::abs(rep.compute_days - 0.165631) < 2e-5);
  CHECK(std::abs(rep.all2all_days - 0.487725) < 1e-5);
  CHECK(std::abs(rep.disk_days - 1.896296) < 1e-6);
  CHECK(std::abs(rep.total_days - 2.549652) < 5e-4);
  CHECK(std::abs(rep.total_rank - 32.67243) < 5e-4);
  CHECK(std::abs(rep.compute_achieved_pflops - 87.4462) < 0.02);
  CHECK(rep.disk_footprint_bytes == std::exp2(56));
}

TEST_CASE("54-qubit production plan reproduces the published run") {
  QubitLayout layout = make_grid_layout(6, 9, 0, {{18, 27}});
  Plan plan = shape_run_plan(layout, run_shape_54());
  PhaseTable table = summarize(plan);
  CHECK(table.n_qubits == 54);
  CHECK(table.disk_slice_bits == 9);

  std::vector<RowExp> exp = {
      {"1", PhaseKind::gates, 28, false, 84, 30, kA2aNarrow54, 0, -1, 34},
      {"2", PhaseKind::gates, 26, false, 87, 30, kA2aNarrow54, 0, -1, 34},
      {"contraction", PhaseKind::contraction, 0, false, 0, 33, 0.0, 0, 73, 0},
      {"3.3", PhaseKind::gates, 15, true, 59, 32, 0.0, 0, -1, 45},
      {"3.4", PhaseKind::gates, 8, true, 31, 32, 1.0, 0, -1, 45},
      {"3.5", PhaseKind::gates, 8, true, 27, 32, 1.0, 0, -1, 45},
      {"w1", PhaseKind::disk_write, 0, false, 0, 0, 1.0, 1, -1, 0},
      {"r1", PhaseKind::disk_read, 0, false, 0, 0, 1.0, 1, -1, 0},
      {"4.4", PhaseKind::gates, 11, true, 49, 32, 0.0, 0, -1, 45},
      {"4.5", PhaseKind::gates, 10, true, 45, 32, 1.0, 0, -1, 45},
      {"w2", PhaseKind::disk_write, 0, false, 0, 0, 1.0, 1, -1, 0},
      {"r2", PhaseKind::disk_read, 0, false, 0, 0, 1.0, 1, -1, 0},
      {"5.5", PhaseKind::gates, 9, true, 37, 32, 0.0, 0, -1, 45},
      {"5.6", PhaseKind::gates, 7, true, 21, 32, 1.0, 0, -1, 45},
      {"w3", PhaseKind::disk_write, 0, false, 0, 0, 1.0, 1, -1, 0},
  };
  check_rows(table, exp);

  double a2a_sum = 0.0;
  int kernels = 0, transfers = 0, gates = 0;
  for (const auto& r : table.phases) {
    a2a_sum += r.all2alls;
    kernels += r.kernels;
    transfers += r.disk_transfers;
    gates += r.num_gates;
  }
  CHECK(a2a_sum == 9.0 + 2.0 * kA2aNarrow54);
  CHECK(kernels == 122);
  CHECK(transfers == 5);
  CHECK(gates == 440);

  MachineProfile profile;
  CostReport rep =
      estimate_cost(table.phases, table.n_qubits, table.disk_slice_bits,
                    profile);
  CHECK(std::abs(rep.compute_days - 1.035091) < 2e-5);
  CHECK(std::abs(rep.all2all_days - 0.975661) < 1e-5);
  CHECK(std::abs(rep.disk_days - 3.792593) < 1e-6);
  CHECK(std::abs(rep.total_days - 5.803345) < 5e-4);
  CHECK(std::abs(rep.total_rank - 33.80735) < 5e-4);
  CHECK(std::abs(rep.compute_achieved_pflops - 107.2342) < 0.02);
  CHECK(rep.disk_footprint_bytes == std::exp2(57));
}

TEST_CASE("production plans round trip through text") {
  QubitLayout layout = make_grid_layout(6, 9, 1, {{18, 27}, {19, 28}});
  Plan plan = shape_run_plan(layout, run_shape_53());
  std::string text = plan_text(plan);
  Plan again = parse_plan_text(text);
  CHECK(plan_text(again) == text);
  PhaseTable t1 = summarize(plan);
  PhaseTable t2 = summarize(again);
  REQUIRE(t1.phases.size() == t2.phases.size());
  for (size_t i = 0; i < t1.phases.size(); ++i) {
    CHECK(t1.phases[i].label == t2.phases[i].label);
    CHECK(t1.phases[i].kernels == t2.phases[i].kernels);
    CHECK(t1.phases[i].all2alls == t2.phases[i].all2alls);
  }
}

TEST_CASE("expand partition structure") {
  QubitLayout layout = make_grid_layout(3, 4);
  Circuit merged = merge_single_qubit_gates(generate_sycamore(layout, 8, 7));

  PartitionSpec spec;
  spec.phi_qubits = {0, 1, 2, 3};

  SUBCASE("no store: one merge, every gate scheduled") {
    Plan plan = expand_partition(merged, spec);
    PhaseTable table = summarize(plan);  // validates the whole script
    int gates = 0, defers = 0;
    for (const auto& r : table.phases) gates += r.num_gates;
    for (const auto& line : plan.lines)
      defers += line.kind == PlanKind::entgl_ei;
    CHECK(gates + defers == two_qubit_gate_count(merged));
    CHECK(defers == 4);  // four couplers cross the split in the prefix
    CHECK(table.disk_slice_bits == 0);
  }

  SUBCASE("with a store: passes alternate the fixed bits") {
    PartitionSpec dspec = spec;
    dspec.disk_first = {0, 4};
    dspec.disk_second = {3, 7};
    dspec.exchange_every = 3;
    dspec.final_write = true;
    Plan plan = expand_partition(merged, dspec);
    PhaseTable table = summarize(plan);
    int writes = 0, reads = 0, gates = 0;
    for (const auto& r : table.phases) {
      writes += r.kind == PhaseKind::disk_write;
      reads += r.kind == PhaseKind::disk_read;
      gates += r.num_gates;
    }
    CHECK(writes == reads + 1);  // final write closes the run
    CHECK(writes >= 2);
    CHECK(gates + 4 == two_qubit_gate_count(merged));
    CHECK(table.disk_slice_bits == 2);
  }

  SUBCASE("deadlocked fixed bits are rejected") {
    PartitionSpec dspec = spec;
    dspec.disk_first = {1, 4};   // couplers 1-2 and 2-6 straddle the two
    dspec.disk_second = {2, 6};  // sets, so neither pass can run them
    CHECK(kind_of([&] { expand_partition(merged, dspec); }) ==
          ErrorKind::validation);
  }

  SUBCASE("split must be proper") {
    PartitionSpec bad = spec;
    bad.phi_qubits = {};
    CHECK(kind_of([&] { expand_partition(merged, bad); }) ==
          ErrorKind::validation);
    bad.phi_qubits = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
    CHECK(kind_of([&] { expand_partition(merged, bad); }) ==
          ErrorKind::validation);
  }
}

TEST_CASE("run shapes reject structural mismatches") {
  QubitLayout layout = make_grid_layout(6, 9, 1, {{18, 27}, {19, 28}});
  RunShape shape = run_shape_53();

  SUBCASE("deferred pairs must be couplings crossing the split") {
    shape.deferred[0] = {0, 52};
    CHECK(kind_of([&] { shape_run_plan(layout, shape); }) ==
          ErrorKind::validation);
  }
  SUBCASE("rows need at least one gate per kernel") {
    shape.t1.gates = 10;
    CHECK(kind_of([&] { shape_run_plan(layout, shape); }) ==
          ErrorKind::validation);
  }
  SUBCASE("passes are required") {
    shape.passes.clear();
    CHECK(kind_of([&] { shape_run_plan(layout, shape); }) ==
          ErrorKind::validation);
  }
}
