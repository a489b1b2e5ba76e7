// Every shipped data file must regenerate byte for byte from the library.
// Set SLICESIM_WRITE_DATA=1 to install fresh copies instead of comparing.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <vector>

#include "slicesim/circuit.hpp"
#include "slicesim/costmodel.hpp"
#include "slicesim/layout.hpp"
#include "slicesim/plan.hpp"
#include "slicesim/slicestore.hpp"

using namespace slicesim;
namespace fs = std::filesystem;

namespace {

fs::path data_dir() { return fs::path(SLICESIM_DATA_DIR); }

bool write_mode() { return std::getenv("SLICESIM_WRITE_DATA") != nullptr; }

std::vector<std::uint8_t> slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

// Regenerates rel into a scratch file; install or byte-compare.
void expect_file(const std::string& rel,
                 const std::function<void(const std::string&)>& make) {
  INFO("data file " << rel);
  fs::path fresh = fs::temp_directory_path() /
                   ("slicesim_regen_" + std::to_string(::getpid()) + ".tmp");
  make(fresh.string());
  fs::path shipped = data_dir() / rel;
  if (write_mode()) {
    fs::create_directories(shipped.parent_path());
    fs::copy_file(fresh, shipped, fs::copy_options::overwrite_existing);
    MESSAGE("wrote " << shipped.string());
  } else {
    REQUIRE(fs::exists(shipped));
    CHECK(slurp(shipped) == slurp(fresh));
  }
  fs::remove(fresh);
}

QubitLayout grid53() { return make_grid_layout(6, 9, 1, {{18, 27}, {19, 28}}); }
QubitLayout grid54() { return make_grid_layout(6, 9, 0, {{18, 27}}); }

Plan demo_plan() {
  Circuit merged =
      merge_single_qubit_gates(generate_sycamore(make_grid_layout(3, 4), 8, 7));
  PartitionSpec spec;
  spec.phi_qubits = {0, 1, 2, 3};
  spec.disk_first = {0, 4};
  spec.disk_second = {3, 7};
  spec.exchange_every = 3;
  spec.final_write = true;
  return expand_partition(merged, spec);
}

const std::vector<amp> kGoldenAmps = {
    amp(1.0, 0.0), amp(-0.5, 0.25), amp(0.75, -1.0), amp(0.0625, -0.125)};

// Little-endian single-precision (re, im) pairs for the four amplitudes.
const std::uint8_t kGoldenBytes[32] = {
    0x00, 0x00, 0x80, 0x3F, 0x00, 0x00, 0x00, 0x00,  // 1.0, 0.0
    0x00, 0x00, 0x00, 0xBF, 0x00, 0x00, 0x80, 0x3E,  // -0.5, 0.25
    0x00, 0x00, 0x40, 0x3F, 0x00, 0x00, 0x80, 0xBF,  // 0.75, -1.0
    0x00, 0x00, 0x80, 0x3D, 0x00, 0x00, 0x00, 0xBE,  // 0.0625, -0.125
};

}  // namespace

TEST_CASE("shipped layouts regenerate byte for byte") {
  expect_file("layouts/grid6x9m1.layout",
              [](const std::string& p) { save_layout(grid53(), p); });
  expect_file("layouts/grid6x9.layout",
              [](const std::string& p) { save_layout(grid54(), p); });
  expect_file("layouts/grid3x4.layout", [](const std::string& p) {
    save_layout(make_grid_layout(3, 4), p);
  });
  expect_file("layouts/grid4x4.layout", [](const std::string& p) {
    save_layout(make_grid_layout(4, 4), p);
  });
  expect_file("layouts/grid4x5.layout", [](const std::string& p) {
    save_layout(make_grid_layout(4, 5), p);
  });
}

TEST_CASE("shipped plans regenerate byte for byte") {
  expect_file("plans/run53.plan", [](const std::string& p) {
    save_plan(shape_run_plan(grid53(), run_shape_53()), p);
  });
  expect_file("plans/run54.plan", [](const std::string& p) {
    save_plan(shape_run_plan(grid54(), run_shape_54()), p);
  });
  expect_file("plans/demo12.plan",
              [](const std::string& p) { save_plan(demo_plan(), p); });
}

TEST_CASE("shipped profile and phase tables regenerate byte for byte") {
  expect_file("profiles/summit.profile", [](const std::string& p) {
    save_profile(MachineProfile{}, p);
  });
  expect_file("phases/run53.phases", [](const std::string& p) {
    save_phase_table(summarize(shape_run_plan(grid53(), run_shape_53())), p);
  });
  expect_file("phases/run54.phases", [](const std::string& p) {
    save_phase_table(summarize(shape_run_plan(grid54(), run_shape_54())), p);
  });
}

TEST_CASE("shipped sweeps regenerate byte for byte") {
  expect_file("sweeps/depth53.sweep", [](const std::string& p) {
    SweepTable t;
    t.n_qubits = 53;
    t.disk_slice_bits = 8;
    t.contraction_flops_log2 = 70;
    t.rows = {{10, 1, 3.002, 65},   {14, 3, 6.002, 89},
              {20, 5, 9.002, 120},  {24, 7, 13.002, 141},
              {28, 9, 16.002, 162}, {32, 11, 20.002, 182},
              {36, 13, 24.002, 206}};
    save_sweep_table(t, p);
  });
  expect_file("sweeps/depth54.sweep", [](const std::string& p) {
    SweepTable t;
    t.n_qubits = 54;
    t.disk_slice_bits = 9;
    t.contraction_flops_log2 = 73;
    t.rows = {{10, 1, 3.004, 66},   {14, 3, 6.004, 90},
              {20, 5, 9.004, 122},  {24, 7, 13.004, 144},
              {28, 9, 16.004, 166}, {32, 11, 20.004, 187},
              {36, 13, 24.004, 211}};
    save_sweep_table(t, p);
  });
}

TEST_CASE("golden slice file carries the on-disk amplitude format") {
  expect_file("golden/slice2q.slc", [](const std::string& p) {
    std::vector<std::uint8_t> bytes =
        encode_amplitudes(kGoldenAmps, StorePrecision::f32);
    std::ofstream out(p, std::ios::binary);
    REQUIRE(out);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
  });
  if (write_mode()) return;

  // The shipped bytes are the contract: fixed little-endian pairs, and
  // exactly what a store write cycle puts in a slice file.
  std::vector<std::uint8_t> shipped = slurp(data_dir() / "golden/slice2q.slc");
  REQUIRE(shipped.size() == 32);
  for (int i = 0; i < 32; ++i) {
    INFO("byte " << i);
    CHECK(shipped[i] == kGoldenBytes[i]);
  }

  fs::path root = fs::temp_directory_path() /
                  ("slicesim_golden_" + std::to_string(::getpid()));
  fs::remove_all(root);
  SliceStore store =
      SliceStore::create(root.string(), 2, {{}, {0, 1}}, StorePrecision::f32);
  store.begin_write_cycle();
  store.write_slice(0, kGoldenAmps);
  store.end_write_cycle();
  CHECK(slurp(root / "0.slc") == shipped);
  fs::remove_all(root);
}
