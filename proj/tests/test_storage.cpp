#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdint>
#include <filesystem>
#include <fstream>

#include "slicesim/errors.hpp"
#include "slicesim/slicestore.hpp"

using namespace slicesim;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("slicesim_store_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int counter;
};

int TempDir::counter = 0;

std::vector<amp> ramp(std::uint64_t count, double offset) {
  std::vector<amp> v(count);
  for (std::uint64_t i = 0; i < count; ++i)
    v[i] = amp(offset + double(i), -0.5 * double(i));
  return v;
}

}  // namespace

TEST_CASE("scheme validation") {
  validate_scheme({{2, 0}, {1, 3}}, 4);
  CHECK_THROWS_AS(validate_scheme({{0}, {1}}, 3), Error);        // missing 2
  CHECK_THROWS_AS(validate_scheme({{0, 1}, {1, 2}}, 3), Error);  // overlap
  CHECK_THROWS_AS(validate_scheme({{0, 4}, {1, 2, 3}}, 4), Error);
  std::vector<int> many(25);
  std::vector<int> rest;
  for (int i = 0; i < 25; ++i) many[i] = i;
  for (int i = 25; i < 30; ++i) rest.push_back(i);
  CHECK_THROWS_AS(validate_scheme({many, rest}, 30), Error);  // >24 index bits
}

TEST_CASE("amplitude byte codec is exact and little endian") {
  std::vector<amp> v = {amp(1.0, 0.0), amp(-0.5, 0.25), amp(0.75, -1.0)};
  std::vector<std::uint8_t> f32 = encode_amplitudes(v, StorePrecision::f32);
  REQUIRE(f32.size() == 24);
  // 1.0f -> 00 00 80 3F, then 0.0f.
  CHECK(f32[0] == 0x00);
  CHECK(f32[1] == 0x00);
  CHECK(f32[2] == 0x80);
  CHECK(f32[3] == 0x3F);
  CHECK(f32[4] == 0x00);
  CHECK(f32[7] == 0x00);
  // -0.5f -> 00 00 00 BF ; 0.25f -> 00 00 80 3E
  CHECK(f32[8] == 0x00);
  CHECK(f32[11] == 0xBF);
  CHECK(f32[14] == 0x80);
  CHECK(f32[15] == 0x3E);
  // 0.75f -> 00 00 40 3F ; -1.0f -> 00 00 80 BF
  CHECK(f32[18] == 0x40);
  CHECK(f32[19] == 0x3F);
  CHECK(f32[22] == 0x80);
  CHECK(f32[23] == 0xBF);
  std::vector<amp> back = decode_amplitudes(f32, StorePrecision::f32);
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(back[i] == v[i]);  // all dyadic

  std::vector<amp> fine = {amp(1.0 / 3.0, 1e-300)};
  std::vector<std::uint8_t> f64 = encode_amplitudes(fine, StorePrecision::f64);
  REQUIRE(f64.size() == 16);
  CHECK(decode_amplitudes(f64, StorePrecision::f64)[0] == fine[0]);
  // The single-precision hop rounds; the double hop must not.
  std::vector<amp> lossy =
      decode_amplitudes(encode_amplitudes(fine, StorePrecision::f32),
                        StorePrecision::f32);
  CHECK(lossy[0] != fine[0]);
  CHECK(std::abs(lossy[0] - fine[0]) < 1e-7);
}

TEST_CASE("store round trip and manifest reopen") {
  TempDir dir;
  FileIndexScheme scheme{{3, 1}, {0, 2}};
  SliceStore store =
      SliceStore::create(dir.path.string(), 4, scheme, StorePrecision::f64);
  CHECK(store.scheme().file_count() == 4);
  CHECK(store.scheme().amps_per_file() == 4);
  CHECK(store.bytes_per_amp() == 16);

  store.begin_write_cycle();
  for (std::uint64_t id = 0; id < 4; ++id)
    store.write_slice(id, ramp(4, 100.0 * double(id)));
  store.end_write_cycle();
  CHECK(store.write_cycles() == 1);

  SliceStore again = SliceStore::open(dir.path.string());
  CHECK(again.n_qubits() == 4);
  CHECK(again.precision() == StorePrecision::f64);
  CHECK(again.scheme().index_qubits == scheme.index_qubits);
  CHECK(again.scheme().local_qubits == scheme.local_qubits);
  CHECK(again.write_cycles() == 1);
  again.begin_read_cycle();
  for (std::uint64_t id : {2ULL, 0ULL, 3ULL, 1ULL}) {
    std::vector<amp> v = again.read_slice(id);
    REQUIRE(v.size() == 4);
    for (std::uint64_t i = 0; i < 4; ++i)
      CHECK(v[i] == amp(100.0 * double(id) + double(i), -0.5 * double(i)));
  }
  again.end_read_cycle();
  CHECK(again.read_cycles() == 1);
}

TEST_CASE("full cycle discipline is enforced") {
  TempDir dir;
  SliceStore store = SliceStore::create(dir.path.string(), 3, {{2}, {0, 1}});
  CHECK_THROWS_AS(store.write_slice(0, ramp(4, 0)), Error);  // no cycle open
  CHECK_THROWS_AS(store.read_slice(0), Error);
  store.begin_write_cycle();
  CHECK_THROWS_AS(store.begin_read_cycle(), Error);
  store.write_slice(0, ramp(4, 0));
  CHECK_THROWS_AS(store.write_slice(0, ramp(4, 0)), Error);  // double touch
  CHECK_THROWS_AS(store.end_write_cycle(), Error);           // file 1 missing
  store.write_slice(1, ramp(4, 4));
  store.end_write_cycle();
  CHECK(store.write_cycles() == 1);
  store.begin_read_cycle();
  CHECK_THROWS_AS(store.begin_write_cycle(), Error);
  store.read_slice(1);
  CHECK_THROWS_AS(store.read_slice(1), Error);
  CHECK_THROWS_AS(store.end_read_cycle(), Error);
  store.read_slice(0);
  store.end_read_cycle();
  CHECK(store.read_cycles() == 1);
  store.begin_write_cycle();
  CHECK_THROWS_AS(store.write_slice(2, ramp(4, 0)), Error);  // id range
  CHECK_THROWS_AS(store.write_slice(0, ramp(3, 0)), Error);  // wrong count
}

TEST_CASE("slice files are bytewise stable") {
  TempDir a, b;
  auto fill = [](SliceStore& s) {
    s.begin_write_cycle();
    for (std::uint64_t id = 0; id < 2; ++id) s.write_slice(id, ramp(8, 7.0));
    s.end_write_cycle();
  };
  SliceStore s1 = SliceStore::create(a.path.string(), 4, {{3}, {0, 1, 2}});
  SliceStore s2 = SliceStore::create(b.path.string(), 4, {{3}, {0, 1, 2}});
  fill(s1);
  fill(s2);
  for (std::uint64_t id = 0; id < 2; ++id) {
    std::ifstream f1(s1.slice_path(id), std::ios::binary);
    std::ifstream f2(s2.slice_path(id), std::ios::binary);
    std::vector<char> b1((std::istreambuf_iterator<char>(f1)), {});
    std::vector<char> b2((std::istreambuf_iterator<char>(f2)), {});
    CHECK(b1.size() == 8 * 8);
    CHECK(b1 == b2);
  }
}

TEST_CASE("corrupt and missing slices surface as io errors") {
  TempDir dir;
  SliceStore store = SliceStore::create(dir.path.string(), 3, {{0}, {1, 2}});
  store.begin_write_cycle();
  store.write_slice(0, ramp(4, 0));
  store.write_slice(1, ramp(4, 4));
  store.end_write_cycle();
  // Truncate one file.
  fs::resize_file(store.slice_path(1), 8);
  store.begin_read_cycle();
  store.read_slice(0);
  bool threw = false;
  try {
    store.read_slice(1);
  } catch (const Error& e) {
    threw = true;
    CHECK(e.kind() == ErrorKind::io);
  }
  CHECK(threw);
  // Missing file.
  fs::remove(store.slice_path(1));
  SliceStore again = SliceStore::open(dir.path.string());
  again.begin_read_cycle();
  CHECK_THROWS_AS(again.read_slice(1), Error);
}

TEST_CASE("create validates against reuse and bad schemes") {
  TempDir dir;
  SliceStore::create((dir.path / "x").string(), 3, {{0}, {1, 2}});
  CHECK_THROWS_AS(SliceStore::create((dir.path / "x").string(), 3,
                                     FileIndexScheme{{0}, {1, 2}}),
                  Error);
  CHECK_THROWS_AS(SliceStore::create((dir.path / "y").string(), 3,
                                     FileIndexScheme{{0}, {1}}),
                  Error);
  CHECK_THROWS_AS(SliceStore::open((dir.path / "nothere").string()), Error);
}
