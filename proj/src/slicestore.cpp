#include "slicesim/slicestore.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "slicesim/errors.hpp"

namespace slicesim {

namespace fs = std::filesystem;
using nlohmann::json;

void validate_scheme(const FileIndexScheme& scheme, int n_qubits) {
  if (scheme.n_qubits() != n_qubits)
    fail(ErrorKind::validation, "file scheme must cover every qubit once");
  std::vector<char> seen(n_qubits, 0);
  for (const auto* list : {&scheme.index_qubits, &scheme.local_qubits})
    for (int q : *list) {
      if (q < 0 || q >= n_qubits)
        fail(ErrorKind::validation, "file scheme qubit out of range");
      if (seen[q]++)
        fail(ErrorKind::validation, "file scheme repeats a qubit");
    }
  if (scheme.index_qubits.size() > 24)
    fail(ErrorKind::capacity, "too many slice files");
  if (scheme.local_qubits.size() > 30)
    fail(ErrorKind::capacity, "slice files too large");
}

namespace {

void put_le(std::vector<std::uint8_t>& out, std::uint64_t v, int n_bytes) {
  for (int k = 0; k < n_bytes; ++k)
    out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

std::uint64_t get_le(const std::vector<std::uint8_t>& in, std::size_t pos,
                     int n_bytes) {
  std::uint64_t v = 0;
  for (int k = 0; k < n_bytes; ++k)
    v |= std::uint64_t(in[pos + k]) << (8 * k);
  return v;
}

const char* precision_name(StorePrecision p) {
  return p == StorePrecision::f32 ? "f32" : "f64";
}

}  // namespace

std::vector<std::uint8_t> encode_amplitudes(const std::vector<amp>& amps,
                                            StorePrecision precision) {
  std::vector<std::uint8_t> bytes;
  if (precision == StorePrecision::f32) {
    bytes.reserve(amps.size() * 8);
    for (const amp& v : amps) {
      put_le(bytes, std::bit_cast<std::uint32_t>(float(v.real())), 4);
      put_le(bytes, std::bit_cast<std::uint32_t>(float(v.imag())), 4);
    }
  } else {
    bytes.reserve(amps.size() * 16);
    for (const amp& v : amps) {
      put_le(bytes, std::bit_cast<std::uint64_t>(v.real()), 8);
      put_le(bytes, std::bit_cast<std::uint64_t>(v.imag()), 8);
    }
  }
  return bytes;
}

std::vector<amp> decode_amplitudes(const std::vector<std::uint8_t>& bytes,
                                   StorePrecision precision) {
  const std::size_t stride = precision == StorePrecision::f32 ? 8 : 16;
  if (bytes.size() % stride != 0)
    fail(ErrorKind::io, "amplitude byte stream has a partial record");
  std::vector<amp> amps;
  amps.reserve(bytes.size() / stride);
  for (std::size_t pos = 0; pos < bytes.size(); pos += stride) {
    if (precision == StorePrecision::f32) {
      float re = std::bit_cast<float>(
          static_cast<std::uint32_t>(get_le(bytes, pos, 4)));
      float im = std::bit_cast<float>(
          static_cast<std::uint32_t>(get_le(bytes, pos + 4, 4)));
      amps.emplace_back(re, im);
    } else {
      double re = std::bit_cast<double>(get_le(bytes, pos, 8));
      double im = std::bit_cast<double>(get_le(bytes, pos + 8, 8));
      amps.emplace_back(re, im);
    }
  }
  return amps;
}

SliceStore SliceStore::create(const std::string& root, int n_qubits,
                              FileIndexScheme scheme,
                              StorePrecision precision) {
  validate_scheme(scheme, n_qubits);
  if (fs::exists(fs::path(root) / "manifest.json"))
    fail(ErrorKind::io, "a store already exists under " + root);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) fail(ErrorKind::io, "cannot create store directory: " + root);
  SliceStore store;
  store.root_ = root;
  store.n_qubits_ = n_qubits;
  store.scheme_ = std::move(scheme);
  store.precision_ = precision;
  store.save_manifest();
  return store;
}

SliceStore SliceStore::open(const std::string& root) {
  std::ifstream in(fs::path(root) / "manifest.json");
  if (!in) fail(ErrorKind::io, "cannot open store manifest under " + root);
  json m = json::parse(in, nullptr, false);
  if (m.is_discarded())
    fail(ErrorKind::io, "store manifest is not valid JSON under " + root);
  SliceStore store;
  store.root_ = root;
  try {
    store.n_qubits_ = m.at("qubits").get<int>();
    store.scheme_.index_qubits =
        m.at("index_qubits").get<std::vector<int>>();
    store.scheme_.local_qubits =
        m.at("local_qubits").get<std::vector<int>>();
    std::string prec = m.at("precision").get<std::string>();
    if (prec == "f32")
      store.precision_ = StorePrecision::f32;
    else if (prec == "f64")
      store.precision_ = StorePrecision::f64;
    else
      fail(ErrorKind::io, "unknown store precision: " + prec);
    store.write_cycles_ = m.at("write_cycles").get<int>();
    store.read_cycles_ = m.at("read_cycles").get<int>();
  } catch (const json::exception& e) {
    fail(ErrorKind::io, std::string("bad store manifest: ") + e.what());
  }
  validate_scheme(store.scheme_, store.n_qubits_);
  return store;
}

void SliceStore::save_manifest() const {
  json m;
  m["qubits"] = n_qubits_;
  m["precision"] = precision_name(precision_);
  m["index_qubits"] = scheme_.index_qubits;
  m["local_qubits"] = scheme_.local_qubits;
  m["write_cycles"] = write_cycles_;
  m["read_cycles"] = read_cycles_;
  std::ofstream out(fs::path(root_) / "manifest.json");
  if (!out) fail(ErrorKind::io, "cannot write store manifest under " + root_);
  out << m.dump(2) << "\n";
}

std::string SliceStore::slice_path(std::uint64_t file_id) const {
  int width = std::max<int>(1, (static_cast<int>(scheme_.index_qubits.size()) + 3) / 4);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*llx.slc", width,
                static_cast<unsigned long long>(file_id));
  return (fs::path(root_) / buf).string();
}

void SliceStore::require_mode(int want, const char* action) const {
  if (root_.empty())
    fail(ErrorKind::validation, "slice store is not initialized");
  if (mode_ != want) {
    const char* names[] = {"idle", "in a write cycle", "in a read cycle"};
    fail(ErrorKind::validation,
         std::string("cannot ") + action + " while the store is " +
             names[mode_]);
  }
}

void SliceStore::begin_write_cycle() {
  require_mode(0, "begin a write cycle");
  mode_ = 1;
  touched_.assign(scheme_.file_count(), 0);
}

void SliceStore::write_slice(std::uint64_t file_id,
                             const std::vector<amp>& amps) {
  require_mode(1, "write a slice");
  if (file_id >= scheme_.file_count())
    fail(ErrorKind::validation, "slice file id out of range");
  if (touched_[file_id])
    fail(ErrorKind::validation, "slice written twice in one cycle");
  if (amps.size() != scheme_.amps_per_file())
    fail(ErrorKind::validation, "slice has the wrong amplitude count");
  touched_[file_id] = 1;
  auto bytes = encode_amplitudes(amps, precision_);
  std::ofstream out(slice_path(file_id), std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot open slice file for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::io, "short write on slice file");
}

void SliceStore::end_write_cycle() {
  require_mode(1, "end a write cycle");
  for (std::uint64_t id = 0; id < touched_.size(); ++id)
    if (!touched_[id])
      fail(ErrorKind::validation,
           "write cycle ended before covering every slice");
  mode_ = 0;
  ++write_cycles_;
  save_manifest();
}

void SliceStore::begin_read_cycle() {
  require_mode(0, "begin a read cycle");
  mode_ = 2;
  touched_.assign(scheme_.file_count(), 0);
}

std::vector<amp> SliceStore::read_slice(std::uint64_t file_id) {
  require_mode(2, "read a slice");
  if (file_id >= scheme_.file_count())
    fail(ErrorKind::validation, "slice file id out of range");
  if (touched_[file_id])
    fail(ErrorKind::validation, "slice read twice in one cycle");
  touched_[file_id] = 1;
  std::ifstream in(slice_path(file_id), std::ios::binary);
  if (!in) fail(ErrorKind::io, "missing slice file: " + slice_path(file_id));
  std::vector<std::uint8_t> bytes(
      (std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::size_t expect = scheme_.amps_per_file() * bytes_per_amp();
  if (bytes.size() != expect)
    fail(ErrorKind::io, "slice file has the wrong size: " +
                            slice_path(file_id));
  return decode_amplitudes(bytes, precision_);
}

void SliceStore::end_read_cycle() {
  require_mode(2, "end a read cycle");
  for (std::uint64_t id = 0; id < touched_.size(); ++id)
    if (!touched_[id])
      fail(ErrorKind::validation,
           "read cycle ended before covering every slice");
  mode_ = 0;
  ++read_cycles_;
  save_manifest();
}

}  // namespace slicesim
