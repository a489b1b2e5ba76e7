#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slicesim/types.hpp"

namespace slicesim {

// On-disk amplitudes are single precision by default; the double mode
// exists so tests can isolate rounding taken on the disk hop.
enum class StorePrecision { f32, f64 };

// Splits the qubits of a state between a file id and an in-file offset.
// Bit k of the file id is index_qubits[k]; bit j of the amplitude offset
// inside a file is local_qubits[j].
struct FileIndexScheme {
  std::vector<int> index_qubits;
  std::vector<int> local_qubits;

  int n_qubits() const {
    return static_cast<int>(index_qubits.size() + local_qubits.size());
  }
  std::uint64_t file_count() const {
    return std::uint64_t(1) << index_qubits.size();
  }
  std::uint64_t amps_per_file() const {
    return std::uint64_t(1) << local_qubits.size();
  }
};

void validate_scheme(const FileIndexScheme& scheme, int n_qubits);

std::vector<std::uint8_t> encode_amplitudes(const std::vector<amp>& amps,
                                            StorePrecision precision);
std::vector<amp> decode_amplitudes(const std::vector<std::uint8_t>& bytes,
                                   StorePrecision precision);

// One state spread over 2^k slice files under a root directory, with a
// manifest carrying the layout. Access runs in full write or read cycles:
// a cycle touches every file exactly once, and a second touch of one file
// inside a cycle, or closing a cycle early, is an error.
class SliceStore {
 public:
  SliceStore() = default;

  static SliceStore create(const std::string& root, int n_qubits,
                           FileIndexScheme scheme,
                           StorePrecision precision = StorePrecision::f32);
  static SliceStore open(const std::string& root);

  void begin_write_cycle();
  void write_slice(std::uint64_t file_id, const std::vector<amp>& amps);
  void end_write_cycle();

  void begin_read_cycle();
  std::vector<amp> read_slice(std::uint64_t file_id);
  void end_read_cycle();

  const FileIndexScheme& scheme() const { return scheme_; }
  StorePrecision precision() const { return precision_; }
  int n_qubits() const { return n_qubits_; }
  int write_cycles() const { return write_cycles_; }
  int read_cycles() const { return read_cycles_; }
  const std::string& root() const { return root_; }
  std::uint64_t bytes_per_amp() const {
    return precision_ == StorePrecision::f32 ? 8 : 16;
  }
  std::string slice_path(std::uint64_t file_id) const;

 private:
  void save_manifest() const;
  void require_mode(int want, const char* action) const;

  std::string root_;
  int n_qubits_ = 0;
  FileIndexScheme scheme_;
  StorePrecision precision_ = StorePrecision::f32;
  int write_cycles_ = 0;
  int read_cycles_ = 0;
  int mode_ = 0;  // 0 idle, 1 writing, 2 reading
  std::vector<char> touched_;
};

}  // namespace slicesim
