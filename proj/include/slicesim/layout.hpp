#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

namespace slicesim {

// Qubit coupling map. Patterns A-D are matchings: within one pattern no
// qubit appears twice. Coordinates are optional (row, col) hints used only
// for display and layer splitting; couplings are the source of truth.
struct QubitLayout {
  std::string name;
  int n_qubits = 0;
  std::array<std::vector<std::pair<int, int>>, 4> patterns;  // A, B, C, D
  std::vector<std::pair<int, int>> coords;                   // empty if absent

  bool has_coords() const { return !coords.empty(); }
};

inline constexpr const char* kPatternNames = "ABCD";

// Eight-cycle repeat: cycle k (1-based) draws its coupling pattern from
// position (k-1) mod 8 of this sequence.
inline constexpr const char* kPatternSequence = "ABCDCDAB";

int pattern_index_for_cycle(int cycle_1based);

void validate_layout(const QubitLayout& layout);

QubitLayout load_layout(const std::string& path);
void save_layout(const QubitLayout& layout, const std::string& path);

// Rectangular grid with vertical matchings in A (even rows) and B (odd
// rows), horizontal matchings in C (even columns) and D (odd columns).
// The last drop_count qubits are removed along with their couplings, and
// dropped_couplings prunes individual edges on top of that.
QubitLayout make_grid_layout(
    int rows, int cols, int drop_count = 0,
    const std::vector<std::pair<int, int>>& dropped_couplings = {});

}  // namespace slicesim
