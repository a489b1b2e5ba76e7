#include "slicesim/layout.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <sstream>

#include "slicesim/errors.hpp"

namespace slicesim {

int pattern_index_for_cycle(int cycle_1based) {
  if (cycle_1based < 1) fail(ErrorKind::validation, "cycle numbers start at 1");
  char c = kPatternSequence[(cycle_1based - 1) % 8];
  return static_cast<int>(std::strchr(kPatternNames, c) - kPatternNames);
}

void validate_layout(const QubitLayout& layout) {
  if (layout.n_qubits <= 0)
    fail(ErrorKind::validation, "layout has no qubits");
  if (layout.has_coords() &&
      static_cast<int>(layout.coords.size()) != layout.n_qubits)
    fail(ErrorKind::validation, "layout coords do not cover every qubit");
  for (int p = 0; p < 4; ++p) {
    std::vector<char> seen(layout.n_qubits, 0);
    for (auto [a, b] : layout.patterns[p]) {
      if (a < 0 || b < 0 || a >= layout.n_qubits || b >= layout.n_qubits)
        fail(ErrorKind::validation, "coupling qubit out of range in pattern " +
                                        std::string(1, kPatternNames[p]));
      if (a == b)
        fail(ErrorKind::validation, "coupling joins a qubit to itself");
      if (seen[a] || seen[b])
        fail(ErrorKind::validation,
             "pattern " + std::string(1, kPatternNames[p]) +
                 " is not a matching");
      seen[a] = seen[b] = 1;
    }
  }
}

QubitLayout load_layout(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open layout file: " + path);
  QubitLayout layout;
  layout.name = path;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ss(line);
    std::string key;
    if (!(ss >> key)) continue;
    auto bad = [&](const std::string& what) {
      fail(ErrorKind::io,
           path + ":" + std::to_string(line_no) + ": " + what);
    };
    if (key == "name") {
      ss >> layout.name;
    } else if (key == "qubits") {
      if (!(ss >> layout.n_qubits)) bad("expected qubit count");
    } else if (key == "coord") {
      int q, r, c;
      if (!(ss >> q >> r >> c)) bad("expected: coord <q> <row> <col>");
      if (q != static_cast<int>(layout.coords.size()))
        bad("coord lines must appear in qubit order");
      layout.coords.emplace_back(r, c);
    } else if (key == "pattern") {
      std::string p;
      int a, b;
      if (!(ss >> p >> a >> b) || p.size() != 1)
        bad("expected: pattern <A-D> <q> <q>");
      const char* pos = std::strchr(kPatternNames, p[0]);
      if (!pos) bad("pattern label must be one of A B C D");
      layout.patterns[pos - kPatternNames].emplace_back(a, b);
    } else {
      bad("unknown directive: " + key);
    }
  }
  validate_layout(layout);
  return layout;
}

void save_layout(const QubitLayout& layout, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, "cannot write layout file: " + path);
  if (!layout.name.empty()) out << "name " << layout.name << "\n";
  out << "qubits " << layout.n_qubits << "\n";
  for (int q = 0; q < static_cast<int>(layout.coords.size()); ++q)
    out << "coord " << q << " " << layout.coords[q].first << " "
        << layout.coords[q].second << "\n";
  for (int p = 0; p < 4; ++p)
    for (auto [a, b] : layout.patterns[p])
      out << "pattern " << kPatternNames[p] << " " << a << " " << b << "\n";
  if (!out) fail(ErrorKind::io, "failed writing layout file: " + path);
}

QubitLayout make_grid_layout(
    int rows, int cols, int drop_count,
    const std::vector<std::pair<int, int>>& dropped_couplings) {
  if (rows < 1 || cols < 1 || drop_count < 0 || drop_count >= rows * cols)
    fail(ErrorKind::validation, "bad grid dimensions");
  QubitLayout layout;
  layout.n_qubits = rows * cols - drop_count;
  layout.name = "grid" + std::to_string(rows) + "x" + std::to_string(cols);
  if (drop_count > 0) layout.name += "m" + std::to_string(drop_count);
  auto id = [cols](int r, int c) { return r * cols + c; };
  for (int q = 0; q < layout.n_qubits; ++q)
    layout.coords.emplace_back(q / cols, q % cols);
  auto dropped = [&](int a, int b) {
    if (a >= layout.n_qubits || b >= layout.n_qubits) return true;
    for (auto [x, y] : dropped_couplings)
      if ((x == a && y == b) || (x == b && y == a)) return true;
    return false;
  };
  for (int r = 0; r + 1 < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      int a = id(r, c), b = id(r + 1, c);
      if (!dropped(a, b)) layout.patterns[r % 2 == 0 ? 0 : 1].emplace_back(a, b);
    }
  for (int c = 0; c + 1 < cols; ++c)
    for (int r = 0; r < rows; ++r) {
      int a = id(r, c), b = id(r, c + 1);
      if (!dropped(a, b)) layout.patterns[c % 2 == 0 ? 2 : 3].emplace_back(a, b);
    }
  validate_layout(layout);
  return layout;
}

}  // namespace slicesim
