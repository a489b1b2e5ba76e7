#pragma once

#include <complex>
#include <cstdint>
#include <vector>

namespace slicesim {

using amp = std::complex<double>;

inline constexpr double kPi = 3.141592653589793238462643383279502884;

// Bit of x at position k. Qubit 0 is always the least significant bit of a
// basis-state index; this convention is global to the project.
inline int bit(std::uint64_t x, int k) { return int((x >> k) & 1u); }

inline std::uint64_t set_bit(std::uint64_t x, int k, int b) {
  return (x & ~(std::uint64_t(1) << k)) | (std::uint64_t(b) << k);
}

// Inserts bit b at position k, shifting higher bits up by one.
inline std::uint64_t insert_bit(std::uint64_t x, int k, int b) {
  std::uint64_t low = x & ((std::uint64_t(1) << k) - 1);
  std::uint64_t high = x >> k;
  return low | (std::uint64_t(b) << k) | (high << (k + 1));
}

// Removes the bit at position k, shifting higher bits down by one.
inline std::uint64_t remove_bit(std::uint64_t x, int k) {
  std::uint64_t low = x & ((std::uint64_t(1) << k) - 1);
  std::uint64_t high = x >> (k + 1);
  return low | (high << k);
}

// Small dense complex matrix, row-major. Sized for gate and kernel unitaries
// (dim at most 2^5), not for state vectors.
struct CMatrix {
  int dim = 0;
  std::vector<amp> a;

  CMatrix() = default;
  explicit CMatrix(int d) : dim(d), a(std::size_t(d) * d) {}

  amp& at(int r, int c) { return a[std::size_t(r) * dim + c]; }
  const amp& at(int r, int c) const { return a[std::size_t(r) * dim + c]; }

  static CMatrix identity(int d) {
    CMatrix m(d);
    for (int i = 0; i < d; ++i) m.at(i, i) = 1.0;
    return m;
  }
};

CMatrix mat_mul(const CMatrix& lhs, const CMatrix& rhs);
CMatrix dagger(const CMatrix& m);
double max_abs_diff(const CMatrix& lhs, const CMatrix& rhs);

// max_k |(U†U - I)_kk entries|, evaluated over the full product matrix.
double unitarity_defect(const CMatrix& m);

}  // namespace slicesim
