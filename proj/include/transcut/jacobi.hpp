#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace transcut {

template <std::size_t N>
using SquareMatrix = std::array<std::array<double, N>, N>;

template <std::size_t N>
struct SymmetricEigen {
  std::array<double, N> values{};
  SquareMatrix<N> vectors{};  ///< vectors[r][k] is row r of eigenvector k
  int sweeps = 0;
};

template <std::size_t N>
double off_diagonal_norm(const SquareMatrix<N>& a) {
  double sum = 0.0;
  for (std::size_t p = 0; p < N; ++p)
    for (std::size_t q = 0; q < N; ++q)
      if (p != q) sum += a[p][q] * a[p][q];
  return std::sqrt(sum);
}

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix. Iterates until the
/// off-diagonal Frobenius norm drops below tol; after a few sweeps, entries too
/// small to change their diagonal neighbors are zeroed outright.
template <std::size_t N>
SymmetricEigen<N> jacobi_eigen(SquareMatrix<N> a, double tol = 1e-12, int max_sweeps = 100) {
  SymmetricEigen<N> out;
  for (std::size_t i = 0; i < N; ++i) out.vectors[i][i] = 1.0;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    if (off_diagonal_norm(a) < tol) break;
    out.sweeps = sweep + 1;
    for (std::size_t p = 0; p + 1 < N; ++p) {
      for (std::size_t q = p + 1; q < N; ++q) {
        const double apq = a[p][q];
        if (apq == 0.0) continue;
        const double g = 100.0 * std::abs(apq);
        if (sweep > 3 && std::abs(a[p][p]) + g == std::abs(a[p][p]) && std::abs(a[q][q]) + g == std::abs(a[q][q])) {
          a[p][q] = a[q][p] = 0.0;
          continue;
        }
        const double theta = (a[q][q] - a[p][p]) / (2.0 * apq);
        double t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        if (theta < 0.0) t = -t;
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        a[p][p] -= t * apq;
        a[q][q] += t * apq;
        a[p][q] = a[q][p] = 0.0;
        for (std::size_t r = 0; r < N; ++r) {
          if (r != p && r != q) {
            const double arp = a[r][p], arq = a[r][q];
            a[r][p] = a[p][r] = c * arp - s * arq;
            a[r][q] = a[q][r] = s * arp + c * arq;
          }
          const double vrp = out.vectors[r][p], vrq = out.vectors[r][q];
          out.vectors[r][p] = c * vrp - s * vrq;
          out.vectors[r][q] = s * vrp + c * vrq;
        }
      }
    }
  }
  for (std::size_t i = 0; i < N; ++i) out.values[i] = a[i][i];
  return out;
}

}  // namespace transcut
