#pragma once

// Data-parallel inner loops. Each kernel has a serial reference path and an
// OpenMP path; both produce bit-identical results because the parallel
// decomposition never reorders a floating-point reduction (work is split over
// independent outputs, and each output is accumulated in the serial order).

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "compforge/matrix.hpp"

namespace compforge::kernels {

enum class Exec { Serial, Parallel };

/// Number of OpenMP threads the parallel paths will use (1 without OpenMP).
int max_threads();
void set_threads(int n);

/// For each candidate (row of `rows`, `k` global component ids in dimension
/// order) count the pairs it covers that are still marked in `remaining`, a
/// V x V byte mask indexed [lo * V + hi] with lo < hi.
std::vector<std::uint32_t> coverage_gain(std::span<const std::uint32_t> rows, std::size_t k,
                                         std::span<const std::uint8_t> remaining, std::size_t V, Exec exec);

/// X^T X (full symmetric) and X^T y.
struct Gram {
  Matrix xtx;
  std::vector<double> xty;
  double yty = 0.0;
};
Gram gram(const Matrix& X, std::span<const double> y, Exec exec);

/// Residual sum of squares of y - X[:, cols] * beta.
double residual_ss(const Matrix& X, std::span<const double> y, std::span<const std::size_t> cols,
                   std::span<const double> beta, Exec exec);

}  // namespace compforge::kernels
