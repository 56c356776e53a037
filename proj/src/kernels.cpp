#include "compforge/kernels.hpp"

#include <cassert>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace compforge::kernels {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

namespace {

std::uint32_t gain_of(const std::uint32_t* row, std::size_t k, const std::uint8_t* remaining, std::size_t V) {
  std::uint32_t count = 0;
  for (std::size_t a = 0; a < k; ++a) {
    const std::size_t base = static_cast<std::size_t>(row[a]) * V;
    for (std::size_t b = a + 1; b < k; ++b) count += remaining[base + row[b]];
  }
  return count;
}

// Column-pair entry of X^T X accumulated over rows in order.
double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t r = 0; r < n; ++r) s += a[r] * b[r];
  return s;
}

}  // namespace

std::vector<std::uint32_t> coverage_gain(std::span<const std::uint32_t> rows, std::size_t k,
                                         std::span<const std::uint8_t> remaining, std::size_t V, Exec exec) {
  const std::size_t n = k == 0 ? 0 : rows.size() / k;
  std::vector<std::uint32_t> gains(n, 0);
  if (exec == Exec::Serial) {
    for (std::size_t c = 0; c < n; ++c) gains[c] = gain_of(rows.data() + c * k, k, remaining.data(), V);
    return gains;
  }
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(static)
  for (long long c = 0; c < count; ++c) {
    gains[static_cast<std::size_t>(c)] =
        gain_of(rows.data() + static_cast<std::size_t>(c) * k, k, remaining.data(), V);
  }
  return gains;
}

Gram gram(const Matrix& X, std::span<const double> y, Exec exec) {
  assert(y.size() == X.rows);
  const std::size_t p = X.cols;
  Gram g{Matrix(p, p), std::vector<double>(p, 0.0), 0.0};
  for (double v : y) g.yty += v * v;

  // Column-major copy so every dot product walks contiguous memory.
  const std::size_t n = X.rows;
  std::vector<double> cols(n * p);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < p; ++c) cols[c * n + r] = X(r, c);
  auto col = [&](std::size_t c) { return cols.data() + c * n; };

  // Upper triangle enumerated as a flat index so the parallel split is even.
  std::vector<std::pair<std::size_t, std::size_t>> cells;
  cells.reserve(p * (p + 1) / 2);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i; j < p; ++j) cells.emplace_back(i, j);

  if (exec == Exec::Serial) {
    for (const auto& [i, j] : cells) g.xtx(i, j) = dot(col(i), col(j), n);
    for (std::size_t i = 0; i < p; ++i) g.xty[i] = dot(col(i), y.data(), n);
  } else {
    const auto n_cells = static_cast<long long>(cells.size());
#pragma omp parallel for schedule(dynamic, 16)
    for (long long c = 0; c < n_cells; ++c) {
      const auto [i, j] = cells[static_cast<std::size_t>(c)];
      g.xtx(i, j) = dot(col(i), col(j), n);
    }
    const auto n_cols = static_cast<long long>(p);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < n_cols; ++i) {
      g.xty[static_cast<std::size_t>(i)] = dot(col(static_cast<std::size_t>(i)), y.data(), n);
    }
  }
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < i; ++j) g.xtx(i, j) = g.xtx(j, i);
  return g;
}

double residual_ss(const Matrix& X, std::span<const double> y, std::span<const std::size_t> cols,
                   std::span<const double> beta, Exec exec) {
  const std::size_t n = X.rows;
  std::vector<double> sq(n);
  auto residual = [&](std::size_t r) {
    double fit = 0.0;
    for (std::size_t j = 0; j < cols.size(); ++j) fit += X(r, cols[j]) * beta[j];
    const double e = y[r] - fit;
    return e * e;
  };
  if (exec == Exec::Serial) {
    for (std::size_t r = 0; r < n; ++r) sq[r] = residual(r);
  } else {
    const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(static)
    for (long long r = 0; r < count; ++r) sq[static_cast<std::size_t>(r)] = residual(static_cast<std::size_t>(r));
  }
  // Summed serially so both paths agree bit for bit.
  double rss = 0.0;
  for (double v : sq) rss += v;
  return rss;
}

}  // namespace compforge::kernels
