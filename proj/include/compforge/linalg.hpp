#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "compforge/kernels.hpp"
#include "compforge/matrix.hpp"

namespace compforge {

/// Ordinary least squares on a subset of design columns.
///
/// Solved through a left-looking Cholesky factorization of the normal
/// equations. A column whose residual pivot falls below `tol` times its own
/// diagonal is linearly dependent on earlier columns: it is flagged aliased,
/// its coefficient is NaN, and it does not count toward the rank.
struct LeastSquaresFit {
  std::vector<std::size_t> columns;
  std::vector<bool> aliased;
  std::vector<double> coef;
  std::vector<double> se;
  double rss = 0.0;
  std::size_t n = 0;
  std::size_t rank = 0;
  std::size_t df_resid = 0;
};

LeastSquaresFit fit_least_squares(const Matrix& X, std::span<const double> y, const kernels::Gram& gram,
                                  std::span<const std::size_t> columns,
                                  kernels::Exec exec = kernels::Exec::Parallel, double tol = 1e-9);

}  // namespace compforge
