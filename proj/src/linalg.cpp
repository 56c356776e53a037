#include "compforge/linalg.hpp"

#include <cmath>
#include <limits>

namespace compforge {

LeastSquaresFit fit_least_squares(const Matrix& X, std::span<const double> y, const kernels::Gram& gram,
                                  std::span<const std::size_t> columns, kernels::Exec exec, double tol) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  LeastSquaresFit fit;
  fit.columns.assign(columns.begin(), columns.end());
  fit.n = X.rows;
  fit.aliased.assign(columns.size(), false);
  fit.coef.assign(columns.size(), nan);
  fit.se.assign(columns.size(), nan);

  // kept[i] indexes into `columns`; L is lower-triangular over kept columns.
  std::vector<std::size_t> kept;
  std::vector<std::vector<double>> L;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const std::size_t j = columns[c];
    const double diag = gram.xtx(j, j);
    std::vector<double> row(kept.size() + 1, 0.0);
    double d = diag;
    for (std::size_t m = 0; m < kept.size(); ++m) {
      double s = gram.xtx(j, columns[kept[m]]);
      for (std::size_t q = 0; q < m; ++q) s -= row[q] * L[m][q];
      row[m] = s / L[m][m];
      d -= row[m] * row[m];
    }
    if (!(diag > 0.0) || d <= tol * diag) {
      fit.aliased[c] = true;
      continue;
    }
    row[kept.size()] = std::sqrt(d);
    kept.push_back(c);
    L.push_back(std::move(row));
  }

  const std::size_t p = kept.size();
  fit.rank = p;
  fit.df_resid = fit.n > p ? fit.n - p : 0;

  // Forward then back substitution.
  std::vector<double> z(p);
  for (std::size_t i = 0; i < p; ++i) {
    double s = gram.xty[columns[kept[i]]];
    for (std::size_t q = 0; q < i; ++q) s -= L[i][q] * z[q];
    z[i] = s / L[i][i];
  }
  std::vector<double> beta(p);
  for (std::size_t ii = p; ii-- > 0;) {
    double s = z[ii];
    for (std::size_t r = ii + 1; r < p; ++r) s -= L[r][ii] * beta[r];
    beta[ii] = s / L[ii][ii];
  }

  std::vector<std::size_t> kept_cols(p);
  for (std::size_t i = 0; i < p; ++i) kept_cols[i] = columns[kept[i]];
  fit.rss = kernels::residual_ss(X, y, kept_cols, beta, exec);

  // diag((L L^T)^{-1}) = column norms of L^{-1}.
  std::vector<double> inv_diag(p, 0.0);
  std::vector<double> e(p);
  for (std::size_t col = 0; col < p; ++col) {
    std::fill(e.begin(), e.end(), 0.0);
    for (std::size_t i = col; i < p; ++i) {
      double s = (i == col) ? 1.0 : 0.0;
      for (std::size_t q = col; q < i; ++q) s -= L[i][q] * e[q];
      e[i] = s / L[i][i];
    }
    for (std::size_t i = col; i < p; ++i) inv_diag[col] += e[i] * e[i];
  }

  const double sigma2 = fit.df_resid > 0 ? fit.rss / static_cast<double>(fit.df_resid) : nan;
  for (std::size_t i = 0; i < p; ++i) {
    fit.coef[kept[i]] = beta[i];
    fit.se[kept[i]] = std::sqrt(sigma2 * inv_diag[i]);
  }
  return fit;
}

}  // namespace compforge
