#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace compforge::stats {

/// Regularized incomplete beta I_x(a, b), evaluated with the Lentz continued
/// fraction on whichever side of the mean converges fastest.
double incomplete_beta(double a, double b, double x);

/// Two-sided p-value of a Student t statistic.
double t_two_sided_p(double t, double dof);
/// Upper-tail p-value of an F statistic.
double f_upper_p(double f, double df_num, double df_den);

double mean(std::span<const double> x);
/// Sample variance (ddof = 1). Zero for fewer than two values.
double sample_variance(std::span<const double> x);
double sample_sd(std::span<const double> x);

/// 1-based ranks, ties receive their average rank.
std::vector<double> average_ranks(std::span<const double> x);

/// Pearson correlation; 0 when either side has zero spread.
double pearson(std::span<const double> a, std::span<const double> b);
double spearman(std::span<const double> a, std::span<const double> b);

enum class TTest { EqualVariance, Welch };

struct MeanDiff {
  double diff = 0.0;  // mean(hi) - mean(lo)
  double d = 0.0;     // diff / pooled sd
  double t = 0.0;
  double dof = 0.0;
  double p = 1.0;
};

/// Throws DegenerateError when either group has fewer than two values or the
/// pooled standard deviation is zero.
MeanDiff cohens_d(std::span<const double> hi, std::span<const double> lo, TTest test = TTest::EqualVariance);

struct FdrResult {
  std::vector<bool> rejected;
  std::vector<double> adjusted;  // step-up adjusted p-values
};

/// Benjamini-Hochberg step-up procedure at level alpha. NaN p-values are
/// ignored (never rejected, adjusted value NaN) and do not count as tests.
FdrResult benjamini_hochberg(std::span<const double> p, double alpha);

}  // namespace compforge::stats
