#pragma once

// Permutation-test linear statistics with their conditional moments,
// their standardisations, and the distribution functions behind p-values.

#include <Eigen/Dense>
#include <cstddef>
#include <span>

#include "coat/dataframe.hpp"

namespace coat {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Eigenvalues below this fraction of the largest one count as zero.
inline constexpr double kRankTolerance = 1e-10;

/// Linear statistic t = vec(sum_i w_i g_i h_i^T) with conditional mean and
/// covariance under permutation of the h rows. Coordinates are ordered with
/// the g index varying fastest (column-major vec of the p x q matrix).
struct LinStat {
  Vector t;
  Vector mu;
  Matrix sigma;
  int p = 0;
  int q = 0;
};

enum class StatisticKind { Quad, Max, SupLM };

const char* to_string(StatisticKind kind);

struct TestResult {
  double statistic = 0.0;
  StatisticKind kind = StatisticKind::Quad;
  int df = 0;
  double p_raw = 1.0;
  double p_adjusted = 1.0;
};

/// Rows (y_i, (y_i - ybar_w)^2) with ybar_w the mean over rows of weight 1.
/// Rows of weight 0 are filled in as well; the weights mark them excluded.
Matrix h_transform(std::span<const double> y, std::span<const double> weights);

/// Identity column for continuous covariates, one-hot columns for categorical.
Matrix g_transform(const Column& col);

LinStat linear_statistic(const Matrix& g, const Matrix& h, std::span<const double> weights);

struct PseudoInverse {
  Matrix inverse;
  int rank = 0;
};

/// Moore-Penrose inverse of a symmetric matrix by eigendecomposition.
PseudoInverse pseudo_inverse(const Matrix& sym, double tol = kRankTolerance);

/// Quadratic form (t - mu)^T Sigma^+ (t - mu), chi-squared with rank(Sigma) df.
TestResult c_quad(const LinStat& ls);

/// Maximum absolute standardised coordinate; zero-variance coordinates are
/// skipped. The p-value treats the remaining coordinates as independent.
TestResult c_max(const LinStat& ls);

double chi2_sf(double x, int df);
double normal_cdf(double x);
double normal_quantile(double p);
double bonferroni(double p, std::size_t tests);

}  // namespace coat
