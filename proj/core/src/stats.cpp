#include "coat/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <string>

#include "coat/error.hpp"

namespace coat {

const char* to_string(StatisticKind kind) {
  switch (kind) {
    case StatisticKind::Quad: return "quad";
    case StatisticKind::Max: return "max";
    case StatisticKind::SupLM: return "supLM";
  }
  return "?";
}

namespace {

double included_count(std::span<const double> weights) {
  double n = 0.0;
  for (double w : weights) n += w;
  return n;
}

}  // namespace

Matrix h_transform(std::span<const double> y, std::span<const double> weights) {
  if (y.size() != weights.size()) throw ValidationError("h_transform: weights length mismatch");
  const double nw = included_count(weights);
  if (nw <= 0.0) throw ValidationError("h_transform: all weights are zero");
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) sum += weights[i] * y[i];
  const double mean = sum / nw;
  Matrix h(static_cast<Eigen::Index>(y.size()), 2);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    h(r, 0) = y[i];
    h(r, 1) = (y[i] - mean) * (y[i] - mean);
  }
  return h;
}

Matrix g_transform(const Column& col) {
  const auto n = static_cast<Eigen::Index>(col.size());
  if (!col.is_categorical()) {
    Matrix g(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) g(i, 0) = col.values[static_cast<std::size_t>(i)];
    return g;
  }
  const auto k = static_cast<Eigen::Index>(col.level_count());
  Matrix g = Matrix::Zero(n, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int code = col.codes[static_cast<std::size_t>(i)];
    if (code < 1 || code > k) throw ValidationError("g_transform: level index out of range");
    g(i, code - 1) = 1.0;
  }
  return g;
}

LinStat linear_statistic(const Matrix& g, const Matrix& h, std::span<const double> weights) {
  const auto n = g.rows();
  if (h.rows() != n || static_cast<Eigen::Index>(weights.size()) != n) {
    throw ValidationError("linear_statistic: row counts differ");
  }
  const double nw = included_count(weights);
  if (nw < 2.0) throw ValidationError("linear_statistic: fewer than 2 included rows");
  const auto p = g.cols();
  const auto q = h.cols();

  Eigen::Map<const Vector> w(weights.data(), n);
  const Matrix wg = g.array().colwise() * w.array();
  const Matrix t_mat = wg.transpose() * h;  // p x q
  const Vector g_sum = wg.colwise().sum().transpose();
  const Vector h_sum = (h.array().colwise() * w.array()).colwise().sum().transpose();
  const Vector h_mean = h_sum / nw;
  const Matrix mu_mat = g_sum * h_mean.transpose();

  const Matrix hc = h.rowwise() - h_mean.transpose();
  const Matrix v = (hc.array().colwise() * w.array()).matrix().transpose() * hc / nw;  // q x q
  const Matrix ggt = wg.transpose() * g;  // p x p, sum w g g^T
  const Matrix g_outer = g_sum * g_sum.transpose();

  LinStat ls;
  ls.p = static_cast<int>(p);
  ls.q = static_cast<int>(q);
  ls.t = Eigen::Map<const Vector>(t_mat.data(), p * q);
  ls.mu = Eigen::Map<const Vector>(mu_mat.data(), p * q);
  ls.sigma = Matrix(p * q, p * q);
  const double a = nw / (nw - 1.0);
  const double b = 1.0 / (nw - 1.0);
  const Matrix inner = a * ggt - b * g_outer;
  for (Eigen::Index r = 0; r < q; ++r) {
    for (Eigen::Index c = 0; c < q; ++c) {
      ls.sigma.block(r * p, c * p, p, p) = v(r, c) * inner;
    }
  }
  ls.sigma = 0.5 * (ls.sigma + ls.sigma.transpose());
  return ls;
}

PseudoInverse pseudo_inverse(const Matrix& sym, double tol) {
  if (sym.rows() != sym.cols()) throw ValidationError("pseudo_inverse: matrix is not square");
  const double scale = sym.size() > 0 ? std::max(1.0, sym.cwiseAbs().maxCoeff()) : 1.0;
  if (sym.size() > 0 && (sym - sym.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw ValidationError("pseudo_inverse: matrix is not symmetric");
  }
  PseudoInverse out;
  out.inverse = Matrix::Zero(sym.rows(), sym.cols());
  if (sym.size() == 0) return out;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  const Vector& lambda = eig.eigenvalues();
  const double max_ev = lambda.cwiseAbs().maxCoeff();
  if (max_ev <= 0.0) return out;
  const Matrix& u = eig.eigenvectors();
  for (Eigen::Index k = 0; k < lambda.size(); ++k) {
    if (lambda(k) > tol * max_ev) {
      out.inverse += (1.0 / lambda(k)) * u.col(k) * u.col(k).transpose();
      ++out.rank;
    }
  }
  return out;
}

TestResult c_quad(const LinStat& ls) {
  TestResult r;
  r.kind = StatisticKind::Quad;
  const auto pinv = pseudo_inverse(ls.sigma);
  const Vector d = ls.t - ls.mu;
  r.df = pinv.rank;
  if (pinv.rank == 0) {
    r.statistic = 0.0;
    r.p_raw = r.p_adjusted = 1.0;
    return r;
  }
  r.statistic = std::max(0.0, d.dot(pinv.inverse * d));
  r.p_raw = r.p_adjusted = chi2_sf(r.statistic, r.df);
  return r;
}

TestResult c_max(const LinStat& ls) {
  TestResult r;
  r.kind = StatisticKind::Max;
  const double max_var = ls.sigma.diagonal().cwiseAbs().maxCoeff();
  int usable = 0;
  double stat = 0.0;
  for (Eigen::Index z = 0; z < ls.t.size(); ++z) {
    const double var = ls.sigma(z, z);
    if (var <= 0.0 || var <= kRankTolerance * max_var) continue;
    ++usable;
    stat = std::max(stat, std::abs(ls.t(z) - ls.mu(z)) / std::sqrt(var));
  }
  if (usable == 0) throw ValidationError("c_max: every coordinate has zero variance");
  r.statistic = stat;
  r.df = usable;
  // 1 - (1 - 2 Phi(-s))^k, computed without cancellation.
  const double tail = 2.0 * normal_cdf(-stat);
  r.p_raw = tail >= 1.0 ? 1.0 : -std::expm1(usable * std::log1p(-tail));
  r.p_raw = std::clamp(r.p_raw, 0.0, 1.0);
  r.p_adjusted = r.p_raw;
  return r;
}

double chi2_sf(double x, int df) {
  if (df < 1) throw ValidationError("chi2_sf: degrees of freedom must be >= 1");
  if (std::isnan(x)) throw ValidationError("chi2_sf: x is NaN");
  if (x <= 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  return boost::math::gamma_q(0.5 * df, 0.5 * x);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ValidationError("normal_quantile: p must lie in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double bonferroni(double p, std::size_t tests) {
  if (tests < 1) throw ValidationError("bonferroni: need at least one test");
  return std::min(1.0, p * static_cast<double>(tests));
}

}  // namespace coat
