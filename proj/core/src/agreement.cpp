#include "coat/agreement.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numeric>

#include "coat/error.hpp"

namespace coat {

double normal_loa_quantile() {
  static const double q = normal_quantile(0.975);
  return q;
}

double student_t_loa_quantile(std::size_t n) {
  if (n < 2) throw ValidationError("t quantile needs n >= 2");
  boost::math::students_t_distribution<double> dist(static_cast<double>(n - 1));
  return boost::math::quantile(dist, 0.975);
}

double loa_quantile(LoaQuantile kind, std::size_t n) {
  return kind == LoaQuantile::Normal ? normal_loa_quantile() : student_t_loa_quantile(n);
}

BaEstimates ba_estimates(std::span<const double> y, double quantile) {
  if (y.size() < 2) throw ValidationError("Bland-Altman estimates need at least 2 differences");
  BaEstimates e;
  e.n = y.size();
  const double n = static_cast<double>(y.size());
  e.bias = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : y) ss += (v - e.bias) * (v - e.bias);
  e.sd = std::sqrt(ss / (n - 1.0));
  e.quantile = quantile;
  e.loa_lower = e.bias - quantile * e.sd;
  e.loa_upper = e.bias + quantile * e.sd;
  return e;
}

BaEstimates ba_estimates(std::span<const double> y) {
  return ba_estimates(y, normal_loa_quantile());
}

BaTestResult ba_test(std::span<const double> y, const Column& group) {
  if (!group.is_categorical() || group.level_count() != 2) {
    throw ValidationError("two-sample Bland-Altman test needs a grouping with exactly 2 levels");
  }
  if (group.size() != y.size()) throw ValidationError("group column length differs from y");

  BaTestResult out;
  for (int level = 1; level <= 2; ++level) {
    std::vector<double> members;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (group.codes[i] == level) members.push_back(y[i]);
    }
    if (members.size() < 2) {
      throw ValidationError("group '" + group.levels[static_cast<std::size_t>(level - 1)] +
                            "' has fewer than 2 observations");
    }
    out.groups.push_back({group.levels[static_cast<std::size_t>(level - 1)], ba_estimates(members)});
  }

  const std::vector<double> w(y.size(), 1.0);
  const Matrix g = g_transform(group);
  const Matrix h = h_transform(y, w);
  out.joint = c_quad(linear_statistic(g, h, w));
  out.mean_only = c_quad(linear_statistic(g, h.col(0), w));
  out.var_only = c_quad(linear_statistic(g, h.col(1), w));
  return out;
}

BaTestResult ba_test(std::span<const double> y, std::span<const int> group) {
  std::vector<int> codes;
  codes.reserve(group.size());
  for (int gcode : group) {
    if (gcode != 0 && gcode != 1) throw ValidationError("group codes must be 0 or 1");
    codes.push_back(gcode + 1);
  }
  return ba_test(y, Column::categorical("group", {"A", "B"}, std::move(codes)));
}

const char* to_string(Decision d) {
  switch (d) {
    case Decision::Rejected: return "rejected";
    case Decision::Retained: return "retained";
    case Decision::NotAssessed: return "not assessed";
  }
  return "?";
}

SequentialDecisions sequential_ba_test(const BaTestResult& result, double alpha) {
  auto decide = [alpha](const TestResult& t) {
    return t.p_adjusted < alpha ? Decision::Rejected : Decision::Retained;
  };
  SequentialDecisions d;
  d.joint = decide(result.joint);
  if (d.joint == Decision::Rejected) {
    d.mean = decide(result.mean_only);
    d.variance = decide(result.var_only);
  }
  return d;
}

}  // namespace coat
