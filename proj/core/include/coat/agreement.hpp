#pragma once

// Bland-Altman estimates and the two-sample Bland-Altman test.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "coat/dataframe.hpp"
#include "coat/stats.hpp"

namespace coat {

/// Standard-normal 97.5% point used for the limits of agreement.
double normal_loa_quantile();
/// Student-t 97.5% point with n - 1 degrees of freedom.
double student_t_loa_quantile(std::size_t n);

enum class LoaQuantile { Normal, StudentT };

double loa_quantile(LoaQuantile kind, std::size_t n);

struct BaEstimates {
  std::size_t n = 0;
  double bias = 0.0;
  /// Standard deviation with divisor n - 1.
  double sd = 0.0;
  double loa_lower = 0.0;
  double loa_upper = 0.0;
  double quantile = 0.0;
};

/// Bias, sd and limits of agreement. Needs at least two differences.
BaEstimates ba_estimates(std::span<const double> y, double quantile);
BaEstimates ba_estimates(std::span<const double> y);

struct GroupEstimates {
  std::string label;
  BaEstimates estimates;
};

struct BaTestResult {
  TestResult joint;      // equal bias and equal variance
  TestResult mean_only;  // equal bias
  TestResult var_only;   // equal variance
  std::vector<GroupEstimates> groups;
};

/// Chi-squared tests of equal bias and variance between the two levels of a
/// binary categorical column. p-values are not adjusted for multiplicity.
BaTestResult ba_test(std::span<const double> y, const Column& group);

/// Convenience overload with 0/1 group codes, labelled "A" and "B".
BaTestResult ba_test(std::span<const double> y, std::span<const int> group);

enum class Decision { Rejected, Retained, NotAssessed };

const char* to_string(Decision d);

struct SequentialDecisions {
  Decision joint = Decision::Retained;
  Decision mean = Decision::NotAssessed;
  Decision variance = Decision::NotAssessed;
};

/// Joint hypothesis first; the component hypotheses are only looked at once
/// the joint one is rejected. Rejection requires p < alpha.
SequentialDecisions sequential_ba_test(const BaTestResult& result, double alpha);

}  // namespace coat
