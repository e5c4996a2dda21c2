#pragma once

// Recursive partitioning of method-comparison data into subgroups with
// differing bias and/or limits of agreement.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "coat/agreement.hpp"
#include "coat/dataframe.hpp"
#include "coat/stats.hpp"

namespace coat {

enum class EngineKind {
  CTreeTrafo,     // conditional inference with h = (y, (y - ybar)^2)
  DistTree,       // conditional inference on normal ML scores
  MOB,            // score fluctuation test, log-likelihood split
  CTreeBaseline,  // conditional inference with h = y
};

const char* to_string(EngineKind e);
EngineKind parse_engine(const std::string& name);

struct FitConfig {
  EngineKind engine = EngineKind::CTreeTrafo;
  double alpha = 0.05;
  std::size_t minsplit = 20;
  std::size_t minbucket = 7;
  std::optional<std::size_t> maxdepth;
  bool bonferroni = true;
  StatisticKind statistic = StatisticKind::Quad;
  double mob_trim = 0.1;
  std::size_t max_categorical_levels = 12;
  LoaQuantile loa = LoaQuantile::Normal;

  void validate() const;
};

struct NormalFit {
  double mu_hat = 0.0;
  double sigma_hat = 0.0;
  double loglik = 0.0;
  /// Per-observation (d/dmu, d/dsigma) of the log-likelihood at the estimates.
  Matrix scores;
};

/// Weighted normal ML fit; sigma uses divisor n_w. Throws DegenerateVariance
/// when the included observations are all equal.
NormalFit normal_ml_fit(std::span<const double> y, std::span<const double> weights);
NormalFit normal_ml_fit(std::span<const double> y);

/// Outcome transformation used by the conditional-inference engines.
Matrix engine_transform(EngineKind engine, std::span<const double> y);

/// Linear statistic of a node for one covariate. `y` and `col` hold only the
/// node's observations. Not defined for MOB.
LinStat engine_statistic(EngineKind engine, std::span<const double> y, const Column& col);

/// Parameter-instability test of the score rows along `col`. Continuous
/// columns give the supLM statistic over [trim, 1 - trim]; categorical
/// columns give a chi-squared statistic on per-level score sums. Cut points
/// leaving fewer than `min_segment` rows on either side are skipped.
TestResult mob_fluctuation_test(const Matrix& scores, const Column& col, double trim,
                                std::size_t min_segment = 1);

/// Asymptotic p-value of supLM for `k` parameters and symmetric trimming.
double suplm_pvalue(double statistic, int k, double trim);

struct ThresholdRule {
  double value = 0.0;  // x <= value goes left
};

struct SubsetRule {
  std::vector<int> left_levels;  // 1-based level codes going left
};

struct SplitSpec {
  std::size_t variable = 0;
  std::variant<ThresholdRule, SubsetRule> rule;

  bool goes_left(const Column& col, std::size_t row) const;
};

struct VariableSelection {
  /// One entry per covariate; nullopt when the covariate was not testable.
  std::vector<std::optional<TestResult>> tests;
  std::optional<std::size_t> selected;
  /// Smallest adjusted p-value over the tested covariates.
  std::optional<double> min_p_adjusted;
  std::optional<std::size_t> argmin;
  std::size_t tested = 0;
};

/// Tests every covariate of the node, Bonferroni-adjusts over the testable
/// ones, and picks the smallest adjusted p-value if it is below alpha.
VariableSelection select_split_variable(std::span<const double> y,
                                        std::span<const Column> covariates,
                                        const FitConfig& config);

/// Best binary split of the node in `col`, or nullopt when no candidate
/// leaves minbucket observations on both sides.
std::optional<SplitSpec> find_best_split(std::span<const double> y, const Column& col,
                                         std::size_t variable, const FitConfig& config);

struct TreeNode {
  int id = 0;
  int parent = -1;
  int depth = 0;
  std::size_t n = 0;
  /// Row indices into the fitted dataset; empty for models read from JSON.
  std::vector<std::size_t> members;
  BaEstimates ba;
  std::vector<std::optional<TestResult>> tests;
  std::optional<double> node_p;
  std::optional<std::size_t> node_variable;
  std::optional<SplitSpec> split;
  std::optional<std::pair<int, int>> children;

  bool is_leaf() const { return !children.has_value(); }
};

struct CovariateInfo {
  std::string name;
  ColumnKind kind = ColumnKind::Continuous;
  std::vector<std::string> levels;
};

struct CoatModel {
  FitConfig config;
  std::size_t n = 0;
  std::vector<CovariateInfo> covariates;
  bool mean_covariate = false;
  /// Pre-order; nodes[0] is the root.
  std::vector<TreeNode> nodes;

  const TreeNode& root() const { return nodes.front(); }
  std::vector<int> leaf_ids() const;
  /// Leaf id for every fitted row (requires members).
  std::vector<int> leaf_assignment() const;
};

CoatModel fit_coat(const Dataset& d, const FitConfig& config);

using CovariateValue = std::variant<double, std::string>;

struct Prediction {
  int leaf = 0;
  BaEstimates estimates;
};

Prediction predict_node(const CoatModel& model, std::span<const CovariateValue> row);

}  // namespace coat
