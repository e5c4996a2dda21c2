#pragma once

// Method-comparison data: paired measurements, their differences and means,
// and typed covariates.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace coat {

struct MethodPair {
  double m1 = 0.0;
  double m2 = 0.0;
};

enum class ColumnKind { Continuous, Categorical };

/// A covariate. Continuous columns use `values`; categorical columns use
/// `levels` and 1-based `codes` into them.
struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::Continuous;
  std::vector<double> values;
  std::vector<std::string> levels;
  std::vector<int> codes;

  static Column continuous(std::string name, std::vector<double> values);
  static Column categorical(std::string name, std::vector<std::string> levels,
                            std::vector<int> codes);

  bool is_categorical() const { return kind == ColumnKind::Categorical; }
  std::size_t size() const { return is_categorical() ? codes.size() : values.size(); }
  std::size_t level_count() const { return levels.size(); }

  /// Rows `rows` of this column, keeping the full level set.
  Column subset(std::span<const std::size_t> rows) const;
};

struct Dataset {
  std::vector<double> y;
  /// Empty when the differences were supplied directly.
  std::vector<double> mean_values;
  std::vector<Column> covariates;
  /// Set when the last covariate is the derived mean of the two methods.
  bool include_mean_as_covariate = false;

  std::size_t n() const { return y.size(); }
  std::optional<std::size_t> covariate_index(const std::string& name) const;
};

struct Differences {
  std::vector<double> y;
  std::vector<double> m;
};

/// y = m1 - m2 and m = (m1 + m2) / 2 per pair.
Differences derive_differences(std::span<const MethodPair> pairs);

/// Throws ValidationError listing every violated Dataset invariant.
void validate_dataset(const Dataset& d);

inline constexpr const char* kMeanCovariateName = "mean";

struct CsvSchema {
  /// Measurement columns; ignored when `difference` is set.
  std::string method1 = "m1";
  std::string method2 = "m2";
  std::optional<std::string> difference;
  std::vector<std::string> continuous;
  std::vector<std::string> categorical;
  /// When no covariates are declared, take every other column, numeric ones
  /// as continuous and the rest as categorical.
  bool infer_covariates = false;
  /// Columns never used as covariates (e.g. a grouping column).
  std::vector<std::string> exclude;
  bool include_mean_as_covariate = false;
};

struct LoadReport {
  std::size_t raw_rows = 0;
  std::size_t dropped_rows = 0;
  std::string summary() const;
};

struct LoadedData {
  Dataset data;
  LoadReport report;
};

LoadedData load_csv(const std::filesystem::path& path, const CsvSchema& schema);
LoadedData parse_csv(std::istream& in, const CsvSchema& schema);

}  // namespace coat
