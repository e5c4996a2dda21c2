#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <coat/agreement.hpp>
#include <coat/eval_sim.hpp>
#include <coat/partition.hpp>

namespace coat::cli {

/// Indented text tree: inner nodes with their split rule and test, leaves
/// with n, bias, sd and limits of agreement. Four significant digits.
std::string render_tree_text(const CoatModel& model);

std::string render_ba_table(const BaTestResult& result, double alpha);

inline constexpr double kSvgWidth = 800.0;
inline constexpr double kSvgHeight = 600.0;
inline constexpr double kSvgMargin = 40.0;

/// Linear map from data to SVG coordinates (y axis pointing down).
struct PlotAxes {
  double x_min = 0.0, x_max = 1.0;
  double y_min = 0.0, y_max = 1.0;

  double px(double x) const;
  double py(double y) const;
};

PlotAxes ba_plot_axes(std::span<const double> y, std::span<const double> m, const BaEstimates& est);

struct LeafColoring {
  /// Leaf id per plotted point.
  std::vector<int> leaf_of_point;
};

/// Bland-Altman scatter of (m_i, y_i) with the bias (solid) and both limits
/// of agreement (dashed). Points are coloured by leaf when `coloring` is set.
std::string render_ba_svg(std::span<const double> y, std::span<const double> m, const BaEstimates& est,
                          const std::optional<LeafColoring>& coloring = std::nullopt);

/// Metric against n, one polyline per method, for one scenario.
std::string render_sim_svg(const std::vector<SimCsvRow>& rows, const std::string& scenario,
                           const std::string& metric);

}  // namespace coat::cli
