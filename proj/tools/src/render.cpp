#include "coat_cli/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include <coat/error.hpp>

namespace coat::cli {

namespace {

std::string sig4(double v) {
  if (std::isnan(v)) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

const char* statistic_label(StatisticKind k) {
  switch (k) {
    case StatisticKind::Quad: return "χ²";
    case StatisticKind::Max: return "z";
    case StatisticKind::SupLM: return "supLM";
  }
  return "?";
}

std::string level_set(const CovariateInfo& info, const std::vector<int>& codes) {
  std::string s = "{";
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (i) s += ", ";
    s += info.levels.at(static_cast<std::size_t>(codes[i] - 1));
  }
  return s + "}";
}

// Condition text for the edge from a parent into its left or right child.
std::string edge_text(const CoatModel& model, const SplitSpec& split, bool left) {
  const CovariateInfo& info = model.covariates.at(split.variable);
  if (const auto* t = std::get_if<ThresholdRule>(&split.rule)) {
    return info.name + (left ? " ≤ " : " > ") + sig4(t->value);
  }
  const auto& lv = std::get<SubsetRule>(split.rule).left_levels;
  if (left) return info.name + " ∈ " + level_set(info, lv);
  std::vector<int> rest;
  for (int c = 1; c <= static_cast<int>(info.levels.size()); ++c) {
    if (std::find(lv.begin(), lv.end(), c) == lv.end()) rest.push_back(c);
  }
  return info.name + " ∈ " + level_set(info, rest);
}

void render_node(const CoatModel& model, int id, const std::string& edge, std::ostringstream& os) {
  const TreeNode& node = model.nodes.at(static_cast<std::size_t>(id));
  os << std::string(static_cast<std::size_t>(node.depth) * 4, ' ') << '[' << node.id << "] ";
  if (!edge.empty()) os << edge << ": ";
  os << "n=" << node.n;
  if (node.is_leaf()) {
    const auto& ba = node.ba;
    os << ", bias=" << sig4(ba.bias) << ", sd=" << sig4(ba.sd) << ", LoA=[" << sig4(ba.loa_lower) << ", "
       << sig4(ba.loa_upper) << "]\n";
    return;
  }
  const SplitSpec& split = *node.split;
  os << ", split on " << model.covariates.at(split.variable).name;
  if (split.variable < node.tests.size() && node.tests[split.variable]) {
    const TestResult& t = *node.tests[split.variable];
    os << " (" << statistic_label(t.kind) << '=' << sig4(t.statistic) << ", df=" << t.df
       << ", p=" << sig4(t.p_adjusted) << ')';
  }
  os << '\n';
  render_node(model, node.children->first, edge_text(model, split, true), os);
  render_node(model, node.children->second, edge_text(model, split, false), os);
}

const char* kPalette[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a",
                          "#66a61e", "#e6ab02", "#a6761d", "#666666"};

std::pair<double, double> padded(double lo, double hi) {
  if (!(hi > lo)) return {lo - 1.0, hi + 1.0};
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

void svg_open(std::ostringstream& os) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << kSvgWidth << ' ' << kSvgHeight
     << "\" width=\"" << kSvgWidth << "\" height=\"" << kSvgHeight << "\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << kSvgWidth << "\" height=\"" << kSvgHeight
     << "\" style=\"fill:#ffffff\"/>\n";
  os << "<rect x=\"" << kSvgMargin << "\" y=\"" << kSvgMargin << "\" width=\"" << kSvgWidth - 2 * kSvgMargin
     << "\" height=\"" << kSvgHeight - 2 * kSvgMargin << "\" style=\"fill:none;stroke:#000000;stroke-width:1\"/>\n";
}

void axis_labels(std::ostringstream& os, const PlotAxes& ax, const std::string& xlabel,
                 const std::string& ylabel) {
  const std::string font = "font-family:sans-serif;font-size:12px;fill:#000000";
  os << "<text x=\"" << kSvgWidth / 2 << "\" y=\"" << kSvgHeight - 10 << "\" style=\"" << font
     << ";text-anchor:middle\">" << xml_escape(xlabel) << "</text>\n";
  os << "<text x=\"14\" y=\"" << kSvgHeight / 2 << "\" transform=\"rotate(-90 14 " << kSvgHeight / 2
     << ")\" style=\"" << font << ";text-anchor:middle\">" << xml_escape(ylabel) << "</text>\n";
  os << "<text x=\"" << kSvgMargin << "\" y=\"" << kSvgHeight - kSvgMargin + 14 << "\" style=\"" << font
     << "\">" << sig4(ax.x_min) << "</text>\n";
  os << "<text x=\"" << kSvgWidth - kSvgMargin << "\" y=\"" << kSvgHeight - kSvgMargin + 14 << "\" style=\""
     << font << ";text-anchor:end\">" << sig4(ax.x_max) << "</text>\n";
  os << "<text x=\"" << kSvgMargin - 4 << "\" y=\"" << kSvgHeight - kSvgMargin << "\" style=\"" << font
     << ";text-anchor:end\">" << sig4(ax.y_min) << "</text>\n";
  os << "<text x=\"" << kSvgMargin - 4 << "\" y=\"" << kSvgMargin + 10 << "\" style=\"" << font
     << ";text-anchor:end\">" << sig4(ax.y_max) << "</text>\n";
}

}  // namespace

std::string render_tree_text(const CoatModel& model) {
  if (model.nodes.empty()) throw ValidationError("model has no nodes");
  std::ostringstream os;
  render_node(model, 0, "", os);
  return os.str();
}

std::string render_ba_table(const BaTestResult& result, double alpha) {
  const auto d = sequential_ba_test(result, alpha);
  std::ostringstream os;
  os << "test       statistic  df  p-value    decision\n";
  auto row = [&](const char* name, const TestResult& t, Decision dec) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-10s %-10s %-3d %-10s %s\n", name, sig4(t.statistic).c_str(), t.df,
                  sig4(t.p_raw).c_str(), to_string(dec));
    os << buf;
  };
  row("joint", result.joint, d.joint);
  row("bias", result.mean_only, d.mean);
  row("variance", result.var_only, d.variance);
  os << '\n';
  for (const auto& g : result.groups) {
    os << g.label << ": n=" << g.estimates.n << ", bias=" << sig4(g.estimates.bias)
       << ", sd=" << sig4(g.estimates.sd) << ", LoA=[" << sig4(g.estimates.loa_lower) << ", "
       << sig4(g.estimates.loa_upper) << "]\n";
  }
  return os.str();
}

double PlotAxes::px(double x) const {
  return kSvgMargin + (x - x_min) / (x_max - x_min) * (kSvgWidth - 2 * kSvgMargin);
}

double PlotAxes::py(double y) const {
  return kSvgHeight - kSvgMargin - (y - y_min) / (y_max - y_min) * (kSvgHeight - 2 * kSvgMargin);
}

PlotAxes ba_plot_axes(std::span<const double> y, std::span<const double> m, const BaEstimates& est) {
  if (y.empty() || y.size() != m.size()) {
    throw ValidationError("Bland-Altman plot needs equally long, non-empty y and m");
  }
  const auto [mlo, mhi] = std::minmax_element(m.begin(), m.end());
  const auto [ylo, yhi] = std::minmax_element(y.begin(), y.end());
  double lo = *ylo, hi = *yhi;
  for (double v : {est.bias, est.loa_lower, est.loa_upper}) {
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  PlotAxes ax;
  std::tie(ax.x_min, ax.x_max) = padded(*mlo, *mhi);
  std::tie(ax.y_min, ax.y_max) = padded(lo, hi);
  return ax;
}

std::string render_ba_svg(std::span<const double> y, std::span<const double> m, const BaEstimates& est,
                          const std::optional<LeafColoring>& coloring) {
  const PlotAxes ax = ba_plot_axes(y, m, est);
  if (coloring && coloring->leaf_of_point.size() != y.size()) {
    throw ValidationError("leaf colouring must have one entry per point");
  }
  std::map<int, std::size_t> leaf_slot;
  if (coloring) {
    for (int leaf : coloring->leaf_of_point) leaf_slot.emplace(leaf, 0);
    std::size_t k = 0;
    for (auto& [leaf, slot] : leaf_slot) slot = k++;
  }

  std::ostringstream os;
  svg_open(os);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const char* colour = "#333333";
    if (coloring) colour = kPalette[leaf_slot.at(coloring->leaf_of_point[i]) % std::size(kPalette)];
    os << "<circle cx=\"" << coord(ax.px(m[i])) << "\" cy=\"" << coord(ax.py(y[i])) << "\" r=\"3\" style=\"fill:"
       << colour << ";fill-opacity:0.7\"/>\n";
  }
  auto hline = [&](double v, const char* dash) {
    if (!std::isfinite(v)) return;
    os << "<line x1=\"" << coord(kSvgMargin) << "\" y1=\"" << coord(ax.py(v)) << "\" x2=\""
       << coord(kSvgWidth - kSvgMargin) << "\" y2=\"" << coord(ax.py(v))
       << "\" style=\"stroke:#000000;stroke-width:1.5" << dash << "\"/>\n";
  };
  hline(est.bias, "");
  hline(est.loa_lower, ";stroke-dasharray:6,4");
  hline(est.loa_upper, ";stroke-dasharray:6,4");
  axis_labels(os, ax, "mean of methods", "difference");

  if (coloring) {
    const std::string font = "font-family:sans-serif;font-size:12px;fill:#000000";
    double ly = kSvgMargin + 8;
    for (const auto& [leaf, slot] : leaf_slot) {
      os << "<rect x=\"" << kSvgWidth - kSvgMargin - 90 << "\" y=\"" << ly << "\" width=\"10\" height=\"10\" style=\"fill:"
         << kPalette[slot % std::size(kPalette)] << "\"/>\n";
      os << "<text x=\"" << kSvgWidth - kSvgMargin - 75 << "\" y=\"" << ly + 9 << "\" style=\"" << font
         << "\">node " << leaf << "</text>\n";
      ly += 16;
    }
  }
  os << "</svg>\n";
  return os.str();
}

std::string render_sim_svg(const std::vector<SimCsvRow>& rows, const std::string& scenario,
                           const std::string& metric) {
  std::map<std::string, std::vector<std::pair<double, double>>> series;
  for (const auto& r : rows) {
    if (r.scenario != scenario || r.metric != metric || std::isnan(r.estimate.value)) continue;
    series[r.method].emplace_back(static_cast<double>(r.n), r.estimate.value);
  }
  if (series.empty()) {
    throw ValidationError("no '" + metric + "' rows for scenario '" + scenario + "'");
  }
  double xlo = INFINITY, xhi = -INFINITY;
  for (auto& [method, pts] : series) {
    std::sort(pts.begin(), pts.end());
    xlo = std::min(xlo, pts.front().first);
    xhi = std::max(xhi, pts.back().first);
  }
  PlotAxes ax;
  std::tie(ax.x_min, ax.x_max) = padded(xlo, xhi);
  ax.y_min = metric == "ari" ? -0.05 : 0.0;
  ax.y_max = 1.0;

  std::ostringstream os;
  svg_open(os);
  std::size_t slot = 0;
  const std::string font = "font-family:sans-serif;font-size:12px;fill:#000000";
  for (const auto& [method, pts] : series) {
    const char* colour = kPalette[slot % std::size(kPalette)];
    os << "<polyline points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
      os << (i ? " " : "") << coord(ax.px(pts[i].first)) << ',' << coord(ax.py(pts[i].second));
    }
    os << "\" style=\"fill:none;stroke:" << colour << ";stroke-width:2\"/>\n";
    const double ly = kSvgMargin + 8 + 16.0 * static_cast<double>(slot);
    os << "<rect x=\"" << kSvgMargin + 10 << "\" y=\"" << ly << "\" width=\"10\" height=\"10\" style=\"fill:" << colour
       << "\"/>\n";
    os << "<text x=\"" << kSvgMargin + 25 << "\" y=\"" << ly + 9 << "\" style=\"" << font << "\">"
       << xml_escape(method) << "</text>\n";
    ++slot;
  }
  axis_labels(os, ax, "n", metric + " (" + scenario + ")");
  os << "</svg>\n";
  return os.str();
}

}  // namespace coat::cli
