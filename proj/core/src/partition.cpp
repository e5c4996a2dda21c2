#include "coat/partition.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "coat/error.hpp"

namespace coat {

const char* to_string(EngineKind e) {
  switch (e) {
    case EngineKind::CTreeTrafo: return "ctreetrafo";
    case EngineKind::DistTree: return "disttree";
    case EngineKind::MOB: return "mob";
    case EngineKind::CTreeBaseline: return "ctree";
  }
  return "?";
}

EngineKind parse_engine(const std::string& name) {
  std::string s;
  for (char c : name) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (s == "ctreetrafo" || s == "ctree-trafo" || s == "trafo") return EngineKind::CTreeTrafo;
  if (s == "disttree" || s == "dist") return EngineKind::DistTree;
  if (s == "mob") return EngineKind::MOB;
  if (s == "ctree" || s == "ctreebaseline" || s == "baseline") return EngineKind::CTreeBaseline;
  throw ValidationError("unknown engine '" + name + "' (expected ctreetrafo, disttree, mob or ctree)");
}

void FitConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
  if (minbucket < 2) throw ValidationError("minbucket must be at least 2");
  if (!(mob_trim > 0.0 && mob_trim < 0.5)) throw ValidationError("mob_trim must lie in (0, 0.5)");
  if (max_categorical_levels < 2) throw ValidationError("max_categorical_levels must be at least 2");
  if (max_categorical_levels > 30) throw ValidationError("max_categorical_levels above 30 is not supported");
}

// ---------------------------------------------------------------------------
// Normal model

NormalFit normal_ml_fit(std::span<const double> y, std::span<const double> weights) {
  if (y.size() != weights.size()) throw ValidationError("normal_ml_fit: weights length mismatch");
  double nw = 0.0, sum = 0.0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (weights[i] == 0.0) continue;
    nw += weights[i];
    sum += weights[i] * y[i];
    lo = std::min(lo, y[i]);
    hi = std::max(hi, y[i]);
  }
  if (nw < 2.0) throw ValidationError("normal_ml_fit: fewer than 2 included observations");
  if (lo == hi) throw DegenerateVariance("normal_ml_fit: outcome is constant");

  NormalFit fit;
  fit.mu_hat = sum / nw;
  double ss = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    ss += weights[i] * (y[i] - fit.mu_hat) * (y[i] - fit.mu_hat);
  }
  const double var = ss / nw;
  if (!(var > 0.0)) throw DegenerateVariance("normal_ml_fit: zero variance");
  fit.sigma_hat = std::sqrt(var);
  fit.loglik = -0.5 * nw * (std::log(2.0 * std::numbers::pi * var) + 1.0);
  fit.scores.resize(static_cast<Eigen::Index>(y.size()), 2);
  const double s3 = var * fit.sigma_hat;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const double dev = y[i] - fit.mu_hat;
    fit.scores(r, 0) = dev / var;
    fit.scores(r, 1) = -1.0 / fit.sigma_hat + dev * dev / s3;
  }
  return fit;
}

NormalFit normal_ml_fit(std::span<const double> y) {
  const std::vector<double> w(y.size(), 1.0);
  return normal_ml_fit(y, w);
}

namespace {

double normal_loglik(double n, double var) {
  return -0.5 * n * (std::log(2.0 * std::numbers::pi * var) + 1.0);
}

bool is_testable(const Column& col) {
  if (col.size() < 2) return false;
  if (col.is_categorical()) {
    return std::any_of(col.codes.begin(), col.codes.end(),
                       [&](int c) { return c != col.codes.front(); });
  }
  const auto [lo, hi] = std::minmax_element(col.values.begin(), col.values.end());
  return *lo < *hi;
}

std::vector<int> present_levels(const Column& col) {
  std::vector<int> levels(col.codes.begin(), col.codes.end());
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  return levels;
}

std::vector<std::size_t> order_by(const std::vector<double>& x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  return idx;
}

// Strict improvement up to round-off, so that near-ties keep the earlier
// (smaller) candidate regardless of which engine computed the values.
bool improves(double candidate, double best, bool have_best) {
  return !have_best || candidate > best + 1e-9 * std::abs(best);
}

}  // namespace

Matrix engine_transform(EngineKind engine, std::span<const double> y) {
  switch (engine) {
    case EngineKind::CTreeTrafo: {
      const std::vector<double> w(y.size(), 1.0);
      return h_transform(y, w);
    }
    case EngineKind::DistTree:
    case EngineKind::MOB:
      return normal_ml_fit(y).scores;
    case EngineKind::CTreeBaseline: {
      Matrix h(static_cast<Eigen::Index>(y.size()), 1);
      for (std::size_t i = 0; i < y.size(); ++i) h(static_cast<Eigen::Index>(i), 0) = y[i];
      return h;
    }
  }
  throw ValidationError("unknown engine");
}

LinStat engine_statistic(EngineKind engine, std::span<const double> y, const Column& col) {
  if (engine == EngineKind::MOB) {
    throw ValidationError("MOB uses the fluctuation test, not a linear statistic");
  }
  if (col.size() != y.size()) throw ValidationError("engine_statistic: column length differs from y");
  const std::vector<double> w(y.size(), 1.0);
  return linear_statistic(g_transform(col), engine_transform(engine, y), w);
}

// ---------------------------------------------------------------------------
// Score fluctuation test

double suplm_pvalue(double statistic, int k, double trim) {
  if (k < 1) throw ValidationError("suplm_pvalue: need at least one parameter");
  if (!(trim > 0.0 && trim < 0.5)) throw ValidationError("suplm_pvalue: trim must lie in (0, 0.5)");
  if (!(statistic > 0.0)) return 1.0;
  const double a = 0.5 * k;
  const double log_lambda = 2.0 * std::log((1.0 - trim) / trim);

  // The tail approximation rises below its mode; hold it flat there.
  const double b = k * log_lambda - 1.0;
  const double disc = b * b + 2.0 * log_lambda * (a - 1.0) * (2.0 - k * log_lambda);
  const double mode = disc > 0.0 ? (b + std::sqrt(disc)) / log_lambda : 0.0;
  const double c = std::max(statistic, mode);

  const double log_base = a * std::log(c) - 0.5 * c - a * std::log(2.0) - std::lgamma(a);
  const double bracket = (1.0 - k / c) * log_lambda + 2.0 / c;
  if (bracket <= 0.0) return 1.0;
  return std::clamp(std::exp(log_base) * bracket, 0.0, 1.0);
}

TestResult mob_fluctuation_test(const Matrix& scores, const Column& col, double trim,
                                std::size_t min_segment) {
  const auto n = scores.rows();
  if (static_cast<std::size_t>(n) != col.size()) {
    throw ValidationError("mob_fluctuation_test: column length differs from scores");
  }
  if (n < 2) throw ValidationError("mob_fluctuation_test: need at least 2 observations");
  if (!(trim > 0.0 && trim < 0.5)) throw ValidationError("mob_fluctuation_test: trim must lie in (0, 0.5)");

  const double nn = static_cast<double>(n);
  const Matrix info = scores.transpose() * scores / nn;
  const auto pinv = pseudo_inverse(info);

  TestResult r;
  r.kind = col.is_categorical() ? StatisticKind::Quad : StatisticKind::SupLM;
  if (pinv.rank == 0) {
    r.df = 0;
    return r;
  }

  if (col.is_categorical()) {
    const auto levels = present_levels(col);
    const auto k = static_cast<Eigen::Index>(col.level_count());
    Matrix sums = Matrix::Zero(k, scores.cols());
    std::vector<double> counts(static_cast<std::size_t>(k), 0.0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int code = col.codes[static_cast<std::size_t>(i)];
      sums.row(code - 1) += scores.row(i);
      counts[static_cast<std::size_t>(code - 1)] += 1.0;
    }
    double stat = 0.0;
    for (int level : levels) {
      const Vector s = sums.row(level - 1).transpose();
      stat += s.dot(pinv.inverse * s) / counts[static_cast<std::size_t>(level - 1)];
    }
    r.statistic = stat;
    r.df = pinv.rank * (static_cast<int>(levels.size()) - 1);
    r.p_raw = r.df > 0 ? chi2_sf(stat, r.df) : 1.0;
    r.p_adjusted = r.p_raw;
    return r;
  }

  const auto order = order_by(col.values);
  auto first = static_cast<Eigen::Index>(std::floor(nn * trim));
  first = std::max<Eigen::Index>({first, static_cast<Eigen::Index>(min_segment), 1});
  const Eigen::Index last = std::min<Eigen::Index>(n - first, n - 1);
  if (first > last) {
    r.df = pinv.rank;
    return r;
  }

  Vector cum = Vector::Zero(scores.cols());
  double stat = 0.0;
  for (Eigen::Index i = 1; i <= last; ++i) {
    cum += scores.row(static_cast<Eigen::Index>(order[static_cast<std::size_t>(i - 1)])).transpose();
    if (i < first) continue;
    const double t = static_cast<double>(i) / nn;
    const double lm = cum.dot(pinv.inverse * cum) / nn / (t * (1.0 - t));
    stat = std::max(stat, lm);
  }
  r.statistic = stat;
  r.df = pinv.rank;
  const double eff_trim = std::clamp(static_cast<double>(first) / nn, 1e-6, 0.5 - 1e-6);
  r.p_raw = r.p_adjusted = suplm_pvalue(stat, pinv.rank, eff_trim);
  return r;
}

// ---------------------------------------------------------------------------
// Variable selection

VariableSelection select_split_variable(std::span<const double> y,
                                        std::span<const Column> covariates,
                                        const FitConfig& config) {
  VariableSelection sel;
  sel.tests.resize(covariates.size());

  std::optional<NormalFit> fit;
  Matrix h;
  if (config.engine == EngineKind::MOB) {
    fit = normal_ml_fit(y);
  } else {
    h = engine_transform(config.engine, y);
  }
  const std::vector<double> w(y.size(), 1.0);

  for (std::size_t j = 0; j < covariates.size(); ++j) {
    const Column& col = covariates[j];
    if (col.size() != y.size()) throw ValidationError("covariate '" + col.name + "' length differs from y");
    if (!is_testable(col)) continue;
    if (fit) {
      sel.tests[j] = mob_fluctuation_test(fit->scores, col, config.mob_trim, config.minbucket);
      continue;
    }
    const LinStat ls = linear_statistic(g_transform(col), h, w);
    if (config.statistic == StatisticKind::Max) {
      try {
        sel.tests[j] = c_max(ls);
      } catch (const ValidationError&) {
        continue;
      }
    } else {
      sel.tests[j] = c_quad(ls);
    }
  }

  for (auto& t : sel.tests) sel.tested += t.has_value() ? 1 : 0;
  if (sel.tested == 0) return sel;
  for (std::size_t j = 0; j < sel.tests.size(); ++j) {
    auto& t = sel.tests[j];
    if (!t) continue;
    t->p_adjusted = config.bonferroni ? bonferroni(t->p_raw, sel.tested) : t->p_raw;
    if (!sel.min_p_adjusted || t->p_adjusted < *sel.min_p_adjusted) {
      sel.min_p_adjusted = t->p_adjusted;
      sel.argmin = j;
    }
  }
  if (*sel.min_p_adjusted < config.alpha) sel.selected = sel.argmin;
  return sel;
}

// ---------------------------------------------------------------------------
// Split point search

namespace {

// Standardised two-sample discrepancy of an indicator statistic, evaluated
// from the left group's size and h column sums.
class IndicatorCriterion {
 public:
  IndicatorCriterion(const Matrix& h, StatisticKind kind) : kind_(kind) {
    n_ = static_cast<double>(h.rows());
    mean_ = h.colwise().mean().transpose();
    const Matrix hc = h.rowwise() - mean_.transpose();
    v_ = hc.transpose() * hc / n_;
    pinv_ = pseudo_inverse(v_).inverse;
    max_var_ = v_.diagonal().cwiseAbs().maxCoeff();
  }

  double operator()(double n_left, const Vector& sum_left) const {
    const Vector d = sum_left - n_left * mean_;
    const double scale = n_left * (n_ - n_left) / (n_ - 1.0);
    if (kind_ != StatisticKind::Max) return d.dot(pinv_ * d) / scale;
    double best = 0.0;
    for (Eigen::Index z = 0; z < d.size(); ++z) {
      const double var = v_(z, z);
      if (var <= 0.0 || var <= kRankTolerance * max_var_) continue;
      best = std::max(best, std::abs(d(z)) / std::sqrt(var * scale));
    }
    return best;
  }

 private:
  StatisticKind kind_;
  double n_ = 0.0;
  Vector mean_;
  Matrix v_;
  Matrix pinv_;
  double max_var_ = 0.0;
};

// Running count / mean / sum of squared deviations (Welford) with range.
struct Moments {
  double n = 0.0;
  double mean = 0.0;
  double m2 = 0.0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    n += 1.0;
    const double delta = v - mean;
    mean += delta / n;
    m2 += delta * (v - mean);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }

  static Moments merge(const Moments& a, const Moments& b) {
    if (a.n == 0.0) return b;
    if (b.n == 0.0) return a;
    Moments m;
    m.n = a.n + b.n;
    const double delta = b.mean - a.mean;
    m.mean = a.mean + delta * b.n / m.n;
    m.m2 = a.m2 + b.m2 + delta * delta * a.n * b.n / m.n;
    m.lo = std::min(a.lo, b.lo);
    m.hi = std::max(a.hi, b.hi);
    return m;
  }

  std::optional<double> loglik() const {
    if (n < 2.0 || !(lo < hi) || !(m2 > 0.0)) return std::nullopt;
    return normal_loglik(n, m2 / n);
  }
};

std::optional<SplitSpec> best_threshold_indicator(const Matrix& h, const Column& col,
                                                  std::size_t variable, const FitConfig& config) {
  const IndicatorCriterion crit(h, config.statistic);
  const auto order = order_by(col.values);
  const std::size_t n = order.size();
  Vector cum = Vector::Zero(h.cols());
  bool found = false;
  double best = 0.0, threshold = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    cum += h.row(static_cast<Eigen::Index>(order[i - 1])).transpose();
    const double xl = col.values[order[i - 1]];
    const double xr = col.values[order[i]];
    if (!(xl < xr) || i < config.minbucket || n - i < config.minbucket) continue;
    const double stat = crit(static_cast<double>(i), cum);
    if (improves(stat, best, found)) {
      found = true;
      best = stat;
      threshold = 0.5 * (xl + xr);
    }
  }
  if (!found) return std::nullopt;
  return SplitSpec{variable, ThresholdRule{threshold}};
}

std::optional<SplitSpec> best_threshold_loglik(std::span<const double> y, const Column& col,
                                               std::size_t variable, const FitConfig& config) {
  const auto order = order_by(col.values);
  const std::size_t n = order.size();
  std::vector<Moments> suffix(n + 1);
  for (std::size_t i = n; i-- > 0;) {
    suffix[i] = suffix[i + 1];
    suffix[i].add(y[order[i]]);
  }
  Moments prefix;
  bool found = false;
  double best = 0.0, threshold = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    prefix.add(y[order[i - 1]]);
    const double xl = col.values[order[i - 1]];
    const double xr = col.values[order[i]];
    if (!(xl < xr) || i < config.minbucket || n - i < config.minbucket) continue;
    const auto ll = prefix.loglik();
    const auto lr = suffix[i].loglik();
    if (!ll || !lr) continue;
    const double total = *ll + *lr;
    if (improves(total, best, found)) {
      found = true;
      best = total;
      threshold = 0.5 * (xl + xr);
    }
  }
  if (!found) return std::nullopt;
  return SplitSpec{variable, ThresholdRule{threshold}};
}

std::optional<SplitSpec> best_subset(std::span<const double> y, const Matrix& h, const Column& col,
                                     std::size_t variable, const FitConfig& config) {
  const auto levels = present_levels(col);
  if (levels.size() < 2) return std::nullopt;
  if (levels.size() > config.max_categorical_levels) {
    throw ValidationError("covariate '" + col.name + "' has " + std::to_string(levels.size()) +
                          " levels in this node; exhaustive search is capped at " +
                          std::to_string(config.max_categorical_levels) +
                          " (merge levels or raise the cap)");
  }
  const std::size_t k = levels.size();
  std::vector<std::size_t> slot(col.level_count() + 1, 0);
  for (std::size_t s = 0; s < k; ++s) slot[static_cast<std::size_t>(levels[s])] = s;

  const bool loglik = config.engine == EngineKind::MOB;
  std::vector<double> counts(k, 0.0);
  std::vector<Moments> moments(k);
  Matrix sums = Matrix::Zero(static_cast<Eigen::Index>(k), loglik ? 1 : h.cols());
  for (std::size_t i = 0; i < col.codes.size(); ++i) {
    const std::size_t s = slot[static_cast<std::size_t>(col.codes[i])];
    counts[s] += 1.0;
    if (loglik) {
      moments[s].add(y[i]);
    } else {
      sums.row(static_cast<Eigen::Index>(s)) += h.row(static_cast<Eigen::Index>(i));
    }
  }
  const double n = std::accumulate(counts.begin(), counts.end(), 0.0);
  std::optional<IndicatorCriterion> crit;
  if (!loglik) crit.emplace(h, config.statistic);

  const auto minbucket = static_cast<double>(config.minbucket);
  bool found = false;
  double best = 0.0;
  std::uint64_t best_mask = 0;
  const std::uint64_t masks = std::uint64_t{1} << (k - 1);
  for (std::uint64_t mask = 1; mask < masks; ++mask) {
    double n_left = 0.0;
    for (std::size_t s = 0; s + 1 < k; ++s) {
      if (mask >> s & 1U) n_left += counts[s];
    }
    if (n_left < minbucket || n - n_left < minbucket) continue;
    double value = 0.0;
    if (loglik) {
      Moments left, right;
      for (std::size_t s = 0; s < k; ++s) {
        if (s + 1 < k && (mask >> s & 1U)) {
          left = Moments::merge(left, moments[s]);
        } else {
          right = Moments::merge(right, moments[s]);
        }
      }
      const auto ll = left.loglik();
      const auto lr = right.loglik();
      if (!ll || !lr) continue;
      value = *ll + *lr;
    } else {
      Vector sum_left = Vector::Zero(h.cols());
      for (std::size_t s = 0; s + 1 < k; ++s) {
        if (mask >> s & 1U) sum_left += sums.row(static_cast<Eigen::Index>(s)).transpose();
      }
      value = (*crit)(n_left, sum_left);
    }
    if (improves(value, best, found)) {
      found = true;
      best = value;
      best_mask = mask;
    }
  }
  if (!found) return std::nullopt;
  SubsetRule rule;
  for (std::size_t s = 0; s + 1 < k; ++s) {
    if (best_mask >> s & 1U) rule.left_levels.push_back(levels[s]);
  }
  return SplitSpec{variable, rule};
}

}  // namespace

std::optional<SplitSpec> find_best_split(std::span<const double> y, const Column& col,
                                         std::size_t variable, const FitConfig& config) {
  if (col.size() != y.size()) throw ValidationError("find_best_split: column length differs from y");
  if (y.size() < 2) return std::nullopt;
  if (config.engine == EngineKind::MOB) {
    if (col.is_categorical()) return best_subset(y, Matrix{}, col, variable, config);
    return best_threshold_loglik(y, col, variable, config);
  }
  const Matrix h = engine_transform(config.engine, y);
  if (col.is_categorical()) return best_subset(y, h, col, variable, config);
  return best_threshold_indicator(h, col, variable, config);
}

bool SplitSpec::goes_left(const Column& col, std::size_t row) const {
  if (const auto* t = std::get_if<ThresholdRule>(&rule)) return col.values.at(row) <= t->value;
  const auto& levels = std::get<SubsetRule>(rule).left_levels;
  return std::find(levels.begin(), levels.end(), col.codes.at(row)) != levels.end();
}

// ---------------------------------------------------------------------------
// Tree growing

std::vector<int> CoatModel::leaf_ids() const {
  std::vector<int> ids;
  for (const auto& node : nodes) {
    if (node.is_leaf()) ids.push_back(node.id);
  }
  return ids;
}

std::vector<int> CoatModel::leaf_assignment() const {
  std::vector<int> out(n, -1);
  for (const auto& node : nodes) {
    if (!node.is_leaf()) continue;
    for (auto row : node.members) out.at(row) = node.id;
  }
  return out;
}

namespace {

BaEstimates node_estimates(std::span<const double> y, LoaQuantile loa) {
  if (y.size() >= 2) return ba_estimates(y, loa_quantile(loa, y.size()));
  BaEstimates e;
  e.n = y.size();
  e.bias = y.empty() ? std::numeric_limits<double>::quiet_NaN() : y.front();
  e.sd = e.loa_lower = e.loa_upper = std::numeric_limits<double>::quiet_NaN();
  e.quantile = normal_loa_quantile();
  return e;
}

class TreeGrower {
 public:
  TreeGrower(const Dataset& d, const FitConfig& config, CoatModel& model)
      : data_(d), config_(config), model_(model) {}

  int grow(std::vector<std::size_t> members, int parent, int depth) {
    const int id = static_cast<int>(model_.nodes.size());
    model_.nodes.emplace_back();
    {
      TreeNode& node = model_.nodes.back();
      node.id = id;
      node.parent = parent;
      node.depth = depth;
      node.n = members.size();
    }

    std::vector<double> y;
    y.reserve(members.size());
    for (auto r : members) y.push_back(data_.y[r]);
    std::vector<Column> cols;
    cols.reserve(data_.covariates.size());
    for (const auto& c : data_.covariates) cols.push_back(c.subset(members));

    model_.nodes[static_cast<std::size_t>(id)].ba = node_estimates(y, config_.loa);
    auto split = choose_split(y, cols, id, depth);
    if (!split) {
      model_.nodes[static_cast<std::size_t>(id)].members = std::move(members);
      return id;
    }

    std::vector<std::size_t> left, right;
    const Column& col = cols[split->variable];
    for (std::size_t i = 0; i < members.size(); ++i) {
      (split->goes_left(col, i) ? left : right).push_back(members[i]);
    }
    model_.nodes[static_cast<std::size_t>(id)].split = *split;
    model_.nodes[static_cast<std::size_t>(id)].members = std::move(members);
    const int l = grow(std::move(left), id, depth + 1);
    const int r = grow(std::move(right), id, depth + 1);
    model_.nodes[static_cast<std::size_t>(id)].children = std::make_pair(l, r);
    return id;
  }

 private:
  std::optional<SplitSpec> choose_split(std::span<const double> y, std::span<const Column> cols,
                                        int id, int depth) {
    if (y.size() < config_.minsplit || y.size() < 2) return std::nullopt;
    VariableSelection sel;
    try {
      sel = select_split_variable(y, cols, config_);
    } catch (const DegenerateVariance&) {
      return std::nullopt;
    }
    TreeNode& node = model_.nodes[static_cast<std::size_t>(id)];
    node.tests = sel.tests;
    node.node_p = sel.min_p_adjusted;
    node.node_variable = sel.argmin;
    if (!sel.selected) return std::nullopt;
    if (config_.maxdepth && static_cast<std::size_t>(depth) >= *config_.maxdepth) return std::nullopt;
    try {
      return find_best_split(y, cols[*sel.selected], *sel.selected, config_);
    } catch (const DegenerateVariance&) {
      return std::nullopt;
    }
  }

  const Dataset& data_;
  const FitConfig& config_;
  CoatModel& model_;
};

}  // namespace

CoatModel fit_coat(const Dataset& d, const FitConfig& config) {
  config.validate();
  validate_dataset(d);
  CoatModel model;
  model.config = config;
  model.n = d.n();
  model.mean_covariate = d.include_mean_as_covariate;
  for (const auto& c : d.covariates) model.covariates.push_back({c.name, c.kind, c.levels});
  std::vector<std::size_t> all(d.n());
  std::iota(all.begin(), all.end(), 0);
  TreeGrower(d, config, model).grow(std::move(all), -1, 0);
  return model;
}

Prediction predict_node(const CoatModel& model, std::span<const CovariateValue> row) {
  if (row.size() != model.covariates.size()) {
    throw ValidationError("row has " + std::to_string(row.size()) + " values, model expects " +
                          std::to_string(model.covariates.size()));
  }
  if (model.nodes.empty()) throw ValidationError("model has no nodes");
  const TreeNode* node = &model.root();
  while (!node->is_leaf()) {
    const SplitSpec& split = *node->split;
    const CovariateInfo& info = model.covariates.at(split.variable);
    const CovariateValue& value = row[split.variable];
    bool left = false;
    if (const auto* t = std::get_if<ThresholdRule>(&split.rule)) {
      const auto* x = std::get_if<double>(&value);
      if (!x) throw ValidationError("covariate '" + info.name + "' expects a number");
      left = *x <= t->value;
    } else {
      const auto* label = std::get_if<std::string>(&value);
      if (!label) throw ValidationError("covariate '" + info.name + "' expects a level label");
      auto it = std::find(info.levels.begin(), info.levels.end(), *label);
      if (it == info.levels.end()) {
        throw ValidationError("unseen level '" + *label + "' for covariate '" + info.name + "'");
      }
      const int code = static_cast<int>(it - info.levels.begin()) + 1;
      const auto& lv = std::get<SubsetRule>(split.rule).left_levels;
      left = std::find(lv.begin(), lv.end(), code) != lv.end();
    }
    const int next = left ? node->children->first : node->children->second;
    node = &model.nodes.at(static_cast<std::size_t>(next));
  }
  return {node->id, node->ba};
}

}  // namespace coat
