#include "coat/eval_sim.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include "coat/error.hpp"

namespace coat {

// ---------------------------------------------------------------------------
// Adjusted Rand index

Partition Partition::dense(std::span<const int> labels) {
  std::map<int, int> code;
  Partition p;
  p.labels.reserve(labels.size());
  for (int l : labels) {
    auto [it, inserted] = code.emplace(l, static_cast<int>(code.size()));
    p.labels.push_back(it->second);
  }
  return p;
}

namespace {

double pairs(double x) { return 0.5 * x * (x - 1.0); }

}  // namespace

double adjusted_rand_index(const Partition& a, const Partition& b) {
  if (a.size() != b.size()) throw ValidationError("adjusted_rand_index: partitions differ in length");
  std::map<std::pair<int, int>, double> cells;
  std::map<int, double> rows, cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cells[{a.labels[i], b.labels[i]}] += 1.0;
    rows[a.labels[i]] += 1.0;
    cols[b.labels[i]] += 1.0;
  }
  double index = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (const auto& [key, count] : cells) index += pairs(count);
  for (const auto& [key, count] : rows) sum_a += pairs(count);
  for (const auto& [key, count] : cols) sum_b += pairs(count);
  const double total = pairs(static_cast<double>(a.size()));
  const double expected = total > 0.0 ? sum_a * sum_b / total : 0.0;
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index - expected == 0.0) return 1.0;
  return (index - expected) / (max_index - expected);
}

// ---------------------------------------------------------------------------
// Scenarios

std::string Scenario::name() const {
  switch (kind) {
    case ScenarioKind::Null: return "null";
    case ScenarioKind::Stump: return "stump" + std::to_string(k);
    case ScenarioKind::Tree: return "tree" + std::to_string(k);
  }
  return "?";
}

Scenario Scenario::parse(const std::string& name) {
  std::string s;
  for (char c : name) {
    if (c != '-' && c != '_') s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (s == "null") return {ScenarioKind::Null, 0};
  if (s == "stump1" || s == "stump2" || s == "stump3") return {ScenarioKind::Stump, s.back() - '0'};
  if (s == "tree1" || s == "tree2") return {ScenarioKind::Tree, s.back() - '0'};
  throw ValidationError("unknown scenario '" + name + "' (expected null, stump1-3, tree1-2)");
}

namespace {

struct Quantiles {
  double q25, q40, q60, q75;
};

const Quantiles& quantiles() {
  static const Quantiles q{normal_quantile(0.25), normal_quantile(0.40), normal_quantile(0.60),
                           normal_quantile(0.75)};
  return q;
}

constexpr std::size_t kCovariates = 5;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

SimulatedData generate_scenario(const Scenario& s, std::size_t n, std::uint64_t seed) {
  if ((s.kind == ScenarioKind::Stump && (s.k < 1 || s.k > 3)) ||
      (s.kind == ScenarioKind::Tree && (s.k < 1 || s.k > 2))) {
    throw ValidationError("invalid scenario index " + std::to_string(s.k));
  }
  const auto& q = quantiles();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<std::vector<double>> x(kCovariates, std::vector<double>(n));
  std::vector<double> y(n);
  std::vector<int> truth(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < kCovariates; ++j) x[j][i] = normal(rng);
    const double z = normal(rng);
    const double x1 = x[0][i];
    const double x2 = x[1][i];
    double mu = 0.0, sigma = 1.0;
    switch (s.kind) {
      case ScenarioKind::Null:
        break;
      case ScenarioKind::Stump: {
        const bool upper = x1 > q.q25;
        truth[i] = upper ? 1 : 0;
        if (s.k == 1) mu = upper ? 0.3 : 0.0;
        if (s.k == 2) sigma = upper ? 2.0 : 1.0;
        if (s.k == 3) {
          mu = upper ? 0.4 : 0.0;
          sigma = upper ? 2.0 : 1.0;
        }
        break;
      }
      case ScenarioKind::Tree: {
        if (s.k == 1) {
          const bool wide = x2 >= q.q75;
          const bool shifted = x1 >= q.q40;
          mu = wide ? 0.3 : (shifted ? 0.5 : 0.0);
          sigma = wide ? 2.0 : 1.0;
          truth[i] = wide ? 0 : (shifted ? 2 : 1);
        } else {
          const bool shifted = x1 >= q.q40;
          const bool wide = x2 >= q.q60;
          mu = shifted ? 0.5 : 0.0;
          sigma = wide ? 2.0 : 1.0;
          truth[i] = 2 * static_cast<int>(shifted) + static_cast<int>(wide);
        }
        break;
      }
    }
    y[i] = mu + sigma * z;
  }

  SimulatedData out;
  out.data.y = std::move(y);
  for (std::size_t j = 0; j < kCovariates; ++j) {
    out.data.covariates.push_back(Column::continuous("X" + std::to_string(j + 1), std::move(x[j])));
  }
  out.truth = Partition::dense(truth);
  return out;
}

// ---------------------------------------------------------------------------
// Study runner

void SimConfig::validate() const {
  if (scenarios.empty()) throw ValidationError("simulation needs at least one scenario");
  if (methods.empty()) throw ValidationError("simulation needs at least one method");
  if (sample_sizes.empty()) throw ValidationError("simulation needs at least one sample size");
  if (replications < 1) throw ValidationError("replications must be at least 1");
  for (auto n : sample_sizes) {
    if (n < 10) throw ValidationError("sample sizes must be at least 10");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
}

std::uint64_t replication_seed(std::uint64_t base, const Scenario& s, std::size_t n, std::size_t r) {
  std::uint64_t h = splitmix64(base);
  h = splitmix64(h ^ (static_cast<std::uint64_t>(s.kind) * 16 + static_cast<std::uint64_t>(s.k)));
  h = splitmix64(h ^ static_cast<std::uint64_t>(n));
  return splitmix64(h ^ static_cast<std::uint64_t>(r));
}

const SimCell* SimResult::find(const Scenario& s, EngineKind method, std::size_t n) const {
  for (const auto& c : cells) {
    if (c.scenario == s && c.method == method && c.n == n) return &c;
  }
  return nullptr;
}

namespace {

struct Outcome {
  bool ok = false;
  bool reject = false;
  bool power = false;
  bool structure = false;
  double ari = 0.0;
  double seconds = 0.0;
};

Estimate proportion(std::size_t hits, std::size_t total) {
  if (total == 0) return {std::nan(""), std::nan(""), std::nan("")};
  const double p = static_cast<double>(hits) / static_cast<double>(total);
  const double half = 1.959963984540054 * std::sqrt(p * (1.0 - p) / static_cast<double>(total));
  return {p, std::max(0.0, p - half), std::min(1.0, p + half)};
}

Estimate mean_estimate(const std::vector<double>& v) {
  if (v.empty()) return {std::nan(""), std::nan(""), std::nan("")};
  const double m = static_cast<double>(v.size());
  double sum = 0.0;
  for (double x : v) sum += x;
  const double mean = sum / m;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = v.size() > 1 ? std::sqrt(ss / (m - 1.0)) : 0.0;
  const double half = 1.959963984540054 * sd / std::sqrt(m);
  return {mean, mean - half, mean + half};
}

Outcome evaluate(const SimulatedData& sim, const Scenario& s, const FitConfig& cfg) {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const CoatModel model = fit_coat(sim.data, cfg);
  const TreeNode& root = model.root();
  o.reject = root.node_p && *root.node_p < cfg.alpha;
  o.power = o.reject && root.node_variable == 0;
  o.ari = adjusted_rand_index(Partition::dense(model.leaf_assignment()), sim.truth);
  if (s.kind == ScenarioKind::Tree && s.k == 1 && root.split && root.split->variable == 1) {
    const TreeNode& left = model.nodes.at(static_cast<std::size_t>(root.children->first));
    o.structure = left.split && left.split->variable == 0;
  }
  o.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.ok = true;
  return o;
}

}  // namespace

SimResult run_simulation(const SimConfig& cfg) {
  cfg.validate();
  const std::size_t n_methods = cfg.methods.size();
  struct Task {
    std::size_t scenario, size, rep;
  };
  std::vector<Task> tasks;
  for (std::size_t s = 0; s < cfg.scenarios.size(); ++s) {
    for (std::size_t z = 0; z < cfg.sample_sizes.size(); ++z) {
      for (std::size_t r = 0; r < cfg.replications; ++r) tasks.push_back({s, z, r});
    }
  }
  std::vector<Outcome> outcomes(tasks.size() * n_methods);

  auto run_task = [&](std::size_t t) {
    const Task& task = tasks[t];
    const Scenario& sc = cfg.scenarios[task.scenario];
    const std::size_t n = cfg.sample_sizes[task.size];
    SimulatedData sim;
    try {
      sim = generate_scenario(sc, n, replication_seed(cfg.seed, sc, n, task.rep));
    } catch (const std::exception&) {
      return;
    }
    for (std::size_t m = 0; m < n_methods; ++m) {
      FitConfig fc = cfg.fit;
      fc.engine = cfg.methods[m];
      fc.alpha = cfg.alpha;
      try {
        outcomes[t * n_methods + m] = evaluate(sim, sc, fc);
      } catch (const std::exception&) {
        outcomes[t * n_methods + m].ok = false;
      }
    }
  };

  unsigned threads = cfg.threads ? cfg.threads : std::max(1U, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, tasks.size()));
  if (threads <= 1) {
    for (std::size_t t = 0; t < tasks.size(); ++t) run_task(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < threads; ++i) {
      pool.emplace_back([&] {
        for (std::size_t t = next++; t < tasks.size(); t = next++) run_task(t);
      });
    }
  }

  SimResult result;
  for (std::size_t s = 0; s < cfg.scenarios.size(); ++s) {
    const Scenario& sc = cfg.scenarios[s];
    for (std::size_t m = 0; m < n_methods; ++m) {
      for (std::size_t z = 0; z < cfg.sample_sizes.size(); ++z) {
        SimCell cell;
        cell.scenario = sc;
        cell.method = cfg.methods[m];
        cell.n = cfg.sample_sizes[z];
        std::size_t rejects = 0, powers = 0, structures = 0;
        std::vector<double> aris;
        for (std::size_t t = 0; t < tasks.size(); ++t) {
          if (tasks[t].scenario != s || tasks[t].size != z) continue;
          const Outcome& o = outcomes[t * n_methods + m];
          if (!o.ok) {
            ++cell.errors;
            continue;
          }
          ++cell.completed;
          rejects += o.reject;
          powers += o.power;
          structures += o.structure;
          aris.push_back(o.ari);
          cell.wall_seconds += o.seconds;
        }
        cell.rejection = proportion(rejects, cell.completed);
        if (sc.kind == ScenarioKind::Stump) cell.power = proportion(powers, cell.completed);
        if (sc.kind == ScenarioKind::Tree && sc.k == 1) cell.structure = proportion(structures, cell.completed);
        cell.ari = mean_estimate(aris);
        result.cells.push_back(cell);
      }
    }
  }
  return result;
}

namespace {

std::string fmt_number(double v) {
  if (std::isnan(v)) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

void write_sim_csv(const SimResult& result, std::ostream& out) {
  out << "scenario,method,n,metric,value,ci_low,ci_high\n";
  for (const auto& c : result.cells) {
    auto row = [&](const char* metric, const Estimate& e) {
      out << c.scenario.name() << ',' << to_string(c.method) << ',' << c.n << ',' << metric << ','
          << fmt_number(e.value) << ',' << fmt_number(e.ci_low) << ',' << fmt_number(e.ci_high) << '\n';
    };
    row("rejection", c.rejection);
    if (c.power) row("power", *c.power);
    row("ari", c.ari);
    if (c.structure) row("structure", *c.structure);
    const auto errors = static_cast<double>(c.errors);
    row("errors", {errors, errors, errors});
  }
}

std::vector<SimCsvRow> read_sim_csv(std::istream& in) {
  std::vector<SimCsvRow> rows;
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("simulation CSV is empty");
  std::size_t line_no = 1;
  auto parse_double = [&](const std::string& s) {
    if (s == "NA") return std::nan("");
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ValidationError("bad number '" + s + "' on line " + std::to_string(line_no));
    }
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 7) throw ValidationError("simulation CSV line " + std::to_string(line_no) + " needs 7 fields");
    SimCsvRow r;
    r.scenario = f[0];
    r.method = f[1];
    r.n = static_cast<std::size_t>(parse_double(f[2]));
    r.metric = f[3];
    r.estimate = {parse_double(f[4]), parse_double(f[5]), parse_double(f[6])};
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace coat
