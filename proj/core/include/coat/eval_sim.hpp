#pragma once

// Adjusted Rand index, the Null / Stump / Tree data generators and the
// Monte-Carlo study runner.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "coat/dataframe.hpp"
#include "coat/partition.hpp"

namespace coat {

struct Partition {
  std::vector<int> labels;

  /// Relabels to 0..K-1 in first-appearance order.
  static Partition dense(std::span<const int> labels);
  std::size_t size() const { return labels.size(); }
};

/// Hubert-Arabie adjusted Rand index; 1 when both partitions are a single
/// cluster.
double adjusted_rand_index(const Partition& a, const Partition& b);

enum class ScenarioKind { Null, Stump, Tree };

struct Scenario {
  ScenarioKind kind = ScenarioKind::Null;
  int k = 0;  // Stump: 1..3, Tree: 1..2

  std::string name() const;
  static Scenario parse(const std::string& name);
  bool operator==(const Scenario&) const = default;
};

struct SimulatedData {
  Dataset data;
  Partition truth;
};

/// Five iid standard-normal covariates X1..X5 and an outcome drawn per the
/// scenario. Deterministic in `seed`.
SimulatedData generate_scenario(const Scenario& s, std::size_t n, std::uint64_t seed);

struct SimConfig {
  std::vector<Scenario> scenarios;
  std::vector<EngineKind> methods;
  std::vector<std::size_t> sample_sizes;
  std::size_t replications = 100;
  std::uint64_t seed = 1;
  double alpha = 0.05;
  /// 0 means hardware concurrency.
  unsigned threads = 0;
  /// minsplit, minbucket etc. for every fit; engine and alpha are overridden.
  FitConfig fit;

  void validate() const;
};

/// Seed of replication `r`; shared by all methods.
std::uint64_t replication_seed(std::uint64_t base, const Scenario& s, std::size_t n, std::size_t r);

struct Estimate {
  double value = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

struct SimCell {
  Scenario scenario;
  EngineKind method = EngineKind::CTreeTrafo;
  std::size_t n = 0;
  std::size_t completed = 0;
  std::size_t errors = 0;
  /// Root node significant on any covariate.
  Estimate rejection;
  /// Root node significant with X1 selected (Stump scenarios).
  std::optional<Estimate> power;
  Estimate ari;
  /// Root split on X2 with a split on X1 in its left child (Tree k = 1).
  std::optional<Estimate> structure;
  double wall_seconds = 0.0;
};

struct SimResult {
  std::vector<SimCell> cells;

  const SimCell* find(const Scenario& s, EngineKind method, std::size_t n) const;
};

SimResult run_simulation(const SimConfig& cfg);

/// scenario,method,n,metric,value,ci_low,ci_high
void write_sim_csv(const SimResult& result, std::ostream& out);

struct SimCsvRow {
  std::string scenario;
  std::string method;
  std::size_t n = 0;
  std::string metric;
  Estimate estimate;
};

std::vector<SimCsvRow> read_sim_csv(std::istream& in);

}  // namespace coat
