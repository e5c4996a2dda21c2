#include "coat_cli/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>

#include <coat/agreement.hpp>
#include <coat/dataframe.hpp>
#include <coat/error.hpp>
#include <coat/eval_sim.hpp>
#include <coat/model_io.hpp>
#include <coat/partition.hpp>

#include "coat_cli/render.hpp"

namespace coat::cli {

namespace {

struct DataOptions {
  std::string input;
  std::string m1 = "m1";
  std::string m2 = "m2";
  std::string diff;
  std::vector<std::string> continuous;
  std::vector<std::string> categorical;
  std::vector<std::string> exclude;

  void add_to(CLI::App& app, bool covariates) {
    app.add_option("input", input, "CSV file with a header row")->required();
    app.add_option("--m1", m1, "Column with method 1 measurements")->capture_default_str();
    app.add_option("--m2", m2, "Column with method 2 measurements")->capture_default_str();
    app.add_option("--diff", diff, "Column with precomputed differences (instead of --m1/--m2)");
    if (covariates) {
      app.add_option("--cont", continuous, "Continuous covariates (default: infer from remaining columns)")
          ->delimiter(',');
      app.add_option("--cat", categorical, "Categorical covariates")->delimiter(',');
      app.add_option("--exclude", exclude, "Columns never inferred as covariates (e.g. an id)")->delimiter(',');
    }
  }

  CsvSchema schema() const {
    CsvSchema s;
    s.method1 = m1;
    s.method2 = m2;
    if (!diff.empty()) s.difference = diff;
    s.continuous = continuous;
    s.categorical = categorical;
    s.exclude = exclude;
    return s;
  }
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot write '" + path + "'");
  f << content;
  if (!f) throw ValidationError("failed writing '" + path + "'");
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

StatisticKind parse_statistic(const std::string& s) {
  if (s == "quad") return StatisticKind::Quad;
  if (s == "max") return StatisticKind::Max;
  throw ValidationError("statistic must be quad or max");
}

template <typename T, typename F>
std::vector<T> parse_list(const std::vector<std::string>& names, F parse) {
  std::vector<T> out;
  for (const auto& n : names) out.push_back(parse(n));
  return out;
}

const std::vector<EngineKind> kAllMethods = {EngineKind::CTreeTrafo, EngineKind::DistTree, EngineKind::MOB,
                                             EngineKind::CTreeBaseline};

SimConfig preset(const std::string& name) {
  SimConfig cfg;
  cfg.methods = kAllMethods;
  if (name == "type1") {
    cfg.scenarios = {Scenario::parse("null")};
    cfg.sample_sizes = {50, 100, 200, 500, 1000};
    cfg.replications = 500;
  } else if (name == "stump") {
    cfg.scenarios = {Scenario::parse("stump1"), Scenario::parse("stump2"), Scenario::parse("stump3")};
    cfg.sample_sizes = {100, 250, 500, 1000};
    cfg.replications = 500;
  } else if (name == "tree") {
    cfg.scenarios = {Scenario::parse("tree1"), Scenario::parse("tree2")};
    cfg.sample_sizes = {100, 250, 500, 1000};
    cfg.replications = 500;
  } else if (name == "full") {
    cfg.scenarios = parse_list<Scenario>({"null", "stump1", "stump2", "stump3", "tree1", "tree2"}, Scenario::parse);
    for (std::size_t n = 50; n <= 1000; n += 50) cfg.sample_sizes.push_back(n);
    cfg.replications = 10000;
  } else {
    throw ValidationError("unknown preset '" + name + "' (expected type1, stump, tree or full)");
  }
  return cfg;
}

SimConfig config_from_json(const std::string& text) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("simulation config does not parse: ") + e.what());
  }
  SimConfig cfg;
  try {
    cfg.scenarios = parse_list<Scenario>(j.at("scenarios").get<std::vector<std::string>>(), Scenario::parse);
    cfg.methods = j.contains("methods")
                      ? parse_list<EngineKind>(j.at("methods").get<std::vector<std::string>>(), parse_engine)
                      : kAllMethods;
    cfg.sample_sizes = j.at("n").get<std::vector<std::size_t>>();
    cfg.replications = j.value("replications", cfg.replications);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.alpha = j.value("alpha", cfg.alpha);
    cfg.fit.minsplit = j.value("minsplit", cfg.fit.minsplit);
    cfg.fit.minbucket = j.value("minbucket", cfg.fit.minbucket);
    cfg.fit.mob_trim = j.value("trim", cfg.fit.mob_trim);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed simulation config: ") + e.what());
  }
  return cfg;
}

unsigned threads_from_env() {
  const char* v = std::getenv("COAT_THREADS");
  if (!v || !*v) return 0;
  try {
    const long n = std::stol(v);
    return n > 0 ? static_cast<unsigned>(n) : 0;
  } catch (const std::exception&) {
    throw ValidationError(std::string("COAT_THREADS must be a positive integer, got '") + v + "'");
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Conditional method agreement trees and Bland-Altman tests", "coat"};
  app.require_subcommand(1);

  // fit
  auto* fit = app.add_subcommand("fit", "Fit an agreement tree to a CSV file");
  DataOptions fit_data;
  fit_data.add_to(*fit, true);
  std::string engine = "ctreetrafo", statistic = "quad", loa = "normal", fit_json, fit_format = "text";
  FitConfig fit_cfg;
  std::size_t maxdepth = 0;
  bool no_mean = false, no_bonferroni = false;
  fit->add_option("--engine", engine, "ctreetrafo | disttree | mob | ctree")->capture_default_str();
  fit->add_option("--alpha", fit_cfg.alpha, "Significance level")->capture_default_str();
  fit->add_option("--minsplit", fit_cfg.minsplit, "Minimum node size to attempt a split")->capture_default_str();
  fit->add_option("--minbucket", fit_cfg.minbucket, "Minimum child size")->capture_default_str();
  fit->add_option("--maxdepth", maxdepth, "Maximum depth (0 = unlimited)");
  fit->add_option("--statistic", statistic, "quad | max")->capture_default_str();
  fit->add_option("--trim", fit_cfg.mob_trim, "MOB trimming fraction")->capture_default_str();
  fit->add_option("--max-levels", fit_cfg.max_categorical_levels, "Cap for exhaustive categorical search")
      ->capture_default_str();
  fit->add_option("--loa", loa, "Limits-of-agreement quantile: normal | t")->capture_default_str();
  fit->add_flag("--no-bonferroni", no_bonferroni, "Do not adjust p-values across covariates");
  fit->add_flag("--no-mean-covariate", no_mean, "Do not use the mean of both methods as a covariate");
  fit->add_option("--json", fit_json, "Also write the model JSON to this path");
  fit->add_option("--format", fit_format, "stdout format: text | json")->capture_default_str();

  // batest
  auto* batest = app.add_subcommand("batest", "Two-sample Bland-Altman test");
  DataOptions ba_data;
  ba_data.add_to(*batest, false);
  std::string group, ba_json, ba_format = "text";
  double ba_alpha = 0.05;
  batest->add_option("--group", group, "Binary grouping column")->required();
  batest->add_option("--alpha", ba_alpha, "Level of the sequential procedure")->capture_default_str();
  batest->add_option("--json", ba_json, "Also write the result JSON to this path");
  batest->add_option("--format", ba_format, "stdout format: text | json")->capture_default_str();

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo study of type-I error, power and ARI");
  std::string sim_config, sim_preset, sim_out;
  std::vector<std::string> sim_scenarios, sim_methods;
  std::vector<std::size_t> sim_n;
  std::size_t reps = 0;
  std::uint64_t seed = 1;
  double sim_alpha = 0.05;
  simulate->add_option("--config", sim_config, "JSON simulation config");
  simulate->add_option("--preset", sim_preset, "type1 | stump | tree | full");
  simulate->add_option("--scenario", sim_scenarios, "null, stump1-3, tree1-2")->delimiter(',');
  simulate->add_option("--method", sim_methods, "Engines (default: all four)")->delimiter(',');
  simulate->add_option("--n", sim_n, "Sample sizes")->delimiter(',');
  simulate->add_option("--reps", reps, "Replications per cell");
  simulate->add_option("--seed", seed, "Base seed")->capture_default_str();
  simulate->add_option("--alpha", sim_alpha, "Significance level")->capture_default_str();
  simulate->add_option("-o,--output", sim_out, "Results CSV (default: stdout)");

  // plot
  auto* plot = app.add_subcommand("plot", "Render a Bland-Altman or simulation SVG");
  std::string plot_input, plot_model, plot_sim, plot_out, plot_scenario, plot_metric = "ari";
  std::string plot_m1 = "m1", plot_m2 = "m2", plot_diff;
  plot->add_option("input", plot_input, "CSV with paired measurements");
  plot->add_option("--m1", plot_m1, "Column with method 1 measurements")->capture_default_str();
  plot->add_option("--m2", plot_m2, "Column with method 2 measurements")->capture_default_str();
  plot->add_option("--diff", plot_diff, "Column with precomputed differences (needs --mean-col)");
  std::string plot_mean_col;
  plot->add_option("--mean-col", plot_mean_col, "Column with precomputed means");
  plot->add_option("--model", plot_model, "Model JSON; points are coloured by leaf");
  plot->add_option("--sim", plot_sim, "Simulation results CSV instead of a data file");
  plot->add_option("--scenario", plot_scenario, "Scenario to draw from --sim");
  plot->add_option("--metric", plot_metric, "Metric to draw from --sim")->capture_default_str();
  plot->add_option("-o,--output", plot_out, "SVG path (default: stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  auto usage = [&](const std::string& msg, const CLI::App& sub) {
    err << "error: " << msg << "\n\n" << sub.help();
    return kExitUsage;
  };

  try {
    if (fit->parsed()) {
      if (fit_format != "text" && fit_format != "json") return usage("--format must be text or json", *fit);
      fit_cfg.engine = parse_engine(engine);
      fit_cfg.statistic = parse_statistic(statistic);
      if (maxdepth > 0) fit_cfg.maxdepth = maxdepth;
      fit_cfg.bonferroni = !no_bonferroni;
      if (loa != "normal" && loa != "t") return usage("--loa must be normal or t", *fit);
      fit_cfg.loa = loa == "t" ? LoaQuantile::StudentT : LoaQuantile::Normal;
      CsvSchema schema = fit_data.schema();
      schema.infer_covariates = fit_data.continuous.empty() && fit_data.categorical.empty();
      schema.include_mean_as_covariate = !no_mean && fit_data.diff.empty();
      const auto loaded = load_csv(fit_data.input, schema);
      err << loaded.report.summary() << '\n';
      const CoatModel model = fit_coat(loaded.data, fit_cfg);
      const std::string json = model_to_json(model);
      if (!fit_json.empty()) write_file(fit_json, json);
      out << (fit_format == "json" ? json : render_tree_text(model));
      return kExitOk;
    }

    if (batest->parsed()) {
      if (ba_format != "text" && ba_format != "json") return usage("--format must be text or json", *batest);
      CsvSchema schema = ba_data.schema();
      schema.categorical = {group};
      const auto loaded = load_csv(ba_data.input, schema);
      err << loaded.report.summary() << '\n';
      const BaTestResult result = ba_test(loaded.data.y, loaded.data.covariates.front());
      const std::string json = batest_to_json(result, ba_alpha);
      if (!ba_json.empty()) write_file(ba_json, json);
      out << (ba_format == "json" ? json : render_ba_table(result, ba_alpha));
      return kExitOk;
    }

    if (simulate->parsed()) {
      SimConfig cfg;
      if (!sim_config.empty()) {
        cfg = config_from_json(read_file(sim_config));
      } else if (!sim_preset.empty()) {
        cfg = preset(sim_preset);
      } else {
        if (sim_scenarios.empty()) return usage("give --scenario, --preset or --config", *simulate);
        cfg.methods = kAllMethods;
        cfg.sample_sizes = {100};
      }
      if (!sim_scenarios.empty()) cfg.scenarios = parse_list<Scenario>(sim_scenarios, Scenario::parse);
      if (!sim_methods.empty()) cfg.methods = parse_list<EngineKind>(sim_methods, parse_engine);
      if (!sim_n.empty()) cfg.sample_sizes = sim_n;
      if (reps > 0) cfg.replications = reps;
      if (simulate->count("--seed")) cfg.seed = seed;
      if (simulate->count("--alpha")) cfg.alpha = sim_alpha;
      cfg.threads = threads_from_env();
      const SimResult result = run_simulation(cfg);
      std::ostringstream csv;
      write_sim_csv(result, csv);
      if (sim_out.empty()) {
        out << csv.str();
      } else {
        write_file(sim_out, csv.str());
      }
      double seconds = 0.0;
      for (const auto& c : result.cells) seconds += c.wall_seconds;
      err << result.cells.size() << " cells, " << seconds << " s of fitting\n";
      return kExitOk;
    }

    if (plot->parsed()) {
      std::string svg;
      if (!plot_sim.empty()) {
        if (plot_scenario.empty()) return usage("--sim needs --scenario", *plot);
        std::ifstream f(plot_sim);
        if (!f) throw ValidationError("cannot open '" + plot_sim + "'");
        svg = render_sim_svg(read_sim_csv(f), plot_scenario, plot_metric);
      } else {
        if (plot_input.empty()) return usage("give a data CSV or --sim", *plot);
        CsvSchema schema;
        schema.method1 = plot_m1;
        schema.method2 = plot_m2;
        if (!plot_diff.empty()) {
          if (plot_mean_col.empty()) return usage("--diff needs --mean-col for the x axis", *plot);
          schema.difference = plot_diff;
          schema.continuous.push_back(plot_mean_col);
        }
        std::optional<CoatModel> model;
        if (!plot_model.empty()) {
          model = model_from_json(read_file(plot_model));
          for (const auto& c : model->covariates) {
            if (model->mean_covariate && c.name == kMeanCovariateName) continue;
            (c.kind == ColumnKind::Continuous ? schema.continuous : schema.categorical).push_back(c.name);
          }
          schema.include_mean_as_covariate = model->mean_covariate;
        }
        const auto loaded = load_csv(plot_input, schema);
        const Dataset& d = loaded.data;
        std::vector<double> m = d.mean_values;
        if (!plot_diff.empty()) m = d.covariates.front().values;
        std::optional<LeafColoring> coloring;
        if (model) {
          LeafColoring lc;
          // Model covariates are looked up by name in the loaded data.
          for (std::size_t i = 0; i < d.n(); ++i) {
            std::vector<CovariateValue> row;
            for (const auto& info : model->covariates) {
              const Column& col = d.covariates.at(*d.covariate_index(info.name));
              if (col.is_categorical()) {
                row.emplace_back(col.levels.at(static_cast<std::size_t>(col.codes[i] - 1)));
              } else {
                row.emplace_back(col.values[i]);
              }
            }
            lc.leaf_of_point.push_back(predict_node(*model, row).leaf);
          }
          coloring = std::move(lc);
        }
        svg = render_ba_svg(d.y, m, ba_estimates(d.y), coloring);
      }
      if (plot_out.empty()) {
        out << svg;
      } else {
        write_file(plot_out, svg);
      }
      return kExitOk;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitUsage;
}

}  // namespace coat::cli
