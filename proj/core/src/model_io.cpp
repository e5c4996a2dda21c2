#include "coat/model_io.hpp"

#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>

#include "coat/error.hpp"

namespace coat {

using nlohmann::json;

namespace {

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double read_number(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

StatisticKind parse_kind(const std::string& s) {
  if (s == "quad") return StatisticKind::Quad;
  if (s == "max") return StatisticKind::Max;
  if (s == "supLM") return StatisticKind::SupLM;
  throw ValidationError("unknown statistic kind '" + s + "'");
}

json to_json(const BaEstimates& e) {
  return {{"n", e.n},
          {"bias", number(e.bias)},
          {"sd", number(e.sd)},
          {"loa_lower", number(e.loa_lower)},
          {"loa_upper", number(e.loa_upper)},
          {"quantile", number(e.quantile)}};
}

BaEstimates estimates_from_json(const json& j) {
  BaEstimates e;
  e.n = j.at("n").get<std::size_t>();
  e.bias = read_number(j.at("bias"));
  e.sd = read_number(j.at("sd"));
  e.loa_lower = read_number(j.at("loa_lower"));
  e.loa_upper = read_number(j.at("loa_upper"));
  e.quantile = read_number(j.at("quantile"));
  return e;
}

json to_json(const TestResult& t) {
  return {{"statistic", number(t.statistic)},
          {"kind", to_string(t.kind)},
          {"df", t.df},
          {"p_raw", number(t.p_raw)},
          {"p_adjusted", number(t.p_adjusted)}};
}

TestResult test_from_json(const json& j) {
  TestResult t;
  t.statistic = read_number(j.at("statistic"));
  t.kind = parse_kind(j.at("kind").get<std::string>());
  t.df = j.at("df").get<int>();
  t.p_raw = read_number(j.at("p_raw"));
  t.p_adjusted = read_number(j.at("p_adjusted"));
  return t;
}

}  // namespace

std::string model_to_json(const CoatModel& model) {
  const auto& cfg = model.config;
  json config = {{"engine", to_string(cfg.engine)},
                 {"alpha", cfg.alpha},
                 {"minsplit", cfg.minsplit},
                 {"minbucket", cfg.minbucket},
                 {"maxdepth", cfg.maxdepth ? json(*cfg.maxdepth) : json(nullptr)},
                 {"bonferroni", cfg.bonferroni},
                 {"statistic", to_string(cfg.statistic)},
                 {"mob_trim", cfg.mob_trim},
                 {"max_categorical_levels", cfg.max_categorical_levels},
                 {"loa_quantile", cfg.loa == LoaQuantile::Normal ? "normal" : "t"}};

  json covariates = json::array();
  for (const auto& c : model.covariates) {
    json cj = {{"name", c.name}, {"kind", c.kind == ColumnKind::Continuous ? "continuous" : "categorical"}};
    if (c.kind == ColumnKind::Categorical) cj["levels"] = c.levels;
    covariates.push_back(std::move(cj));
  }

  json nodes = json::array();
  for (const auto& node : model.nodes) {
    json nj = {{"id", node.id},
               {"parent", node.parent >= 0 ? json(node.parent) : json(nullptr)},
               {"depth", node.depth},
               {"n", node.n},
               {"ba", to_json(node.ba)}};
    json tests = json::array();
    for (std::size_t j = 0; j < node.tests.size(); ++j) {
      if (!node.tests[j]) continue;
      json tj = to_json(*node.tests[j]);
      tj["variable"] = j;
      tj["variable_name"] = model.covariates.at(j).name;
      tests.push_back(std::move(tj));
    }
    nj["tests"] = std::move(tests);
    nj["node_p"] = node.node_p ? number(*node.node_p) : json(nullptr);
    nj["node_variable"] = node.node_variable ? json(*node.node_variable) : json(nullptr);
    if (node.split) {
      const auto& s = *node.split;
      json sj = {{"variable", s.variable}, {"variable_name", model.covariates.at(s.variable).name}};
      if (const auto* t = std::get_if<ThresholdRule>(&s.rule)) {
        sj["type"] = "threshold";
        sj["value"] = t->value;
      } else {
        const auto& lv = std::get<SubsetRule>(s.rule).left_levels;
        sj["type"] = "subset";
        sj["left_levels"] = lv;
        json labels = json::array();
        for (int code : lv) labels.push_back(model.covariates.at(s.variable).levels.at(static_cast<std::size_t>(code - 1)));
        sj["left_labels"] = std::move(labels);
      }
      nj["split"] = std::move(sj);
    } else {
      nj["split"] = nullptr;
    }
    nj["children"] = node.children ? json::array({node.children->first, node.children->second}) : json(nullptr);
    nodes.push_back(std::move(nj));
  }

  json doc = {{"schema", kModelSchema},
              {"config", std::move(config)},
              {"n", model.n},
              {"mean_covariate", model.mean_covariate},
              {"covariates", std::move(covariates)},
              {"nodes", std::move(nodes)}};
  return doc.dump(2) + "\n";
}

CoatModel model_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("model JSON does not parse: ") + e.what());
  }
  try {
    if (doc.at("schema").get<std::string>() != kModelSchema) {
      throw ValidationError("unsupported model schema '" + doc.at("schema").get<std::string>() + "'");
    }
    CoatModel model;
    const auto& cj = doc.at("config");
    auto& cfg = model.config;
    cfg.engine = parse_engine(cj.at("engine").get<std::string>());
    cfg.alpha = cj.at("alpha").get<double>();
    cfg.minsplit = cj.at("minsplit").get<std::size_t>();
    cfg.minbucket = cj.at("minbucket").get<std::size_t>();
    if (!cj.at("maxdepth").is_null()) cfg.maxdepth = cj.at("maxdepth").get<std::size_t>();
    cfg.bonferroni = cj.at("bonferroni").get<bool>();
    cfg.statistic = parse_kind(cj.at("statistic").get<std::string>());
    cfg.mob_trim = cj.at("mob_trim").get<double>();
    cfg.max_categorical_levels = cj.at("max_categorical_levels").get<std::size_t>();
    cfg.loa = cj.at("loa_quantile").get<std::string>() == "t" ? LoaQuantile::StudentT : LoaQuantile::Normal;

    model.n = doc.at("n").get<std::size_t>();
    model.mean_covariate = doc.value("mean_covariate", false);
    for (const auto& c : doc.at("covariates")) {
      CovariateInfo info;
      info.name = c.at("name").get<std::string>();
      info.kind = c.at("kind").get<std::string>() == "categorical" ? ColumnKind::Categorical
                                                                  : ColumnKind::Continuous;
      if (info.kind == ColumnKind::Categorical) info.levels = c.at("levels").get<std::vector<std::string>>();
      model.covariates.push_back(std::move(info));
    }
    for (const auto& nj : doc.at("nodes")) {
      TreeNode node;
      node.id = nj.at("id").get<int>();
      node.parent = nj.at("parent").is_null() ? -1 : nj.at("parent").get<int>();
      node.depth = nj.at("depth").get<int>();
      node.n = nj.at("n").get<std::size_t>();
      node.ba = estimates_from_json(nj.at("ba"));
      node.tests.resize(model.covariates.size());
      for (const auto& tj : nj.at("tests")) {
        node.tests.at(tj.at("variable").get<std::size_t>()) = test_from_json(tj);
      }
      if (!nj.at("node_p").is_null()) node.node_p = nj.at("node_p").get<double>();
      if (!nj.at("node_variable").is_null()) node.node_variable = nj.at("node_variable").get<std::size_t>();
      if (!nj.at("split").is_null()) {
        const auto& sj = nj.at("split");
        SplitSpec s;
        s.variable = sj.at("variable").get<std::size_t>();
        if (sj.at("type").get<std::string>() == "threshold") {
          s.rule = ThresholdRule{sj.at("value").get<double>()};
        } else {
          s.rule = SubsetRule{sj.at("left_levels").get<std::vector<int>>()};
        }
        node.split = s;
      }
      if (!nj.at("children").is_null()) {
        node.children = std::make_pair(nj.at("children").at(0).get<int>(), nj.at("children").at(1).get<int>());
      }
      if (node.id != static_cast<int>(model.nodes.size())) {
        throw ValidationError("model nodes must be listed in id order");
      }
      model.nodes.push_back(std::move(node));
    }
    if (model.nodes.empty()) throw ValidationError("model has no nodes");
    return model;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed model JSON: ") + e.what());
  }
}

std::string batest_to_json(const BaTestResult& result, double alpha) {
  const auto decisions = sequential_ba_test(result, alpha);
  json groups = json::array();
  for (const auto& g : result.groups) {
    json gj = to_json(g.estimates);
    gj["label"] = g.label;
    groups.push_back(std::move(gj));
  }
  json doc = {{"schema", kBaTestSchema},
              {"alpha", alpha},
              {"tests",
               {{"joint", to_json(result.joint)},
                {"mean", to_json(result.mean_only)},
                {"variance", to_json(result.var_only)}}},
              {"sequential",
               {{"joint", to_string(decisions.joint)},
                {"mean", to_string(decisions.mean)},
                {"variance", to_string(decisions.variance)}}},
              {"groups", std::move(groups)}};
  return doc.dump(2) + "\n";
}

}  // namespace coat
