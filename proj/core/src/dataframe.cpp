#include "coat/dataframe.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "coat/error.hpp"

namespace coat {

Column Column::continuous(std::string name, std::vector<double> values) {
  Column c;
  c.name = std::move(name);
  c.kind = ColumnKind::Continuous;
  c.values = std::move(values);
  return c;
}

Column Column::categorical(std::string name, std::vector<std::string> levels,
                           std::vector<int> codes) {
  Column c;
  c.name = std::move(name);
  c.kind = ColumnKind::Categorical;
  c.levels = std::move(levels);
  c.codes = std::move(codes);
  return c;
}

Column Column::subset(std::span<const std::size_t> rows) const {
  Column out;
  out.name = name;
  out.kind = kind;
  out.levels = levels;
  if (is_categorical()) {
    out.codes.reserve(rows.size());
    for (auto r : rows) out.codes.push_back(codes.at(r));
  } else {
    out.values.reserve(rows.size());
    for (auto r : rows) out.values.push_back(values.at(r));
  }
  return out;
}

std::optional<std::size_t> Dataset::covariate_index(const std::string& name) const {
  for (std::size_t j = 0; j < covariates.size(); ++j) {
    if (covariates[j].name == name) return j;
  }
  return std::nullopt;
}

Differences derive_differences(std::span<const MethodPair> pairs) {
  if (pairs.empty()) throw ValidationError("no measurement pairs");
  Differences out;
  out.y.reserve(pairs.size());
  out.m.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    if (!std::isfinite(p.m1) || !std::isfinite(p.m2)) {
      throw ValidationError("non-finite measurement at row " + std::to_string(i + 1));
    }
    out.y.push_back(p.m1 - p.m2);
    out.m.push_back(0.5 * (p.m1 + p.m2));
  }
  return out;
}

void validate_dataset(const Dataset& d) {
  std::vector<std::string> problems;
  const std::size_t n = d.y.size();
  if (n < 1) problems.emplace_back("dataset is empty");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(d.y[i])) {
      problems.push_back("difference at row " + std::to_string(i + 1) + " is not finite");
      break;
    }
  }
  if (!d.mean_values.empty() && d.mean_values.size() != n) {
    problems.push_back("mean values have length " + std::to_string(d.mean_values.size()) +
                       ", expected " + std::to_string(n));
  }
  std::set<std::string> names;
  for (const auto& c : d.covariates) {
    if (!names.insert(c.name).second) {
      problems.push_back("duplicate covariate name '" + c.name + "'");
    }
    if (c.size() != n) {
      problems.push_back("covariate '" + c.name + "' has length " + std::to_string(c.size()) +
                         ", expected " + std::to_string(n));
    }
    if (c.is_categorical()) {
      const auto k = static_cast<int>(c.levels.size());
      if (k < 2) problems.push_back("categorical covariate '" + c.name + "' has fewer than 2 levels");
      for (int code : c.codes) {
        if (code < 1 || code > k) {
          problems.push_back("categorical covariate '" + c.name + "' has level index " +
                             std::to_string(code) + " outside [1, " + std::to_string(k) + "]");
          break;
        }
      }
    } else {
      if (std::any_of(c.values.begin(), c.values.end(), [](double v) { return !std::isfinite(v); })) {
        problems.push_back("continuous covariate '" + c.name + "' has non-finite values");
      }
    }
  }
  if (d.include_mean_as_covariate) {
    if (d.mean_values.empty()) problems.emplace_back("mean covariate requested without mean values");
    if (d.covariates.empty() || d.covariates.back().name != kMeanCovariateName) {
      problems.emplace_back("mean covariate flag set but last covariate is not the mean");
    }
  }
  if (problems.empty()) return;
  std::string msg = "invalid dataset:";
  for (const auto& p : problems) msg += "\n  - " + p;
  throw ValidationError(msg);
}

std::string LoadReport::summary() const {
  std::ostringstream os;
  os << raw_rows << " rows read, " << dropped_rows << (dropped_rows == 1 ? " row" : " rows")
     << " dropped";
  return os.str();
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else {
      cell.push_back(ch);
    }
  }
  cells.push_back(std::move(cell));
  return cells;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

std::optional<double> parse_number(const std::string& cell) {
  double v = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  if (begin != end && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc{} || ptr != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

Table read_table(std::istream& in) {
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("CSV input has no header row");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  for (auto& h : split_csv_line(line)) t.header.push_back(trim(h));
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != t.header.size()) {
      throw ValidationError("line " + std::to_string(line_no) + " has " +
                            std::to_string(cells.size()) + " cells, header has " +
                            std::to_string(t.header.size()));
    }
    for (auto& c : cells) c = trim(std::move(c));
    t.rows.push_back(std::move(cells));
  }
  return t;
}

std::size_t find_column(const Table& t, const std::string& name) {
  auto it = std::find(t.header.begin(), t.header.end(), name);
  if (it == t.header.end()) throw ValidationError("column '" + name + "' not found in CSV header");
  return static_cast<std::size_t>(it - t.header.begin());
}

}  // namespace

LoadedData parse_csv(std::istream& in, const CsvSchema& schema) {
  const Table table = read_table(in);

  const bool use_difference = schema.difference.has_value();
  std::vector<std::size_t> outcome_cols;
  if (use_difference) {
    outcome_cols.push_back(find_column(table, *schema.difference));
  } else {
    outcome_cols.push_back(find_column(table, schema.method1));
    outcome_cols.push_back(find_column(table, schema.method2));
  }
  if (schema.include_mean_as_covariate && use_difference) {
    throw ValidationError("the mean covariate needs both measurement columns");
  }

  struct Spec {
    std::string name;
    std::size_t col;
    ColumnKind kind;
  };
  std::vector<Spec> specs;
  for (const auto& name : schema.continuous) {
    specs.push_back({name, find_column(table, name), ColumnKind::Continuous});
  }
  for (const auto& name : schema.categorical) {
    specs.push_back({name, find_column(table, name), ColumnKind::Categorical});
  }
  if (specs.empty() && schema.infer_covariates) {
    for (std::size_t c = 0; c < table.header.size(); ++c) {
      const auto& name = table.header[c];
      if (std::find(outcome_cols.begin(), outcome_cols.end(), c) != outcome_cols.end()) continue;
      if (std::find(schema.exclude.begin(), schema.exclude.end(), name) != schema.exclude.end()) {
        continue;
      }
      bool numeric = true;
      for (const auto& row : table.rows) {
        if (!row[c].empty() && !parse_number(row[c])) {
          numeric = false;
          break;
        }
      }
      specs.push_back({name, c, numeric ? ColumnKind::Continuous : ColumnKind::Categorical});
    }
  }

  LoadedData out;
  out.report.raw_rows = table.rows.size();
  std::vector<MethodPair> pairs;
  std::vector<double> diffs;
  std::vector<std::vector<double>> cont(specs.size());
  std::vector<std::vector<std::string>> labels(specs.size());

  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    bool missing = false;
    for (auto c : outcome_cols) missing = missing || row[c].empty();
    for (const auto& s : specs) missing = missing || row[s.col].empty();
    if (missing) {
      ++out.report.dropped_rows;
      continue;
    }
    auto number = [&](std::size_t c) {
      auto v = parse_number(row[c]);
      if (!v) {
        throw ValidationError("cannot parse '" + row[c] + "' at row " + std::to_string(r + 1) +
                              ", column '" + table.header[c] + "'");
      }
      return *v;
    };
    if (use_difference) {
      diffs.push_back(number(outcome_cols[0]));
    } else {
      pairs.push_back({number(outcome_cols[0]), number(outcome_cols[1])});
    }
    for (std::size_t k = 0; k < specs.size(); ++k) {
      if (specs[k].kind == ColumnKind::Continuous) {
        cont[k].push_back(number(specs[k].col));
      } else {
        labels[k].push_back(row[specs[k].col]);
      }
    }
  }

  Dataset& d = out.data;
  if (use_difference) {
    d.y = std::move(diffs);
  } else if (!pairs.empty()) {
    auto dm = derive_differences(pairs);
    d.y = std::move(dm.y);
    d.mean_values = std::move(dm.m);
  }
  if (d.y.empty()) throw ValidationError("no complete rows left after dropping missing values");

  for (std::size_t k = 0; k < specs.size(); ++k) {
    if (specs[k].kind == ColumnKind::Continuous) {
      d.covariates.push_back(Column::continuous(specs[k].name, std::move(cont[k])));
      continue;
    }
    std::vector<std::string> levels;
    std::map<std::string, int> index;
    std::vector<int> codes;
    codes.reserve(labels[k].size());
    for (const auto& lab : labels[k]) {
      auto [it, inserted] = index.emplace(lab, static_cast<int>(levels.size()) + 1);
      if (inserted) levels.push_back(lab);
      codes.push_back(it->second);
    }
    d.covariates.push_back(Column::categorical(specs[k].name, std::move(levels), std::move(codes)));
  }
  if (schema.include_mean_as_covariate) {
    d.covariates.push_back(Column::continuous(kMeanCovariateName, d.mean_values));
    d.include_mean_as_covariate = true;
  }
  validate_dataset(d);
  return out;
}

LoadedData load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  return parse_csv(in, schema);
}

}  // namespace coat
