#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <coat/dataframe.hpp>
#include <coat/error.hpp>

using namespace coat;

namespace {

std::string error_of(const Dataset& d) {
  try {
    validate_dataset(d);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return {};
}

Dataset ten_rows() {
  Dataset d;
  d.y.assign(10, 1.0);
  for (int i = 0; i < 10; ++i) d.y[i] = i * 0.5;
  d.covariates.push_back(Column::continuous("age", std::vector<double>(10, 3.0)));
  return d;
}

}  // namespace

TEST(DeriveDifferences, IdenticalMeasurements) {
  const std::vector<MethodPair> p{{3, 3}};
  const auto d = derive_differences(p);
  EXPECT_EQ(d.y, std::vector<double>{0.0});
  EXPECT_EQ(d.m, std::vector<double>{3.0});
}

TEST(DeriveDifferences, TwoPairs) {
  const std::vector<MethodPair> p{{5, 3}, {2, 4}};
  const auto d = derive_differences(p);
  EXPECT_EQ(d.y, (std::vector<double>{2.0, -2.0}));
  EXPECT_EQ(d.m, (std::vector<double>{4.0, 3.0}));
}

TEST(DeriveDifferences, MissingValueNamesRow) {
  const std::vector<MethodPair> p{{1, std::numeric_limits<double>::quiet_NaN()}};
  try {
    derive_differences(p);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos) << e.what();
  }
}

TEST(DeriveDifferences, RecoversMeasurements) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> z;
  std::vector<MethodPair> p(200);
  for (auto& x : p) x = {z(rng) * 10, z(rng) * 10};
  const auto d = derive_differences(p);
  for (std::size_t i = 0; i < p.size(); ++i) {
    EXPECT_NEAR(d.m[i] + d.y[i] / 2, p[i].m1, 1e-12);
    EXPECT_NEAR(d.m[i] - d.y[i] / 2, p[i].m2, 1e-12);
  }
}

TEST(ValidateDataset, AcceptsValid) { EXPECT_NO_THROW(validate_dataset(ten_rows())); }

TEST(ValidateDataset, LengthMismatch) {
  auto d = ten_rows();
  d.covariates[0].values.pop_back();
  EXPECT_NE(error_of(d).find("length 9"), std::string::npos) << error_of(d);
}

TEST(ValidateDataset, DuplicateName) {
  auto d = ten_rows();
  d.covariates.push_back(d.covariates[0]);
  EXPECT_NE(error_of(d).find("duplicate"), std::string::npos);
}

TEST(ValidateDataset, ReportsEveryProblem) {
  auto d = ten_rows();
  d.covariates[0].values.pop_back();
  d.covariates.push_back(Column::categorical("g", {"a", "b"}, std::vector<int>(10, 3)));
  const auto msg = error_of(d);
  EXPECT_NE(msg.find("length 9"), std::string::npos);
  EXPECT_NE(msg.find("outside [1, 2]"), std::string::npos);
}

TEST(ParseCsv, ThreeRows) {
  std::istringstream in("m1,m2,age\n1,2,30\n2,2,40\n5,3,50\n");
  CsvSchema s;
  s.continuous = {"age"};
  const auto r = parse_csv(in, s);
  EXPECT_EQ(r.data.n(), 3u);
  ASSERT_EQ(r.data.covariates.size(), 1u);
  EXPECT_EQ(r.data.y, (std::vector<double>{-1, 0, 2}));
  EXPECT_EQ(r.data.mean_values, (std::vector<double>{1.5, 2, 4}));
  EXPECT_EQ(r.report.dropped_rows, 0u);
}

TEST(ParseCsv, DropsIncompleteRows) {
  std::istringstream in("m1,m2,age\n1,2,30\n2,2,\n5,3,50\n");
  CsvSchema s;
  s.continuous = {"age"};
  const auto r = parse_csv(in, s);
  EXPECT_EQ(r.data.n(), 2u);
  EXPECT_EQ(r.report.raw_rows, 3u);
  EXPECT_EQ(r.report.dropped_rows, 1u);
  EXPECT_NE(r.report.summary().find("1 row dropped"), std::string::npos);
}

TEST(ParseCsv, CategoricalFirstAppearance) {
  std::istringstream in("m1,m2,g\n1,2,a\n2,2,b\n5,3,a\n");
  CsvSchema s;
  s.categorical = {"g"};
  const auto r = parse_csv(in, s);
  const auto& c = r.data.covariates.at(0);
  EXPECT_EQ(c.levels, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(c.codes, (std::vector<int>{1, 2, 1}));
}

TEST(ParseCsv, InfersTypesAndAppendsMean) {
  std::istringstream in("id,m1,m2,age,sex\n1,1,2,30,f\n2,2,2,40,m\n3,5,3,50,f\n");
  CsvSchema s;
  s.infer_covariates = true;
  s.exclude = {"id"};
  s.include_mean_as_covariate = true;
  const auto r = parse_csv(in, s);
  ASSERT_EQ(r.data.covariates.size(), 3u);
  EXPECT_FALSE(r.data.covariates[0].is_categorical());
  EXPECT_TRUE(r.data.covariates[1].is_categorical());
  EXPECT_EQ(r.data.covariates[2].name, kMeanCovariateName);
  EXPECT_TRUE(r.data.include_mean_as_covariate);
}

TEST(ParseCsv, DifferenceColumn) {
  std::istringstream in("d,x\n1.5,1\n-2,2\n");
  CsvSchema s;
  s.difference = "d";
  s.continuous = {"x"};
  const auto r = parse_csv(in, s);
  EXPECT_EQ(r.data.y, (std::vector<double>{1.5, -2}));
  EXPECT_TRUE(r.data.mean_values.empty());
}

TEST(ParseCsv, MissingColumn) {
  std::istringstream in("a,b\n1,2\n");
  EXPECT_THROW(parse_csv(in, CsvSchema{}), ValidationError);
}

TEST(ParseCsv, RowCountInvariant) {
  std::mt19937_64 rng(9);
  std::bernoulli_distribution miss(0.2);
  std::ostringstream csv;
  csv << "m1,m2,x\n";
  std::size_t kept = 0;
  for (int i = 0; i < 100; ++i) {
    const bool drop = miss(rng);
    kept += drop ? 0 : 1;
    csv << i << ',' << i * 2 << ',' << (drop ? "" : std::to_string(i)) << '\n';
  }
  std::istringstream in(csv.str());
  CsvSchema s;
  s.continuous = {"x"};
  const auto r = parse_csv(in, s);
  EXPECT_EQ(r.data.n(), kept);
  EXPECT_EQ(r.data.n() + r.report.dropped_rows, r.report.raw_rows);
}

TEST(Column, SubsetKeepsLevels) {
  const auto c = Column::categorical("g", {"a", "b", "c"}, {1, 2, 3, 1});
  const std::vector<std::size_t> rows{0, 3};
  const auto s = c.subset(rows);
  EXPECT_EQ(s.level_count(), 3u);
  EXPECT_EQ(s.codes, (std::vector<int>{1, 1}));
}
