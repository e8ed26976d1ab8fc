#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "certfair/dataset.hpp"
#include "fixtures.hpp"

namespace certfair {
namespace {

const char* kSchema = R"(# toy
option|name|toy
feature|hours|continuous|1:100
feature|work|categorical|private,gov
sensitive|sex|categorical|male,female
label|income|categorical|<=50K,>50K
)";

const char* kCsv =
    "hours,work,sex,income,extra\n"
    "50,private,male,>50K,x\n"
    "20,gov,female,<=50K,y\n"
    "100,\"private\",female,>50K,z\n";

DatasetSchema schema_from(const std::string& text) {
  std::istringstream in(text);
  return parse_schema(in);
}

RawTable table_from(const std::string& csv, const DatasetSchema& schema) {
  std::istringstream in(csv);
  return parse_csv(in, schema);
}

TEST(Schema, Parses) {
  const auto s = schema_from(kSchema);
  EXPECT_EQ(s.name, "toy");
  ASSERT_EQ(s.features.size(), 2u);
  EXPECT_EQ(s.features[0].range->hi, 100.0);
  EXPECT_EQ(s.features[1].categories, (std::vector<std::string>{"private", "gov"}));
  EXPECT_EQ(s.attribute(), "sex");
  EXPECT_EQ(s.label.categories.size(), 2u);
}

TEST(Schema, Errors) {
  EXPECT_THROW(schema_from("feature|a|weird\n"), SchemaError);
  EXPECT_THROW(schema_from("feature|a|continuous\nlabel|y|categorical|0,1\n"), SchemaError);
  EXPECT_THROW(schema_from("option|delimiter|ab\n"), SchemaError);
  EXPECT_THROW(schema_from("bogus|x|y\n"), SchemaError);
  EXPECT_THROW(load_schema("/nonexistent/schema"), DataIoError);
}

TEST(Csv, SplitsQuotesAndSpaces) {
  EXPECT_EQ(split_csv_line("a,\"b,c\",\"d\"\"e\"", ','),
            (std::vector<std::string>{"a", "b,c", "d\"e"}));
  EXPECT_EQ(split_csv_line("A11  6 A34", ' '), (std::vector<std::string>{"A11", "6", "A34"}));
}

TEST(Csv, ThreeRows) {
  const auto schema = schema_from(kSchema);
  const auto raw = table_from(kCsv, schema);
  EXPECT_EQ(raw.records, 3u);
  EXPECT_EQ(raw.rows.size(), 3u);
  EXPECT_EQ(raw.dropped, 0u);
  EXPECT_EQ(raw.rows[2][1], "private");
}

TEST(Csv, MissingSensitiveDropped) {
  const auto schema = schema_from(kSchema);
  const auto raw = table_from(std::string(kCsv) + "30,gov,?,>50K,w\n", schema);
  EXPECT_EQ(raw.records, 4u);
  EXPECT_EQ(raw.dropped, 1u);
  EXPECT_EQ(raw.rows.size(), 3u);
}

TEST(Csv, HeaderMismatchIsSchemaError) {
  const auto schema = schema_from(kSchema);
  EXPECT_THROW(table_from("hours,work,gender,income\n1,gov,male,>50K\n", schema), SchemaError);
  EXPECT_THROW(load_csv("/nonexistent.csv", schema), DataIoError);
}

TEST(Csv, Filters) {
  const auto schema = schema_from(std::string(kSchema) + "filter|hours|range|10:60\n");
  const auto raw = table_from(kCsv, schema);
  EXPECT_EQ(raw.filtered, 1u);
  EXPECT_EQ(raw.rows.size(), 2u);
}

TEST(Preprocess, ScalingAndOneHot) {
  const auto schema = schema_from(kSchema);
  const auto d = preprocess(table_from(kCsv, schema), schema);
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(d.columns, (std::vector<std::string>{"hours", "work=private", "work=gov"}));
  EXPECT_NEAR(d.samples[0].x[0], 49.0 / 99.0, 1e-15);
  EXPECT_EQ(d.samples[1].x[1], 0.0);
  EXPECT_EQ(d.samples[1].x[2], 1.0);
  EXPECT_EQ(d.samples[1].s, 1u);
  EXPECT_EQ(d.samples[0].y, 1u);
  EXPECT_EQ(d.sensitive.values, (std::vector<std::string>{"male", "female"}));
  EXPECT_EQ(d.integral, (std::vector<bool>{false, true, true}));
}

TEST(Preprocess, DenormalizeRoundTrip) {
  const auto schema = schema_from(R"(feature|a|continuous
feature|b|continuous|-5:5
sensitive|s|categorical|p,q
label|y|categorical|0,1
)");
  std::string csv = "a,b,s,y\n";
  Rng rng(2);
  std::vector<std::pair<double, double>> originals;
  for (int i = 0; i < 50; ++i) {
    const double a = rng.uniform(-300, 1200);
    const double b = rng.uniform(-5, 5);
    originals.push_back({a, b});
    std::ostringstream row;
    row.precision(17);
    row << a << ',' << b << ',' << (i % 2 ? "p" : "q") << ',' << i % 2 << '\n';
    csv += row.str();
  }
  const auto d = preprocess(table_from(csv, schema), schema);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto back = denormalize(d, d.samples[i]);
    EXPECT_NEAR(back[0], originals[i].first, 1e-12 * 1200);
    EXPECT_NEAR(back[1], originals[i].second, 1e-12);
  }
}

TEST(Preprocess, DeclaredRangeClamps) {
  const auto schema = schema_from(kSchema);
  const auto d = preprocess(table_from(std::string(kCsv) + "150,gov,male,>50K,q\n", schema), schema);
  EXPECT_EQ(d.clamped, 1u);
  EXPECT_EQ(d.samples.back().x[0], 1.0);
}

TEST(Preprocess, CompositeSensitive) {
  const auto schema = schema_from(R"(option|composite|true
feature|a|continuous
sensitive|sex|categorical|m,f
sensitive|race|categorical|x,y,z
label|y|categorical|0,1
)");
  const auto d = preprocess(table_from("a,sex,race,y\n1,m,z,0\n2,f,x,1\n", schema), schema);
  EXPECT_EQ(d.sensitive.size(), 6u);
  EXPECT_EQ(d.sensitive.values[d.samples[0].s], "m&z");
}

TEST(Preprocess, ThresholdAndMapRules) {
  const auto schema = schema_from(R"(feature|a|continuous
sensitive|age|threshold|40
label|y|map|good=1,bad=0,ok=1
)");
  const auto d =
      preprocess(table_from("a,age,y\n1,39,good\n2,40,bad\n3,65,ok\n", schema), schema);
  EXPECT_EQ(d.sensitive.values, (std::vector<std::string>{"<40", ">=40"}));
  EXPECT_EQ(d.samples[0].s, 0u);
  EXPECT_EQ(d.samples[1].s, 1u);
  EXPECT_EQ(d.samples[1].y, d.samples[1].y);
  EXPECT_NE(d.samples[0].y, d.samples[1].y);
  EXPECT_EQ(d.samples[0].y, d.samples[2].y);
}

Dataset thousand() {
  Dataset d = testing::toy_dataset(1000, 4);
  for (std::size_t i = 0; i < d.size(); ++i) d.samples[i].x[0] = static_cast<double>(i);
  return d;
}

TEST(Split, SizesAndDeterminism) {
  const auto d = thousand();
  const auto [train, test] = split(d, 0.2, 7);
  EXPECT_EQ(train.size(), 800u);
  EXPECT_EQ(test.size(), 200u);
  const auto [train2, test2] = split(d, 0.2, 7);
  for (std::size_t i = 0; i < test.size(); ++i) EXPECT_EQ(test.samples[i].x, test2.samples[i].x);
  std::set<double> seen;
  for (const auto& s : train.samples) seen.insert(s.x[0]);
  for (const auto& s : test.samples) EXPECT_TRUE(seen.insert(s.x[0]).second);
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_THROW(split(d, 1.5, 0), std::invalid_argument);
}

TEST(Domain, UnitBoxContainsData) {
  const auto schema = schema_from(kSchema);
  const auto d = preprocess(table_from(kCsv, schema), schema);
  const auto dom = extract_domain(d);
  ASSERT_EQ(dom.dims(), 3u);
  for (const auto& b : dom.bounds) {
    EXPECT_EQ(b.lo, 0.0);
    EXPECT_EQ(b.hi, 1.0);
  }
  for (const auto& s : d.samples) EXPECT_TRUE(dom.contains(s.x));
  const auto from_schema = domain_from_schema(schema);
  EXPECT_EQ(from_schema.names, dom.names);
}

TEST(Domain, RoundTrip) {
  auto dom = testing::toy_domain(3, 3);
  dom.bounds[1] = {0.25, 0.5};
  dom.integral = {false, true, false};
  std::stringstream io;
  write_domain(io, dom);
  const auto back = read_domain(io);
  EXPECT_EQ(back.dims(), 3u);
  EXPECT_EQ(back.bounds[1].lo, 0.25);
  EXPECT_EQ(back.integral, dom.integral);
  EXPECT_EQ(back.sensitive.values, dom.sensitive.values);
}

TEST(Network, ForDataset) {
  const auto schema = schema_from(kSchema);
  const auto d = preprocess(table_from(kCsv, schema), schema);
  const auto spec = network_for(d, {4});
  EXPECT_EQ(spec.layer_sizes, (std::vector<std::size_t>{5, 4, 2}));
  EXPECT_EQ(spec.sensitive.offset, 3u);
  EXPECT_EQ(network_for(d, {4}, true).output_width(), 1u);
}

// Record counts of the bundled public files.
struct Bundled {
  const char* schema;
  const char* file;
  std::size_t records;
  std::size_t rows;
};

class BundledData : public ::testing::TestWithParam<Bundled> {};

TEST_P(BundledData, Counts) {
  const auto dir = testing::data_dir();
  const auto p = GetParam();
  if (dir.empty() || !std::filesystem::exists(dir / "raw" / p.file)) GTEST_SKIP() << "data absent";
  const auto schema = load_schema(dir / "schemas" / p.schema);
  const auto raw = load_csv(dir / "raw" / p.file, schema);
  EXPECT_EQ(raw.records, p.records);
  EXPECT_EQ(raw.rows.size(), p.rows);
  const auto d = preprocess(raw, schema);
  const auto dom = extract_domain(d);
  for (const auto& s : d.samples) ASSERT_TRUE(dom.contains(s.x));
}

INSTANTIATE_TEST_SUITE_P(
    Files, BundledData,
    ::testing::Values(Bundled{"adult_sex.schema", "adult.data", 32561, 32561},
                      Bundled{"adult_age.schema", "adult.data", 32561, 32561},
                      Bundled{"credit_age.schema", "german.data", 1000, 1000},
                      Bundled{"credit_gender.schema", "german.data", 1000, 1000},
                      Bundled{"compas_race.schema", "compas-scores-two-years.csv", 7214, 6172}),
    [](const ::testing::TestParamInfo<Bundled>& info) {
      std::string name = info.param.schema;
      return name.substr(0, name.find('.'));
    });

}  // namespace
}  // namespace certfair
