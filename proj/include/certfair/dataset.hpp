#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "certfair/network.hpp"
#include "certfair/randomized_response.hpp"
#include "certfair/verifier.hpp"

namespace certfair {

class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class FeatureKind { kContinuous, kCategorical };

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::kContinuous;
  std::optional<Interval> range;          // declared; observed min/max otherwise
  std::vector<std::string> categories;    // empty + infer = take from data
  bool infer_categories = false;
};

// How a raw column becomes a sensitive category (or a label).
enum class ValueRule { kCategorical, kThreshold, kMap };

struct ColumnRule {
  std::string name;
  ValueRule rule = ValueRule::kCategorical;
  std::vector<std::string> categories;                      // output categories, ordered
  double threshold = 0.0;                                   // "<t" / ">=t"
  std::vector<std::pair<std::string, std::string>> mapping; // raw -> category

  // Category index of a raw value; nullopt if the value is not covered.
  std::optional<std::size_t> classify(const std::string& raw) const;
};

// Row filter on a raw column: keep rows whose value lies in range, or drop
// rows whose value is listed.
struct RowFilter {
  std::string column;
  std::optional<Interval> range;
  std::vector<std::string> exclude;

  bool keeps(const std::string& value) const;
};

// Plain-text schema, one directive per line; grammar in docs/formats.md.
struct DatasetSchema {
  std::string name;
  char delimiter = ',';
  bool header = true;
  std::vector<std::string> columns;  // file column names when header is absent
  std::vector<std::string> missing = {"?", ""};
  bool composite = false;
  SensitiveEncoding encoding = SensitiveEncoding::kOneHot;

  std::vector<FeatureSpec> features;
  std::vector<ColumnRule> sensitive;
  ColumnRule label;
  std::vector<RowFilter> filters;

  // Throws SchemaError.
  void validate() const;
  std::string attribute() const;  // sensitive feature names joined by '+'
};

DatasetSchema parse_schema(std::istream& in);
DatasetSchema load_schema(const std::filesystem::path& path);

// Raw string cells of the schema columns in order: features, sensitive, label.
struct RawTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::size_t records = 0;  // data rows in the file
  std::size_t dropped = 0;  // rows with missing or unusable schema cells
  std::size_t filtered = 0; // rows removed by filter directives
};

// Splits one delimited line; double quotes group, "" escapes a quote.
std::vector<std::string> split_csv_line(const std::string& line, char delimiter);

// Throws DataIoError on a missing file, SchemaError on a header mismatch or
// when no usable row remains.
RawTable load_csv(const std::filesystem::path& path, const DatasetSchema& schema);
RawTable parse_csv(std::istream& in, const DatasetSchema& schema);

struct Scale {
  std::string feature;
  double lo = 0.0;
  double hi = 1.0;
  bool declared = false;
  bool degenerate = false;

  double normalize(double v) const { return degenerate ? 0.0 : (v - lo) / (hi - lo); }
  double denormalize(double u) const { return degenerate ? lo : lo + u * (hi - lo); }
};

struct Sample {
  std::vector<double> x;  // non-sensitive encoded features
  std::size_t s = 0;      // sensitive category index
  Label y = 0;
};

struct Dataset {
  std::string name;
  std::string attribute;
  std::vector<Sample> samples;
  SensitiveDomain sensitive;
  std::vector<std::string> columns;  // encoded feature columns
  std::vector<bool> integral;        // per encoded column
  std::vector<std::string> labels;
  std::vector<Scale> scales;         // continuous features, schema order
  std::vector<std::size_t> scale_columns;
  std::size_t clamped = 0;
  std::size_t dropped = 0;
  std::vector<std::string> warnings;

  std::size_t size() const { return samples.size(); }
  std::size_t feature_width() const { return columns.size(); }
  std::size_t num_labels() const { return labels.size(); }
};

Dataset preprocess(const RawTable& raw, const DatasetSchema& schema);

// Original values of the continuous features of x, in schema order.
std::vector<double> denormalize(const Dataset& dataset, const Sample& sample);

// Seeded shuffle; train gets ceil(n (1 - f)) samples, test the rest.
std::pair<Dataset, Dataset> split(const Dataset& dataset, double test_fraction,
                                  std::uint64_t seed);

// Unit box over every encoded column (one-hot blocks relaxed to [0,1]).
InputDomain extract_domain(const Dataset& dataset);
// Same box built from the schema alone; needs explicit category lists.
InputDomain domain_from_schema(const DatasetSchema& schema);

// Network for the dataset: [features + sensitive encoding, hidden..., K] with
// the sensitive encoding after the features. K = 1 for binary labels when
// single_logit is set, else the number of labels.
NetworkSpec network_for(const Dataset& dataset, const std::vector<std::size_t>& hidden,
                        bool single_logit = false);
NetworkSpec network_for(const InputDomain& domain, std::size_t num_labels,
                        const std::vector<std::size_t>& hidden, bool single_logit = false);

// Domain file: one line per feature column, name|lo|hi|integral|0, and one
// line for the sensitive attribute, name|lo|hi|1|1|v0,v1,...|encoding.
void write_domain(std::ostream& out, const InputDomain& domain);
InputDomain read_domain(std::istream& in);
InputDomain load_domain(const std::filesystem::path& path);

}  // namespace certfair
