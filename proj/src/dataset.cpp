#include "certfair/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "certfair/rng.hpp"

namespace certfair {

namespace {

std::string trim(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = text.find_last_not_of(" \t\r\n");
  return text.substr(first, last - first + 1);
}

// Trims whitespace and one level of surrounding quotes.
std::string clean_cell(const std::string& cell) {
  std::string v = trim(cell);
  if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front()) {
    v = trim(v.substr(1, v.size() - 2));
  }
  return v;
}

std::vector<std::string> split_on(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : text) {
    if (ch == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  parts.push_back(cur);
  return parts;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  for (const auto& part : split_on(text, ',')) out.push_back(trim(part));
  return out;
}

std::optional<double> parse_number(const std::string& text) {
  if (text.empty()) return std::nullopt;
  double v = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  if (*begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string format_number(double v) {
  std::ostringstream out;
  out.precision(15);
  out << v;
  return out.str();
}

[[noreturn]] void schema_fail(std::size_t line, const std::string& message) {
  throw SchemaError("schema line " + std::to_string(line) + ": " + message);
}

ColumnRule parse_rule(std::size_t line, const std::string& name,
                      const std::vector<std::string>& fields) {
  if (fields.size() < 4) schema_fail(line, "'" + name + "' needs a kind and an argument");
  ColumnRule rule;
  rule.name = name;
  const std::string& kind = fields[2];
  const std::string& arg = fields[3];
  if (kind == "categorical") {
    rule.rule = ValueRule::kCategorical;
    rule.categories = split_list(arg);
  } else if (kind == "threshold") {
    rule.rule = ValueRule::kThreshold;
    const auto t = parse_number(trim(arg));
    if (!t) schema_fail(line, "threshold '" + arg + "' is not a number");
    rule.threshold = *t;
    rule.categories = {"<" + format_number(*t), ">=" + format_number(*t)};
  } else if (kind == "map") {
    rule.rule = ValueRule::kMap;
    for (const auto& entry : split_list(arg)) {
      const auto eq = entry.rfind('=');
      if (eq == std::string::npos) schema_fail(line, "map entry '" + entry + "' lacks '='");
      const std::string from = trim(entry.substr(0, eq));
      const std::string to = trim(entry.substr(eq + 1));
      rule.mapping.emplace_back(from, to);
      if (std::find(rule.categories.begin(), rule.categories.end(), to) == rule.categories.end()) {
        rule.categories.push_back(to);
      }
    }
  } else {
    schema_fail(line, "unknown kind '" + kind + "' for '" + name + "'");
  }
  return rule;
}

}  // namespace

std::optional<std::size_t> ColumnRule::classify(const std::string& raw) const {
  switch (rule) {
    case ValueRule::kCategorical: {
      const auto it = std::find(categories.begin(), categories.end(), raw);
      if (it == categories.end()) return std::nullopt;
      return static_cast<std::size_t>(it - categories.begin());
    }
    case ValueRule::kThreshold: {
      const auto v = parse_number(raw);
      if (!v) return std::nullopt;
      return *v < threshold ? 0 : 1;
    }
    case ValueRule::kMap: {
      for (const auto& [from, to] : mapping) {
        if (from == raw) {
          const auto it = std::find(categories.begin(), categories.end(), to);
          return static_cast<std::size_t>(it - categories.begin());
        }
      }
      return std::nullopt;
    }
  }
  return std::nullopt;
}

bool RowFilter::keeps(const std::string& value) const {
  if (range) {
    const auto v = parse_number(value);
    return v && range->lo <= *v && *v <= range->hi;
  }
  return std::find(exclude.begin(), exclude.end(), value) == exclude.end();
}

void DatasetSchema::validate() const {
  if (label.name.empty()) throw SchemaError("schema has no label column");
  if (label.categories.size() < 2) throw SchemaError("label needs at least two categories");
  if (sensitive.empty()) throw SchemaError("schema has no sensitive feature");
  if (sensitive.size() > 1 && !composite) {
    throw SchemaError("several sensitive features need 'option|composite|true'");
  }
  std::set<std::string> names;
  auto claim = [&](const std::string& n) {
    if (!names.insert(n).second) throw SchemaError("column '" + n + "' is declared twice");
  };
  for (const auto& f : features) {
    claim(f.name);
    if (f.kind == FeatureKind::kCategorical && f.categories.empty() && !f.infer_categories) {
      throw SchemaError("categorical feature '" + f.name + "' has no categories");
    }
    if (f.range && !(f.range->lo <= f.range->hi)) {
      throw SchemaError("feature '" + f.name + "' has an empty range");
    }
  }
  std::size_t combined = 1;
  for (const auto& s : sensitive) {
    claim(s.name);
    if (s.categories.size() < 2) {
      throw SchemaError("sensitive feature '" + s.name + "' needs at least two categories");
    }
    combined *= s.categories.size();
  }
  claim(label.name);
  if (encoding == SensitiveEncoding::kSignedBinary && combined != 2) {
    throw SchemaError("signed encoding needs a binary sensitive attribute");
  }
  if (!header && columns.empty()) throw SchemaError("headerless files need 'option|columns|...'");
}

std::string DatasetSchema::attribute() const {
  std::string out;
  for (const auto& s : sensitive) out += (out.empty() ? "" : "+") + s.name;
  return out;
}

DatasetSchema parse_schema(std::istream& in) {
  DatasetSchema schema;
  bool have_label = false;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto fields = split_on(line, '|');
    for (auto& f : fields) f = trim(f);
    if (fields.size() < 2 || fields[1].empty()) schema_fail(line_no, "expected role|name|...");
    const std::string& role = fields[0];
    const std::string& name = fields[1];

    if (role == "option") {
      if (fields.size() < 3) schema_fail(line_no, "option '" + name + "' needs a value");
      const std::string& value = fields[2];
      if (name == "name") {
        schema.name = value;
      } else if (name == "delimiter") {
        if (value == "space") schema.delimiter = ' ';
        else if (value == "tab") schema.delimiter = '\t';
        else if (value.size() == 1) schema.delimiter = value[0];
        else schema_fail(line_no, "delimiter must be one character, 'space' or 'tab'");
      } else if (name == "header") {
        if (value != "present" && value != "absent") schema_fail(line_no, "header is present|absent");
        schema.header = value == "present";
      } else if (name == "columns") {
        schema.columns = split_list(value);
      } else if (name == "missing") {
        schema.missing = split_list(value);
      } else if (name == "composite") {
        if (value != "true" && value != "false") schema_fail(line_no, "composite is true|false");
        schema.composite = value == "true";
      } else if (name == "encoding") {
        try {
          schema.encoding = parse_encoding(value);
        } catch (const std::invalid_argument& e) {
          schema_fail(line_no, e.what());
        }
      } else {
        schema_fail(line_no, "unknown option '" + name + "'");
      }
    } else if (role == "feature") {
      if (fields.size() < 3) schema_fail(line_no, "feature '" + name + "' needs a kind");
      FeatureSpec f;
      f.name = name;
      const std::string arg = fields.size() > 3 ? fields[3] : "";
      if (fields[2] == "continuous") {
        f.kind = FeatureKind::kContinuous;
        if (!arg.empty()) {
          const auto colon = arg.find(':');
          if (colon == std::string::npos) schema_fail(line_no, "range must be lo:hi");
          const auto lo = parse_number(trim(arg.substr(0, colon)));
          const auto hi = parse_number(trim(arg.substr(colon + 1)));
          if (!lo || !hi) schema_fail(line_no, "range bounds must be numbers");
          f.range = Interval{*lo, *hi};
        }
      } else if (fields[2] == "categorical") {
        f.kind = FeatureKind::kCategorical;
        if (arg.empty() || arg == "*") f.infer_categories = true;
        else f.categories = split_list(arg);
      } else {
        schema_fail(line_no, "feature kind must be continuous or categorical");
      }
      schema.features.push_back(std::move(f));
    } else if (role == "sensitive") {
      schema.sensitive.push_back(parse_rule(line_no, name, fields));
    } else if (role == "label") {
      if (have_label) schema_fail(line_no, "only one label column is allowed");
      schema.label = parse_rule(line_no, name, fields);
      have_label = true;
    } else if (role == "filter") {
      if (fields.size() < 4) schema_fail(line_no, "filter needs a kind and an argument");
      RowFilter filter;
      filter.column = name;
      if (fields[2] == "range") {
        const auto colon = fields[3].find(':');
        if (colon == std::string::npos) schema_fail(line_no, "filter range must be lo:hi");
        const auto lo = parse_number(trim(fields[3].substr(0, colon)));
        const auto hi = parse_number(trim(fields[3].substr(colon + 1)));
        if (!lo || !hi) schema_fail(line_no, "filter bounds must be numbers");
        filter.range = Interval{*lo, *hi};
      } else if (fields[2] == "exclude") {
        filter.exclude = split_list(fields[3]);
      } else {
        schema_fail(line_no, "filter kind must be range or exclude");
      }
      schema.filters.push_back(std::move(filter));
    } else if (role == "ignore") {
      // Documentation only: columns not named elsewhere are skipped anyway.
    } else {
      schema_fail(line_no, "unknown role '" + role + "'");
    }
  }
  schema.validate();
  return schema;
}

DatasetSchema load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataIoError("cannot open schema file " + path.string());
  return parse_schema(in);
}

std::vector<std::string> split_csv_line(const std::string& line, char delimiter) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == delimiter) {
      cells.push_back(cur);
      cur.clear();
      // Runs of spaces count as one separator.
      if (delimiter == ' ') {
        while (i + 1 < line.size() && line[i + 1] == ' ') ++i;
      }
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  cells.push_back(cur);
  return cells;
}

RawTable parse_csv(std::istream& in, const DatasetSchema& schema) {
  schema.validate();
  RawTable table;
  for (const auto& f : schema.features) table.columns.push_back(f.name);
  for (const auto& s : schema.sensitive) table.columns.push_back(s.name);
  table.columns.push_back(schema.label.name);

  std::vector<std::string> header = schema.columns;
  std::string line;
  if (schema.header) {
    if (!std::getline(in, line)) throw SchemaError("file is empty");
    header.clear();
    for (const auto& cell : split_csv_line(line, schema.delimiter)) header.push_back(clean_cell(cell));
  }
  std::vector<std::size_t> source;
  for (const auto& name : table.columns) {
    // Duplicate header names resolve to the first occurrence.
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw SchemaError("column '" + name + "' not found in the file header");
    source.push_back(static_cast<std::size_t>(it - header.begin()));
  }

  std::vector<std::size_t> filter_source;
  for (const auto& f : schema.filters) {
    const auto it = std::find(header.begin(), header.end(), f.column);
    if (it == header.end()) throw SchemaError("filter column '" + f.column + "' not found");
    filter_source.push_back(static_cast<std::size_t>(it - header.begin()));
  }

  const std::set<std::string> missing(schema.missing.begin(), schema.missing.end());
  const std::size_t n_features = schema.features.size();
  while (std::getline(in, line)) {
    if (trim(line).empty() || trim(line).front() == '|') continue;
    ++table.records;
    const auto cells = split_csv_line(schema.delimiter == ' ' ? trim(line) : line, schema.delimiter);
    bool kept = true;
    for (std::size_t k = 0; k < schema.filters.size() && kept; ++k) {
      kept = filter_source[k] < cells.size() &&
             schema.filters[k].keeps(clean_cell(cells[filter_source[k]]));
    }
    if (!kept) {
      ++table.filtered;
      continue;
    }
    std::vector<std::string> row;
    row.reserve(source.size());
    bool usable = true;
    for (std::size_t k = 0; k < source.size() && usable; ++k) {
      if (source[k] >= cells.size()) {
        usable = false;
        break;
      }
      std::string v = clean_cell(cells[source[k]]);
      if (missing.count(v)) usable = false;
      if (k < n_features && schema.features[k].kind == FeatureKind::kContinuous &&
          !parse_number(v)) {
        usable = false;
      }
      row.push_back(std::move(v));
    }
    if (usable) {
      for (std::size_t j = 0; j < schema.sensitive.size(); ++j) {
        if (!schema.sensitive[j].classify(row[n_features + j])) usable = false;
      }
      if (!schema.label.classify(row.back())) usable = false;
    }
    if (!usable) {
      ++table.dropped;
      continue;
    }
    table.rows.push_back(std::move(row));
  }
  if (table.rows.empty()) throw SchemaError("no usable rows after dropping incomplete records");
  return table;
}

RawTable load_csv(const std::filesystem::path& path, const DatasetSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataIoError("cannot open data file " + path.string());
  return parse_csv(in, schema);
}

Dataset preprocess(const RawTable& raw, const DatasetSchema& schema) {
  schema.validate();
  if (raw.rows.empty()) throw SchemaError("empty record table");
  const std::size_t n_features = schema.features.size();
  if (raw.columns.size() != n_features + schema.sensitive.size() + 1) {
    throw SchemaError("record table does not match the schema");
  }

  Dataset ds;
  ds.name = schema.name;
  ds.attribute = schema.attribute();
  ds.dropped = raw.dropped;

  // Column layout and per-feature encoders.
  struct Encoder {
    bool continuous = false;
    std::size_t column = 0;
    Scale scale;
    std::vector<std::string> categories;
  };
  std::vector<Encoder> encoders(n_features);
  for (std::size_t k = 0; k < n_features; ++k) {
    const auto& f = schema.features[k];
    auto& enc = encoders[k];
    enc.column = ds.columns.size();
    if (f.kind == FeatureKind::kContinuous) {
      enc.continuous = true;
      enc.scale.feature = f.name;
      if (f.range) {
        enc.scale.lo = f.range->lo;
        enc.scale.hi = f.range->hi;
        enc.scale.declared = true;
      } else {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (const auto& row : raw.rows) {
          const double v = *parse_number(row[k]);
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
        enc.scale.lo = lo;
        enc.scale.hi = hi;
      }
      if (!(enc.scale.hi > enc.scale.lo)) {
        enc.scale.degenerate = true;
        ds.warnings.push_back("feature '" + f.name + "' has a degenerate range; emitted as 0");
      }
      ds.columns.push_back(f.name);
      ds.integral.push_back(false);
      ds.scales.push_back(enc.scale);
      ds.scale_columns.push_back(enc.column);
    } else {
      enc.categories = f.categories;
      if (f.infer_categories) {
        std::set<std::string> seen;
        for (const auto& row : raw.rows) seen.insert(row[k]);
        enc.categories.assign(seen.begin(), seen.end());
      }
      for (const auto& c : enc.categories) {
        ds.columns.push_back(f.name + "=" + c);
        ds.integral.push_back(true);
      }
    }
  }

  // Sensitive domain; composite values enumerate the first feature slowest.
  std::vector<std::string> values{""};
  for (const auto& s : schema.sensitive) {
    std::vector<std::string> next;
    for (const auto& prefix : values) {
      for (const auto& c : s.categories) next.push_back(prefix.empty() ? c : prefix + "&" + c);
    }
    values = std::move(next);
  }
  ds.sensitive.values = values;
  ds.sensitive.encoding = schema.encoding;
  ds.sensitive.validate();
  ds.labels = schema.label.categories;

  ds.samples.reserve(raw.rows.size());
  for (const auto& row : raw.rows) {
    Sample sample;
    sample.x.assign(ds.columns.size(), 0.0);
    for (std::size_t k = 0; k < n_features; ++k) {
      const auto& enc = encoders[k];
      if (enc.continuous) {
        double v = *parse_number(row[k]);
        if (enc.scale.declared && (v < enc.scale.lo || v > enc.scale.hi)) {
          v = std::clamp(v, enc.scale.lo, enc.scale.hi);
          ++ds.clamped;
        }
        sample.x[enc.column] = enc.scale.normalize(v);
      } else {
        const auto it = std::find(enc.categories.begin(), enc.categories.end(), row[k]);
        if (it == enc.categories.end()) {
          throw SchemaError("value '" + row[k] + "' of '" + schema.features[k].name +
                            "' is not a declared category");
        }
        sample.x[enc.column + static_cast<std::size_t>(it - enc.categories.begin())] = 1.0;
      }
    }
    std::size_t s = 0;
    for (std::size_t j = 0; j < schema.sensitive.size(); ++j) {
      const auto& rule = schema.sensitive[j];
      s = s * rule.categories.size() + *rule.classify(row[n_features + j]);
    }
    sample.s = s;
    sample.y = *schema.label.classify(row.back());
    ds.samples.push_back(std::move(sample));
  }
  return ds;
}

std::vector<double> denormalize(const Dataset& dataset, const Sample& sample) {
  std::vector<double> out;
  out.reserve(dataset.scales.size());
  for (std::size_t k = 0; k < dataset.scales.size(); ++k) {
    out.push_back(dataset.scales[k].denormalize(sample.x.at(dataset.scale_columns[k])));
  }
  return out;
}

std::pair<Dataset, Dataset> split(const Dataset& dataset, double test_fraction,
                                  std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw std::invalid_argument("test fraction must lie in (0, 1)");
  }
  const std::size_t n = dataset.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
  const auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(n) * test_fraction));

  Dataset train = dataset;
  Dataset test = dataset;
  train.samples.clear();
  test.samples.clear();
  train.samples.reserve(n - n_test);
  test.samples.reserve(n_test);
  for (std::size_t i = 0; i < n; ++i) {
    (i < n - n_test ? train : test).samples.push_back(dataset.samples[order[i]]);
  }
  return {std::move(train), std::move(test)};
}

InputDomain extract_domain(const Dataset& dataset) {
  InputDomain domain;
  domain.names = dataset.columns;
  domain.bounds.assign(dataset.columns.size(), Interval{0.0, 1.0});
  domain.integral = dataset.integral;
  domain.sensitive = dataset.sensitive;
  return domain;
}

InputDomain domain_from_schema(const DatasetSchema& schema) {
  schema.validate();
  InputDomain domain;
  for (const auto& f : schema.features) {
    if (f.kind == FeatureKind::kContinuous) {
      domain.names.push_back(f.name);
      domain.integral.push_back(false);
    } else {
      if (f.infer_categories) {
        throw SchemaError("feature '" + f.name + "' infers its categories from data");
      }
      for (const auto& c : f.categories) {
        domain.names.push_back(f.name + "=" + c);
        domain.integral.push_back(true);
      }
    }
  }
  domain.bounds.assign(domain.names.size(), Interval{0.0, 1.0});
  std::vector<std::string> values{""};
  for (const auto& s : schema.sensitive) {
    std::vector<std::string> next;
    for (const auto& prefix : values) {
      for (const auto& c : s.categories) next.push_back(prefix.empty() ? c : prefix + "&" + c);
    }
    values = std::move(next);
  }
  domain.sensitive.values = values;
  domain.sensitive.encoding = schema.encoding;
  domain.validate();
  return domain;
}

NetworkSpec network_for(const InputDomain& domain, std::size_t num_labels,
                        const std::vector<std::size_t>& hidden, bool single_logit) {
  if (num_labels < 2) throw std::invalid_argument("need at least two labels");
  if (single_logit && num_labels != 2) {
    throw std::invalid_argument("a single logit only fits binary labels");
  }
  NetworkSpec spec;
  const bool one_hot = domain.sensitive.encoding == SensitiveEncoding::kOneHot;
  spec.sensitive.encoding = domain.sensitive.encoding;
  spec.sensitive.offset = domain.dims();
  spec.sensitive.width = one_hot ? domain.sensitive.size() : 1;
  spec.layer_sizes.push_back(domain.dims() + spec.sensitive.width);
  spec.layer_sizes.insert(spec.layer_sizes.end(), hidden.begin(), hidden.end());
  spec.layer_sizes.push_back(single_logit ? 1 : num_labels);
  spec.validate();
  return spec;
}

NetworkSpec network_for(const Dataset& dataset, const std::vector<std::size_t>& hidden,
                        bool single_logit) {
  return network_for(extract_domain(dataset), dataset.num_labels(), hidden, single_logit);
}

void write_domain(std::ostream& out, const InputDomain& domain) {
  domain.validate();
  out.precision(17);
  out << "# name|lo|hi|integral|sensitive[|values|encoding]\n";
  for (std::size_t k = 0; k < domain.dims(); ++k) {
    const bool integral = k < domain.integral.size() && domain.integral[k];
    out << domain.names[k] << '|' << domain.bounds[k].lo << '|' << domain.bounds[k].hi << '|'
        << (integral ? 1 : 0) << "|0\n";
  }
  const bool signed_binary = domain.sensitive.encoding == SensitiveEncoding::kSignedBinary;
  out << "sensitive|" << (signed_binary ? -1 : 0) << "|1|1|1|";
  for (std::size_t i = 0; i < domain.sensitive.size(); ++i) {
    out << (i ? "," : "") << domain.sensitive.values[i];
  }
  out << '|' << to_string(domain.sensitive.encoding) << '\n';
}

InputDomain read_domain(std::istream& in) {
  InputDomain domain;
  bool have_sensitive = false;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto fields = split_on(line, '|');
    for (auto& f : fields) f = trim(f);
    if (fields.size() < 5) schema_fail(line_no, "domain lines need name|lo|hi|integral|sensitive");
    const auto lo = parse_number(fields[1]);
    const auto hi = parse_number(fields[2]);
    if (!lo || !hi) schema_fail(line_no, "bounds must be numbers");
    if (fields[3] != "0" && fields[3] != "1") schema_fail(line_no, "integral flag is 0 or 1");
    if (fields[4] == "1") {
      if (fields.size() < 7) schema_fail(line_no, "sensitive line needs values and encoding");
      if (have_sensitive) schema_fail(line_no, "only one sensitive line is allowed");
      domain.sensitive.values = split_list(fields[5]);
      try {
        domain.sensitive.encoding = parse_encoding(fields[6]);
      } catch (const std::invalid_argument& e) {
        schema_fail(line_no, e.what());
      }
      have_sensitive = true;
    } else if (fields[4] == "0") {
      domain.names.push_back(fields[0]);
      domain.bounds.push_back(Interval{*lo, *hi});
      domain.integral.push_back(fields[3] == "1");
    } else {
      schema_fail(line_no, "sensitive flag is 0 or 1");
    }
  }
  if (!have_sensitive) throw SchemaError("domain file has no sensitive line");
  try {
    domain.validate();
  } catch (const std::invalid_argument& e) {
    throw SchemaError(std::string("invalid domain: ") + e.what());
  }
  return domain;
}

InputDomain load_domain(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataIoError("cannot open domain file " + path.string());
  return read_domain(in);
}

}  // namespace certfair
