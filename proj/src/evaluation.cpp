#include "certfair/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace certfair {

FairnessResult empirical_fairness(const NetworkSpec& spec, const Parameters& params,
                                  std::span<const Sample> samples) {
  if (samples.empty()) throw std::invalid_argument("empty test set");
  const std::size_t m = spec.sensitive.domain_size();
  FairnessResult out;
  out.total = samples.size();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    auto input = assemble_input(spec, samples[i].x, 0);
    const Label first = decide(evaluate(spec, params, input));
    for (std::size_t s = 1; s < m; ++s) {
      encode_sensitive(spec, s, input);
      if (decide(evaluate(spec, params, input)) != first) {
        out.violating.push_back(i);
        break;
      }
    }
  }
  out.discriminatory = out.violating.size();
  out.fairness_pct = 100.0 * static_cast<double>(out.total - out.discriminatory) /
                     static_cast<double>(out.total);
  return out;
}

FairnessResult empirical_fairness(const NetworkSpec& spec, const Parameters& params,
                                  const Dataset& data) {
  return empirical_fairness(spec, params, std::span<const Sample>(data.samples));
}

double accuracy(const NetworkSpec& spec, const Parameters& params,
                std::span<const Sample> samples) {
  if (samples.empty()) throw std::invalid_argument("empty test set");
  std::size_t correct = 0;
  for (const auto& smp : samples) {
    if (predict(spec, params, smp.x, smp.s) == smp.y) ++correct;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(samples.size());
}

double accuracy(const NetworkSpec& spec, const Parameters& params, const Dataset& data) {
  return accuracy(spec, params, std::span<const Sample>(data.samples));
}

namespace {

std::vector<double> epoch_times(const std::vector<EpochStats>& stats) {
  std::vector<double> out;
  for (const auto& st : stats) {
    if (st.epoch > 0) out.push_back(st.epoch_seconds);
  }
  return out;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TimingRatio timing_ratio(const std::vector<EpochStats>& fair, const std::vector<EpochStats>& erm) {
  const auto tf = epoch_times(fair);
  const auto te = epoch_times(erm);
  if (tf.size() != te.size()) throw std::invalid_argument("timing logs cover different epochs");
  TimingRatio out;
  for (double t : tf) out.fair_seconds += t;
  for (double t : te) out.erm_seconds += t;
  if (tf.empty()) return out;
  out.ratio = out.erm_seconds > 0.0 ? out.fair_seconds / out.erm_seconds : 1.0;
  const double mf = median(tf);
  const double me = median(te);
  out.per_epoch_ratio = me > 0.0 ? mf / me : 1.0;
  // A "step" here is one epoch.
  const double epochs = static_cast<double>(tf.size());
  out.fair_steps_per_sec = out.fair_seconds > 0.0 ? epochs / out.fair_seconds : 0.0;
  out.erm_steps_per_sec = out.erm_seconds > 0.0 ? epochs / out.erm_seconds : 0.0;
  return out;
}

double epoch_time_spread(const std::vector<EpochStats>& stats) {
  const auto t = epoch_times(stats);
  if (t.empty()) return 1.0;
  const double med = median(t);
  return med > 0.0 ? *std::max_element(t.begin(), t.end()) / med : 1.0;
}

namespace {

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

// Identifiers end up as CSV cells; commas would break the row.
std::string cell(const std::string& text) {
  std::string out = text;
  std::replace(out.begin(), out.end(), ',', ';');
  return out;
}

double to_double(const std::string& text) {
  if (text == "nan") return std::nan("");
  return std::stod(text);
}

template <typename Fn>
void read_rows(std::istream& in, std::size_t fields, Fn&& fn) {
  std::string line;
  if (!std::getline(in, line)) return;  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto row = split_row(line);
    if (row.size() != fields) throw std::runtime_error("malformed report row: " + line);
    fn(row);
  }
}

}  // namespace

void write_reports(std::ostream& out, const std::vector<EvalReport>& reports) {
  out.precision(17);
  out << "dataset,attribute,method,fairness_pct,discriminatory_count,accuracy_pct,total_seconds,"
         "steps_per_sec\n";
  for (const auto& r : reports) {
    out << cell(r.dataset) << ',' << cell(r.attribute) << ',' << cell(r.method) << ','
        << r.fairness_pct << ',' << r.discriminatory_count << ',' << r.accuracy_pct << ','
        << r.total_seconds << ',' << r.steps_per_sec << '\n';
  }
}

std::vector<EvalReport> read_reports(std::istream& in) {
  std::vector<EvalReport> out;
  read_rows(in, 8, [&](const std::vector<std::string>& row) {
    EvalReport r;
    r.dataset = row[0];
    r.attribute = row[1];
    r.method = row[2];
    r.fairness_pct = to_double(row[3]);
    r.discriminatory_count = std::stoull(row[4]);
    r.accuracy_pct = to_double(row[5]);
    r.total_seconds = to_double(row[6]);
    r.steps_per_sec = to_double(row[7]);
    out.push_back(r);
  });
  return out;
}

void write_verification_rows(std::ostream& out, const std::vector<VerificationRow>& rows) {
  out.precision(17);
  out << "dataset,verdict,partitions,seconds,accuracy_pct\n";
  for (const auto& r : rows) {
    out << cell(r.dataset) << ',' << cell(r.verdict) << ',' << r.partitions << ',' << r.seconds
        << ',' << r.accuracy_pct << '\n';
  }
}

std::vector<VerificationRow> read_verification_rows(std::istream& in) {
  std::vector<VerificationRow> out;
  read_rows(in, 5, [&](const std::vector<std::string>& row) {
    VerificationRow r;
    r.dataset = row[0];
    r.verdict = row[1];
    r.partitions = std::stoull(row[2]);
    r.seconds = to_double(row[3]);
    r.accuracy_pct = to_double(row[4]);
    out.push_back(r);
  });
  return out;
}

void write_curves(std::ostream& out, const std::string& method,
                  const std::vector<EpochStats>& stats, bool header) {
  out.precision(17);
  if (header) {
    out << "method,epoch,loss,fairness_pct,accuracy_pct,seconds,gamma,residual,spread,rollbacks\n";
  }
  for (const auto& st : stats) {
    out << cell(method) << ',' << st.epoch << ',' << st.loss << ',' << st.fairness_pct << ','
        << st.accuracy_pct << ',' << st.seconds << ',' << st.gamma << ',' << st.residual << ','
        << st.spread << ',' << st.rollbacks << '\n';
  }
}

std::vector<std::pair<std::string, EpochStats>> read_curves(std::istream& in) {
  std::vector<std::pair<std::string, EpochStats>> out;
  read_rows(in, 10, [&](const std::vector<std::string>& row) {
    EpochStats st;
    st.epoch = std::stoull(row[1]);
    st.loss = to_double(row[2]);
    st.fairness_pct = to_double(row[3]);
    st.accuracy_pct = to_double(row[4]);
    st.seconds = to_double(row[5]);
    st.gamma = to_double(row[6]);
    st.residual = to_double(row[7]);
    st.spread = to_double(row[8]);
    st.rollbacks = std::stoull(row[9]);
    out.emplace_back(row[0], st);
  });
  return out;
}

std::vector<std::filesystem::path> emit_report(
    const std::filesystem::path& dir, const std::vector<EvalReport>& reports,
    const std::vector<VerificationRow>& verification,
    const std::vector<std::pair<std::string, std::vector<EpochStats>>>& curves) {
  if (reports.empty() && verification.empty() && curves.empty()) {
    throw std::invalid_argument("nothing to report");
  }
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataIoError("cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  auto open = [&](const std::string& name) {
    const auto path = dir / name;
    std::ofstream out(path);
    if (!out) throw DataIoError("cannot write " + path.string());
    written.push_back(path);
    return out;
  };
  if (!reports.empty()) {
    auto out = open("table2.csv");
    write_reports(out, reports);
  }
  if (!verification.empty()) {
    auto out = open("table1.csv");
    write_verification_rows(out, verification);
  }
  if (!curves.empty()) {
    auto out = open("curves.csv");
    bool header = true;
    for (const auto& [method, stats] : curves) {
      write_curves(out, method, stats, header);
      header = false;
    }
  }
  return written;
}

}  // namespace certfair
