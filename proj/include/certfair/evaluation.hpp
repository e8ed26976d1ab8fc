#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "certfair/dataset.hpp"
#include "certfair/network.hpp"
#include "certfair/trainer.hpp"

namespace certfair {

struct FairnessResult {
  double fairness_pct = 100.0;
  std::size_t discriminatory = 0;
  std::size_t total = 0;
  std::vector<std::size_t> violating;  // sample indices
};

// A sample is discriminatory when its predicted label is not the same for
// every sensitive value. Throws std::invalid_argument on an empty set.
FairnessResult empirical_fairness(const NetworkSpec& spec, const Parameters& params,
                                  std::span<const Sample> samples);
FairnessResult empirical_fairness(const NetworkSpec& spec, const Parameters& params,
                                  const Dataset& data);

// Percentage of samples predicted correctly at their true sensitive value.
double accuracy(const NetworkSpec& spec, const Parameters& params,
                std::span<const Sample> samples);
double accuracy(const NetworkSpec& spec, const Parameters& params, const Dataset& data);

struct TimingRatio {
  double fair_seconds = 0.0;
  double erm_seconds = 0.0;
  double ratio = 1.0;            // total wall-clock fair / erm
  double per_epoch_ratio = 1.0;  // median epoch time fair / erm
  double fair_steps_per_sec = 0.0;
  double erm_steps_per_sec = 0.0;
};

// Both logs must cover the same epochs (epoch-0 rows are ignored).
TimingRatio timing_ratio(const std::vector<EpochStats>& fair, const std::vector<EpochStats>& erm);

// Largest epoch time over the median epoch time.
double epoch_time_spread(const std::vector<EpochStats>& stats);

struct EvalReport {
  std::string dataset;
  std::string attribute;
  std::string method;
  double fairness_pct = 0.0;
  std::size_t discriminatory_count = 0;
  double accuracy_pct = 0.0;
  double total_seconds = 0.0;
  double steps_per_sec = 0.0;
};

struct VerificationRow {
  std::string dataset;
  std::string verdict;
  std::size_t partitions = 0;
  double seconds = 0.0;
  double accuracy_pct = 0.0;
};

void write_reports(std::ostream& out, const std::vector<EvalReport>& reports);
std::vector<EvalReport> read_reports(std::istream& in);
void write_verification_rows(std::ostream& out, const std::vector<VerificationRow>& rows);
std::vector<VerificationRow> read_verification_rows(std::istream& in);
// One row per epoch (including epoch 0): method, epoch, loss, fairness_pct,
// accuracy_pct, seconds, gamma, residual, spread, rollbacks.
void write_curves(std::ostream& out, const std::string& method,
                  const std::vector<EpochStats>& stats, bool header = true);
std::vector<std::pair<std::string, EpochStats>> read_curves(std::istream& in);

// Writes table2.csv, table1.csv and curves.csv under dir (skipping empty
// inputs) and returns the paths written. Throws DataIoError when a file
// cannot be written.
std::vector<std::filesystem::path> emit_report(
    const std::filesystem::path& dir, const std::vector<EvalReport>& reports,
    const std::vector<VerificationRow>& verification = {},
    const std::vector<std::pair<std::string, std::vector<EpochStats>>>& curves = {});

}  // namespace certfair
