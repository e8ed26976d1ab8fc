#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "certfair/dataset.hpp"
#include "certfair/network.hpp"
#include "certfair/randomized_response.hpp"
#include "certfair/rng.hpp"

namespace certfair {

enum class TrainMode { kStochastic, kExpectation };
enum class GammaSchedule { kEpoch, kStep };

std::string to_string(TrainMode mode);
std::string to_string(GammaSchedule schedule);
TrainMode parse_train_mode(const std::string& text);
GammaSchedule parse_gamma_schedule(const std::string& text);

struct TrainConfig {
  double lr = 0.01;
  std::size_t batch = 64;
  std::size_t epochs = 100;
  std::uint64_t seed = 0;
  TrainMode mode = TrainMode::kStochastic;
  std::size_t delta = 8;  // resampling passes over each batch
  GammaSchedule schedule = GammaSchedule::kEpoch;
  bool projection = true;
  double tol_fair = 1e-9;
  std::size_t probes = 16;  // training inputs used to locate the frontier
  // While the certificate holds every sensitive value yields the same trace,
  // so one forward/backward pass per sample serves all redraws.
  bool reuse_traces = true;

  // Throws std::invalid_argument.
  void validate() const;
};

struct EpochStats {
  std::size_t epoch = 0;
  double loss = 0.0;
  double gamma = 0.0;
  double residual = 0.0;
  bool gamma_feasible = true;
  double spread = 0.0;         // structural-certificate spread after the epoch
  double epoch_seconds = 0.0;  // training loop only
  double seconds = 0.0;        // cumulative
  double fairness_pct = 0.0;   // on the held-out set, NaN without one
  double accuracy_pct = 0.0;
  std::size_t steps = 0;       // cumulative applied or rejected updates
  std::size_t rollbacks = 0;   // cumulative
  std::size_t projections = 0; // cumulative
};

struct GammaReport {
  std::size_t epoch = 0;
  std::size_t step = 0;
  std::size_t frontier_neurons = 0;
  std::size_t equations = 0;
  GammaSolution solution;
};

struct TrainResult {
  Parameters params;
  std::vector<EpochStats> epochs;  // epoch 0 describes the initial parameters
  std::vector<GammaReport> gamma_reports;
  std::size_t rollbacks = 0;
  std::size_t projections = 0;
};

// Raised when the gamma system is infeasible and projection is disabled, or
// when the initial parameters do not carry the certificate.
class TrainingHalted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Largest violation of the structural certificate a gradient step would
// introduce: per first-layer neuron, the spread of its sensitive-group
// gradient (one-hot) or the sensitive-column gradient (signed-binary).
double breaking_magnitude(const NetworkSpec& spec, const GradientSet& gradient);

// Replaces each sensitive group by its mean (one-hot) or zeroes the
// sensitive column (signed-binary).
void project_gradient(const NetworkSpec& spec, GradientSet& gradient);

struct StepOutcome {
  bool applied = false;
  bool projected = false;
  bool rolled_back = false;
  double breaking = 0.0;
  double spread_before = 0.0;
  double spread_after = 0.0;
};

// theta <- theta - lr * gradient, guarded so the certificate spread stays
// within tol_fair. Projects a breaking gradient when projection is on;
// otherwise a step that would exceed tol_fair is rejected.
StepOutcome preserve_step(const NetworkSpec& spec, Parameters& params, GradientSet& gradient,
                          const TrainConfig& config);

// Mean loss gradient over the batch with sensitive values released by
// randomized response at keep probability from gamma. Stochastic mode draws
// delta released values per sample from rng; expectation mode weights every
// value by its response probability. mean_loss, if given, receives the mean
// loss of the evaluated forward passes.
GradientSet batch_gradient(const NetworkSpec& spec, const Parameters& params,
                           std::span<const Sample* const> batch, double gamma, TrainMode mode,
                           std::size_t delta, Rng& rng, bool reuse_traces = true,
                           double* mean_loss = nullptr);

// Plain mean loss gradient at the true sensitive values.
GradientSet erm_gradient(const NetworkSpec& spec, const Parameters& params,
                         std::span<const Sample* const> batch, double* mean_loss = nullptr);

// Mean cross-entropy over the dataset at the true sensitive values.
double dataset_loss(const NetworkSpec& spec, const Parameters& params, const Dataset& data);

// Fairness-preserving training. params0 must pass the structural certificate.
TrainResult train_fair(const NetworkSpec& spec, const Parameters& params0, const Dataset& train,
                       const TrainConfig& config, const Dataset* holdout = nullptr);

// Baseline mini-batch SGD on the true sensitive values; same batches and
// instrumentation as train_fair.
TrainResult train_erm(const NetworkSpec& spec, const Parameters& params0, const Dataset& train,
                      const TrainConfig& config, const Dataset* holdout = nullptr);

struct ChebyshevEntry {
  std::size_t neuron = 0;  // first hidden layer index
  std::size_t column = 0;  // sensitive input column
  double mean = 0.0;       // expected deviation update
  double variance = 0.0;   // single-pass variance
  double bound = 0.0;      // variance / (delta * tau^2)
  double frequency = 0.0;  // share of delta-pass trials deviating by more than tau
};

struct ChebyshevReport {
  std::size_t delta = 0;
  double tau = 0.0;
  std::size_t trials = 0;
  std::vector<ChebyshevEntry> entries;

  double max_bound() const;
  double max_frequency() const;
};

// Monitors the update of each first-layer neuron's sensitive deviation,
// -lr * (g[k][c] - mean_c g[k][.]) in one-hot mode and -lr * g[k][col] in
// signed-binary mode, under randomized-response redraws on the batch. The
// variance comes from `trials` single-pass updates, the frequency from
// `trials` delta-pass averages; the two use independent streams of seed.
ChebyshevReport chebyshev_report(const NetworkSpec& spec, const Parameters& params,
                                 std::span<const Sample* const> batch, double gamma,
                                 std::size_t delta, double tau, double lr = 0.01,
                                 std::size_t trials = 2000, std::uint64_t seed = 0);

}  // namespace certfair
