#include "certfair/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "certfair/evaluation.hpp"
#include "certfair/verifier.hpp"

namespace certfair {

std::string to_string(TrainMode mode) {
  return mode == TrainMode::kStochastic ? "stochastic" : "expectation";
}

std::string to_string(GammaSchedule schedule) {
  return schedule == GammaSchedule::kEpoch ? "epoch" : "step";
}

TrainMode parse_train_mode(const std::string& text) {
  if (text == "stochastic") return TrainMode::kStochastic;
  if (text == "expectation") return TrainMode::kExpectation;
  throw std::invalid_argument("unknown training mode '" + text + "'");
}

GammaSchedule parse_gamma_schedule(const std::string& text) {
  if (text == "epoch") return GammaSchedule::kEpoch;
  if (text == "step") return GammaSchedule::kStep;
  throw std::invalid_argument("unknown gamma schedule '" + text + "'");
}

void TrainConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw std::invalid_argument("learning rate must be > 0");
  if (batch == 0) throw std::invalid_argument("batch size must be at least 1");
  if (delta == 0) throw std::invalid_argument("delta must be at least 1");
  if (!(tol_fair >= 0.0)) throw std::invalid_argument("tol_fair must be >= 0");
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Encoding value of sensitive value s in column c of the slice.
double encoding_value(const SensitiveSlice& slice, std::size_t s, std::size_t c) {
  if (slice.encoding == SensitiveEncoding::kSignedBinary) return s == 0 ? -1.0 : 1.0;
  return c == s ? 1.0 : 0.0;
}

double sensitive_spread(const NetworkSpec& spec, const Parameters& params) {
  return structural_certificate(spec, params, std::numeric_limits<double>::infinity()).spread;
}

// Adds weight * d1[k] * target[c] to the sensitive columns of the first layer.
void add_sensitive(const NetworkSpec& spec, const std::vector<double>& d1,
                   const std::vector<double>& target, double weight, GradientSet& g) {
  auto& first = g.layers.front();
  const auto& slice = spec.sensitive;
  for (std::size_t k = 0; k < first.out; ++k) {
    const double d = weight * d1[k];
    for (std::size_t c = 0; c < slice.width; ++c) first.w(k, slice.offset + c) += d * target[c];
  }
}

void zero_sensitive_inputs(const NetworkSpec& spec, ForwardTrace& trace) {
  const auto& slice = spec.sensitive;
  for (std::size_t c = 0; c < slice.width; ++c) trace.post[0][slice.offset + c] = 0.0;
}

std::vector<const Sample*> all_samples(const Dataset& data) {
  std::vector<const Sample*> out;
  out.reserve(data.size());
  for (const auto& s : data.samples) out.push_back(&s);
  return out;
}

}  // namespace

double breaking_magnitude(const NetworkSpec& spec, const GradientSet& gradient) {
  const auto& first = gradient.layers.front();
  const auto& slice = spec.sensitive;
  double out = 0.0;
  for (std::size_t k = 0; k < first.out; ++k) {
    if (slice.encoding == SensitiveEncoding::kSignedBinary) {
      out = std::max(out, std::abs(first.w(k, slice.offset)));
      continue;
    }
    double lo = first.w(k, slice.offset);
    double hi = lo;
    for (std::size_t c = 1; c < slice.width; ++c) {
      lo = std::min(lo, first.w(k, slice.offset + c));
      hi = std::max(hi, first.w(k, slice.offset + c));
    }
    out = std::max(out, hi - lo);
  }
  return out;
}

void project_gradient(const NetworkSpec& spec, GradientSet& gradient) {
  auto& first = gradient.layers.front();
  const auto& slice = spec.sensitive;
  for (std::size_t k = 0; k < first.out; ++k) {
    if (slice.encoding == SensitiveEncoding::kSignedBinary) {
      first.w(k, slice.offset) = 0.0;
      continue;
    }
    double sum = 0.0;
    for (std::size_t c = 0; c < slice.width; ++c) sum += first.w(k, slice.offset + c);
    const double mean = sum / static_cast<double>(slice.width);
    for (std::size_t c = 0; c < slice.width; ++c) first.w(k, slice.offset + c) = mean;
  }
}

StepOutcome preserve_step(const NetworkSpec& spec, Parameters& params, GradientSet& gradient,
                          const TrainConfig& config) {
  check_shapes(spec, params);
  StepOutcome out;
  out.spread_before = sensitive_spread(spec, params);
  out.breaking = breaking_magnitude(spec, gradient);
  if (out.breaking > 0.0 && config.projection) {
    project_gradient(spec, gradient);
    out.projected = true;
  }

  // Spread of the sensitive weights the update would produce.
  const auto& first = params.layers.front();
  const auto& gfirst = gradient.layers.front();
  const auto& slice = spec.sensitive;
  double after = 0.0;
  for (std::size_t k = 0; k < first.out; ++k) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t c = 0; c < slice.width; ++c) {
      const std::size_t col = slice.offset + c;
      const double w = first.w(k, col) - config.lr * gfirst.w(k, col);
      lo = std::min(lo, w);
      hi = std::max(hi, w);
    }
    after = std::max(after, slice.encoding == SensitiveEncoding::kSignedBinary
                                ? std::abs(lo)
                                : hi - lo);
  }
  if (std::isnan(after)) after = std::numeric_limits<double>::infinity();

  const bool breaks = after > config.tol_fair && after > out.spread_before;
  if (breaks || !gradient.all_finite()) {
    out.rolled_back = true;
    out.spread_after = out.spread_before;
    return out;
  }
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    auto& layer = params.layers[i];
    const auto& g = gradient.layers[i];
    for (std::size_t k = 0; k < layer.weights.size(); ++k) layer.weights[k] -= config.lr * g.weights[k];
    for (std::size_t k = 0; k < layer.bias.size(); ++k) layer.bias[k] -= config.lr * g.bias[k];
  }
  ++params.version;
  out.applied = true;
  out.spread_after = sensitive_spread(spec, params);
  return out;
}

GradientSet batch_gradient(const NetworkSpec& spec, const Parameters& params,
                           std::span<const Sample* const> batch, double gamma, TrainMode mode,
                           std::size_t delta, Rng& rng, bool reuse_traces, double* mean_loss) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  if (delta == 0) throw std::invalid_argument("delta must be at least 1");
  const auto& slice = spec.sensitive;
  const std::size_t m = slice.domain_size();
  const RRConfig rr(gamma, m);
  const double keep = rr.keep_probability();
  const double other = rr.other_probability();
  const double w = 1.0 / static_cast<double>(batch.size());

  // Released values, pass-major, drawn before any gradient work so both
  // evaluation paths consume the stream identically.
  std::vector<std::vector<std::size_t>> released;
  if (mode == TrainMode::kStochastic) {
    released.assign(delta, std::vector<std::size_t>(batch.size()));
    for (std::size_t i = 0; i < delta; ++i) {
      for (std::size_t b = 0; b < batch.size(); ++b) released[i][b] = sample(rr, batch[b]->s, rng);
    }
  }

  const bool reuse = reuse_traces && structural_certificate(spec, params, 0.0).pass;
  auto g = GradientSet::zeros_like(params);
  ForwardTrace trace;
  std::vector<double> input;
  std::vector<double> d1;
  std::vector<double> target(slice.width);
  double total_loss = 0.0;
  double loss_weight = 0.0;

  if (reuse) {
    for (std::size_t b = 0; b < batch.size(); ++b) {
      const Sample& smp = *batch[b];
      input = assemble_input(spec, smp.x, smp.s);
      forward_into(spec, params, input, trace);
      total_loss += loss(trace, smp.y);
      loss_weight += 1.0;
      // The sensitive columns get their expected or sampled encoding below.
      zero_sensitive_inputs(spec, trace);
      accumulate_backward(spec, params, trace, smp.y, w, g, &d1);
      std::fill(target.begin(), target.end(), 0.0);
      if (mode == TrainMode::kExpectation) {
        for (std::size_t s = 0; s < m; ++s) {
          const double p = s == smp.s ? keep : other;
          for (std::size_t c = 0; c < slice.width; ++c) target[c] += p * encoding_value(slice, s, c);
        }
      } else {
        for (std::size_t i = 0; i < delta; ++i) {
          for (std::size_t c = 0; c < slice.width; ++c) {
            target[c] += encoding_value(slice, released[i][b], c);
          }
        }
        for (double& t : target) t /= static_cast<double>(delta);
      }
      add_sensitive(spec, d1, target, w, g);
    }
  } else if (mode == TrainMode::kExpectation) {
    for (std::size_t b = 0; b < batch.size(); ++b) {
      const Sample& smp = *batch[b];
      for (std::size_t s = 0; s < m; ++s) {
        const double p = s == smp.s ? keep : other;
        if (p == 0.0) continue;
        input = assemble_input(spec, smp.x, s);
        forward_into(spec, params, input, trace);
        total_loss += p * loss(trace, smp.y);
        loss_weight += p;
        accumulate_backward(spec, params, trace, smp.y, w * p, g);
      }
    }
  } else {
    const double wd = w / static_cast<double>(delta);
    for (std::size_t i = 0; i < delta; ++i) {
      for (std::size_t b = 0; b < batch.size(); ++b) {
        const Sample& smp = *batch[b];
        input = assemble_input(spec, smp.x, released[i][b]);
        forward_into(spec, params, input, trace);
        total_loss += loss(trace, smp.y);
        loss_weight += 1.0;
        accumulate_backward(spec, params, trace, smp.y, wd, g);
      }
    }
  }
  if (mean_loss) *mean_loss = total_loss / loss_weight;
  return g;
}

GradientSet erm_gradient(const NetworkSpec& spec, const Parameters& params,
                         std::span<const Sample* const> batch, double* mean_loss) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const double w = 1.0 / static_cast<double>(batch.size());
  auto g = GradientSet::zeros_like(params);
  ForwardTrace trace;
  std::vector<double> input;
  double total = 0.0;
  for (const Sample* smp : batch) {
    input = assemble_input(spec, smp->x, smp->s);
    forward_into(spec, params, input, trace);
    total += loss(trace, smp->y);
    accumulate_backward(spec, params, trace, smp->y, w, g);
  }
  if (mean_loss) *mean_loss = total * w;
  return g;
}

double dataset_loss(const NetworkSpec& spec, const Parameters& params, const Dataset& data) {
  if (data.samples.empty()) throw std::invalid_argument("empty dataset");
  double total = 0.0;
  for (const auto& smp : data.samples) {
    const auto input = assemble_input(spec, smp.x, smp.s);
    total += cross_entropy(evaluate(spec, params, input), smp.y);
  }
  return total / static_cast<double>(data.size());
}

namespace {

enum class Method { kFair, kErm };

struct Trainer {
  const NetworkSpec& spec;
  const Dataset& train;
  const TrainConfig& config;
  const Dataset* holdout;
  Method method;

  TrainResult result;
  std::vector<std::vector<double>> probes;
  double gamma = 0.0;
  double residual = 0.0;
  bool feasible = true;
  std::size_t steps = 0;

  void solve(std::size_t epoch) {
    const auto frontier = find_frontier(spec, result.params, probes, config.tol_fair);
    GammaReport report;
    report.epoch = epoch;
    report.step = steps;
    report.frontier_neurons = frontier.neurons.size();
    report.equations = frontier.equations.size();
    if (frontier.equations.empty()) {
      report.solution.gamma = 0.0;
      report.solution.keep_probability = keep_probability(0.0, frontier.domain_size);
      report.solution.feasible = true;
    } else {
      report.solution = solve_gamma(frontier, config.tol_fair);
    }
    gamma = report.solution.gamma;
    residual = report.solution.residual;
    feasible = report.solution.feasible;
    result.gamma_reports.push_back(report);
    if (!feasible && !config.projection) {
      throw TrainingHalted("gamma system infeasible at epoch " + std::to_string(epoch) +
                           " (residual " + std::to_string(residual) +
                           ") and projection is disabled");
    }
  }

  EpochStats snapshot(std::size_t epoch, double loss_value) const {
    EpochStats st;
    st.epoch = epoch;
    st.loss = loss_value;
    st.gamma = method == Method::kFair ? gamma : std::numeric_limits<double>::quiet_NaN();
    st.residual = method == Method::kFair ? residual : std::numeric_limits<double>::quiet_NaN();
    st.gamma_feasible = feasible;
    st.spread = sensitive_spread(spec, result.params);
    st.steps = steps;
    st.rollbacks = result.rollbacks;
    st.projections = result.projections;
    if (holdout && !holdout->samples.empty()) {
      st.fairness_pct = empirical_fairness(spec, result.params, *holdout).fairness_pct;
      st.accuracy_pct = accuracy(spec, result.params, *holdout);
    } else {
      st.fairness_pct = std::numeric_limits<double>::quiet_NaN();
      st.accuracy_pct = std::numeric_limits<double>::quiet_NaN();
    }
    return st;
  }

  TrainResult run(const Parameters& params0) {
    config.validate();
    spec.validate();
    check_shapes(spec, params0);
    if (train.samples.empty()) throw std::invalid_argument("empty training set");
    result.params = params0;

    if (method == Method::kFair) {
      const double spread = sensitive_spread(spec, params0);
      if (!(spread <= config.tol_fair)) {
        throw TrainingHalted("initial parameters fail the structural certificate (spread " +
                             std::to_string(spread) + ")");
      }
      for (std::size_t i = 0; i < std::min(config.probes, train.size()); ++i) {
        probes.push_back(train.samples[i].x);
      }
      solve(0);
    }
    result.epochs.push_back(snapshot(0, dataset_loss(spec, result.params, train)));

    Rng shuffle = Rng::stream(config.seed, 1);
    Rng rr_rng = Rng::stream(config.seed, 2);
    const auto pool = all_samples(train);
    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<const Sample*> batch;
    double cumulative = 0.0;

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
      const auto start = Clock::now();
      if (method == Method::kFair && config.schedule == GammaSchedule::kEpoch && epoch > 1) {
        solve(epoch);
      }
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.index(i)]);
      double loss_sum = 0.0;
      // A trailing partial batch is folded into the last full one.
      const std::size_t full = std::max<std::size_t>(1, order.size() / config.batch);
      for (std::size_t index = 0; index < full; ++index) {
        const std::size_t begin = index * config.batch;
        const std::size_t end = index + 1 == full ? order.size() : begin + config.batch;
        batch.clear();
        for (std::size_t k = begin; k < end; ++k) batch.push_back(pool[order[k]]);
        double batch_loss = 0.0;
        if (method == Method::kFair) {
          if (config.schedule == GammaSchedule::kStep && !(epoch == 1 && begin == 0)) solve(epoch);
          auto g = batch_gradient(spec, result.params, batch, gamma, config.mode, config.delta,
                                  rr_rng, config.reuse_traces, &batch_loss);
          const auto outcome = preserve_step(spec, result.params, g, config);
          if (outcome.projected) ++result.projections;
          if (outcome.rolled_back) ++result.rollbacks;
        } else {
          auto g = erm_gradient(spec, result.params, batch, &batch_loss);
          for (std::size_t i = 0; i < result.params.layers.size(); ++i) {
            auto& layer = result.params.layers[i];
            const auto& gl = g.layers[i];
            for (std::size_t k = 0; k < layer.weights.size(); ++k) layer.weights[k] -= config.lr * gl.weights[k];
            for (std::size_t k = 0; k < layer.bias.size(); ++k) layer.bias[k] -= config.lr * gl.bias[k];
          }
          ++result.params.version;
        }
        ++steps;
        loss_sum += batch_loss * static_cast<double>(end - begin);
      }
      const double elapsed = seconds_since(start);
      cumulative += elapsed;
      auto st = snapshot(epoch, loss_sum / static_cast<double>(order.size()));
      st.epoch_seconds = elapsed;
      st.seconds = cumulative;
      result.epochs.push_back(st);
    }
    return result;
  }
};

}  // namespace

TrainResult train_fair(const NetworkSpec& spec, const Parameters& params0, const Dataset& train,
                       const TrainConfig& config, const Dataset* holdout) {
  Trainer t{spec, train, config, holdout, Method::kFair, {}, {}, 0.0, 0.0, true, 0};
  return t.run(params0);
}

TrainResult train_erm(const NetworkSpec& spec, const Parameters& params0, const Dataset& train,
                      const TrainConfig& config, const Dataset* holdout) {
  Trainer t{spec, train, config, holdout, Method::kErm, {}, {}, 0.0, 0.0, true, 0};
  return t.run(params0);
}

double ChebyshevReport::max_bound() const {
  double m = 0.0;
  for (const auto& e : entries) m = std::max(m, e.bound);
  return m;
}

double ChebyshevReport::max_frequency() const {
  double m = 0.0;
  for (const auto& e : entries) m = std::max(m, e.frequency);
  return m;
}

ChebyshevReport chebyshev_report(const NetworkSpec& spec, const Parameters& params,
                                 std::span<const Sample* const> batch, double gamma,
                                 std::size_t delta, double tau, double lr, std::size_t trials,
                                 std::uint64_t seed) {
  if (delta < 2) throw std::invalid_argument("delta must be at least 2");
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  if (trials < 2) throw std::invalid_argument("need at least two trials");
  if (batch.empty()) throw std::invalid_argument("empty batch");
  check_shapes(spec, params);

  const auto& slice = spec.sensitive;
  const std::size_t m = slice.domain_size();
  const std::size_t width = slice.width;
  const std::size_t hidden = params.layers.front().out;
  const bool one_hot = slice.encoding == SensitiveEncoding::kOneHot;
  const RRConfig rr(gamma, m);
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  // First-layer deltas per (sample, released value).
  std::vector<std::vector<std::vector<double>>> d1(batch.size(), std::vector<std::vector<double>>(m));
  auto scratch = GradientSet::zeros_like(params);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    for (std::size_t s = 0; s < m; ++s) {
      const auto trace = forward(spec, params, batch[b]->x, s);
      accumulate_backward(spec, params, trace, batch[b]->y, 0.0, scratch, &d1[b][s]);
    }
  }

  // Monitored deviation for per-column first-layer gradients G (hidden x width).
  auto deviation = [&](const std::vector<double>& grad, std::vector<double>& dev) {
    for (std::size_t k = 0; k < hidden; ++k) {
      double mean = 0.0;
      if (one_hot) {
        for (std::size_t c = 0; c < width; ++c) mean += grad[k * width + c];
        mean /= static_cast<double>(width);
      }
      for (std::size_t c = 0; c < width; ++c) dev[k * width + c] = -lr * (grad[k * width + c] - mean);
    }
  };
  auto add_released = [&](std::size_t b, std::size_t s, double weight, std::vector<double>& grad) {
    for (std::size_t k = 0; k < hidden; ++k) {
      const double d = weight * d1[b][s][k];
      for (std::size_t c = 0; c < width; ++c) grad[k * width + c] += d * encoding_value(slice, s, c);
    }
  };
  auto single_pass = [&](Rng& rng, std::vector<double>& grad) {
    for (std::size_t b = 0; b < batch.size(); ++b) add_released(b, sample(rr, batch[b]->s, rng), inv_b, grad);
  };

  const std::size_t n = hidden * width;
  std::vector<double> grad(n), mu(n), dev(n);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    for (std::size_t s = 0; s < m; ++s) {
      const double p = s == batch[b]->s ? rr.keep_probability() : rr.other_probability();
      add_released(b, s, inv_b * p, grad);
    }
  }
  deviation(grad, mu);

  std::vector<double> var(n, 0.0);
  Rng var_rng = Rng::stream(seed, 1);
  for (std::size_t t = 0; t < trials; ++t) {
    std::fill(grad.begin(), grad.end(), 0.0);
    single_pass(var_rng, grad);
    deviation(grad, dev);
    for (std::size_t j = 0; j < n; ++j) var[j] += (dev[j] - mu[j]) * (dev[j] - mu[j]);
  }
  for (double& v : var) v /= static_cast<double>(trials);

  std::vector<std::size_t> exceed(n, 0);
  Rng freq_rng = Rng::stream(seed, 2);
  for (std::size_t t = 0; t < trials; ++t) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < delta; ++i) single_pass(freq_rng, grad);
    for (double& v : grad) v /= static_cast<double>(delta);
    deviation(grad, dev);
    for (std::size_t j = 0; j < n; ++j) {
      if (std::abs(dev[j] - mu[j]) > tau) ++exceed[j];
    }
  }

  ChebyshevReport report;
  report.delta = delta;
  report.tau = tau;
  report.trials = trials;
  for (std::size_t k = 0; k < hidden; ++k) {
    for (std::size_t c = 0; c < width; ++c) {
      const std::size_t j = k * width + c;
      ChebyshevEntry e;
      e.neuron = k;
      e.column = c;
      e.mean = mu[j];
      e.variance = var[j];
      e.bound = var[j] / (static_cast<double>(delta) * tau * tau);
      e.frequency = static_cast<double>(exceed[j]) / static_cast<double>(trials);
      report.entries.push_back(e);
    }
  }
  return report;
}

}  // namespace certfair
