#include "certfair/randomized_response.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <utility>

namespace certfair {

void SensitiveDomain::validate() const {
  if (values.size() < 2) throw DomainError("a sensitive domain needs at least two values");
  std::set<std::string> seen(values.begin(), values.end());
  if (seen.size() != values.size()) throw DomainError("sensitive values must be distinct");
  if (encoding == SensitiveEncoding::kSignedBinary && values.size() != 2) {
    throw DomainError("signed-binary encoding requires exactly two sensitive values");
  }
}

std::size_t SensitiveDomain::index_of(const std::string& value) const {
  const auto it = std::find(values.begin(), values.end(), value);
  if (it == values.end()) throw DomainError("'" + value + "' is not a sensitive value");
  return static_cast<std::size_t>(it - values.begin());
}

SensitiveDomain SensitiveDomain::anonymous(std::size_t n, SensitiveEncoding encoding) {
  SensitiveDomain domain;
  domain.encoding = encoding;
  for (std::size_t i = 0; i < n; ++i) domain.values.push_back("s" + std::to_string(i));
  return domain;
}

double keep_probability(double gamma, std::size_t domain_size) {
  if (std::isnan(gamma)) throw DomainError("gamma is NaN");
  if (domain_size < 2) throw DomainError("randomized response needs at least two values");
  if (gamma == std::numeric_limits<double>::infinity()) return 1.0;
  const double others = static_cast<double>(domain_size - 1);
  if (gamma >= 0.0) return 1.0 / (1.0 + others * std::exp(-gamma));
  const double e = std::exp(gamma);
  return e / (e + others);
}

double other_probability(double gamma, std::size_t domain_size) {
  if (std::isnan(gamma)) throw DomainError("gamma is NaN");
  if (domain_size < 2) throw DomainError("randomized response needs at least two values");
  if (gamma == std::numeric_limits<double>::infinity()) return 0.0;
  const double others = static_cast<double>(domain_size - 1);
  // Same expression as keep_probability with the numerator replaced, so that
  // gamma = 0 gives bitwise equal probabilities.
  if (gamma >= 0.0) return std::exp(-gamma) / (1.0 + others * std::exp(-gamma));
  return 1.0 / (std::exp(gamma) + others);
}

RRConfig::RRConfig(double gamma, SensitiveDomain domain)
    : gamma_(gamma), domain_(std::move(domain)) {
  if (!(gamma_ >= 0.0)) throw DomainError("gamma must be non-negative");
  domain_.validate();
  keep_ = certfair::keep_probability(gamma_, domain_.size());
  other_ = certfair::other_probability(gamma_, domain_.size());
}

RRConfig::RRConfig(double gamma, std::size_t domain_size)
    : RRConfig(gamma, SensitiveDomain::anonymous(domain_size)) {}

double response_prob(const RRConfig& config, std::size_t true_value,
                     std::size_t released_value) {
  const auto n = config.domain_size();
  if (true_value >= n || released_value >= n) {
    throw DomainError("sensitive value index outside the domain");
  }
  return true_value == released_value ? config.keep_probability() : config.other_probability();
}

std::size_t sample(const RRConfig& config, std::size_t true_value, Rng& rng) {
  const auto n = config.domain_size();
  if (true_value >= n) throw DomainError("sensitive value index outside the domain");
  const double q = rng.uniform();
  if (q > config.keep_probability()) {
    // Uniform over S \ {true_value}.
    const std::size_t pick = rng.index(n - 1);
    return pick < true_value ? pick : pick + 1;
  }
  return true_value;
}

namespace {

// values[probe][s] = trace post-activations for that probe and sensitive value.
using TraceGrid = std::vector<std::vector<ForwardTrace>>;

TraceGrid trace_grid(const NetworkSpec& spec, const Parameters& params,
                     std::span<const std::vector<double>> probes) {
  const std::size_t m = spec.sensitive.domain_size();
  TraceGrid grid(probes.size(), std::vector<ForwardTrace>(m));
  for (std::size_t p = 0; p < probes.size(); ++p) {
    for (std::size_t s = 0; s < m; ++s) grid[p][s] = forward(spec, params, probes[p], s);
  }
  return grid;
}

bool invariant_in(const TraceGrid& grid, NeuronId neuron, double tolerance) {
  for (const auto& per_s : grid) {
    const double ref = per_s.front().post[neuron.layer][neuron.index];
    for (const auto& trace : per_s) {
      const double v = trace.post[neuron.layer][neuron.index];
      if (tolerance == 0.0 ? v != ref : std::abs(v - ref) > tolerance) return false;
    }
  }
  return true;
}

bool in_sensitive_slice(const NetworkSpec& spec, NeuronId neuron) {
  return neuron.layer == 0 && neuron.index >= spec.sensitive.offset &&
         neuron.index < spec.sensitive.offset + spec.sensitive.width;
}

double prob(double keep, double other, std::size_t t, std::size_t s) { return t == s ? keep : other; }

double equation_value(const FrontierEquation& eq, double keep, double other) {
  double v = 0.0;
  for (std::size_t s = 0; s < eq.grads.size(); ++s) v += eq.grads[s] * prob(keep, other, eq.true_value, s);
  return v;
}

}  // namespace

bool neuron_invariant(const NetworkSpec& spec, const Parameters& params, NeuronId neuron,
                      std::span<const std::vector<double>> probes, double tolerance) {
  if (neuron.layer > spec.depth() || neuron.index >= spec.layer_sizes[neuron.layer]) {
    throw std::out_of_range("neuron outside the network");
  }
  if (in_sensitive_slice(spec, neuron)) return false;
  return invariant_in(trace_grid(spec, params, probes), neuron, tolerance);
}

SensitiveFrontier find_frontier(const NetworkSpec& spec, const Parameters& params,
                                std::span<const std::vector<double>> probes, double tolerance) {
  spec.validate();
  check_shapes(spec, params);
  SensitiveFrontier frontier;
  frontier.domain_size = spec.sensitive.domain_size();
  if (probes.empty()) return frontier;

  const auto grid = trace_grid(spec, params, probes);
  const std::size_t depth = spec.depth();
  std::vector<std::vector<bool>> invariant(depth + 1);
  for (std::size_t i = 0; i <= depth; ++i) {
    invariant[i].resize(spec.layer_sizes[i]);
    for (std::size_t j = 0; j < spec.layer_sizes[i]; ++j) {
      const NeuronId id{i, j};
      invariant[i][j] = !in_sensitive_slice(spec, id) && invariant_in(grid, id, tolerance);
    }
  }

  std::size_t last_layer = 0;
  for (std::size_t i = 1; i <= depth; ++i) {
    const bool prev_dependent =
        std::find(invariant[i - 1].begin(), invariant[i - 1].end(), false) != invariant[i - 1].end();
    if (!prev_dependent) continue;
    for (std::size_t j = 0; j < spec.layer_sizes[i]; ++j) {
      if (invariant[i][j]) {
        frontier.neurons.push_back({i, j});
        last_layer = i;
      }
    }
  }
  if (frontier.neurons.empty()) return frontier;

  // Parameters on layers 1..last_layer. The local gradient of a weight is the
  // value of its source neuron, so only s-dependent sources give equations.
  const std::size_t m = frontier.domain_size;
  const bool one_hot = spec.sensitive.encoding == SensitiveEncoding::kOneHot;
  std::map<std::pair<std::size_t, std::vector<double>>, std::size_t> index;
  for (std::size_t i = 1; i <= last_layer; ++i) {
    for (std::size_t src = 0; src < spec.layer_sizes[i - 1]; ++src) {
      if (invariant[i - 1][src]) continue;
      const NeuronId source{i - 1, src};
      const bool centered = one_hot && in_sensitive_slice(spec, source);
      for (std::size_t p = 0; p < grid.size(); ++p) {
        std::vector<double> grads(m);
        for (std::size_t s = 0; s < m; ++s) {
          double g = grid[p][s].post[i - 1][src];
          if (centered) {
            double block = 0.0;
            for (std::size_t c = 0; c < spec.sensitive.width; ++c) {
              block += grid[p][s].post[0][spec.sensitive.offset + c];
            }
            g -= block / static_cast<double>(spec.sensitive.width);
          }
          grads[s] = g;
        }
        for (std::size_t t = 0; t < m; ++t) {
          auto key = std::make_pair(t, grads);
          const auto it = index.find(key);
          if (it != index.end()) {
            ++frontier.equations[it->second].multiplicity;
            continue;
          }
          index.emplace(std::move(key), frontier.equations.size());
          frontier.equations.push_back({source, t, grads, 1});
        }
      }
    }
  }
  return frontier;
}

std::vector<double> expected_gradient(const SensitiveFrontier& frontier, double gamma) {
  if (frontier.equations.empty()) throw std::invalid_argument("empty frontier gradient table");
  const double keep = keep_probability(gamma, frontier.domain_size);
  const double other = other_probability(gamma, frontier.domain_size);
  std::vector<double> out;
  out.reserve(frontier.equations.size());
  for (const auto& eq : frontier.equations) out.push_back(equation_value(eq, keep, other));
  return out;
}

GammaSolution solve_gamma(const SensitiveFrontier& frontier, double tolerance,
                          const GammaSearch& search) {
  if (frontier.equations.empty()) throw std::invalid_argument("empty frontier gradient table");
  for (const auto& eq : frontier.equations) {
    if (eq.grads.size() != frontier.domain_size) {
      throw std::invalid_argument("frontier equation width differs from the domain size");
    }
    for (double g : eq.grads) {
      if (!std::isfinite(g)) throw std::invalid_argument("non-finite frontier gradient");
    }
  }
  const std::size_t m = frontier.domain_size;
  const double lower = 1.0 / static_cast<double>(m);
  const double upper = 1.0 - 1e-12;

  auto objective = [&](double gamma) {
    const double keep = std::clamp(keep_probability(gamma, m), lower, upper);
    const double other = (1.0 - keep) / static_cast<double>(m - 1);
    double total = 0.0;
    for (const auto& eq : frontier.equations) {
      const double v = equation_value(eq, keep, other);
      total += static_cast<double>(eq.multiplicity) * v * v;
    }
    return total;
  };

  double best_gamma = 0.0;
  double best_value = objective(0.0);
  const std::size_t n = std::max<std::size_t>(search.grid_points, 3);
  const double step = search.gamma_max / static_cast<double>(n - 1);
  std::size_t best_index = 0;
  for (std::size_t k = 1; k < n; ++k) {
    const double g = step * static_cast<double>(k);
    const double v = objective(g);
    if (v < best_value) {
      best_value = v;
      best_gamma = g;
      best_index = k;
    }
  }

  if (best_value > 0.0) {
    double a = step * static_cast<double>(best_index == 0 ? 0 : best_index - 1);
    double b = std::min(search.gamma_max, step * static_cast<double>(best_index + 1));
    const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - ratio * (b - a);
    double d = a + ratio * (b - a);
    double fc = objective(c);
    double fd = objective(d);
    while (b - a > search.precision) {
      if (fc <= fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - ratio * (b - a);
        fc = objective(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + ratio * (b - a);
        fd = objective(d);
      }
    }
    const double refined = 0.5 * (a + b);
    const double refined_value = objective(refined);
    if (refined_value < best_value) {
      best_value = refined_value;
      best_gamma = refined;
    }
  }

  GammaSolution solution;
  solution.gamma = best_gamma;
  solution.keep_probability = std::clamp(keep_probability(best_gamma, m), lower, upper);
  solution.equation_residuals = expected_gradient(frontier, best_gamma);
  for (double r : solution.equation_residuals) {
    solution.residual = std::max(solution.residual, std::abs(r));
  }
  solution.feasible = solution.residual <= tolerance;
  return solution;
}

}  // namespace certfair
