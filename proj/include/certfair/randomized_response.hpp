#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "certfair/network.hpp"
#include "certfair/rng.hpp"

namespace certfair {

class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Ordered sensitive categories w_0 .. w_{|S|-1}.
struct SensitiveDomain {
  std::vector<std::string> values;
  SensitiveEncoding encoding = SensitiveEncoding::kOneHot;

  std::size_t size() const { return values.size(); }
  // Throws DomainError on fewer than two or duplicate values, or a
  // signed-binary domain that is not binary.
  void validate() const;
  std::size_t index_of(const std::string& value) const;

  // w_0 .. w_{n-1} named "s0".."s{n-1}".
  static SensitiveDomain anonymous(std::size_t n,
                                   SensitiveEncoding encoding = SensitiveEncoding::kOneHot);
};

// Randomized response over the sensitive values: the true value is released
// with probability p = e^gamma / (e^gamma + |S| - 1), otherwise one of the
// other |S| - 1 values uniformly.
class RRConfig {
 public:
  RRConfig(double gamma, SensitiveDomain domain);
  RRConfig(double gamma, std::size_t domain_size);

  double gamma() const { return gamma_; }
  const SensitiveDomain& domain() const { return domain_; }
  std::size_t domain_size() const { return domain_.size(); }
  double keep_probability() const { return keep_; }
  double other_probability() const { return other_; }

 private:
  double gamma_;
  SensitiveDomain domain_;
  double keep_;
  double other_;
};

// e^gamma / (e^gamma + m - 1), evaluated without overflow; 1 for gamma = +inf.
double keep_probability(double gamma, std::size_t domain_size);
// 1 / (e^gamma + m - 1): probability of each specific other value.
double other_probability(double gamma, std::size_t domain_size);

double response_prob(const RRConfig& config, std::size_t true_value, std::size_t released_value);

// Draws q ~ U[0,1); keeps the true value unless q > p.
std::size_t sample(const RRConfig& config, std::size_t true_value, Rng& rng);

struct NeuronId {
  std::size_t layer = 0;
  std::size_t index = 0;
  friend bool operator==(const NeuronId&, const NeuronId&) = default;
  friend auto operator<=>(const NeuronId&, const NeuronId&) = default;
};

// One equation of the zero-sum system: sum_{s'} grads[s'] * P(s' | true_value).
struct FrontierEquation {
  NeuronId source;           // neuron whose value is the local gradient
  std::size_t true_value = 0;
  std::vector<double> grads; // indexed by released value s'
  std::size_t multiplicity = 1;
};

// Neurons that are s-invariant while some neuron on the previous layer is not,
// plus the local-gradient table for the parameters at or before them.
struct SensitiveFrontier {
  std::size_t domain_size = 0;
  std::vector<NeuronId> neurons;
  std::vector<FrontierEquation> equations;
};

// Value of a neuron is compared across all sensitive values on every probe;
// tolerance 0 means exact equality.
bool neuron_invariant(const NetworkSpec& spec, const Parameters& params, NeuronId neuron,
                      std::span<const std::vector<double>> probes, double tolerance = 0.0);

// Probes are non-sensitive feature vectors. In one-hot mode the local
// gradients through the sensitive input block are taken relative to the block
// mean: the group tie of the first-layer weights is the invariant to keep, and
// it survives an update exactly when the expected deviation vanishes.
SensitiveFrontier find_frontier(const NetworkSpec& spec, const Parameters& params,
                                std::span<const std::vector<double>> probes,
                                double tolerance = 0.0);

struct GammaSearch {
  double gamma_max = 20.0;
  std::size_t grid_points = 2001;
  double precision = 1e-10;
};

struct GammaSolution {
  double gamma = 0.0;
  double keep_probability = 0.0;
  double residual = 0.0;  // max |equation value| at gamma
  bool feasible = false;
  std::vector<double> equation_residuals;
};

// Least-squares scalar search over gamma in [0, gamma_max]: grid scan then
// golden-section refinement. Feasible iff the residual is within tolerance.
GammaSolution solve_gamma(const SensitiveFrontier& frontier, double tolerance = 1e-9,
                          const GammaSearch& search = {});

// Per-equation expected local gradient under the response distribution.
std::vector<double> expected_gradient(const SensitiveFrontier& frontier, double gamma);

}  // namespace certfair
