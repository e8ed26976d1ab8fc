#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

#include "certfair/network.hpp"
#include "certfair/verifier.hpp"

namespace certfair {

enum class InitScheme { kZero, kBernoulli };

std::string to_string(InitScheme scheme);
InitScheme parse_init_scheme(const std::string& text);

struct InitConfig {
  InitScheme scheme = InitScheme::kBernoulli;
  double c = 0.0;        // bias constant of the zero scheme
  double p_init = 0.5;   // probability of +e^phi
  double phi = -10.0;    // weight magnitude exponent
  // Divide each layer's magnitude by sqrt(fan-in).
  bool fan_in_scaling = false;
  std::uint64_t seed = 0;

  // Throws std::invalid_argument unless p_init in (0,1), phi <= 0, finite c.
  void validate() const;
};

// All weights 0, all biases c.
Parameters zero_init(const NetworkSpec& spec, double c);

// Weights +a with probability p_init, -a otherwise, a = e^phi (divided by
// sqrt(fan-in) when fan_in_scaling is set); biases 0. One-hot
// mode draws one sign per (first-layer neuron, sensitive group) and copies it
// across the group. Signed-binary mode leaves the sensitive column at 0.
Parameters bernoulli_init(const NetworkSpec& spec, const InitConfig& config);

// Dispatches on config.scheme.
Parameters initialize(const NetworkSpec& spec, const InitConfig& config);

struct InitResult {
  Parameters params;
  Verdict verdict;
  std::size_t attempts = 0;
};

class InitExhausted : public std::runtime_error {
 public:
  InitExhausted(const std::string& what, Verdict last)
      : std::runtime_error(what), last_(std::move(last)) {}
  const Verdict& last_verdict() const { return last_; }

 private:
  Verdict last_;
};

// Draws initializations (attempt k reseeds with seed + k) and verifies each
// until one is Verified. Throws InitExhausted after max_attempts failures.
InitResult init_until_verified(const NetworkSpec& spec, const InitConfig& config,
                               const InputDomain& domain, const VerifyBudget& budget = {},
                               std::size_t max_attempts = 10);

// Same loop over an arbitrary generator; draw(k) yields attempt k.
InitResult init_until_verified(const NetworkSpec& spec,
                               const std::function<Parameters(std::size_t)>& draw,
                               const InputDomain& domain, const VerifyBudget& budget = {},
                               std::size_t max_attempts = 10);

}  // namespace certfair
