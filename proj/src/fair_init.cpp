#include "certfair/fair_init.hpp"

#include <cmath>
#include <optional>

#include "certfair/rng.hpp"

namespace certfair {

std::string to_string(InitScheme scheme) {
  return scheme == InitScheme::kZero ? "zero" : "bernoulli";
}

InitScheme parse_init_scheme(const std::string& text) {
  if (text == "zero") return InitScheme::kZero;
  if (text == "bernoulli") return InitScheme::kBernoulli;
  throw std::invalid_argument("unknown init scheme '" + text + "'");
}

void InitConfig::validate() const {
  if (!(p_init > 0.0 && p_init < 1.0)) throw std::invalid_argument("p_init must lie in (0, 1)");
  if (!(phi <= 0.0)) throw std::invalid_argument("phi must be <= 0");
  if (!std::isfinite(c)) throw std::invalid_argument("bias constant must be finite");
}

Parameters zero_init(const NetworkSpec& spec, double c) {
  Parameters params = make_parameters(spec);
  for (auto& layer : params.layers) std::fill(layer.bias.begin(), layer.bias.end(), c);
  return params;
}

Parameters bernoulli_init(const NetworkSpec& spec, const InitConfig& config) {
  config.validate();
  Parameters params = make_parameters(spec);
  Rng rng(config.seed);
  double magnitude = 0.0;
  auto draw = [&] { return rng.bernoulli(config.p_init) ? magnitude : -magnitude; };

  const auto& slice = spec.sensitive;
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    auto& layer = params.layers[i];
    magnitude = std::exp(config.phi);
    if (config.fan_in_scaling) magnitude /= std::sqrt(static_cast<double>(layer.in));
    for (std::size_t r = 0; r < layer.out; ++r) {
      std::optional<double> group;
      for (std::size_t c = 0; c < layer.in; ++c) {
        const bool sensitive = i == 0 && c >= slice.offset && c < slice.offset + slice.width;
        if (!sensitive) {
          layer.w(r, c) = draw();
        } else if (slice.encoding == SensitiveEncoding::kSignedBinary) {
          layer.w(r, c) = 0.0;
        } else {
          if (!group) group = draw();
          layer.w(r, c) = *group;
        }
      }
    }
  }
  return params;
}

Parameters initialize(const NetworkSpec& spec, const InitConfig& config) {
  if (config.scheme == InitScheme::kZero) return zero_init(spec, config.c);
  return bernoulli_init(spec, config);
}

InitResult init_until_verified(const NetworkSpec& spec, const InitConfig& config,
                               const InputDomain& domain, const VerifyBudget& budget,
                               std::size_t max_attempts) {
  config.validate();
  auto draw = [&](std::size_t attempt) {
    InitConfig c = config;
    c.seed = config.seed + attempt;
    return initialize(spec, c);
  };
  return init_until_verified(spec, draw, domain, budget, max_attempts);
}

InitResult init_until_verified(const NetworkSpec& spec,
                               const std::function<Parameters(std::size_t)>& draw,
                               const InputDomain& domain, const VerifyBudget& budget,
                               std::size_t max_attempts) {
  if (max_attempts == 0) throw std::invalid_argument("max_attempts must be at least 1");
  std::optional<Verdict> last;
  for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
    Parameters params = draw(attempt);
    Verdict verdict = verify(spec, params, domain, budget);
    if (verdict.tag() == VerdictTag::kVerified) {
      return InitResult{std::move(params), std::move(verdict), attempt + 1};
    }
    last = std::move(verdict);
  }
  throw InitExhausted("no verified initialization after " + std::to_string(max_attempts) +
                          " attempts (last verdict: " + to_string(last->tag()) + ")",
                      std::move(*last));
}

}  // namespace certfair
