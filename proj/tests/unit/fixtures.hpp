#pragma once

// Small networks and datasets shared by the test suites.

#include <cstdlib>
#include <filesystem>
#include <vector>

#include "certfair/dataset.hpp"
#include "certfair/network.hpp"
#include "certfair/rng.hpp"
#include "certfair/verifier.hpp"

namespace certfair::testing {

inline NetworkSpec toy_spec(std::size_t features, std::vector<std::size_t> hidden,
                            std::size_t sensitive_values = 2, std::size_t outputs = 2,
                            SensitiveEncoding encoding = SensitiveEncoding::kOneHot) {
  NetworkSpec spec;
  spec.sensitive.offset = features;
  spec.sensitive.width = encoding == SensitiveEncoding::kOneHot ? sensitive_values : 1;
  spec.sensitive.encoding = encoding;
  spec.layer_sizes.push_back(features + spec.sensitive.width);
  for (auto h : hidden) spec.layer_sizes.push_back(h);
  spec.layer_sizes.push_back(outputs);
  spec.validate();
  return spec;
}

// Every weight and bias uniform on [-scale, scale].
inline Parameters random_params(const NetworkSpec& spec, std::uint64_t seed, double scale = 1.0) {
  Parameters p = make_parameters(spec);
  Rng rng(seed);
  for (auto& layer : p.layers) {
    for (auto& w : layer.weights) w = rng.uniform(-scale, scale);
    for (auto& b : layer.bias) b = rng.uniform(-scale, scale);
  }
  return p;
}

// Copies the first sensitive column over the group (one-hot) or zeroes the
// sensitive column (signed-binary), so the structural certificate holds.
inline void tie_sensitive(const NetworkSpec& spec, Parameters& p) {
  auto& first = p.layers.front();
  const auto& slice = spec.sensitive;
  for (std::size_t k = 0; k < first.out; ++k) {
    for (std::size_t c = 0; c < slice.width; ++c) {
      first.w(k, slice.offset + c) =
          slice.encoding == SensitiveEncoding::kOneHot ? first.w(k, slice.offset) : 0.0;
    }
  }
}

inline Parameters fair_params(const NetworkSpec& spec, std::uint64_t seed, double scale = 1.0) {
  Parameters p = random_params(spec, seed, scale);
  tie_sensitive(spec, p);
  return p;
}

// Network on one feature plus a signed-binary s whose label is the sign of s.
inline std::pair<NetworkSpec, Parameters> sign_of_s_network() {
  NetworkSpec spec = toy_spec(1, {}, 2, 1, SensitiveEncoding::kSignedBinary);
  Parameters p = make_parameters(spec);
  p.layers[0].w(0, 1) = 1.0;
  return {spec, p};
}

// n points on [0,1]^2 with label 1 iff x0 + x1 > 1 and a random binary s.
inline Dataset toy_dataset(std::size_t n, std::uint64_t seed, double margin = 0.0) {
  Dataset d;
  d.name = "toy";
  d.attribute = "group";
  d.sensitive.values = {"a", "b"};
  d.columns = {"x0", "x1"};
  d.integral = {false, false};
  d.labels = {"0", "1"};
  Rng rng(seed);
  while (d.samples.size() < n) {
    Sample s;
    s.x = {rng.uniform(), rng.uniform()};
    const double t = s.x[0] + s.x[1] - 1.0;
    if (std::abs(t) < margin) continue;
    s.y = t > 0 ? 1 : 0;
    s.s = rng.index(2);
    d.samples.push_back(s);
  }
  return d;
}

inline std::vector<const Sample*> pointers(const Dataset& d) {
  std::vector<const Sample*> out;
  for (const auto& s : d.samples) out.push_back(&s);
  return out;
}

inline InputDomain toy_domain(std::size_t dims, std::size_t sensitive_values = 2,
                              SensitiveEncoding encoding = SensitiveEncoding::kOneHot) {
  return InputDomain::unit_box(dims, SensitiveDomain::anonymous(sensitive_values, encoding));
}

// Directory with schemas/ and raw/; empty when the bundled data is absent.
inline std::filesystem::path data_dir() {
  if (const char* env = std::getenv("CERTFAIR_DATA_DIR")) return env;
  return {};
}

}  // namespace certfair::testing
