#include "certfair/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace certfair {

std::string to_string(SensitiveEncoding encoding) {
  return encoding == SensitiveEncoding::kOneHot ? "onehot" : "signed";
}

SensitiveEncoding parse_encoding(const std::string& text) {
  if (text == "onehot") return SensitiveEncoding::kOneHot;
  if (text == "signed") return SensitiveEncoding::kSignedBinary;
  throw std::invalid_argument("unknown sensitive encoding '" + text + "'");
}

void NetworkSpec::validate() const {
  if (layer_sizes.size() < 2) {
    throw ShapeError("network needs at least an input and an output layer");
  }
  for (std::size_t width : layer_sizes) {
    if (width == 0) throw ShapeError("layer widths must be positive");
  }
  if (sensitive.encoding == SensitiveEncoding::kSignedBinary && sensitive.width != 1) {
    throw ShapeError("signed-binary sensitive encoding uses exactly one column");
  }
  if (sensitive.encoding == SensitiveEncoding::kOneHot && sensitive.width < 2) {
    throw ShapeError("one-hot sensitive encoding needs at least two columns");
  }
  if (sensitive.offset + sensitive.width > layer_sizes.front()) {
    throw ShapeError("sensitive slice exceeds the input width");
  }
}

bool operator==(const NetworkSpec& a, const NetworkSpec& b) {
  return a.layer_sizes == b.layer_sizes && a.activation == b.activation &&
         a.sensitive.offset == b.sensitive.offset && a.sensitive.width == b.sensitive.width &&
         a.sensitive.encoding == b.sensitive.encoding;
}

std::size_t Parameters::count() const {
  std::size_t n = 0;
  for (const auto& layer : layers) n += layer.weights.size() + layer.bias.size();
  return n;
}

namespace {

bool finite_all(const std::vector<DenseLayer>& layers) {
  for (const auto& layer : layers) {
    for (double v : layer.weights) {
      if (!std::isfinite(v)) return false;
    }
    for (double v : layer.bias) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

}  // namespace

bool Parameters::all_finite() const { return finite_all(layers); }

Parameters make_parameters(const NetworkSpec& spec) {
  spec.validate();
  Parameters params;
  for (std::size_t i = 0; i + 1 < spec.layer_sizes.size(); ++i) {
    params.layers.emplace_back(spec.layer_sizes[i], spec.layer_sizes[i + 1]);
  }
  return params;
}

void check_shapes(const NetworkSpec& spec, const Parameters& params) {
  if (params.layers.size() != spec.depth()) {
    throw ShapeError("parameter layer count does not match the network spec");
  }
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    const auto& layer = params.layers[i];
    if (layer.in != spec.layer_sizes[i] || layer.out != spec.layer_sizes[i + 1] ||
        layer.weights.size() != layer.in * layer.out || layer.bias.size() != layer.out) {
      std::ostringstream msg;
      msg << "layer " << i << " has shape " << layer.out << "x" << layer.in << ", expected "
          << spec.layer_sizes[i + 1] << "x" << spec.layer_sizes[i];
      throw ShapeError(msg.str());
    }
  }
}

GradientSet GradientSet::zeros_like(const Parameters& params) {
  GradientSet g;
  g.layers.reserve(params.layers.size());
  for (const auto& layer : params.layers) g.layers.emplace_back(layer.in, layer.out);
  return g;
}

void GradientSet::set_zero() {
  for (auto& layer : layers) {
    std::fill(layer.weights.begin(), layer.weights.end(), 0.0);
    std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
  }
}

void GradientSet::add_scaled(const GradientSet& other, double alpha) {
  if (other.layers.size() != layers.size()) throw ShapeError("gradient layer count mismatch");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    auto& dst = layers[i];
    const auto& src = other.layers[i];
    if (dst.weights.size() != src.weights.size() || dst.bias.size() != src.bias.size()) {
      throw ShapeError("gradient shape mismatch");
    }
    for (std::size_t k = 0; k < dst.weights.size(); ++k) dst.weights[k] += alpha * src.weights[k];
    for (std::size_t k = 0; k < dst.bias.size(); ++k) dst.bias[k] += alpha * src.bias[k];
  }
}

void GradientSet::scale(double alpha) {
  for (auto& layer : layers) {
    for (double& v : layer.weights) v *= alpha;
    for (double& v : layer.bias) v *= alpha;
  }
}

double GradientSet::max_abs() const {
  double m = 0.0;
  for (const auto& layer : layers) {
    for (double v : layer.weights) m = std::max(m, std::abs(v));
    for (double v : layer.bias) m = std::max(m, std::abs(v));
  }
  return m;
}

bool GradientSet::all_finite() const { return finite_all(layers); }

std::size_t num_classes(const NetworkSpec& spec) {
  return spec.output_width() == 1 ? 2 : spec.output_width();
}

void encode_sensitive(const NetworkSpec& spec, std::size_t s, std::span<double> input) {
  const auto& slice = spec.sensitive;
  if (s >= slice.domain_size()) {
    throw ShapeError("sensitive value " + std::to_string(s) + " outside a domain of size " +
                     std::to_string(slice.domain_size()));
  }
  if (slice.encoding == SensitiveEncoding::kSignedBinary) {
    input[slice.offset] = s == 0 ? -1.0 : 1.0;
    return;
  }
  for (std::size_t c = 0; c < slice.width; ++c) input[slice.offset + c] = c == s ? 1.0 : 0.0;
}

std::vector<double> assemble_input(const NetworkSpec& spec, std::span<const double> x,
                                   std::size_t s) {
  if (x.size() != spec.feature_width()) {
    throw ShapeError("feature vector has " + std::to_string(x.size()) + " entries, expected " +
                     std::to_string(spec.feature_width()));
  }
  std::vector<double> input(spec.input_width(), 0.0);
  const auto& slice = spec.sensitive;
  std::copy(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(slice.offset), input.begin());
  std::copy(x.begin() + static_cast<std::ptrdiff_t>(slice.offset), x.end(),
            input.begin() + static_cast<std::ptrdiff_t>(slice.offset + slice.width));
  encode_sensitive(spec, s, input);
  return input;
}

namespace {

// out = W * in + b, accumulated left to right so that zero inputs do not
// perturb the running sum.
void affine(const DenseLayer& layer, std::span<const double> in, std::vector<double>& out) {
  out.resize(layer.out);
  for (std::size_t r = 0; r < layer.out; ++r) {
    const double* row = layer.weights.data() + r * layer.in;
    double acc = 0.0;
    for (std::size_t c = 0; c < layer.in; ++c) acc += row[c] * in[c];
    out[r] = acc + layer.bias[r];
  }
}

}  // namespace

void forward_into(const NetworkSpec& spec, const Parameters& params,
                  std::span<const double> input, ForwardTrace& trace) {
  if (input.size() != spec.input_width()) {
    throw ShapeError("input has " + std::to_string(input.size()) + " entries, expected " +
                     std::to_string(spec.input_width()));
  }
  check_shapes(spec, params);
  const std::size_t depth = spec.depth();
  trace.pre.resize(depth + 1);
  trace.post.resize(depth + 1);
  trace.pre[0].assign(input.begin(), input.end());
  trace.post[0].assign(input.begin(), input.end());
  for (std::size_t i = 0; i < depth; ++i) {
    affine(params.layers[i], trace.post[i], trace.pre[i + 1]);
    auto& post = trace.post[i + 1];
    post = trace.pre[i + 1];
    if (i + 1 < depth) {
      for (double& v : post) v = v > 0.0 ? v : 0.0;
    }
  }
  trace.params_version = params.version;
}

ForwardTrace forward_encoded(const NetworkSpec& spec, const Parameters& params,
                             std::span<const double> input) {
  ForwardTrace trace;
  forward_into(spec, params, input, trace);
  return trace;
}

ForwardTrace forward(const NetworkSpec& spec, const Parameters& params,
                     std::span<const double> x, std::size_t s) {
  const auto input = assemble_input(spec, x, s);
  return forward_encoded(spec, params, input);
}

std::vector<double> evaluate(const NetworkSpec& spec, const Parameters& params,
                             std::span<const double> input) {
  if (input.size() != spec.input_width()) throw ShapeError("input width mismatch");
  std::vector<double> current(input.begin(), input.end());
  std::vector<double> next;
  const std::size_t depth = spec.depth();
  for (std::size_t i = 0; i < depth; ++i) {
    affine(params.layers[i], current, next);
    if (i + 1 < depth) {
      for (double& v : next) v = v > 0.0 ? v : 0.0;
    }
    current.swap(next);
  }
  return current;
}

Label decide(std::span<const double> logits) {
  if (logits.size() == 1) return logits[0] > 0.0 ? 1 : 0;
  Label best = 0;
  for (std::size_t k = 1; k < logits.size(); ++k) {
    if (logits[k] > logits[best]) best = k;
  }
  return best;
}

Label predict(const NetworkSpec& spec, const Parameters& params, std::span<const double> x,
              std::size_t s) {
  const auto input = assemble_input(spec, x, s);
  return decide(evaluate(spec, params, input));
}

namespace {

std::vector<double> expand_logits(std::span<const double> logits) {
  if (logits.size() == 1) return {0.0, logits[0]};
  return {logits.begin(), logits.end()};
}

}  // namespace

double cross_entropy(std::span<const double> logits, Label y) {
  const auto z = expand_logits(logits);
  if (y >= z.size()) throw ShapeError("label outside the output classes");
  const double top = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - top);
  return std::log(sum) - (z[y] - top);
}

double loss(const ForwardTrace& trace, Label y) { return cross_entropy(trace.output(), y); }

std::vector<double> loss_gradient(std::span<const double> logits, Label y) {
  const auto z = expand_logits(logits);
  if (y >= z.size()) throw ShapeError("label outside the output classes");
  const double top = *std::max_element(z.begin(), z.end());
  std::vector<double> p(z.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    p[k] = std::exp(z[k] - top);
    sum += p[k];
  }
  for (double& v : p) v /= sum;
  p[y] -= 1.0;
  if (logits.size() == 1) return {p[1]};
  return p;
}

namespace {

void check_trace(const NetworkSpec& spec, const Parameters& params, const ForwardTrace& trace) {
  check_shapes(spec, params);
  if (trace.params_version != params.version) {
    throw StaleTraceError("trace was produced by parameters at version " +
                          std::to_string(trace.params_version) + ", current version is " +
                          std::to_string(params.version));
  }
  if (trace.post.size() != spec.depth() + 1) throw ShapeError("trace depth mismatch");
}

// Reverse pass from d(objective)/d(logits) = seed.
void backprop(const NetworkSpec& spec, const Parameters& params, const ForwardTrace& trace,
              std::vector<double> delta, double weight, GradientSet& acc,
              std::vector<double>* first_delta = nullptr) {
  const std::size_t depth = spec.depth();
  for (std::size_t i = depth; i-- > 0;) {
    const auto& layer = params.layers[i];
    auto& grad = acc.layers[i];
    const auto& in = trace.post[i];
    for (std::size_t r = 0; r < layer.out; ++r) {
      const double d = weight * delta[r];
      if (d == 0.0) continue;
      double* row = grad.weights.data() + r * layer.in;
      for (std::size_t c = 0; c < layer.in; ++c) row[c] += d * in[c];
      grad.bias[r] += d;
    }
    if (i == 0) {
      if (first_delta) *first_delta = std::move(delta);
      break;
    }
    std::vector<double> prev(layer.in, 0.0);
    for (std::size_t r = 0; r < layer.out; ++r) {
      const double d = delta[r];
      if (d == 0.0) continue;
      const double* row = layer.weights.data() + r * layer.in;
      for (std::size_t c = 0; c < layer.in; ++c) prev[c] += row[c] * d;
    }
    // ReLU subgradient at 0 is 0.
    const auto& pre = trace.pre[i];
    for (std::size_t c = 0; c < layer.in; ++c) {
      if (!(pre[c] > 0.0)) prev[c] = 0.0;
    }
    delta.swap(prev);
  }
}

}  // namespace

void accumulate_backward(const NetworkSpec& spec, const Parameters& params,
                         const ForwardTrace& trace, Label y, double weight, GradientSet& acc,
                         std::vector<double>* first_delta) {
  check_trace(spec, params, trace);
  backprop(spec, params, trace, loss_gradient(trace.output(), y), weight, acc, first_delta);
}

GradientSet backward(const NetworkSpec& spec, const Parameters& params,
                     const ForwardTrace& trace, Label y) {
  auto grad = GradientSet::zeros_like(params);
  accumulate_backward(spec, params, trace, y, 1.0, grad);
  return grad;
}

GradientSet output_jacobian(const NetworkSpec& spec, const Parameters& params,
                            const ForwardTrace& trace, std::size_t k) {
  check_trace(spec, params, trace);
  if (k >= spec.output_width()) throw ShapeError("output neuron index out of range");
  std::vector<double> seed(spec.output_width(), 0.0);
  seed[k] = 1.0;
  auto grad = GradientSet::zeros_like(params);
  backprop(spec, params, trace, std::move(seed), 1.0, grad);
  return grad;
}

double subnetwork_output(const NetworkSpec& spec, const ForwardTrace& trace, std::size_t layer,
                         std::size_t neuron) {
  if (layer > spec.depth() || layer >= trace.post.size()) {
    throw std::out_of_range("layer index " + std::to_string(layer) + " out of range");
  }
  if (neuron >= trace.post[layer].size()) {
    throw std::out_of_range("neuron index " + std::to_string(neuron) + " out of range on layer " +
                            std::to_string(layer));
  }
  return trace.post[layer][neuron];
}

}  // namespace certfair
