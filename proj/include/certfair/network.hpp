#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace certfair {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class StaleTraceError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class Activation { kRelu };

// How the sensitive value is written into the network input.
//   kOneHot:       |S| columns, exactly one set to 1.
//   kSignedBinary: one column holding -1 (value 0) or +1 (value 1).
enum class SensitiveEncoding { kOneHot, kSignedBinary };

std::string to_string(SensitiveEncoding encoding);
SensitiveEncoding parse_encoding(const std::string& text);

struct SensitiveSlice {
  std::size_t offset = 0;
  std::size_t width = 0;
  SensitiveEncoding encoding = SensitiveEncoding::kOneHot;

  // Number of distinct sensitive values the slice can express.
  std::size_t domain_size() const {
    return encoding == SensitiveEncoding::kOneHot ? width : 2;
  }
};

// Layered fully connected network. layer_sizes[0] is the full input width
// (non-sensitive features plus the sensitive encoding), the last entry is the
// number of output logits K. Hidden layers use ReLU, the output is linear.
struct NetworkSpec {
  std::vector<std::size_t> layer_sizes;
  Activation activation = Activation::kRelu;
  SensitiveSlice sensitive;

  std::size_t input_width() const { return layer_sizes.front(); }
  std::size_t feature_width() const { return layer_sizes.front() - sensitive.width; }
  std::size_t output_width() const { return layer_sizes.back(); }
  // Number of affine layers.
  std::size_t depth() const { return layer_sizes.size() - 1; }

  // Throws ShapeError when the invariants do not hold.
  void validate() const;
};

bool operator==(const NetworkSpec& a, const NetworkSpec& b);

// Row-major weights: weights[row * in + col] maps input col to output row.
struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  DenseLayer() = default;
  DenseLayer(std::size_t in_width, std::size_t out_width)
      : in(in_width), out(out_width), weights(in_width * out_width, 0.0), bias(out_width, 0.0) {}

  double& w(std::size_t row, std::size_t col) { return weights[row * in + col]; }
  double w(std::size_t row, std::size_t col) const { return weights[row * in + col]; }
};

struct Parameters {
  std::vector<DenseLayer> layers;
  // Update counter t; bumped by every applied update.
  std::uint64_t version = 0;

  std::size_t count() const;
  bool all_finite() const;
};

// Zero-filled parameters shaped for spec.
Parameters make_parameters(const NetworkSpec& spec);

// Throws ShapeError if params do not match spec.
void check_shapes(const NetworkSpec& spec, const Parameters& params);

// Same layout as Parameters, holding derivatives.
struct GradientSet {
  std::vector<DenseLayer> layers;

  static GradientSet zeros_like(const Parameters& params);
  void set_zero();
  void add_scaled(const GradientSet& other, double alpha);
  void scale(double alpha);
  double max_abs() const;
  bool all_finite() const;
};

// Values of every neuron for one input. pre[i] / post[i] for i = 0 .. depth;
// layer 0 is the input itself (pre == post).
struct ForwardTrace {
  std::vector<std::vector<double>> pre;
  std::vector<std::vector<double>> post;
  std::uint64_t params_version = 0;

  const std::vector<double>& input() const { return post.front(); }
  const std::vector<double>& output() const { return post.back(); }
};

// Class labels are 0-based: 0 .. K-1. A K = 1 network is a binary
// classifier over {0, 1} with threshold at zero.
using Label = std::size_t;

std::size_t num_classes(const NetworkSpec& spec);

// Writes the encoding of sensitive value s into the sensitive slice of input.
void encode_sensitive(const NetworkSpec& spec, std::size_t s, std::span<double> input);

// Builds the full network input from non-sensitive features x and value s.
std::vector<double> assemble_input(const NetworkSpec& spec, std::span<const double> x,
                                   std::size_t s);

ForwardTrace forward(const NetworkSpec& spec, const Parameters& params,
                     std::span<const double> x, std::size_t s);
ForwardTrace forward_encoded(const NetworkSpec& spec, const Parameters& params,
                             std::span<const double> input);
// Reuses the buffers of trace.
void forward_into(const NetworkSpec& spec, const Parameters& params,
                  std::span<const double> input, ForwardTrace& trace);

// Output-only evaluation without keeping intermediate layers.
std::vector<double> evaluate(const NetworkSpec& spec, const Parameters& params,
                             std::span<const double> input);

// argmax over logits, lowest index wins ties. For a single logit: 1 if > 0.
Label decide(std::span<const double> logits);

Label predict(const NetworkSpec& spec, const Parameters& params, std::span<const double> x,
              std::size_t s);

// Softmax cross-entropy with max subtraction. A single logit z is treated
// as the pair (0, z).
double cross_entropy(std::span<const double> logits, Label y);
double loss(const ForwardTrace& trace, Label y);

// d loss / d logits.
std::vector<double> loss_gradient(std::span<const double> logits, Label y);

GradientSet backward(const NetworkSpec& spec, const Parameters& params,
                     const ForwardTrace& trace, Label y);

// acc += weight * d loss / d theta. Avoids allocating a GradientSet per sample.
// first_delta, if given, receives d loss / d (first affine layer output),
// unweighted.
void accumulate_backward(const NetworkSpec& spec, const Parameters& params,
                         const ForwardTrace& trace, Label y, double weight, GradientSet& acc,
                         std::vector<double>* first_delta = nullptr);

// d z_{n,k} / d theta for output neuron k.
GradientSet output_jacobian(const NetworkSpec& spec, const Parameters& params,
                            const ForwardTrace& trace, std::size_t k);

// z_{i,j}: post-activation value of neuron j on layer i (layer 0 = input).
double subnetwork_output(const NetworkSpec& spec, const ForwardTrace& trace, std::size_t layer,
                         std::size_t neuron);

}  // namespace certfair
