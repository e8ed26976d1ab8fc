#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "certfair/network.hpp"
#include "certfair/randomized_response.hpp"

namespace certfair {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double width() const { return hi - lo; }
  double mid() const { return lo + 0.5 * (hi - lo); }
  bool contains(double v) const { return lo <= v && v <= hi; }
};

// Box precondition over the non-sensitive features (network order) and the
// sensitive values quantified over.
struct InputDomain {
  std::vector<std::string> names;
  std::vector<Interval> bounds;
  std::vector<bool> integral;
  SensitiveDomain sensitive;

  std::size_t dims() const { return bounds.size(); }
  void validate() const;
  bool contains(std::span<const double> x) const;

  // [0,1]^n with anonymous names.
  static InputDomain unit_box(std::size_t n, SensitiveDomain sensitive);
};

struct Partition {
  std::vector<Interval> box;
  std::size_t depth = 0;
};

struct Counterexample {
  std::vector<double> x;
  std::size_t s1 = 0;
  std::size_t s2 = 0;
  Label label1 = 0;
  Label label2 = 0;
};

enum class VerdictTag { kVerified, kFalsified, kUndecided };

std::string to_string(VerdictTag tag);

struct VerificationStats {
  std::size_t partitions = 0;
  std::size_t max_depth = 0;
  std::size_t undecided_leaves = 0;
  double seconds = 0.0;
  bool by_certificate = false;
};

class Verdict {
 public:
  static Verdict verified(VerificationStats stats);
  static Verdict undecided(VerificationStats stats);
  // Re-evaluates the counterexample and throws std::logic_error unless the two
  // sensitive values really receive different labels.
  static Verdict falsified(const NetworkSpec& spec, const Parameters& params,
                           Counterexample counterexample, VerificationStats stats);

  VerdictTag tag() const { return tag_; }
  const std::optional<Counterexample>& counterexample() const { return counterexample_; }
  const VerificationStats& stats() const { return stats_; }
  VerificationStats& stats() { return stats_; }

 private:
  Verdict(VerdictTag tag, std::optional<Counterexample> cex, VerificationStats stats)
      : tag_(tag), counterexample_(std::move(cex)), stats_(stats) {}

  VerdictTag tag_;
  std::optional<Counterexample> counterexample_;
  VerificationStats stats_;
};

struct CertificateResult {
  bool pass = false;
  double spread = 0.0;
};

// Default tolerance: 0 for one-hot (exact group ties), 1e-12 for signed-binary.
double default_certificate_tolerance(const NetworkSpec& spec);

// Sufficient condition: every first-hidden-layer neuron ignores s. One-hot:
// max - min of each neuron's sensitive weight group; signed-binary: |weight|.
CertificateResult structural_certificate(const NetworkSpec& spec, const Parameters& params,
                                         std::optional<double> tolerance = std::nullopt);

// Sound bounds on every output logit over the box with s fixed. Each affine
// layer is widened by a floating-point rounding bound.
std::vector<Interval> propagate_intervals(const NetworkSpec& spec, const Parameters& params,
                                          std::span<const Interval> box, std::size_t s);

// Class whose logits dominate every other logit over the bounds, if any.
std::optional<Label> certified_class(std::span<const Interval> logits);

struct PartitionCheck {
  VerdictTag tag = VerdictTag::kUndecided;
  std::optional<Counterexample> counterexample;
};

// Verified when every sensitive value certifies the same class; Falsified when
// the midpoint probe disagrees across sensitive values; otherwise Undecided.
PartitionCheck check_partition(const NetworkSpec& spec, const Parameters& params,
                               const Partition& partition,
                               const std::vector<bool>& integral = {});

struct VerifyBudget {
  std::size_t max_partitions = 10000;
  double max_seconds = 60.0;
  bool use_certificate = true;
  std::size_t workers = 1;
};

Verdict verify(const NetworkSpec& spec, const Parameters& params, const InputDomain& domain,
               const VerifyBudget& budget = {});

// Exhaustive grid when resolution^dims <= sample_count, uniform random
// sampling of sample_count points otherwise. Returns the first violation.
std::optional<Counterexample> grid_falsify(const NetworkSpec& spec, const Parameters& params,
                                           const InputDomain& domain, std::size_t resolution,
                                           std::size_t sample_count, std::uint64_t seed = 0);

// All labels of x across the sensitive values.
std::vector<Label> labels_across_sensitive(const NetworkSpec& spec, const Parameters& params,
                                           std::span<const double> x);

}  // namespace certfair
