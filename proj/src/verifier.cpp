#include "certfair/verifier.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <future>
#include <limits>
#include <stdexcept>

#include "certfair/rng.hpp"

namespace certfair {

std::string to_string(VerdictTag tag) {
  switch (tag) {
    case VerdictTag::kVerified:
      return "verified";
    case VerdictTag::kFalsified:
      return "falsified";
    case VerdictTag::kUndecided:
      return "undecided";
  }
  return "unknown";
}

void InputDomain::validate() const {
  if (integral.size() != bounds.size()) throw DomainError("integrality flags do not match bounds");
  if (!names.empty() && names.size() != bounds.size()) {
    throw DomainError("feature names do not match bounds");
  }
  for (const auto& b : bounds) {
    if (!std::isfinite(b.lo) || !std::isfinite(b.hi)) throw DomainError("domain bounds must be finite");
    if (b.lo > b.hi) throw DomainError("domain interval has lo > hi");
  }
  sensitive.validate();
}

bool InputDomain::contains(std::span<const double> x) const {
  if (x.size() != bounds.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!bounds[i].contains(x[i])) return false;
  }
  return true;
}

InputDomain InputDomain::unit_box(std::size_t n, SensitiveDomain sensitive) {
  InputDomain domain;
  for (std::size_t i = 0; i < n; ++i) {
    domain.names.push_back("x" + std::to_string(i));
    domain.bounds.push_back({0.0, 1.0});
    domain.integral.push_back(false);
  }
  domain.sensitive = std::move(sensitive);
  return domain;
}

std::vector<Label> labels_across_sensitive(const NetworkSpec& spec, const Parameters& params,
                                           std::span<const double> x) {
  auto input = assemble_input(spec, x, 0);
  const std::size_t m = spec.sensitive.domain_size();
  std::vector<Label> labels(m);
  for (std::size_t s = 0; s < m; ++s) {
    encode_sensitive(spec, s, input);
    labels[s] = decide(evaluate(spec, params, input));
  }
  return labels;
}

namespace {

std::optional<Counterexample> disagreement(const NetworkSpec& spec, const Parameters& params,
                                           std::span<const double> x) {
  const auto labels = labels_across_sensitive(spec, params, x);
  for (std::size_t s = 1; s < labels.size(); ++s) {
    if (labels[s] != labels[0]) {
      return Counterexample{{x.begin(), x.end()}, 0, s, labels[0], labels[s]};
    }
  }
  return std::nullopt;
}

}  // namespace

Verdict Verdict::verified(VerificationStats stats) {
  return Verdict(VerdictTag::kVerified, std::nullopt, stats);
}

Verdict Verdict::undecided(VerificationStats stats) {
  return Verdict(VerdictTag::kUndecided, std::nullopt, stats);
}

Verdict Verdict::falsified(const NetworkSpec& spec, const Parameters& params,
                           Counterexample counterexample, VerificationStats stats) {
  const Label a = predict(spec, params, counterexample.x, counterexample.s1);
  const Label b = predict(spec, params, counterexample.x, counterexample.s2);
  if (a == b || a != counterexample.label1 || b != counterexample.label2) {
    throw std::logic_error("counterexample does not reproduce a fairness violation");
  }
  return Verdict(VerdictTag::kFalsified, std::move(counterexample), stats);
}

double default_certificate_tolerance(const NetworkSpec& spec) {
  return spec.sensitive.encoding == SensitiveEncoding::kOneHot ? 0.0 : 1e-12;
}

CertificateResult structural_certificate(const NetworkSpec& spec, const Parameters& params,
                                         std::optional<double> tolerance) {
  check_shapes(spec, params);
  const auto& first = params.layers.front();
  const auto& slice = spec.sensitive;
  double spread = 0.0;
  for (std::size_t r = 0; r < first.out; ++r) {
    if (slice.encoding == SensitiveEncoding::kSignedBinary) {
      spread = std::max(spread, std::abs(first.w(r, slice.offset)));
      continue;
    }
    double lo = first.w(r, slice.offset);
    double hi = lo;
    for (std::size_t c = 1; c < slice.width; ++c) {
      lo = std::min(lo, first.w(r, slice.offset + c));
      hi = std::max(hi, first.w(r, slice.offset + c));
    }
    spread = std::max(spread, hi - lo);
  }
  const double tol = tolerance.value_or(default_certificate_tolerance(spec));
  return {std::isfinite(spread) && spread <= tol, spread};
}

std::vector<Interval> propagate_intervals(const NetworkSpec& spec, const Parameters& params,
                                          std::span<const Interval> box, std::size_t s) {
  check_shapes(spec, params);
  if (box.size() != spec.feature_width()) throw ShapeError("box dimension mismatch");
  const auto& slice = spec.sensitive;
  std::vector<double> encoding(spec.input_width(), 0.0);
  encode_sensitive(spec, s, encoding);

  std::vector<Interval> current(spec.input_width());
  for (std::size_t c = 0, f = 0; c < spec.input_width(); ++c) {
    if (c >= slice.offset && c < slice.offset + slice.width) {
      current[c] = {encoding[c], encoding[c]};
    } else {
      current[c] = box[f++];
    }
  }

  constexpr double kUnit = std::numeric_limits<double>::epsilon() / 2.0;
  const std::size_t depth = spec.depth();
  std::vector<Interval> next;
  for (std::size_t i = 0; i < depth; ++i) {
    const auto& layer = params.layers[i];
    next.assign(layer.out, {});
    for (std::size_t r = 0; r < layer.out; ++r) {
      double lo = 0.0;
      double hi = 0.0;
      double magnitude = 0.0;
      for (std::size_t c = 0; c < layer.in; ++c) {
        const double w = layer.w(r, c);
        const auto& x = current[c];
        if (w >= 0.0) {
          lo += w * x.lo;
          hi += w * x.hi;
        } else {
          lo += w * x.hi;
          hi += w * x.lo;
        }
        magnitude += std::abs(w) * std::max(std::abs(x.lo), std::abs(x.hi));
      }
      const double b = layer.bias[r];
      lo += b;
      hi += b;
      if (magnitude > 0.0) {
        // Covers rounding of both this bound computation and the concrete
        // forward pass it has to contain.
        const double slack =
            2.0 * static_cast<double>(layer.in + 2) * kUnit * (magnitude + std::abs(b)) +
            std::numeric_limits<double>::denorm_min();
        lo -= slack;
        hi += slack;
      }
      if (i + 1 < depth) {
        lo = std::max(lo, 0.0);
        hi = std::max(hi, 0.0);
      }
      next[r] = {lo, hi};
    }
    current.swap(next);
  }
  return current;
}

std::optional<Label> certified_class(std::span<const Interval> logits) {
  if (logits.size() == 1) {
    if (logits[0].lo > 0.0) return Label{1};
    if (logits[0].hi <= 0.0) return Label{0};
    return std::nullopt;
  }
  for (std::size_t c = 0; c < logits.size(); ++c) {
    bool wins = true;
    for (std::size_t j = 0; j < logits.size() && wins; ++j) {
      if (j == c) continue;
      wins = j < c ? logits[c].lo > logits[j].hi : logits[c].lo >= logits[j].hi;
    }
    if (wins) return c;
  }
  return std::nullopt;
}

PartitionCheck check_partition(const NetworkSpec& spec, const Parameters& params,
                               const Partition& partition, const std::vector<bool>& integral) {
  const std::size_t m = spec.sensitive.domain_size();
  std::optional<Label> common;
  bool stable = true;
  for (std::size_t s = 0; s < m && stable; ++s) {
    const auto bounds = propagate_intervals(spec, params, partition.box, s);
    const auto cls = certified_class(bounds);
    if (!cls || (common && *common != *cls)) {
      stable = false;
    } else {
      common = cls;
    }
  }
  if (stable) return {VerdictTag::kVerified, std::nullopt};

  std::vector<double> probe(partition.box.size());
  for (std::size_t d = 0; d < probe.size(); ++d) {
    probe[d] = partition.box[d].mid();
    if (d < integral.size() && integral[d]) {
      probe[d] = std::clamp(std::round(probe[d]), partition.box[d].lo, partition.box[d].hi);
    }
  }
  if (auto cex = disagreement(spec, params, probe)) return {VerdictTag::kFalsified, std::move(cex)};
  return {VerdictTag::kUndecided, std::nullopt};
}

namespace {

// Widest dimension relative to the full domain; ties go to the lowest index.
std::optional<std::size_t> split_dimension(const Partition& part, const InputDomain& domain) {
  std::optional<std::size_t> best;
  double best_score = 0.0;
  for (std::size_t d = 0; d < part.box.size(); ++d) {
    const double full = domain.bounds[d].width();
    const auto& b = part.box[d];
    if (full <= 0.0) continue;
    if (domain.integral[d]) {
      if (b.hi - b.lo < 1.0) continue;
    } else if (!(b.lo < b.mid() && b.mid() < b.hi)) {
      continue;
    }
    const double score = b.width() / full;
    if (!best || score > best_score) {
      best = d;
      best_score = score;
    }
  }
  return best;
}

std::pair<Partition, Partition> split(const Partition& part, std::size_t d, bool integral) {
  Partition left{part.box, part.depth + 1};
  Partition right{part.box, part.depth + 1};
  const auto& b = part.box[d];
  if (integral) {
    const double cut = std::floor(b.lo + 0.5 * (b.hi - b.lo));
    left.box[d] = {b.lo, cut};
    right.box[d] = {cut + 1.0, b.hi};
  } else {
    const double cut = b.mid();
    left.box[d] = {b.lo, cut};
    right.box[d] = {cut, b.hi};
  }
  return {std::move(left), std::move(right)};
}

}  // namespace

Verdict verify(const NetworkSpec& spec, const Parameters& params, const InputDomain& domain,
               const VerifyBudget& budget) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - start).count(); };

  domain.validate();
  check_shapes(spec, params);
  if (domain.dims() != spec.feature_width()) throw ShapeError("domain does not match network input");
  if (domain.sensitive.size() != spec.sensitive.domain_size()) {
    throw DomainError("domain sensitive values do not match the network encoding");
  }
  if (budget.max_partitions == 0 || budget.max_seconds <= 0.0) {
    throw std::invalid_argument("verification budget must be positive");
  }

  VerificationStats stats;
  if (budget.use_certificate && structural_certificate(spec, params).pass) {
    stats.partitions = 1;
    stats.by_certificate = true;
    stats.seconds = elapsed();
    return Verdict::verified(stats);
  }

  std::deque<Partition> queue;
  queue.push_back({domain.bounds, 0});
  const std::size_t workers = std::max<std::size_t>(budget.workers, 1);
  const auto& integral = domain.integral;

  while (!queue.empty()) {
    if (stats.partitions >= budget.max_partitions || elapsed() > budget.max_seconds) {
      stats.seconds = elapsed();
      return Verdict::undecided(stats);
    }
    const std::size_t take =
        std::min({workers, queue.size(), budget.max_partitions - stats.partitions});
    std::vector<Partition> batch(queue.begin(), queue.begin() + static_cast<std::ptrdiff_t>(take));
    queue.erase(queue.begin(), queue.begin() + static_cast<std::ptrdiff_t>(take));

    std::vector<PartitionCheck> results(take);
    if (take == 1) {
      results[0] = check_partition(spec, params, batch[0], integral);
    } else {
      std::vector<std::future<PartitionCheck>> futures;
      for (const auto& part : batch) {
        futures.push_back(std::async(std::launch::async, [&, &part = part] {
          return check_partition(spec, params, part, integral);
        }));
      }
      for (std::size_t k = 0; k < take; ++k) results[k] = futures[k].get();
    }

    for (std::size_t k = 0; k < take; ++k) {
      ++stats.partitions;
      stats.max_depth = std::max(stats.max_depth, batch[k].depth);
      auto& result = results[k];
      if (result.tag == VerdictTag::kVerified) continue;
      if (result.tag == VerdictTag::kFalsified) {
        stats.seconds = elapsed();
        return Verdict::falsified(spec, params, std::move(*result.counterexample), stats);
      }
      const auto d = split_dimension(batch[k], domain);
      if (!d) {
        ++stats.undecided_leaves;
        continue;
      }
      auto [left, right] = split(batch[k], *d, domain.integral[*d]);
      queue.push_back(std::move(left));
      queue.push_back(std::move(right));
    }
  }
  stats.seconds = elapsed();
  return stats.undecided_leaves == 0 ? Verdict::verified(stats) : Verdict::undecided(stats);
}

std::optional<Counterexample> grid_falsify(const NetworkSpec& spec, const Parameters& params,
                                           const InputDomain& domain, std::size_t resolution,
                                           std::size_t sample_count, std::uint64_t seed) {
  if (resolution < 2) throw std::invalid_argument("grid resolution must be at least 2");
  domain.validate();
  if (domain.dims() != spec.feature_width()) throw ShapeError("domain does not match network input");
  const std::size_t dims = domain.dims();

  auto coordinate = [&](std::size_t d, double t) {
    const auto& b = domain.bounds[d];
    double v = b.lo + t * (b.hi - b.lo);
    if (domain.integral[d]) v = std::clamp(std::round(v), b.lo, b.hi);
    return v;
  };

  // resolution^dims without overflow.
  std::size_t total = 1;
  bool exhaustive = true;
  for (std::size_t d = 0; d < dims; ++d) {
    if (total > sample_count / resolution) {
      exhaustive = false;
      break;
    }
    total *= resolution;
  }
  if (exhaustive && total > sample_count) exhaustive = false;

  std::vector<double> x(dims);
  if (exhaustive) {
    std::vector<std::size_t> digits(dims, 0);
    for (std::size_t n = 0; n < total; ++n) {
      for (std::size_t d = 0; d < dims; ++d) {
        x[d] = coordinate(d, static_cast<double>(digits[d]) / static_cast<double>(resolution - 1));
      }
      if (auto cex = disagreement(spec, params, x)) return cex;
      for (std::size_t d = 0; d < dims; ++d) {
        if (++digits[d] < resolution) break;
        digits[d] = 0;
      }
    }
    return std::nullopt;
  }

  Rng rng(seed);
  for (std::size_t n = 0; n < sample_count; ++n) {
    for (std::size_t d = 0; d < dims; ++d) x[d] = coordinate(d, rng.uniform());
    if (auto cex = disagreement(spec, params, x)) return cex;
  }
  return std::nullopt;
}

}  // namespace certfair
