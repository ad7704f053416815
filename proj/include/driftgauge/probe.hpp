#pragma once

// Non-stationary probe environments: a finite outcome support, two phases
// of generating parameters split at a changepoint, seeded sampling, and the
// ground-truth next-outcome distribution at each step.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "driftgauge/error.hpp"
#include "driftgauge/normal.hpp"
#include "driftgauge/rng.hpp"

namespace driftgauge {

using Distribution = std::vector<double>;

enum class SupportKind { categorical, binned_real };

inline const char* to_string(SupportKind kind) noexcept {
  return kind == SupportKind::categorical ? "categorical" : "binned-real";
}

class OutcomeSupport {
 public:
  static OutcomeSupport categorical(std::vector<std::string> labels) {
    OutcomeSupport s(SupportKind::categorical, std::move(labels), {});
    return s;
  }

  // Bins are [edges[i], edges[i+1]). -inf may only be the first edge and
  // +inf only the last.
  static OutcomeSupport binned_real(std::vector<std::string> labels,
                                    std::vector<double> edges) {
    OutcomeSupport s(SupportKind::binned_real, std::move(labels),
                     std::move(edges));
    return s;
  }

  // Unit bins centred on the integers lo..hi, outermost edges open to +-inf.
  static OutcomeSupport integer_bins(int lo, int hi) {
    if (hi <= lo) throw ParameterError("integer_bins needs hi > lo");
    std::vector<std::string> labels;
    std::vector<double> edges{-std::numeric_limits<double>::infinity()};
    for (int k = lo; k <= hi; ++k) {
      labels.push_back(std::to_string(k));
      if (k < hi) edges.push_back(k + 0.5);
    }
    edges.push_back(std::numeric_limits<double>::infinity());
    return binned_real(std::move(labels), std::move(edges));
  }

  SupportKind kind() const noexcept { return kind_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::vector<double>& bin_edges() const noexcept { return edges_; }
  std::size_t size() const noexcept { return labels_.size(); }

  // Representative value of a bin. Open outer bins take the width of their
  // finite neighbour.
  double bin_center(std::size_t i) const {
    require_binned();
    if (i >= size()) throw ParameterError("bin index out of range");
    const double lo = edges_[i];
    const double hi = edges_[i + 1];
    if (std::isfinite(lo) && std::isfinite(hi)) return 0.5 * (lo + hi);
    if (size() == 1) throw DegenerateError("single open bin has no center");
    if (!std::isfinite(lo)) {
      const double width = edges_[i + 2] - hi;
      return hi - 0.5 * (std::isfinite(width) ? width : 1.0);
    }
    const double width = lo - edges_[i - 1];
    return lo + 0.5 * (std::isfinite(width) ? width : 1.0);
  }

  // Index of the bin holding x; values outside finite outer edges clamp to
  // the nearest bin.
  std::size_t locate(double x) const {
    require_binned();
    const auto it = std::upper_bound(edges_.begin() + 1, edges_.end() - 1, x);
    return static_cast<std::size_t>(it - (edges_.begin() + 1));
  }

  friend bool operator==(const OutcomeSupport&, const OutcomeSupport&) = default;

 private:
  OutcomeSupport(SupportKind kind, std::vector<std::string> labels,
                 std::vector<double> edges)
      : kind_(kind), labels_(std::move(labels)), edges_(std::move(edges)) {
    if (labels_.empty()) throw ParameterError("support labels must be non-empty");
    if (std::set<std::string>(labels_.begin(), labels_.end()).size() !=
        labels_.size())
      throw ParameterError("support labels must be unique");
    if (kind_ == SupportKind::categorical) {
      if (!edges_.empty())
        throw ParameterError("categorical support carries no bin edges");
      return;
    }
    if (edges_.size() != labels_.size() + 1)
      throw ParameterError("binned-real support needs |labels|+1 edges");
    for (std::size_t i = 0; i < edges_.size(); ++i) {
      const double e = edges_[i];
      if (std::isnan(e)) throw ParameterError("bin edge is NaN");
      if (e == -std::numeric_limits<double>::infinity() && i != 0)
        throw ParameterError("-inf edge allowed only as the first edge");
      if (e == std::numeric_limits<double>::infinity() &&
          i + 1 != edges_.size())
        throw ParameterError("+inf edge allowed only as the last edge");
      if (i > 0 && !(edges_[i - 1] < e))
        throw ParameterError("bin edges must be strictly increasing");
    }
  }

  void require_binned() const {
    if (kind_ != SupportKind::binned_real)
      throw ParameterError("operation requires a binned-real support");
  }

  SupportKind kind_;
  std::vector<std::string> labels_;
  std::vector<double> edges_;
};

struct GaussianPhase {
  double mu = 0.0;
  double sigma = 1.0;
  friend bool operator==(const GaussianPhase&, const GaussianPhase&) = default;
};

// Either a categorical probability vector over the labels or a Gaussian
// (mu, sigma) pair quantized onto the support's bins.
using PhaseParams = std::variant<Distribution, GaussianPhase>;

class ProbeSpec {
 public:
  ProbeSpec(OutcomeSupport support, std::size_t horizon, std::size_t changepoint,
            PhaseParams pre, PhaseParams post, std::uint64_t seed)
      : support_(std::move(support)),
        horizon_(horizon),
        changepoint_(changepoint),
        pre_(std::move(pre)),
        post_(std::move(post)),
        seed_(seed) {
    if (horizon_ < 1) throw ParameterError("horizon T must be >= 1");
    if (changepoint_ < 1 || changepoint_ > horizon_ + 1)
      throw ParameterError("changepoint t_c must lie in [1, T+1]");
    check_phase(pre_, "pre");
    check_phase(post_, "post");
  }

  const OutcomeSupport& support() const noexcept { return support_; }
  std::size_t horizon() const noexcept { return horizon_; }
  std::size_t changepoint() const noexcept { return changepoint_; }
  const PhaseParams& phase_pre() const noexcept { return pre_; }
  const PhaseParams& phase_post() const noexcept { return post_; }
  std::uint64_t seed() const noexcept { return seed_; }
  bool stationary() const noexcept { return changepoint_ == horizon_ + 1; }

  // Step t (1-based) is drawn from the post phase iff t >= t_c.
  const PhaseParams& phase_at(std::size_t t) const noexcept {
    return t < changepoint_ ? pre_ : post_;
  }

  ProbeSpec with_seed(std::uint64_t seed) const {
    ProbeSpec copy = *this;
    copy.seed_ = seed;
    return copy;
  }

  friend bool operator==(const ProbeSpec&, const ProbeSpec&) = default;

 private:
  void check_phase(const PhaseParams& phase, const char* which) const {
    const std::string name(which);
    if (support_.kind() == SupportKind::categorical) {
      const auto* probs = std::get_if<Distribution>(&phase);
      if (!probs)
        throw ParameterError(name + " phase must be a probability vector");
      if (probs->size() != support_.size())
        throw ParameterError(name + " phase length must equal |labels|");
      double total = 0.0;
      for (double p : *probs) {
        if (!(p >= 0.0) || !std::isfinite(p))
          throw ParameterError(name + " phase has a negative entry");
        total += p;
      }
      if (std::abs(total - 1.0) > 1e-12)
        throw ParameterError(name + " phase does not sum to 1");
    } else {
      const auto* g = std::get_if<GaussianPhase>(&phase);
      if (!g) throw ParameterError(name + " phase must be a (mu, sigma) pair");
      if (!std::isfinite(g->mu)) throw ParameterError(name + " mu not finite");
      if (!(g->sigma > 0.0) || !std::isfinite(g->sigma))
        throw ParameterError(name + " sigma must be positive");
    }
  }

  OutcomeSupport support_;
  std::size_t horizon_;
  std::size_t changepoint_;
  PhaseParams pre_;
  PhaseParams post_;
  std::uint64_t seed_;
};

struct ObservationSequence {
  ProbeSpec spec;
  std::vector<std::size_t> outcomes;  // indices into spec.support().labels()
  std::vector<double> raw_values;     // unquantized draws, binned-real only

  std::size_t size() const noexcept { return outcomes.size(); }

  void validate() const {
    if (outcomes.size() != spec.horizon())
      throw ValidationError("observation count differs from spec T");
    for (std::size_t i = 0; i < outcomes.size(); ++i)
      if (outcomes[i] >= spec.support().size())
        throw ValidationError("outcome index out of range at step " +
                              std::to_string(i + 1));
    const bool binned = spec.support().kind() == SupportKind::binned_real;
    if (binned && raw_values.size() != outcomes.size())
      throw ValidationError("binned-real observations need one raw value per step");
    if (!binned && !raw_values.empty())
      throw ValidationError("categorical observations carry no raw values");
  }

  friend bool operator==(const ObservationSequence&,
                         const ObservationSequence&) = default;
};

inline constexpr std::size_t kDieFaces = 6;

inline ProbeSpec make_biased_die_spec(std::size_t dominant_pre,
                                      std::size_t dominant_post, double p_dom,
                                      std::size_t horizon,
                                      std::size_t changepoint,
                                      std::uint64_t seed) {
  if (dominant_pre >= kDieFaces || dominant_post >= kDieFaces)
    throw ParameterError("die face index must be in [0, 6)");
  if (!(p_dom > 1.0 / 6.0 && p_dom < 1.0))
    throw ParameterError("p_dom must lie in (1/6, 1)");
  auto phase = [p_dom](std::size_t dominant) {
    Distribution probs(kDieFaces, (1.0 - p_dom) / (kDieFaces - 1));
    probs[dominant] = p_dom;
    return probs;
  };
  return ProbeSpec(OutcomeSupport::categorical({"1", "2", "3", "4", "5", "6"}),
                   horizon, changepoint, phase(dominant_pre),
                   phase(dominant_post), seed);
}

inline OutcomeSupport default_gaussian_support() {
  return OutcomeSupport::integer_bins(-8, 8);
}

inline ProbeSpec make_gaussian_spec(double mu_pre, double mu_post, double sigma,
                                    OutcomeSupport support, std::size_t horizon,
                                    std::size_t changepoint,
                                    std::uint64_t seed) {
  if (support.kind() != SupportKind::binned_real)
    throw ParameterError("gaussian probe needs a binned-real support");
  if (!(sigma > 0.0)) throw ParameterError("sigma must be positive");
  return ProbeSpec(std::move(support), horizon, changepoint,
                   GaussianPhase{mu_pre, sigma}, GaussianPhase{mu_post, sigma},
                   seed);
}

inline ObservationSequence sample(const ProbeSpec& spec) {
  Rng rng(spec.seed());
  ObservationSequence obs{spec, {}, {}};
  obs.outcomes.reserve(spec.horizon());
  const bool binned = spec.support().kind() == SupportKind::binned_real;
  for (std::size_t t = 1; t <= spec.horizon(); ++t) {
    const PhaseParams& phase = spec.phase_at(t);
    if (binned) {
      const auto& g = std::get<GaussianPhase>(phase);
      const double x = rng.normal(g.mu, g.sigma);
      obs.raw_values.push_back(x);
      obs.outcomes.push_back(spec.support().locate(x));
    } else {
      obs.outcomes.push_back(rng.categorical(std::get<Distribution>(phase)));
    }
  }
  return obs;
}

inline Distribution truth_predictive(const ProbeSpec& spec, std::size_t t) {
  if (t < 1 || t > spec.horizon())
    throw ParameterError("step t must lie in [1, T]");
  const PhaseParams& phase = spec.phase_at(t);
  if (const auto* probs = std::get_if<Distribution>(&phase)) return *probs;
  const auto& g = std::get<GaussianPhase>(phase);
  return normal::bin_masses(spec.support().bin_edges(), g.mu, g.sigma);
}

}  // namespace driftgauge
