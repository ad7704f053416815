#pragma once

// Conjugate Bayesian filters with power discounting.
//
// Before each update the previous posterior density is raised to the power
// gamma and renormalized. For the two conjugate families this has a closed
// form:
//   Dirichlet(alpha)       -> Dirichlet(gamma * (alpha - 1) + 1)
//   Normal(mean, variance) -> Normal(mean, variance / gamma)
// gamma = 1 recovers the ordinary filter; small gamma forgets quickly.

#include <cmath>
#include <numeric>
#include <string>
#include <variant>
#include <vector>

#include "driftgauge/error.hpp"
#include "driftgauge/normal.hpp"
#include "driftgauge/probe.hpp"

namespace driftgauge {

struct DirichletState {
  std::vector<double> alpha;
  friend bool operator==(const DirichletState&, const DirichletState&) = default;
};

// Posterior over the mean of a Normal likelihood with known variance.
struct NormalState {
  double mean = 0.0;
  double variance = 100.0;
  double obs_variance = 1.0;
  friend bool operator==(const NormalState&, const NormalState&) = default;
};

using ConjugateState = std::variant<DirichletState, NormalState>;

inline constexpr double kMinTemperedAlpha = 1e-12;

inline void validate(const ConjugateState& state) {
  if (const auto* d = std::get_if<DirichletState>(&state)) {
    if (d->alpha.empty()) throw ParameterError("dirichlet alpha is empty");
    for (double a : d->alpha)
      if (!(a > 0.0) || !std::isfinite(a))
        throw ParameterError("dirichlet alpha entries must be positive");
    return;
  }
  const auto& n = std::get<NormalState>(state);
  if (!std::isfinite(n.mean)) throw ParameterError("normal mean not finite");
  if (!(n.variance > 0.0) || !std::isfinite(n.variance))
    throw ParameterError("normal variance must be positive");
  if (!(n.obs_variance > 0.0) || !std::isfinite(n.obs_variance))
    throw ParameterError("observation variance must be positive");
}

inline DirichletState default_dirichlet_prior(std::size_t dimension) {
  return DirichletState{std::vector<double>(dimension, 1.0)};
}

inline NormalState default_normal_prior(double obs_variance = 1.0) {
  return NormalState{0.0, 100.0, obs_variance};
}

inline void check_gamma(double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0))
    throw ParameterError("discount factor gamma must lie in (0, 1]");
}

struct FilterConfig {
  ConjugateState prior;
  double gamma = 1.0;
  OutcomeSupport support;

  void validate() const {
    driftgauge::validate(prior);
    check_gamma(gamma);
    if (const auto* d = std::get_if<DirichletState>(&prior)) {
      if (d->alpha.size() != support.size())
        throw ParameterError("dirichlet prior dimension differs from support");
    } else if (support.kind() != SupportKind::binned_real) {
      throw ParameterError("normal filter needs a binned-real support");
    }
  }
};

inline ConjugateState temper(const ConjugateState& state, double gamma) {
  check_gamma(gamma);
  if (gamma == 1.0) return state;
  if (const auto* d = std::get_if<DirichletState>(&state)) {
    DirichletState out{d->alpha};
    for (double& a : out.alpha) {
      a = gamma * (a - 1.0) + 1.0;
      if (!(a > kMinTemperedAlpha))
        throw DegenerateError("tempered dirichlet concentration collapsed to " +
                              std::to_string(a));
    }
    return out;
  }
  NormalState out = std::get<NormalState>(state);
  out.variance /= gamma;
  if (!std::isfinite(out.variance))
    throw DegenerateError("tempered normal variance overflowed");
  return out;
}

inline ConjugateState update(const ConjugateState& state, std::size_t outcome,
                             const OutcomeSupport& support) {
  if (outcome >= support.size())
    throw ParameterError("outcome index out of range");
  if (const auto* d = std::get_if<DirichletState>(&state)) {
    if (d->alpha.size() != support.size())
      throw ParameterError("dirichlet dimension differs from support");
    DirichletState out{d->alpha};
    out.alpha[outcome] += 1.0;
    return out;
  }
  const auto& n = std::get<NormalState>(state);
  const double x = support.bin_center(outcome);
  NormalState out = n;
  out.variance = 1.0 / (1.0 / n.variance + 1.0 / n.obs_variance);
  out.mean = out.variance * (n.mean / n.variance + x / n.obs_variance);
  return out;
}

inline Distribution predictive(const ConjugateState& state,
                               const OutcomeSupport& support) {
  if (const auto* d = std::get_if<DirichletState>(&state)) {
    if (d->alpha.size() != support.size())
      throw ParameterError("dirichlet dimension differs from support");
    const double total = std::accumulate(d->alpha.begin(), d->alpha.end(), 0.0);
    Distribution p(d->alpha.size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = d->alpha[i] / total;
    return p;
  }
  if (support.kind() != SupportKind::binned_real)
    throw ParameterError("normal predictive needs a binned-real support");
  const auto& n = std::get<NormalState>(state);
  return normal::bin_masses(support.bin_edges(), n.mean,
                            std::sqrt(n.variance + n.obs_variance));
}

// Predictive at step t conditions on D_1..D_{t-1} only: emit, then temper
// the posterior and fold in D_t.
inline std::vector<Distribution> run_filter(const FilterConfig& config,
                                            const ObservationSequence& obs) {
  config.validate();
  if (!(config.support == obs.spec.support()))
    throw ParameterError("filter support differs from observation support");
  std::vector<Distribution> out;
  out.reserve(obs.size());
  ConjugateState state = config.prior;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    out.push_back(predictive(state, config.support));
    if (i + 1 < obs.size())
      state = update(temper(state, config.gamma), obs.outcomes[i],
                     config.support);
  }
  return out;
}

}  // namespace driftgauge
