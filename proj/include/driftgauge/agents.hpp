#pragma once

// Belief sources with known update rules. They stand in for an external
// model when checking the estimator and serve as reference baselines.
//
// Besides p_hat, each agent can report two internal signals through the
// same channels an elicited model uses:
//   attention  fraction of the t-1 past observations the belief still
//              carries (effective count / (t-1)); 0 at t = 1
//   hidden     log of the agent's noise-free belief, floored at ln(1e-12)

#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "driftgauge/error.hpp"
#include "driftgauge/filter.hpp"
#include "driftgauge/probe.hpp"
#include "driftgauge/rng.hpp"
#include "driftgauge/trajectory.hpp"

namespace driftgauge {

enum class AgentKind { discounted_bayes, window, noisy_discounted, uniform, truth_oracle };

inline const char* to_string(AgentKind kind) noexcept {
  switch (kind) {
    case AgentKind::discounted_bayes: return "discounted-bayes";
    case AgentKind::window: return "window";
    case AgentKind::noisy_discounted: return "noisy-discounted";
    case AgentKind::uniform: return "uniform";
    case AgentKind::truth_oracle: return "truth-oracle";
  }
  return "unknown";
}

inline std::optional<AgentKind> agent_kind_from_string(const std::string& s) {
  for (auto k : {AgentKind::discounted_bayes, AgentKind::window,
                 AgentKind::noisy_discounted, AgentKind::uniform,
                 AgentKind::truth_oracle})
    if (s == to_string(k)) return k;
  return std::nullopt;
}

struct AgentSpec {
  AgentKind kind = AgentKind::discounted_bayes;
  double gamma = 1.0;             // discounted kinds
  std::size_t window = 10;        // window kind
  double noise_conc = 100.0;      // noisy kind: p_hat ~ Dirichlet(kappa * p)
  ConjugateState prior = DirichletState{std::vector<double>(6, 1.0)};
  std::uint64_t seed = 0;
  bool emit_internals = true;

  void validate() const {
    switch (kind) {
      case AgentKind::discounted_bayes:
      case AgentKind::noisy_discounted:
        check_gamma(gamma);
        driftgauge::validate(prior);
        if (kind == AgentKind::noisy_discounted &&
            !(noise_conc > 0.0 && std::isfinite(noise_conc)))
          throw ParameterError("noise concentration must be positive");
        break;
      case AgentKind::window:
        if (window < 1) throw ParameterError("window length must be >= 1");
        driftgauge::validate(prior);
        break;
      case AgentKind::uniform:
      case AgentKind::truth_oracle:
        break;
    }
  }
};

namespace detail {

inline std::vector<double> log_belief(const Distribution& p) {
  std::vector<double> h(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) h[i] = std::log(std::max(p[i], 1e-12));
  return h;
}

// Effective number of past observations held by a gamma-discounted posterior
// at step t: gamma^0 + ... + gamma^(t-2).
inline double discounted_count(double gamma, std::size_t t) {
  if (t <= 1) return 0.0;
  if (gamma == 1.0) return static_cast<double>(t - 1);
  return (1.0 - std::pow(gamma, static_cast<double>(t - 1))) / (1.0 - gamma);
}

inline std::vector<Distribution> window_beliefs(const AgentSpec& agent,
                                                const ObservationSequence& obs) {
  const OutcomeSupport& support = obs.spec.support();
  FilterConfig{agent.prior, 1.0, support}.validate();
  std::vector<Distribution> out;
  out.reserve(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) {
    ConjugateState state = agent.prior;
    const std::size_t first = i > agent.window ? i - agent.window : 0;
    for (std::size_t k = first; k < i; ++k)
      state = update(state, obs.outcomes[k], support);
    out.push_back(predictive(state, support));
  }
  return out;
}

}  // namespace detail

inline std::string describe(const AgentSpec& agent) {
  // Json::dump gives the shortest round-trip form of a double.
  auto num = [](double x) { return Json(x).dump(); };
  std::ostringstream os;
  os << to_string(agent.kind);
  switch (agent.kind) {
    case AgentKind::discounted_bayes: os << " gamma=" << num(agent.gamma); break;
    case AgentKind::noisy_discounted:
      os << " gamma=" << num(agent.gamma) << " kappa=" << num(agent.noise_conc)
         << " seed=" << agent.seed;
      break;
    case AgentKind::window: os << " w=" << agent.window; break;
    default: break;
  }
  return os.str();
}

inline BeliefTrajectory run_agent(const AgentSpec& agent, const ObservationSequence& obs) {
  agent.validate();
  obs.validate();
  const OutcomeSupport& support = obs.spec.support();
  const std::size_t n = obs.size();

  std::vector<Distribution> beliefs;
  switch (agent.kind) {
    case AgentKind::discounted_bayes:
    case AgentKind::noisy_discounted:
      beliefs = run_filter(FilterConfig{agent.prior, agent.gamma, support}, obs);
      break;
    case AgentKind::window:
      beliefs = detail::window_beliefs(agent, obs);
      break;
    case AgentKind::uniform:
      beliefs.assign(n, Distribution(support.size(), 1.0 / support.size()));
      break;
    case AgentKind::truth_oracle:
      for (std::size_t t = 1; t <= n; ++t) beliefs.push_back(truth_predictive(obs.spec, t));
      break;
  }

  BeliefTrajectory traj{support, {}, describe(agent)};
  traj.steps.reserve(n);
  Rng rng(agent.seed);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t t = i + 1;
    StepRecord step{t, beliefs[i], std::nullopt, std::nullopt};
    if (agent.kind == AgentKind::noisy_discounted) {
      std::vector<double> conc(beliefs[i].size());
      for (std::size_t k = 0; k < conc.size(); ++k) conc[k] = agent.noise_conc * beliefs[i][k];
      // Zero-mass outcomes stay at zero; the rest are resampled jointly.
      std::vector<double> positive;
      for (double c : conc)
        if (c > 0.0) positive.push_back(c);
      const auto draw = rng.dirichlet(positive);
      for (std::size_t k = 0, j = 0; k < conc.size(); ++k)
        step.p_hat[k] = conc[k] > 0.0 ? draw[j++] : 0.0;
    }
    if (agent.emit_internals) {
      double retained = 0.0;
      switch (agent.kind) {
        case AgentKind::discounted_bayes:
        case AgentKind::noisy_discounted:
          retained = detail::discounted_count(agent.gamma, t);
          break;
        case AgentKind::window:
          retained = static_cast<double>(std::min(agent.window, t - 1));
          break;
        case AgentKind::uniform: retained = 0.0; break;
        case AgentKind::truth_oracle: retained = static_cast<double>(t - 1); break;
      }
      step.attention = t > 1 ? retained / static_cast<double>(t - 1) : 0.0;
      step.hidden = detail::log_belief(beliefs[i]);
    }
    traj.steps.push_back(std::move(step));
  }
  traj.validate(1e-12);
  return traj;
}

}  // namespace driftgauge
