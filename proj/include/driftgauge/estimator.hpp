#pragma once

// Fitting the discount factor of a belief trajectory.
//
// L(gamma) = sum_t KL(p_hat_t || p_filter_t(gamma)) is scanned on a
// geometric grid over [gamma_min, 1], then refined by golden-section search
// on the bracket around the best grid point. The reported gamma* is the best
// of every point evaluated, and every evaluation is kept in grid_profile.
// All divergences are in nats.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "driftgauge/error.hpp"
#include "driftgauge/filter.hpp"
#include "driftgauge/probe.hpp"
#include "driftgauge/serialize.hpp"
#include "driftgauge/trajectory.hpp"

namespace driftgauge {

inline constexpr double kKlFloor = 1e-12;

// sum_i p_i ln(p_i / max(q_i, 1e-12)); p_i = 0 terms contribute 0. The
// clamp can push the raw sum a hair below zero when p and q share entries
// under the floor, so the result is floored at 0.
inline double kl(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ParameterError("kl: length mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    total += p[i] * std::log(p[i] / std::max(q[i], kKlFloor));
  }
  return std::max(total, 0.0);
}

namespace detail {

inline void check_pairing(const BeliefTrajectory& traj,
                          const ObservationSequence& obs) {
  if (!(traj.support == obs.spec.support()))
    throw ValidationError("trajectory support differs from observation support");
  if (traj.size() != obs.size())
    throw ValidationError("trajectory length " + std::to_string(traj.size()) +
                          " differs from observation length " +
                          std::to_string(obs.size()));
}

inline std::vector<double> stepwise_kl(const BeliefTrajectory& traj,
                                       const std::vector<Distribution>& reference) {
  std::vector<double> e(traj.size());
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = kl(traj.steps[i].p_hat, reference[i]);
  return e;
}

inline double sum(const std::vector<double>& xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0);
}

}  // namespace detail

inline std::vector<Distribution> filter_trajectory(const ObservationSequence& obs,
                                                   const ConjugateState& prior,
                                                   double gamma) {
  return run_filter(FilterConfig{prior, gamma, obs.spec.support()}, obs);
}

inline double objective(const BeliefTrajectory& traj, const ObservationSequence& obs,
                        const ConjugateState& prior, double gamma) {
  detail::check_pairing(traj, obs);
  return detail::sum(detail::stepwise_kl(traj, filter_trajectory(obs, prior, gamma)));
}

struct Decomposition {
  double d_update = 0.0;     // mean KL(p_hat || filter(gamma*))
  double d_modelspec = 0.0;  // mean KL(filter(gamma*) || truth)
  std::vector<double> e_series;
};

inline Decomposition decompose(const BeliefTrajectory& traj,
                               const ObservationSequence& obs, const ProbeSpec& spec,
                               double gamma_star, const ConjugateState& prior) {
  check_gamma(gamma_star);
  detail::check_pairing(traj, obs);
  if (spec.horizon() != traj.size())
    throw ValidationError("probe horizon differs from trajectory length");
  const auto filtered = filter_trajectory(obs, prior, gamma_star);
  Decomposition out;
  out.e_series = detail::stepwise_kl(traj, filtered);
  const double n = static_cast<double>(traj.size());
  out.d_update = detail::sum(out.e_series) / n;
  double misspec = 0.0;
  for (std::size_t t = 1; t <= traj.size(); ++t)
    misspec += kl(filtered[t - 1], truth_predictive(spec, t));
  out.d_modelspec = misspec / n;
  return out;
}

// Mean KL(p_hat || truth), computed directly rather than from the two
// decomposition terms, which do not add up to it in general.
inline double total_divergence(const BeliefTrajectory& traj, const ProbeSpec& spec) {
  if (spec.horizon() != traj.size())
    throw ValidationError("probe horizon differs from trajectory length");
  double total = 0.0;
  for (std::size_t t = 1; t <= traj.size(); ++t)
    total += kl(traj.steps[t - 1].p_hat, truth_predictive(spec, t));
  return total / static_cast<double>(traj.size());
}

struct FitOptions {
  double gamma_min = 1e-3;
  std::size_t grid_points = 64;
  double tolerance = 1e-6;  // final golden-section bracket width
};

struct FitResult {
  double gamma_star = 1.0;
  double objective = 0.0;
  double d_update = 0.0;
  double d_modelspec = 0.0;
  double d_total = 0.0;
  std::vector<double> e_series;
  ConjugateState filter_prior;
  std::vector<std::pair<double, double>> grid_profile;  // (gamma, L) in evaluation order
};

inline std::vector<double> geometric_grid(double lo, double hi, std::size_t n) {
  if (n < 2) throw ParameterError("grid needs at least two points");
  std::vector<double> grid(n);
  const double ratio = std::log(hi / lo);
  for (std::size_t i = 0; i < n; ++i)
    grid[i] = lo * std::exp(ratio * static_cast<double>(i) / static_cast<double>(n - 1));
  grid.front() = lo;
  grid.back() = hi;
  return grid;
}

inline FitResult fit_gamma(const BeliefTrajectory& traj, const ObservationSequence& obs,
                           const ConjugateState& prior, const FitOptions& options = {}) {
  detail::check_pairing(traj, obs);
  if (!(options.gamma_min > 0.0 && options.gamma_min < 1.0))
    throw ParameterError("gamma_min must lie in (0, 1)");
  if (!(options.tolerance > 0.0)) throw ParameterError("tolerance must be positive");

  constexpr double kInf = std::numeric_limits<double>::infinity();
  FitResult result;
  result.filter_prior = prior;

  auto evaluate = [&](double gamma) {
    double value = kInf;
    try {
      value = objective(traj, obs, prior, gamma);
    } catch (const DegenerateError&) {
    }
    result.grid_profile.emplace_back(gamma, value);
    return value;
  };

  const auto grid = geometric_grid(options.gamma_min, 1.0, options.grid_points);
  std::vector<double> values;
  values.reserve(grid.size());
  for (double g : grid) values.push_back(evaluate(g));

  const auto best_it = std::min_element(values.begin(), values.end());
  if (*best_it == kInf)
    throw DegenerateError("objective is degenerate at every grid point");
  const std::size_t best = static_cast<std::size_t>(best_it - values.begin());

  double lo = grid[best == 0 ? 0 : best - 1];
  double hi = grid[std::min(best + 1, grid.size() - 1)];
  constexpr double kInvPhi = 0.6180339887498949;
  double x1 = hi - kInvPhi * (hi - lo);
  double x2 = lo + kInvPhi * (hi - lo);
  double f1 = evaluate(x1);
  double f2 = evaluate(x2);
  while (hi - lo >= options.tolerance) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kInvPhi * (hi - lo);
      f1 = evaluate(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kInvPhi * (hi - lo);
      f2 = evaluate(x2);
    }
  }
  evaluate(0.5 * (lo + hi));

  // First minimum in evaluation order, so ties resolve deterministically.
  auto winner = result.grid_profile.front();
  for (const auto& point : result.grid_profile)
    if (point.second < winner.second) winner = point;
  result.gamma_star = winner.first;

  Decomposition parts = decompose(traj, obs, obs.spec, result.gamma_star, prior);
  result.e_series = std::move(parts.e_series);
  result.objective = detail::sum(result.e_series);
  result.d_update = parts.d_update;
  result.d_modelspec = parts.d_modelspec;
  result.d_total = total_divergence(traj, obs.spec);
  return result;
}

inline Json to_json(const FitResult& fit) {
  Json profile = Json::array();
  for (const auto& [gamma, value] : fit.grid_profile)
    profile.push_back(Json::array({gamma, std::isfinite(value) ? Json(value) : Json()}));
  Json j = Json::object();
  j["units"] = "nats";
  j["gamma_star"] = fit.gamma_star;
  j["objective"] = fit.objective;
  j["d_update"] = fit.d_update;
  j["d_modelspec"] = fit.d_modelspec;
  j["d_total"] = fit.d_total;
  j["e_series"] = fit.e_series;
  j["filter_prior"] = to_json(fit.filter_prior);
  j["grid_profile"] = std::move(profile);
  return j;
}

inline FitResult fit_from_json(const Json& j) {
  return detail::rethrow_as_validation([&] {
    FitResult fit;
    fit.gamma_star = detail::number(detail::field(j, "gamma_star"), "gamma_star");
    fit.objective = detail::number(detail::field(j, "objective"), "objective");
    fit.d_update = detail::number(detail::field(j, "d_update"), "d_update");
    fit.d_modelspec = detail::number(detail::field(j, "d_modelspec"), "d_modelspec");
    fit.d_total = detail::number(detail::field(j, "d_total"), "d_total");
    fit.e_series = detail::numbers(detail::field(j, "e_series"), "e_series");
    fit.filter_prior = state_from_json(detail::field(j, "filter_prior"));
    const Json& profile = detail::field(j, "grid_profile");
    if (!profile.is_array()) throw ValidationError("grid_profile must be an array");
    for (const auto& point : profile) {
      if (!point.is_array() || point.size() != 2)
        throw ValidationError("grid_profile entries must be [gamma, L] pairs");
      fit.grid_profile.emplace_back(
          detail::number(point[0], "gamma"),
          point[1].is_null() ? std::numeric_limits<double>::infinity()
                             : detail::number(point[1], "L"));
    }
    check_gamma(fit.gamma_star);
    return fit;
  });
}

}  // namespace driftgauge
