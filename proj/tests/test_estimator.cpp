#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "driftgauge/agents.hpp"
#include "driftgauge/estimator.hpp"

using namespace driftgauge;

namespace {

ProbeSpec die(std::uint64_t seed, std::size_t T = 100, std::size_t t_c = 51) {
  return make_biased_die_spec(0, 5, 0.5, T, t_c, seed);
}

BeliefTrajectory filter_traj(const ObservationSequence& obs, double gamma) {
  AgentSpec a;
  a.gamma = gamma;
  return run_agent(a, obs);
}

const ConjugateState kPrior = default_dirichlet_prior(6);

}  // namespace

TEST(Kl, Examples) {
  const std::vector<double> p{0.2, 0.3, 0.5};
  EXPECT_EQ(kl(p, p), 0.0);
  EXPECT_NEAR(kl(std::vector<double>{1, 0}, std::vector<double>{0.5, 0.5}), std::log(2.0),
              1e-15);
  const double clamped = 0.5 * std::log(0.5) + 0.5 * std::log(0.5 / 1e-12);
  EXPECT_NEAR(kl(std::vector<double>{0.5, 0.5}, std::vector<double>{1, 0}), clamped, 1e-12);
  EXPECT_NEAR(clamped, 13.1224, 1e-4);
  EXPECT_THROW(kl(std::vector<double>{1}, std::vector<double>{0.5, 0.5}), ParameterError);
}

TEST(Kl, NonNegativeOnRandomPairs) {
  Rng rng(11);
  for (int i = 0; i < 2000; ++i) {
    const auto p = rng.dirichlet(std::vector<double>(6, 0.3));
    const auto q = rng.dirichlet(std::vector<double>(6, 0.3));
    EXPECT_GE(kl(p, q), 0.0);
    EXPECT_EQ(kl(p, p), 0.0);
  }
}

TEST(Objective, SelfConsistency) {
  const auto obs = sample(die(3));
  const auto traj = filter_traj(obs, 0.8);
  const double at_truth = objective(traj, obs, kPrior, 0.8);
  EXPECT_LT(at_truth, 1e-12);
  EXPECT_GT(objective(traj, obs, kPrior, 1.0), at_truth);
}

TEST(Objective, UniformFirstStepTermIsZero) {
  const auto obs = sample(die(4));
  AgentSpec a;
  a.kind = AgentKind::uniform;
  const auto traj = run_agent(a, obs);
  const auto ref = filter_trajectory(obs, kPrior, 1.0);
  EXPECT_EQ(kl(traj.steps[0].p_hat, ref[0]), 0.0);
}

TEST(Objective, MismatchErrors) {
  const auto obs = sample(die(5));
  const auto short_obs = sample(die(5, 50, 26));
  const auto traj = filter_traj(obs, 0.9);
  EXPECT_THROW(objective(traj, short_obs, kPrior, 0.9), ValidationError);
  const auto g = sample(make_gaussian_spec(2, -2, 1, default_gaussian_support(), 100, 51, 1));
  EXPECT_THROW(objective(traj, g, kPrior, 0.9), ValidationError);
}

TEST(FitGamma, SelfFitRecovery) {
  for (double gamma : {0.3, 0.5, 0.7, 0.8, 0.9, 1.0}) {
    const auto obs = sample(die(7));
    const auto fit = fit_gamma(filter_traj(obs, gamma), obs, kPrior);
    EXPECT_NEAR(fit.gamma_star, gamma, 1e-3) << "gamma=" << gamma;
    EXPECT_LT(fit.d_update, 1e-9) << "gamma=" << gamma;
  }
}

TEST(FitGamma, NoisyAgentCalibration) {
  int inside = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto obs = sample(die(seed));
    AgentSpec a;
    a.kind = AgentKind::noisy_discounted;
    a.gamma = 0.9;
    a.noise_conc = 100.0;
    a.seed = seed + 1000;
    const auto fit = fit_gamma(run_agent(a, obs), obs, kPrior);
    inside += fit.gamma_star >= 0.85 && fit.gamma_star <= 0.95;
  }
  EXPECT_GE(inside, 95);
}

TEST(FitGamma, Invariants) {
  const auto obs = sample(die(9));
  AgentSpec a;
  a.kind = AgentKind::window;
  a.window = 10;
  const auto traj = run_agent(a, obs);
  const FitOptions options;
  const auto fit = fit_gamma(traj, obs, kPrior, options);

  ASSERT_FALSE(fit.grid_profile.empty());
  EXPECT_GE(fit.grid_profile.size(), options.grid_points);
  for (const auto& [g, value] : fit.grid_profile) {
    EXPECT_GE(g, options.gamma_min);
    EXPECT_LE(g, 1.0);
    EXPECT_GE(value, 0.0);
    EXPECT_LE(fit.objective, value);
  }
  EXPECT_EQ(fit.e_series.size(), traj.size());
  EXPECT_DOUBLE_EQ(fit.objective,
                   std::accumulate(fit.e_series.begin(), fit.e_series.end(), 0.0));
  EXPECT_DOUBLE_EQ(fit.d_update, fit.objective / static_cast<double>(traj.size()));
  EXPECT_DOUBLE_EQ(fit.d_total, total_divergence(traj, obs.spec));
  EXPECT_EQ(fit.objective, objective(traj, obs, kPrior, fit.gamma_star));
}

TEST(FitGamma, Deterministic) {
  const auto obs = sample(die(12));
  AgentSpec a;
  a.kind = AgentKind::noisy_discounted;
  a.gamma = 0.7;
  a.seed = 5;
  const auto traj = run_agent(a, obs);
  const auto f1 = fit_gamma(traj, obs, kPrior);
  const auto f2 = fit_gamma(traj, obs, kPrior);
  EXPECT_EQ(f1.gamma_star, f2.gamma_star);
  EXPECT_EQ(f1.grid_profile, f2.grid_profile);
  EXPECT_EQ(f1.e_series, f2.e_series);
  EXPECT_EQ(to_json(f1).dump(), to_json(f2).dump());
}

TEST(FitGamma, GammaMinBoundsTheSearch) {
  const auto obs = sample(die(13));
  FitOptions options;
  options.gamma_min = 0.5;
  const auto fit = fit_gamma(filter_traj(obs, 0.2), obs, kPrior, options);
  EXPECT_GE(fit.gamma_star, 0.5);
  EXPECT_NEAR(fit.gamma_star, 0.5, 1e-3);
  for (const auto& point : fit.grid_profile) EXPECT_GE(point.first, 0.5);

  options.gamma_min = 0.0;
  EXPECT_THROW(fit_gamma(filter_traj(obs, 0.2), obs, kPrior, options), ParameterError);
}

TEST(FitGamma, GaussianProbeRecovery) {
  const auto spec = make_gaussian_spec(2, -2, 1, default_gaussian_support(), 100, 51, 21);
  const auto obs = sample(spec);
  AgentSpec a;
  a.gamma = 0.6;
  a.prior = default_normal_prior(1.0);
  const auto traj = run_agent(a, obs);
  const auto fit = fit_gamma(traj, obs, a.prior);
  EXPECT_NEAR(fit.gamma_star, 0.6, 1e-3);
  EXPECT_LT(fit.d_update, 1e-9);
}

TEST(FitGamma, JsonRoundTrip) {
  const auto obs = sample(die(14));
  const auto fit = fit_gamma(filter_traj(obs, 0.85), obs, kPrior);
  const Json j = to_json(fit);
  EXPECT_EQ(j.at("units"), "nats");
  const auto back = fit_from_json(Json::parse(j.dump()));
  EXPECT_EQ(back.gamma_star, fit.gamma_star);
  EXPECT_EQ(back.e_series, fit.e_series);
  EXPECT_EQ(back.grid_profile, fit.grid_profile);
  EXPECT_EQ(to_json(back).dump(), j.dump());
  EXPECT_THROW(fit_from_json(Json::parse(R"({"gamma_star": 0.5})")), ValidationError);
}

TEST(Decompose, SelfReference) {
  const auto spec = die(15);
  const auto obs = sample(spec);
  const auto d = decompose(filter_traj(obs, 0.8), obs, spec, 0.8, kPrior);
  EXPECT_EQ(d.d_update, 0.0);
  EXPECT_GT(d.d_modelspec, 0.0);
  EXPECT_THROW(decompose(filter_traj(obs, 0.8), obs, spec, 0.0, kPrior), ParameterError);
}

TEST(Decompose, ModelSpecShrinksWithHorizon) {
  auto modelspec = [](std::size_t T) {
    const auto spec = die(16, T, T + 1);
    const auto obs = sample(spec);
    AgentSpec a;
    a.kind = AgentKind::truth_oracle;
    return decompose(run_agent(a, obs), obs, spec, 1.0, kPrior).d_modelspec;
  };
  EXPECT_LT(modelspec(200), modelspec(50));
}

// A perfect-memory trajectory read against a discounted reference: E_t
// jumps once the dominant face moves.
TEST(Decompose, UpdateDivergenceRisesAfterChangepoint) {
  int rising = 0;
  double pre_mean = 0.0, post_mean = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto spec = die(seed);
    const auto obs = sample(spec);
    const auto e = decompose(filter_traj(obs, 1.0), obs, spec, 0.8, kPrior).e_series;
    double pre = 0.0, post = 0.0;
    for (std::size_t i = 40; i < 50; ++i) pre += e[i] / 10.0;
    for (std::size_t i = 50; i < 56; ++i) post += e[i] / 6.0;
    rising += post > pre;
    pre_mean += pre / 100.0;
    post_mean += post / 100.0;
  }
  EXPECT_GE(rising, 85);
  EXPECT_GT(post_mean, 1.5 * pre_mean);
}
