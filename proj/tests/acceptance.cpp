// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "cli_runner.hpp"
#include "driftgauge/driftgauge.hpp"
#include "oracles.hpp"

using namespace driftgauge;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

ProbeSpec default_die(std::uint64_t seed) { return make_biased_die_spec(0, 5, 0.5, 100, 51, seed); }

const ConjugateState kDiePrior = default_dirichlet_prior(6);

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

Outcome gamma_recovery() {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  double worst_gap = 0.0, worst_update = 0.0;
  const auto obs = sample(default_die(7));
  for (double gamma : {0.3, 0.5, 0.7, 0.9, 1.0}) {
    AgentSpec a;
    a.gamma = gamma;
    const auto fit = fit_gamma(run_agent(a, obs), obs, kDiePrior);
    worst_gap = std::max(worst_gap, std::abs(fit.gamma_star - gamma));
    worst_update = std::max(worst_update, fit.d_update);
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  o.pass = worst_gap < 1e-3 && worst_update < 1e-9 && secs < 10.0;
  o.detail = "max|gamma*-gamma|=" + fmt("%.2e", worst_gap) + " max D_Update=" +
             fmt("%.2e", worst_update) + " time=" + fmt("%.2fs", secs);
  return o;
}

Outcome tempering_oracle() {
  Outcome o;
  double worst_dir = 0.0, worst_norm = 0.0, worst_comp = 0.0;
  const std::array<double, 3> alpha{3.0, 5.0, 8.0};
  const double mean = 0.7, variance = 2.5;
  for (double g : {0.25, 0.5, 0.75, 1.0}) {
    // 3000 x 3000 = 9e6 simplex points.
    const auto grid = oracle::temper_dirichlet_on_grid(alpha, g, 3000);
    const auto closed =
        std::get<DirichletState>(temper(DirichletState{{alpha.begin(), alpha.end()}}, g)).alpha;
    for (int k = 0; k < 3; ++k) worst_dir = std::max(worst_dir, std::abs(grid.alpha[k] - closed[k]));

    const auto ng = oracle::temper_normal_on_grid(mean, variance, g, 100001);
    const auto nc = std::get<NormalState>(temper(NormalState{mean, variance, 1.0}, g));
    worst_norm = std::max({worst_norm, std::abs(ng.mean - nc.mean),
                           std::abs(ng.variance - nc.variance)});
  }
  Rng rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    const double g1 = 0.05 + 0.95 * rng.uniform();
    const double g2 = 0.05 + 0.95 * rng.uniform();
    std::vector<double> a(6);
    for (double& x : a) x = 0.5 + 20.0 * rng.uniform();
    const auto twice = std::get<DirichletState>(temper(temper(DirichletState{a}, g1), g2)).alpha;
    const auto once = std::get<DirichletState>(temper(DirichletState{a}, g1 * g2)).alpha;
    for (std::size_t k = 0; k < a.size(); ++k)
      worst_comp = std::max(worst_comp, std::abs(twice[k] - once[k]));
    const NormalState n{rng.normal(0, 1), 0.1 + rng.uniform(), 1.0};
    const double v2 = std::get<NormalState>(temper(temper(n, g1), g2)).variance;
    const double v1 = std::get<NormalState>(temper(n, g1 * g2)).variance;
    worst_comp = std::max(worst_comp, std::abs(v2 - v1) / v1);
  }
  o.pass = worst_dir < 1e-6 && worst_norm < 1e-6 && worst_comp < 1e-12;
  o.detail = "dirichlet=" + fmt("%.2e", worst_dir) + " normal=" + fmt("%.2e", worst_norm) +
             " composition=" + fmt("%.2e", worst_comp);
  return o;
}

Outcome kl_axioms() {
  Outcome o;
  Rng rng(9);
  int negative = 0, self_nonzero = 0;
  for (int i = 0; i < 10000; ++i) {
    const std::size_t k = 2 + i % 9;
    const auto p = rng.dirichlet(std::vector<double>(k, 0.5));
    const auto q = rng.dirichlet(std::vector<double>(k, 0.5));
    negative += kl(p, q) < 0.0;
    self_nonzero += kl(p, p) != 0.0;
  }
  const double clamp = kl(std::vector<double>{0.5, 0.5}, std::vector<double>{1.0, 0.0});
  const double expected = 0.5 * std::log(0.5) + 0.5 * std::log(0.5 / 1e-12);
  const bool zero_p = kl(std::vector<double>{1.0, 0.0}, std::vector<double>{0.5, 0.5}) ==
                      kl(std::vector<double>{1.0}, std::vector<double>{0.5});
  const bool below_floor = kl(std::vector<double>{1e-15, 1.0 - 1e-15},
                              std::vector<double>{1e-14, 1.0 - 1e-14}) >= 0.0;
  o.pass = negative == 0 && self_nonzero == 0 && std::abs(clamp - expected) < 1e-12 && zero_p &&
           below_floor;
  o.detail = "negative=" + std::to_string(negative) + " KL(p||p)!=0: " +
             std::to_string(self_nonzero) + " clamp=" + fmt("%.6f", clamp);
  return o;
}

double mean_misspec(const ObservationSequence& obs, double gamma) {
  const auto pred = filter_trajectory(obs, kDiePrior, gamma);
  double total = 0.0;
  for (std::size_t t = 52; t <= 100; ++t) total += kl(pred[t - 1], truth_predictive(obs.spec, t));
  return total / 49.0;
}

Outcome forgetting_signature() {
  Outcome o;
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto obs = sample(default_die(seed));
    wins += mean_misspec(obs, 0.9) < mean_misspec(obs, 1.0);
  }
  o.pass = wins >= 190;
  o.detail = std::to_string(wins) + "/200 seeds (need >= 190)";
  return o;
}

Outcome window_discounting() {
  Outcome o;
  int below = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto obs = sample(default_die(seed));
    AgentSpec a;
    a.kind = AgentKind::window;
    a.window = 10;
    const double g = fit_gamma(run_agent(a, obs), obs, kDiePrior).gamma_star;
    below += g < 0.99;
    worst = std::max(worst, g);
  }
  o.pass = below >= 95;
  o.detail = std::to_string(below) + "/100 seeds with gamma* < 0.99 (max " + fmt("%.4f", worst) + ")";
  return o;
}

Outcome diagnostics() {
  Outcome o;
  std::vector<double> x(100), y(100);
  for (int i = 0; i < 100; ++i) {
    x[i] = std::sin(0.1 * i) + 0.01 * i;
    y[i] = -2.0 * x[i] + 3.0;
  }
  const double rho = pearson(x, y).rho;

  double worst_alignment = 1.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    Eigen::MatrixXd m(100, 8);
    for (int i = 0; i < 100; ++i)
      for (int k = 0; k < 8; ++k) m(i, k) = rng.normal(i < 50 ? -5.0 : 5.0, 1.0);
    worst_alignment = std::min(worst_alignment, phase_alignment(kmeans2(m).assignments, 51));
  }

  int null_ok = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Rng rng(seed + 1);
    std::vector<int> a(100);
    for (int& v : a) v = rng.uniform() < 0.5;
    null_ok += phase_alignment(a, 51) <= 0.65;
  }
  o.pass = std::abs(rho + 1.0) < 1e-12 && worst_alignment >= 0.99 && null_ok >= 950;
  o.detail = "rho+1=" + fmt("%.1e", rho + 1.0) + " min two-cloud alignment=" +
             fmt("%.3f", worst_alignment) + " null<=0.65: " + std::to_string(null_ok) + "/1000";
  return o;
}

Outcome pipeline_determinism() {
  const std::vector<std::string> steps{
      "generate --probe die --T 100 --t-c 51 --seed 7 --out spec.json",
      "simulate --agent noisy-discounted --gamma 0.85 --kappa 100 --seed 3 --obs obs.json "
      "--out traj.jsonl",
      "fit --traj traj.jsonl --obs obs.json --prior default --out fit.json",
      "diagnose --traj traj.jsonl --fit fit.json --t-c 51 --out report.json --csv-prefix diag_",
      "report --fit fit.json --diag report.json --out summary.txt",
      "report --fit fit.json --diag report.json --format json --out summary.json"};
  const std::vector<std::string> files{"spec.json",         "obs.json",     "traj.jsonl",
                                       "fit.json",          "report.json",  "diag_attention.csv",
                                       "diag_pca.csv",      "summary.txt",  "summary.json"};
  Outcome o;
  cli::Sandbox first("accept-a"), second("accept-b");
  for (const auto* box : {&first, &second})
    for (const auto& s : steps) {
      const auto r = box->run(s);
      if (r.status != 0) {
        o.pass = false;
        o.detail = "'" + s + "' exited " + std::to_string(r.status) + ": " + r.err;
        return o;
      }
    }
  std::size_t same = 0;
  for (const auto& f : files) {
    const std::string a = first.read(f), b = second.read(f);
    if (!a.empty() && a == b)
      ++same;
    else
      o.detail += " differs:" + f;
  }
  o.pass = same == files.size();
  o.detail = std::to_string(same) + "/" + std::to_string(files.size()) + " files byte-identical" +
             o.detail;
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"gamma-recovery", gamma_recovery},
      {"tempering-oracle", tempering_oracle},
      {"kl-axioms", kl_axioms},
      {"changepoint-forgetting", forgetting_signature},
      {"window-discounting", window_discounting},
      {"diagnostics", diagnostics},
      {"pipeline-determinism", pipeline_determinism},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s  %-24s %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
