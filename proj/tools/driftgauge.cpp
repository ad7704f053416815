// driftgauge: file-based pipeline
//   generate -> simulate (or an external trajectory) -> fit -> diagnose -> report
//
// Exit codes: 0 success, 1 internal error, 2 input validation.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "driftgauge/driftgauge.hpp"

namespace dg = driftgauge;
namespace fs = std::filesystem;

namespace {

constexpr int kExitInternal = 1;
constexpr int kExitValidation = 2;

// DRIFTGAUGE_SEED, when set, replaces any --seed value.
std::uint64_t effective_seed(std::uint64_t flag_value) {
  const char* env = std::getenv("DRIFTGAUGE_SEED");
  if (env == nullptr || *env == '\0') return flag_value;
  try {
    std::size_t used = 0;
    const std::string text(env);
    const unsigned long long v = std::stoull(text, &used, 10);
    if (used != text.size() || text.front() == '-') throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw dg::ValidationError(std::string("DRIFTGAUGE_SEED is not an unsigned integer: ") + env);
  }
}

dg::ConjugateState resolve_prior(const std::string& choice, const dg::ProbeSpec& spec) {
  if (choice != "default") return dg::state_from_json(dg::read_json_file(choice));
  if (spec.support().kind() == dg::SupportKind::categorical)
    return dg::default_dirichlet_prior(spec.support().size());
  const auto& phase = std::get<dg::GaussianPhase>(spec.phase_pre());
  return dg::default_normal_prior(phase.sigma * phase.sigma);
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string format_number(const char* fmt, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, x);
  return buf;
}

std::string csv_number(double x) { return format_number("%.17g", x); }

// ---------------------------------------------------------------- generate

struct GenerateArgs {
  std::string probe = "die";
  std::size_t horizon = 0;
  std::size_t changepoint = 51;
  std::uint64_t seed = 7;
  double p_dom = 0.5;
  std::size_t dominant_pre = 0;
  std::size_t dominant_post = 5;
  double mu_pre = 2.0;
  double mu_post = -2.0;
  double sigma = 1.0;
  std::string out = "spec.json";
  std::string obs_out;
};

void add_generate(CLI::App& app, GenerateArgs& a) {
  auto* cmd = app.add_subcommand("generate", "Write a probe spec and its sampled observations");
  cmd->add_option("--probe", a.probe, "Probe family")->check(CLI::IsMember({"die", "gaussian"}));
  cmd->add_option("--T", a.horizon, "Number of steps")->required()->check(CLI::PositiveNumber);
  cmd->add_option("--t-c", a.changepoint, "First post-change step (T+1 = stationary)")
      ->capture_default_str();
  cmd->add_option("--seed", a.seed, "Sampling seed (DRIFTGAUGE_SEED overrides)")
      ->capture_default_str();
  cmd->add_option("--p-dom", a.p_dom, "Die: dominant-face probability")->capture_default_str();
  cmd->add_option("--dominant-pre", a.dominant_pre, "Die: dominant face before t_c (0-5)")
      ->capture_default_str();
  cmd->add_option("--dominant-post", a.dominant_post, "Die: dominant face from t_c (0-5)")
      ->capture_default_str();
  cmd->add_option("--mu-pre", a.mu_pre, "Gaussian: mean before t_c")->capture_default_str();
  cmd->add_option("--mu-post", a.mu_post, "Gaussian: mean from t_c")->capture_default_str();
  cmd->add_option("--sigma", a.sigma, "Gaussian: standard deviation")->capture_default_str();
  cmd->add_option("--out", a.out, "Probe spec path")->capture_default_str();
  cmd->add_option("--obs-out", a.obs_out, "Observation path (default: obs.json next to --out)");
}

int run_generate(const GenerateArgs& a) {
  const std::uint64_t seed = effective_seed(a.seed);
  const dg::ProbeSpec spec =
      a.probe == "die"
          ? dg::make_biased_die_spec(a.dominant_pre, a.dominant_post, a.p_dom, a.horizon,
                                     a.changepoint, seed)
          : dg::make_gaussian_spec(a.mu_pre, a.mu_post, a.sigma, dg::default_gaussian_support(),
                                   a.horizon, a.changepoint, seed);
  const std::string obs_path =
      a.obs_out.empty() ? (fs::path(a.out).parent_path() / "obs.json").string() : a.obs_out;
  dg::write_json_file(a.out, dg::to_json(spec));
  dg::write_json_file(obs_path, dg::to_json(dg::sample(spec)));
  return 0;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string agent;
  double gamma = 0.8;
  std::size_t window = 10;
  double kappa = 100.0;
  std::uint64_t seed = 0;
  std::string obs;
  std::string prior = "default";
  std::string out = "traj.jsonl";
  bool no_internals = false;
};

void add_simulate(CLI::App& app, SimulateArgs& a) {
  auto* cmd = app.add_subcommand("simulate", "Run a synthetic agent over observations");
  cmd->add_option("--agent", a.agent, "Agent kind")
      ->required()
      ->check(CLI::IsMember(
          {"discounted-bayes", "window", "noisy-discounted", "uniform", "truth-oracle"}));
  cmd->add_option("--gamma", a.gamma, "Discount factor (discounted kinds)")->capture_default_str();
  cmd->add_option("--window", a.window, "Window length (window agent)")->capture_default_str();
  cmd->add_option("--kappa", a.kappa, "Dirichlet noise concentration (noisy agent)")
      ->capture_default_str();
  cmd->add_option("--seed", a.seed, "Agent noise seed (DRIFTGAUGE_SEED overrides)")
      ->capture_default_str();
  cmd->add_option("--obs", a.obs, "Observation file")->required();
  cmd->add_option("--prior", a.prior, "'default' or a conjugate-state JSON file")
      ->capture_default_str();
  cmd->add_option("--out", a.out, "Trajectory path")->capture_default_str();
  cmd->add_flag("--no-internals", a.no_internals, "Omit attention and hidden fields");
}

int run_simulate(const SimulateArgs& a) {
  const auto obs = dg::observations_from_json(dg::read_json_file(a.obs));
  dg::AgentSpec agent;
  agent.kind = *dg::agent_kind_from_string(a.agent);
  agent.gamma = a.gamma;
  agent.window = a.window;
  agent.noise_conc = a.kappa;
  agent.prior = resolve_prior(a.prior, obs.spec);
  agent.seed = effective_seed(a.seed);
  agent.emit_internals = !a.no_internals;
  dg::write_trajectory(dg::run_agent(agent, obs), a.out);
  return 0;
}

// ---------------------------------------------------------------- fit

struct FitArgs {
  std::string traj;
  std::string obs;
  std::string prior = "default";
  double gamma_min = 1e-3;
  std::string out = "fit.json";
};

void add_fit(CLI::App& app, FitArgs& a) {
  auto* cmd = app.add_subcommand("fit", "Fit gamma* and decompose the predictive error");
  cmd->add_option("--traj", a.traj, "Trajectory file (JSON lines)")->required();
  cmd->add_option("--obs", a.obs, "Observation file")->required();
  cmd->add_option("--prior", a.prior, "'default' or a conjugate-state JSON file")
      ->capture_default_str();
  cmd->add_option("--gamma-min", a.gamma_min, "Lower end of the gamma search interval")
      ->capture_default_str();
  cmd->add_option("--out", a.out, "Fit result path")->capture_default_str();
}

int run_fit(const FitArgs& a) {
  const auto traj = dg::read_trajectory(a.traj);
  const auto obs = dg::observations_from_json(dg::read_json_file(a.obs));
  dg::FitOptions options;
  options.gamma_min = a.gamma_min;
  const auto fit = dg::fit_gamma(traj, obs, resolve_prior(a.prior, obs.spec), options);
  dg::Json j = dg::to_json(fit);
  j["source_tag"] = traj.source_tag;
  dg::write_json_file(a.out, j);
  return 0;
}

// ---------------------------------------------------------------- diagnose

struct DiagnoseArgs {
  std::string traj;
  std::string fit;
  std::size_t changepoint = 51;
  std::uint64_t seed = 0;
  std::string out = "report.json";
  std::string csv_prefix;
};

void add_diagnose(CLI::App& app, DiagnoseArgs& a) {
  auto* cmd = app.add_subcommand("diagnose", "Attention correlation and hidden-state clustering");
  cmd->add_option("--traj", a.traj, "Trajectory file (JSON lines)")->required();
  cmd->add_option("--fit", a.fit, "Fit result from 'fit'")->required();
  cmd->add_option("--t-c", a.changepoint, "Changepoint step used for phase alignment")
      ->capture_default_str();
  cmd->add_option("--seed", a.seed, "Clustering seed (DRIFTGAUGE_SEED overrides)")
      ->capture_default_str();
  cmd->add_option("--out", a.out, "Diagnostics report path")->capture_default_str();
  cmd->add_option("--csv-prefix", a.csv_prefix,
                  "Also write <prefix>attention.csv and <prefix>pca.csv");
}

int run_diagnose(const DiagnoseArgs& a) {
  const auto traj = dg::read_trajectory(a.traj);
  const auto fit = dg::fit_from_json(dg::read_json_file(a.fit));
  if (fit.e_series.size() != traj.size())
    throw dg::ValidationError("fit e_series length differs from trajectory length");
  if (a.changepoint < 1 || a.changepoint > traj.size())
    throw dg::ValidationError("--t-c must lie in [1, T]");

  dg::Json report = dg::Json::object();
  report["units"] = "nats";
  report["t_c"] = a.changepoint;

  std::vector<double> attention;
  if (traj.has_attention()) {
    for (const auto& s : traj.steps) attention.push_back(*s.attention);
    try {
      report["correlation"] = dg::to_json(dg::pearson(attention, fit.e_series));
    } catch (const dg::DegenerateError& e) {
      report["correlation"] = dg::Json{{"error", e.what()}};
    }
  } else {
    report["correlation"] = dg::Json{{"error", "trajectory carries no attention scores"}};
  }

  std::optional<dg::ClusterReport> cluster;
  if (traj.has_hidden()) {
    try {
      cluster = dg::cluster_hidden_states(dg::hidden_matrix(traj), a.changepoint,
                                          effective_seed(a.seed));
      report["cluster"] = dg::to_json(*cluster);
    } catch (const dg::DegenerateError& e) {
      report["cluster"] = dg::Json{{"error", e.what()}};
    } catch (const dg::ParameterError& e) {
      report["cluster"] = dg::Json{{"error", e.what()}};
    }
  } else {
    report["cluster"] = dg::Json{{"error", "trajectory carries no hidden states"}};
  }
  dg::write_json_file(a.out, report);

  if (!a.csv_prefix.empty()) {
    if (!attention.empty()) {
      std::string csv = "t,attention,update_divergence\n";
      for (std::size_t i = 0; i < traj.size(); ++i)
        csv += std::to_string(i + 1) + "," + csv_number(attention[i]) + "," +
               csv_number(fit.e_series[i]) + "\n";
      write_text_file(a.csv_prefix + "attention.csv", csv);
    }
    if (cluster) {
      std::string csv = "t,pc1,pc2,cluster\n";
      for (std::size_t i = 0; i < traj.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        csv += std::to_string(i + 1) + "," + csv_number(cluster->projection(r, 0)) + "," +
               csv_number(cluster->projection(r, 1)) + "," +
               std::to_string(cluster->assignments[i]) + "\n";
      }
      write_text_file(a.csv_prefix + "pca.csv", csv);
    }
  }
  return 0;
}

// ---------------------------------------------------------------- report

struct ReportArgs {
  std::string fit;
  std::string diag;
  std::string format = "text";
  std::string out;
  std::string manifest;
  std::string spec;
  std::string obs;
  std::string traj;
};

void add_report(CLI::App& app, ReportArgs& a) {
  auto* cmd = app.add_subcommand("report", "Summarise a fit and its diagnostics");
  cmd->add_option("--fit", a.fit, "Fit result from 'fit'")->required();
  cmd->add_option("--diag", a.diag, "Diagnostics report from 'diagnose'")->required();
  cmd->add_option("--format", a.format, "text or json")
      ->check(CLI::IsMember({"text", "json"}))
      ->capture_default_str();
  cmd->add_option("--out", a.out, "Write the summary here instead of stdout");
  cmd->add_option("--manifest", a.manifest, "Also write a run manifest to this path");
  cmd->add_option("--spec", a.spec, "Probe spec path recorded in the manifest");
  cmd->add_option("--obs", a.obs, "Observation path recorded in the manifest");
  cmd->add_option("--traj", a.traj, "Trajectory path recorded in the manifest");
}

// Divergences below this are reported as an exact match to the truth.
constexpr double kOracleThreshold = 1e-9;

std::string text_report(const dg::Json& fit, const dg::Json& diag) {
  std::ostringstream os;
  auto row = [&](const char* name, const std::string& value) {
    os << "  " << name;
    for (std::size_t pad = std::char_traits<char>::length(name); pad < 14; ++pad) os << ' ';
    os << value << '\n';
  };
  auto sci = [](double x) { return format_number("%.6e", x); };
  os << "driftgauge report (divergences in nats)\n";
  if (fit.contains("source_tag")) row("source", fit["source_tag"].get<std::string>());
  row("gamma*", format_number("%.6f", fit["gamma_star"].get<double>()));
  row("D_Update", sci(fit["d_update"].get<double>()));
  row("D_ModelSpec", sci(fit["d_modelspec"].get<double>()));
  const double total = fit["d_total"].get<double>();
  row("D_Total", sci(total) + (total < kOracleThreshold ? "  [oracle]" : ""));
  const auto& corr = diag["correlation"];
  if (corr.contains("rho"))
    row("rho", format_number("%+.6f", corr["rho"].get<double>()) + "  (p=" +
                   sci(corr["p_value"].get<double>()) +
                   ", n=" + std::to_string(corr["n"].get<std::size_t>()) + ")");
  else
    row("rho", "n/a  (" + corr["error"].get<std::string>() + ")");
  const auto& cluster = diag["cluster"];
  if (cluster.contains("alignment"))
    row("alignment", format_number("%.6f", cluster["alignment"].get<double>()));
  else
    row("alignment", "n/a  (" + cluster["error"].get<std::string>() + ")");
  return os.str();
}

std::string iso_timestamp(std::chrono::system_clock::time_point tp) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(tp);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

int run_report(const ReportArgs& a) {
  const dg::Json fit = dg::read_json_file(a.fit);
  const dg::Json diag = dg::read_json_file(a.diag);
  dg::fit_from_json(fit);
  if (!diag.is_object() || !diag.contains("correlation") || !diag.contains("cluster"))
    throw dg::ValidationError(a.diag + " is not a diagnostics report");

  std::string text;
  if (a.format == "json") {
    dg::Json merged = dg::Json::object();
    merged["units"] = "nats";
    merged["fit"] = fit;
    merged["diagnostics"] = diag;
    merged["oracle"] = fit["d_total"].get<double>() < kOracleThreshold;
    text = merged.dump(2) + "\n";
  } else {
    text = text_report(fit, diag);
  }
  if (a.out.empty())
    std::cout << text;
  else
    write_text_file(a.out, text);

  if (!a.manifest.empty()) {
    dg::Json files = dg::Json::object();
    auto record = [&](const char* key, const std::string& path) {
      if (path.empty()) return;
      if (!fs::exists(path)) throw dg::ValidationError("manifest file missing: " + path);
      files[key] = {{"path", path},
                    {"modified", iso_timestamp(std::chrono::file_clock::to_sys(
                                     fs::last_write_time(path)))}};
    };
    record("probe_spec", a.spec);
    record("observations", a.obs);
    record("trajectory", a.traj);
    record("fit", a.fit);
    record("diagnostics", a.diag);
    if (!a.out.empty()) record("report", a.out);
    dg::Json manifest = dg::Json::object();
    manifest["tool"] = "driftgauge";
    manifest["version"] = DRIFTGAUGE_VERSION;
    manifest["finalized"] = iso_timestamp(std::chrono::system_clock::now());
    manifest["files"] = std::move(files);
    dg::write_json_file(a.manifest, manifest);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"driftgauge: fit discounted Bayesian filters to belief trajectories"};
  app.set_version_flag("--version", DRIFTGAUGE_VERSION);
  app.require_subcommand(1);

  GenerateArgs generate;
  SimulateArgs simulate;
  FitArgs fit;
  DiagnoseArgs diagnose;
  ReportArgs report;
  add_generate(app, generate);
  add_simulate(app, simulate);
  add_fit(app, fit);
  add_diagnose(app, diagnose);
  add_report(app, report);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (app.got_subcommand("generate")) return run_generate(generate);
    if (app.got_subcommand("simulate")) return run_simulate(simulate);
    if (app.got_subcommand("fit")) return run_fit(fit);
    if (app.got_subcommand("diagnose")) return run_diagnose(diagnose);
    if (app.got_subcommand("report")) return run_report(report);
  } catch (const dg::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const dg::ParameterError& e) {
    std::cerr << "invalid parameter: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitInternal;
}
