#pragma once

// Belief trajectories and their JSON-lines file form.
//
//   {"support": {...}, "source_tag": "..."}                      header
//   {"t": 1, "p_hat": [...], "attention": 0.73, "hidden": [...]}   one per step
//
// attention and hidden are optional per file, but a file that has hidden
// vectors has them on every step with one fixed dimension. Numbers are
// written with 17 significant digits and a fixed key order, so equal
// trajectories produce byte-identical files.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "driftgauge/error.hpp"
#include "driftgauge/probe.hpp"
#include "driftgauge/serialize.hpp"

namespace driftgauge {

inline constexpr double kInputSumTolerance = 1e-9;

struct StepRecord {
  std::size_t t = 0;
  Distribution p_hat;
  std::optional<double> attention;
  std::optional<std::vector<double>> hidden;
  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct BeliefTrajectory {
  OutcomeSupport support;
  std::vector<StepRecord> steps;
  std::string source_tag;

  std::size_t size() const noexcept { return steps.size(); }

  bool has_attention() const noexcept {
    return !steps.empty() && steps.front().attention.has_value();
  }
  bool has_hidden() const noexcept {
    return !steps.empty() && steps.front().hidden.has_value();
  }

  std::vector<Distribution> distributions() const {
    std::vector<Distribution> out;
    out.reserve(steps.size());
    for (const auto& s : steps) out.push_back(s.p_hat);
    return out;
  }

  // Checks step i against the contract and against step 0 (attention and
  // hidden presence, hidden dimension). Throws ValidationError naming the step.
  void validate_step(std::size_t i, double sum_tolerance = kInputSumTolerance) const {
    const StepRecord& s = steps[i];
    const StepRecord& first = steps.front();
    const std::string where = "step t=" + std::to_string(s.t) + ": ";
    if (s.t != i + 1)
      throw ValidationError("steps must be numbered 1..T consecutively, found t=" +
                            std::to_string(s.t) + " at position " +
                            std::to_string(i + 1));
    if (s.p_hat.size() != support.size())
      throw ValidationError(where + "p_hat length differs from support size");
    double total = 0.0;
    for (double p : s.p_hat) {
      if (!std::isfinite(p) || p < 0.0)
        throw ValidationError(where + "p_hat has a negative or non-finite entry");
      total += p;
    }
    if (std::abs(total - 1.0) > sum_tolerance)
      throw ValidationError(where + "p_hat sums to " + std::to_string(total));
    if (s.attention.has_value() != first.attention.has_value())
      throw ValidationError(where + "attention present on some steps only");
    if (s.attention && (!std::isfinite(*s.attention) || *s.attention < 0.0))
      throw ValidationError(where + "attention must be non-negative");
    if (s.hidden.has_value() != first.hidden.has_value())
      throw ValidationError(where + "hidden present on some steps only");
    if (s.hidden) {
      if (s.hidden->size() != first.hidden->size())
        throw ValidationError(where + "hidden dimension " +
                              std::to_string(s.hidden->size()) + " differs from " +
                              std::to_string(first.hidden->size()));
      for (double h : *s.hidden)
        if (!std::isfinite(h)) throw ValidationError(where + "hidden not finite");
    }
  }

  void validate(double sum_tolerance = kInputSumTolerance) const {
    if (steps.empty()) throw ValidationError("trajectory needs at least one step");
    for (std::size_t i = 0; i < steps.size(); ++i) validate_step(i, sum_tolerance);
  }

  void renormalize() {
    for (auto& s : steps) {
      double total = 0.0;
      for (double p : s.p_hat) total += p;
      for (double& p : s.p_hat) p /= total;
    }
  }
};

namespace detail {

inline void append_double(std::string& out, double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  out += buf;
}

inline void append_array(std::string& out, const std::vector<double>& xs) {
  out += '[';
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    append_double(out, xs[i]);
  }
  out += ']';
}

}  // namespace detail

inline std::string format_trajectory(const BeliefTrajectory& traj) {
  traj.validate();
  std::string out;
  Json header = Json::object();
  header["support"] = to_json(traj.support);
  header["source_tag"] = traj.source_tag;
  out += header.dump();
  out += '\n';
  for (const auto& s : traj.steps) {
    out += "{\"t\":";
    out += std::to_string(s.t);
    out += ",\"p_hat\":";
    detail::append_array(out, s.p_hat);
    if (s.attention) {
      out += ",\"attention\":";
      detail::append_double(out, *s.attention);
    }
    if (s.hidden) {
      out += ",\"hidden\":";
      detail::append_array(out, *s.hidden);
    }
    out += "}\n";
  }
  return out;
}

inline BeliefTrajectory parse_trajectory(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::optional<BeliefTrajectory> traj;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError(std::string("malformed JSON: ") + e.what(), line_no);
    }
    try {
      if (!traj) {
        const Json& tag = detail::field(j, "source_tag");
        if (!tag.is_string()) throw ValidationError("source_tag must be a string");
        traj = BeliefTrajectory{support_from_json(detail::field(j, "support")), {},
                                tag.get<std::string>()};
        continue;
      }
      StepRecord s;
      s.t = detail::count(detail::field(j, "t"), "t");
      s.p_hat = detail::numbers(detail::field(j, "p_hat"), "p_hat");
      if (const auto it = j.find("attention"); it != j.end())
        s.attention = detail::number(*it, "attention");
      if (const auto it = j.find("hidden"); it != j.end())
        s.hidden = detail::numbers(*it, "hidden");
      traj->steps.push_back(std::move(s));
      traj->validate_step(traj->steps.size() - 1);
    } catch (const ValidationError& e) {
      if (e.line()) throw;
      throw ValidationError(e.what(), line_no);
    }
  }
  if (!traj) throw ValidationError("trajectory file has no header line");
  if (traj->steps.empty()) throw ValidationError("trajectory needs at least one step");
  traj->renormalize();
  return *std::move(traj);
}

inline BeliefTrajectory read_trajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open trajectory file " + path);
  return parse_trajectory(in);
}

inline void write_trajectory(const BeliefTrajectory& traj, const std::string& path) {
  const std::string text = format_trajectory(traj);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace driftgauge
