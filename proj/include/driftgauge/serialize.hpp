#pragma once

// JSON forms of probe specs, observation sequences and conjugate states.
//
// JSON has no infinity; the open outer bin edges are written as the strings
// "-inf" and "inf".

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <variant>

#include <json.hpp>

#include "driftgauge/error.hpp"
#include "driftgauge/filter.hpp"
#include "driftgauge/probe.hpp"

namespace driftgauge {

using Json = nlohmann::ordered_json;

namespace detail {

inline Json edge_to_json(double e) {
  if (e == std::numeric_limits<double>::infinity()) return "inf";
  if (e == -std::numeric_limits<double>::infinity()) return "-inf";
  return e;
}

inline double edge_from_json(const Json& j) {
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw ValidationError("bin edge string must be \"inf\" or \"-inf\"");
  }
  if (!j.is_number()) throw ValidationError("bin edge must be a number");
  return j.get<double>();
}

inline const Json& field(const Json& j, const char* key) {
  if (!j.is_object()) throw ValidationError("expected a JSON object");
  const auto it = j.find(key);
  if (it == j.end())
    throw ValidationError(std::string("missing field \"") + key + "\"");
  return *it;
}

inline double number(const Json& j, const char* what) {
  if (!j.is_number())
    throw ValidationError(std::string(what) + " must be a number");
  return j.get<double>();
}

inline std::size_t count(const Json& j, const char* what) {
  if (!j.is_number_unsigned())
    throw ValidationError(std::string(what) + " must be a non-negative integer");
  return j.get<std::size_t>();
}

inline std::vector<double> numbers(const Json& j, const char* what) {
  if (!j.is_array()) throw ValidationError(std::string(what) + " must be an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& x : j) out.push_back(number(x, what));
  return out;
}

template <class Fn>
decltype(auto) rethrow_as_validation(Fn&& fn) {
  try {
    return fn();
  } catch (const ParameterError& e) {
    throw ValidationError(e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(e.what());
  }
}

}  // namespace detail

// Writes kind/labels/bin_edges into an existing object, so a ProbeSpec can
// carry them at top level.
inline void put_support(Json& j, const OutcomeSupport& s) {
  j["kind"] = to_string(s.kind());
  j["labels"] = s.labels();
  if (s.kind() == SupportKind::binned_real) {
    Json edges = Json::array();
    for (double e : s.bin_edges()) edges.push_back(detail::edge_to_json(e));
    j["bin_edges"] = std::move(edges);
  }
}

inline Json to_json(const OutcomeSupport& s) {
  Json j = Json::object();
  put_support(j, s);
  return j;
}

inline OutcomeSupport support_from_json(const Json& j) {
  return detail::rethrow_as_validation([&] {
    const Json& kind = detail::field(j, "kind");
    const Json& labels_json = detail::field(j, "labels");
    if (!labels_json.is_array())
      throw ValidationError("labels must be an array of strings");
    std::vector<std::string> labels;
    for (const auto& l : labels_json) {
      if (!l.is_string()) throw ValidationError("labels must be strings");
      labels.push_back(l.get<std::string>());
    }
    if (kind == "categorical") return OutcomeSupport::categorical(std::move(labels));
    if (kind != "binned-real")
      throw ValidationError("support kind must be categorical or binned-real");
    const Json& edges_json = detail::field(j, "bin_edges");
    if (!edges_json.is_array()) throw ValidationError("bin_edges must be an array");
    std::vector<double> edges;
    for (const auto& e : edges_json) edges.push_back(detail::edge_from_json(e));
    return OutcomeSupport::binned_real(std::move(labels), std::move(edges));
  });
}

inline Json to_json(const PhaseParams& phase) {
  if (const auto* p = std::get_if<Distribution>(&phase)) return Json(*p);
  const auto& g = std::get<GaussianPhase>(phase);
  return Json{{"mu", g.mu}, {"sigma", g.sigma}};
}

inline PhaseParams phase_from_json(const Json& j) {
  if (j.is_array()) return detail::numbers(j, "phase probability");
  return GaussianPhase{detail::number(detail::field(j, "mu"), "mu"),
                       detail::number(detail::field(j, "sigma"), "sigma")};
}

inline Json to_json(const ProbeSpec& spec) {
  Json j = Json::object();
  put_support(j, spec.support());
  j["T"] = spec.horizon();
  j["t_c"] = spec.changepoint();
  j["phase_pre"] = to_json(spec.phase_pre());
  j["phase_post"] = to_json(spec.phase_post());
  j["seed"] = spec.seed();
  return j;
}

inline ProbeSpec spec_from_json(const Json& j) {
  return detail::rethrow_as_validation([&] {
    const Json& seed = detail::field(j, "seed");
    if (!seed.is_number_unsigned())
      throw ValidationError("seed must be an unsigned 64-bit integer");
    return ProbeSpec(support_from_json(j), detail::count(detail::field(j, "T"), "T"),
                     detail::count(detail::field(j, "t_c"), "t_c"),
                     phase_from_json(detail::field(j, "phase_pre")),
                     phase_from_json(detail::field(j, "phase_post")),
                     seed.get<std::uint64_t>());
  });
}

inline Json to_json(const ObservationSequence& obs) {
  Json j = Json::object();
  j["spec"] = to_json(obs.spec);
  j["outcomes"] = obs.outcomes;
  if (obs.spec.support().kind() == SupportKind::binned_real)
    j["raw_values"] = obs.raw_values;
  return j;
}

inline ObservationSequence observations_from_json(const Json& j) {
  return detail::rethrow_as_validation([&] {
    ObservationSequence obs{spec_from_json(detail::field(j, "spec")), {}, {}};
    const Json& outcomes = detail::field(j, "outcomes");
    if (!outcomes.is_array()) throw ValidationError("outcomes must be an array");
    for (const auto& o : outcomes) obs.outcomes.push_back(detail::count(o, "outcome"));
    if (const auto it = j.find("raw_values"); it != j.end())
      obs.raw_values = detail::numbers(*it, "raw value");
    obs.validate();
    return obs;
  });
}

inline Json to_json(const ConjugateState& state) {
  if (const auto* d = std::get_if<DirichletState>(&state))
    return Json{{"kind", "dirichlet"}, {"alpha", d->alpha}};
  const auto& n = std::get<NormalState>(state);
  return Json{{"kind", "normal-known-variance"},
              {"mean", n.mean},
              {"variance", n.variance},
              {"obs_variance", n.obs_variance}};
}

inline ConjugateState state_from_json(const Json& j) {
  return detail::rethrow_as_validation([&]() -> ConjugateState {
    const Json& kind = detail::field(j, "kind");
    ConjugateState state;
    if (kind == "dirichlet") {
      state = DirichletState{detail::numbers(detail::field(j, "alpha"), "alpha")};
    } else if (kind == "normal-known-variance") {
      state = NormalState{detail::number(detail::field(j, "mean"), "mean"),
                          detail::number(detail::field(j, "variance"), "variance"),
                          detail::number(detail::field(j, "obs_variance"),
                                         "obs_variance")};
    } else {
      throw ValidationError("state kind must be dirichlet or normal-known-variance");
    }
    validate(state);
    return state;
  });
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

inline void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace driftgauge
