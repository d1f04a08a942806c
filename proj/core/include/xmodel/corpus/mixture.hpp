#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace xmodel::corpus {

// Piecewise-linear weight as a function of x = step / total_steps. Knots
// are sorted by x; outside the knot range the end values are held.
struct Trajectory {
  std::vector<std::pair<double, double>> knots;
  double at(double x) const;
};

struct SourceWeight {
  std::string source;
  Trajectory weight;
};

// Two phases: `stable` up to the decay boundary, `decay` from the boundary
// step on (inclusive). An empty decay list means a single phase.
struct MixtureSchedule {
  std::string name;
  double decay_start_fraction = 1.0;
  std::vector<SourceWeight> stable;
  std::vector<SourceWeight> decay;

  // Throws ConfigError on negative weights, unsorted knots, duplicate
  // sources or a phase whose weights are all zero.
  void validate() const;
  std::int64_t decay_start_step(std::int64_t total_steps) const;
  // Union of source names over both phases, first-seen order.
  std::vector<std::string> sources() const;
};

MixtureSchedule mixture_from_json(const nlohmann::json& j);
nlohmann::json mixture_to_json(const MixtureSchedule& s);
MixtureSchedule load_mixture(const std::string& path_or_preset);

// Built-in presets: "paper-stable", "paper-decay".
std::vector<std::string> preset_names();
MixtureSchedule mixture_preset(std::string_view name);
std::string_view preset_json(std::string_view name);

// Single-source schedule with weight 1 everywhere.
MixtureSchedule single_source(std::string source);

using WeightMap = std::vector<std::pair<std::string, double>>;

// Weights of the active phase at `step`, renormalized to sum to 1.
// Sources of the other phase are absent from the map.
WeightMap weights_at(const MixtureSchedule& schedule, std::int64_t step, std::int64_t total_steps);

}  // namespace xmodel::corpus
