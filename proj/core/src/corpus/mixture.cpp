#include "xmodel/corpus/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include <fmt/format.h>

#include "xmodel/error.hpp"
#include "xmodel/util/config.hpp"

namespace xmodel::corpus {
namespace {

struct PresetEntry {
  std::string_view name;
  std::string_view json;
};

constexpr PresetEntry kPresets[] = {
#include "presets.inc"
};

void validate_phase(const std::vector<SourceWeight>& phase, std::string_view label) {
  std::set<std::string> seen;
  for (const auto& s : phase) {
    if (s.source.empty()) throw ConfigError(fmt::format("mixture {}: empty source name", label));
    if (!seen.insert(s.source).second) throw ConfigError(fmt::format("mixture {}: duplicate source \"{}\"", label, s.source));
    if (s.weight.knots.empty()) throw ConfigError(fmt::format("mixture {}: source \"{}\" has no knots", label, s.source));
    for (std::size_t i = 0; i < s.weight.knots.size(); ++i) {
      const auto [x, w] = s.weight.knots[i];
      if (!std::isfinite(x) || !std::isfinite(w) || w < 0.0) {
        throw ConfigError(fmt::format("mixture {}: source \"{}\" knot {} is invalid", label, s.source, i));
      }
      if (i > 0 && x <= s.weight.knots[i - 1].first) {
        throw ConfigError(fmt::format("mixture {}: source \"{}\" knots are not strictly increasing", label, s.source));
      }
    }
  }
}

// A phase must have positive total weight somewhere it is used; checked
// cheaply at every knot position.
void check_positive(const std::vector<SourceWeight>& phase, std::string_view label) {
  std::set<double> xs{0.0, 1.0};
  for (const auto& s : phase) {
    for (const auto& k : s.weight.knots) xs.insert(k.first);
  }
  for (double x : xs) {
    double total = 0.0;
    for (const auto& s : phase) total += s.weight.at(x);
    if (total <= 0.0) throw ConfigError(fmt::format("mixture {}: weights sum to 0 at x={}", label, x));
  }
}

std::vector<SourceWeight> phase_from_json(const nlohmann::json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(fmt::format("{}: expected an array", path));
  std::vector<SourceWeight> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = fmt::format("{}[{}]", path, i);
    config::StrictObject obj(j[i], p);
    SourceWeight s;
    obj.get("source", s.source);
    if (!obj.contains("knots")) throw ConfigError(fmt::format("{}: missing \"knots\"", p));
    nlohmann::json knots;
    obj.get("knots", knots);
    if (!knots.is_array()) throw ConfigError(fmt::format("{}.knots: expected an array", p));
    for (const auto& k : knots) {
      if (!k.is_array() || k.size() != 2 || !k[0].is_number() || !k[1].is_number()) {
        throw ConfigError(fmt::format("{}.knots: each knot must be [x, weight]", p));
      }
      s.weight.knots.emplace_back(k[0].get<double>(), k[1].get<double>());
    }
    obj.finish();
    out.push_back(std::move(s));
  }
  return out;
}

nlohmann::json phase_to_json(const std::vector<SourceWeight>& phase) {
  auto arr = nlohmann::json::array();
  for (const auto& s : phase) {
    auto knots = nlohmann::json::array();
    for (const auto& [x, w] : s.weight.knots) knots.push_back({x, w});
    arr.push_back({{"source", s.source}, {"knots", knots}});
  }
  return arr;
}

}  // namespace

double Trajectory::at(double x) const {
  if (knots.empty()) return 0.0;
  if (x <= knots.front().first) return knots.front().second;
  if (x >= knots.back().first) return knots.back().second;
  auto it = std::upper_bound(knots.begin(), knots.end(), x, [](double v, const auto& k) { return v < k.first; });
  const auto& [x1, w1] = *it;
  const auto& [x0, w0] = *(it - 1);
  const double t = (x - x0) / (x1 - x0);
  return w0 + t * (w1 - w0);
}

void MixtureSchedule::validate() const {
  if (!(decay_start_fraction >= 0.0 && decay_start_fraction <= 1.0)) {
    throw ConfigError(fmt::format("mixture: decay_start_fraction {} outside [0, 1]", decay_start_fraction));
  }
  validate_phase(stable, "stable");
  validate_phase(decay, "decay");
  const bool stable_used = decay.empty() || decay_start_fraction > 0.0;
  if (stable_used) {
    if (stable.empty()) throw ConfigError("mixture: the stable phase is used but has no sources");
    check_positive(stable, "stable");
  }
  if (!decay.empty()) check_positive(decay, "decay");
}

std::int64_t MixtureSchedule::decay_start_step(std::int64_t total_steps) const {
  if (decay.empty()) return total_steps + 1;
  return std::llround(decay_start_fraction * static_cast<double>(total_steps));
}

std::vector<std::string> MixtureSchedule::sources() const {
  std::vector<std::string> out;
  for (const auto* phase : {&stable, &decay}) {
    for (const auto& s : *phase) {
      if (std::find(out.begin(), out.end(), s.source) == out.end()) out.push_back(s.source);
    }
  }
  return out;
}

MixtureSchedule mixture_from_json(const nlohmann::json& j) {
  config::StrictObject obj(j, "$");
  MixtureSchedule s;
  obj.get("name", s.name);
  std::string note;
  obj.get("note", note);
  obj.get("decay_start_fraction", s.decay_start_fraction);
  if (obj.contains("stable")) {
    nlohmann::json tmp;
    obj.get("stable", tmp);
    s.stable = phase_from_json(tmp, "$.stable");
  }
  if (obj.contains("decay")) {
    nlohmann::json tmp;
    obj.get("decay", tmp);
    s.decay = phase_from_json(tmp, "$.decay");
  }
  obj.finish();
  s.validate();
  return s;
}

nlohmann::json mixture_to_json(const MixtureSchedule& s) {
  return {{"name", s.name},
          {"decay_start_fraction", s.decay_start_fraction},
          {"stable", phase_to_json(s.stable)},
          {"decay", phase_to_json(s.decay)}};
}

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& p : kPresets) out.emplace_back(p.name);
  return out;
}

std::string_view preset_json(std::string_view name) {
  for (const auto& p : kPresets) {
    if (p.name == name) return p.json;
  }
  throw ConfigError(fmt::format("unknown mixture preset \"{}\"", name));
}

MixtureSchedule mixture_preset(std::string_view name) { return mixture_from_json(nlohmann::json::parse(preset_json(name))); }

MixtureSchedule load_mixture(const std::string& path_or_preset) {
  for (const auto& p : kPresets) {
    if (p.name == path_or_preset) return mixture_preset(p.name);
  }
  return mixture_from_json(config::read_json_file(path_or_preset));
}

MixtureSchedule single_source(std::string source) {
  MixtureSchedule s;
  s.name = "single:" + source;
  s.stable.push_back({std::move(source), Trajectory{{{0.0, 1.0}}}});
  return s;
}

WeightMap weights_at(const MixtureSchedule& schedule, std::int64_t step, std::int64_t total_steps) {
  if (total_steps < 0 || step < 0 || step > total_steps) {
    throw Error(fmt::format("weights_at: step {} outside [0, {}]", step, total_steps));
  }
  const auto& phase = step >= schedule.decay_start_step(total_steps) ? schedule.decay : schedule.stable;
  const double x = total_steps == 0 ? 0.0 : static_cast<double>(step) / static_cast<double>(total_steps);
  WeightMap out;
  double total = 0.0;
  for (const auto& s : phase) {
    const double w = s.weight.at(x);
    out.emplace_back(s.source, w);
    total += w;
  }
  if (!(total > 0.0)) throw Error(fmt::format("weights_at: weights sum to 0 at step {}", step));
  for (auto& [name, w] : out) w /= total;
  return out;
}

}  // namespace xmodel::corpus
