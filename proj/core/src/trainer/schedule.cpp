#include "xmodel/trainer/schedule.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "xmodel/error.hpp"
#include "xmodel/util/config.hpp"

namespace xmodel::trainer {

void LRSchedule::validate() const {
  if (!(floor > 0.0 && floor < peak)) throw ConfigError(fmt::format("lr schedule: need 0 < floor ({}) < peak ({})", floor, peak));
  if (warmup_steps < 0 || total_steps <= 0) throw ConfigError("lr schedule: warmup_steps >= 0 and total_steps > 0 required");
  if (!(exp_start_fraction > 0.0 && exp_start_fraction <= 1.0)) {
    throw ConfigError(fmt::format("lr schedule: exp_start_fraction {} outside (0, 1]", exp_start_fraction));
  }
  if (!(warmup_steps < exp_start() && exp_start() <= total_steps)) {
    throw ConfigError(fmt::format("lr schedule: need warmup ({}) < exp_start ({}) <= total ({})", warmup_steps, exp_start(),
                                  total_steps));
  }
  if (!(exp_half_life_fraction > 0.0)) throw ConfigError("lr schedule: exp_half_life_fraction must be positive");
}

std::int64_t LRSchedule::exp_start() const {
  return std::llround(exp_start_fraction * static_cast<double>(total_steps));
}

double LRSchedule::half_life() const { return exp_half_life_fraction * static_cast<double>(total_steps); }

namespace {

double cosine_lr(const LRSchedule& s, std::int64_t step) {
  const double span = static_cast<double>(s.total_steps - s.warmup_steps);
  const double progress = static_cast<double>(step - s.warmup_steps) / span;
  return s.floor + (s.peak - s.floor) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

}  // namespace

double lr_at(const LRSchedule& s, std::int64_t step) {
  if (step < 0 || step > s.total_steps) throw Error(fmt::format("lr_at: step {} outside [0, {}]", step, s.total_steps));
  // The warmup branch owns step == warmup so the peak is hit exactly.
  if (step <= s.warmup_steps) {
    return s.warmup_steps == 0 ? s.peak : s.peak * static_cast<double>(step) / static_cast<double>(s.warmup_steps);
  }
  const std::int64_t e = s.exp_start();
  if (step < e) return cosine_lr(s, step);
  return cosine_lr(s, e) * std::pow(0.5, static_cast<double>(step - e) / s.half_life());
}

void to_json(nlohmann::json& j, const LRSchedule& s) {
  j = {{"peak", s.peak},
       {"floor", s.floor},
       {"warmup_steps", s.warmup_steps},
       {"total_steps", s.total_steps},
       {"exp_start_fraction", s.exp_start_fraction},
       {"exp_half_life_fraction", s.exp_half_life_fraction}};
}

LRSchedule lr_schedule_from_json(const nlohmann::json& j) {
  config::StrictObject obj(j, "$.lr");
  LRSchedule s;
  obj.get("peak", s.peak);
  obj.get("floor", s.floor);
  obj.get("warmup_steps", s.warmup_steps);
  obj.get("total_steps", s.total_steps);
  obj.get("exp_start_fraction", s.exp_start_fraction);
  obj.get("exp_half_life_fraction", s.exp_half_life_fraction);
  obj.finish();
  s.validate();
  return s;
}

}  // namespace xmodel::trainer
