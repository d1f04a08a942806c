#pragma once

#include <cstdint>

#include <nlohmann/json.hpp>

namespace xmodel::trainer {

// Linear warmup to `peak`, cosine from peak toward `floor` over
// [warmup, total], and from exp_start on an exponential decay with the
// given half-life starting at the cosine value there.
struct LRSchedule {
  double peak = 6e-4;
  double floor = 2e-5;
  std::int64_t warmup_steps = 2000;
  std::int64_t total_steps = 600000;
  double exp_start_fraction = 478000.0 / 600000.0;
  double exp_half_life_fraction = 0.05;

  void validate() const;
  std::int64_t exp_start() const;
  double half_life() const;
};

double lr_at(const LRSchedule& schedule, std::int64_t step);

void to_json(nlohmann::json& j, const LRSchedule& s);
LRSchedule lr_schedule_from_json(const nlohmann::json& j);

}  // namespace xmodel::trainer
