#include "signmix/schedule.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "signmix/config.hpp"
#include "signmix/record.hpp"

namespace signmix {

void TrainPlan::validate() const {
  if (!(steps_per_epoch > 0.0)) throw std::invalid_argument("steps_per_epoch must be positive");
  if (!(total_epochs > 0.0)) throw std::invalid_argument("total_epochs must be positive");
  if (!(lr_init > 0.0 && lr_peak > 0.0 && lr_final > 0.0)) throw std::invalid_argument("learning rates must be positive");
  if (lr_init > lr_peak) throw std::invalid_argument("lr_init must not exceed lr_peak");
  if (warmup_end_epoch < 0.0) throw std::invalid_argument("warmup_end_epoch must be non-negative");
  if (warmup_end_epoch > cosine_start_epoch) throw std::invalid_argument("warmup must end before cosine starts");
  if (cosine_start_epoch > cosine_end_epoch) throw std::invalid_argument("cosine_start_epoch after cosine_end_epoch");
  if (cosine_end_epoch > total_epochs) throw std::invalid_argument("cosine_end_epoch beyond total_epochs");
}

std::int64_t epoch_to_step(double epoch, double steps_per_epoch) {
  return static_cast<std::int64_t>(std::floor(epoch * steps_per_epoch + 0.5 + 1e-9));
}

std::int64_t TrainPlan::total_steps() const { return epoch_to_step(total_epochs, steps_per_epoch); }
std::int64_t TrainPlan::warmup_end_step() const { return epoch_to_step(warmup_end_epoch, steps_per_epoch); }
std::int64_t TrainPlan::cosine_start_step() const { return epoch_to_step(cosine_start_epoch, steps_per_epoch); }
std::int64_t TrainPlan::cosine_end_step() const { return epoch_to_step(cosine_end_epoch, steps_per_epoch); }

double lr_at(const TrainPlan& plan, std::int64_t step) {
  if (step < 0 || step >= plan.total_steps()) {
    throw std::out_of_range("step " + std::to_string(step) + " outside [0, " + std::to_string(plan.total_steps()) + ")");
  }
  const auto warm = plan.warmup_end_step();
  const auto cos_start = plan.cosine_start_step();
  const auto cos_end = plan.cosine_end_step();
  if (step <= warm) {
    if (warm == 0) return plan.lr_peak;
    return plan.lr_init + (plan.lr_peak - plan.lr_init) * static_cast<double>(step) / static_cast<double>(warm);
  }
  if (step <= cos_start) return plan.lr_peak;
  if (step <= cos_end) {
    double t = static_cast<double>(step - cos_start) / static_cast<double>(cos_end - cos_start);
    return plan.lr_final + (plan.lr_peak - plan.lr_final) * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
  }
  return plan.lr_final;
}

TrainPlan rescale_plan(const TrainPlan& base, double fraction) {
  if (!(fraction > 0.0)) throw std::invalid_argument("dataset fraction must be positive");
  TrainPlan p = base;
  p.total_epochs = base.total_epochs / fraction;
  p.warmup_end_epoch = base.warmup_end_epoch / fraction;
  p.cosine_start_epoch = base.cosine_start_epoch / fraction;
  p.cosine_end_epoch = base.cosine_end_epoch / fraction;
  p.steps_per_epoch = base.steps_per_epoch * fraction;
  p.scale_factor = base.scale_factor * fraction;
  return p;
}

TrainPlan frozen_plan(const TrainPlan& base, double peak) {
  TrainPlan p = base;
  p.lr_peak = peak;
  p.warmup_end_epoch = base.warmup_end_epoch / 5.0;
  p.cosine_start_epoch = p.warmup_end_epoch;
  p.cosine_end_epoch = p.warmup_end_epoch + (base.cosine_end_epoch - base.cosine_start_epoch) / 3.5;
  p.total_epochs = 0.3 * base.total_epochs;
  p.validate();
  return p;
}

TrainPlan load_plan(const std::filesystem::path& path) {
  auto c = Config::load(path);
  c.reject_unknown({"total_epochs", "warmup_end_epoch", "cosine_start_epoch", "cosine_end_epoch", "lr_init",
                    "lr_peak", "lr_final", "steps_per_epoch", "scale_factor"});
  TrainPlan p;
  p.total_epochs = c.get_double("total_epochs", p.total_epochs);
  p.warmup_end_epoch = c.get_double("warmup_end_epoch", p.warmup_end_epoch);
  p.cosine_start_epoch = c.get_double("cosine_start_epoch", p.cosine_start_epoch);
  p.cosine_end_epoch = c.get_double("cosine_end_epoch", p.cosine_end_epoch);
  p.lr_init = c.get_double("lr_init", p.lr_init);
  p.lr_peak = c.get_double("lr_peak", p.lr_peak);
  p.lr_final = c.get_double("lr_final", p.lr_final);
  p.steps_per_epoch = c.get_double("steps_per_epoch", p.steps_per_epoch);
  p.scale_factor = c.get_double("scale_factor", p.scale_factor);
  p.validate();
  return p;
}

std::string plan_text(const TrainPlan& p) {
  std::string out;
  auto line = [&](const char* k, double v) { out += std::string(k) + " = " + format_double(v) + "\n"; };
  line("total_epochs", p.total_epochs);
  line("warmup_end_epoch", p.warmup_end_epoch);
  line("cosine_start_epoch", p.cosine_start_epoch);
  line("cosine_end_epoch", p.cosine_end_epoch);
  line("lr_init", p.lr_init);
  line("lr_peak", p.lr_peak);
  line("lr_final", p.lr_final);
  line("steps_per_epoch", p.steps_per_epoch);
  line("scale_factor", p.scale_factor);
  return out;
}

void write_plan(const TrainPlan& plan, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << plan_text(plan);
}

void dump_schedule_csv(const TrainPlan& plan, const std::filesystem::path& path) {
  plan.validate();
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "step,lr\n";
  for (std::int64_t s = 0; s < plan.total_steps(); ++s) out << s << ',' << format_double(lr_at(plan, s)) << '\n';
}

}  // namespace signmix
