#include "ehfl/energy.hpp"

#include <algorithm>

namespace ehfl {

Battery::Battery(EnergyUnits capacity, EnergyUnits level) : capacity_(capacity), level_(level) {
  if (capacity <= 0) throw std::invalid_argument("battery capacity must be positive");
  if (level < 0 || level > capacity) throw std::invalid_argument("battery level outside [0, capacity]");
}

EnergyUnits Battery::credit(EnergyUnits units) noexcept {
  const EnergyUnits before = level_;
  level_ = std::min(level_ + units, capacity_);
  return level_ - before;
}

bool Battery::try_debit(EnergyUnits units) noexcept {
  if (level_ < units) return false;
  level_ -= units;
  return true;
}

HarvestProcess::HarvestProcess(double p_bc, Rng stream) : p_bc_(p_bc), stream_(std::move(stream)) {
  if (!(p_bc >= 0.0 && p_bc <= 1.0)) throw std::invalid_argument("p_bc must lie in [0, 1]");
}

bool HarvestProcess::draw() { return bernoulli(stream_, p_bc_); }

HarvestOutcome harvest(Battery& battery, HarvestProcess& process) {
  HarvestOutcome out;
  out.harvested = process.draw();
  if (out.harvested) out.stored = battery.credit(1) == 1;
  return out;
}

bool try_transmit(Battery& battery) noexcept { return battery.try_debit(1); }

bool try_start_training(Battery& battery, EnergyUnits kappa) {
  if (kappa < 1) throw std::invalid_argument("kappa must be >= 1");
  return battery.try_debit(kappa);
}

}  // namespace ehfl
