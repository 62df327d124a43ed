#pragma once

#include <cstdint>
#include <stdexcept>

#include "ehfl/rng.hpp"

namespace ehfl {

using EnergyUnits = std::int64_t;

/// Integer battery with a hard capacity. Every debit is all-or-nothing:
/// an action that the current level cannot fully cover is denied and the
/// level is left untouched.
class Battery {
 public:
  Battery() = default;
  Battery(EnergyUnits capacity, EnergyUnits level = 0);

  EnergyUnits level() const noexcept { return level_; }
  EnergyUnits capacity() const noexcept { return capacity_; }

  /// Adds `units` and clamps at capacity. Returns the units actually stored.
  EnergyUnits credit(EnergyUnits units) noexcept;

  /// Removes `units` if the level covers them.
  bool try_debit(EnergyUnits units) noexcept;

 private:
  EnergyUnits capacity_ = 1;
  EnergyUnits level_ = 0;
};

/// Bernoulli energy arrivals: one unit per slot with probability p_bc.
class HarvestProcess {
 public:
  HarvestProcess(double p_bc, Rng stream);

  /// Draws C_i^(s) for the current slot.
  bool draw();

  double probability() const noexcept { return p_bc_; }

 private:
  double p_bc_;
  Rng stream_;
};

struct HarvestOutcome {
  bool harvested = false;  // the drawn C_i^(s)
  bool stored = false;     // false when the battery was already full
};

HarvestOutcome harvest(Battery& battery, HarvestProcess& process);

/// Unit-cost uplink.
bool try_transmit(Battery& battery) noexcept;

/// Pays the whole kappa-unit training cost at launch.
bool try_start_training(Battery& battery, EnergyUnits kappa);

}  // namespace ehfl
