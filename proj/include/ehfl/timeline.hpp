#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ehfl/client.hpp"
#include "ehfl/config.hpp"
#include "ehfl/datagen.hpp"
#include "ehfl/energy.hpp"
#include "ehfl/metrics.hpp"
#include "ehfl/scheduler.hpp"

namespace ehfl {

struct SlotClock {
  SlotIndex slot = 0;
  std::int64_t slots_per_epoch = 30;
  std::int64_t total_epochs = 1;

  EpochIndex epoch() const noexcept { return slot / slots_per_epoch; }
  std::int64_t offset() const noexcept { return slot % slots_per_epoch; }
  SlotIndex end() const noexcept { return slots_per_epoch * total_epochs; }
  bool done() const noexcept { return slot >= end(); }
};

/// Per-slot record of what each client did; used by trace-level checks.
struct SlotTrace {
  SlotIndex slot = 0;
  std::vector<bool> harvested;
  std::vector<bool> trained_batch;
  std::vector<bool> transmitted;
  std::vector<bool> started;
  std::vector<EnergyUnits> battery_after;
  std::size_t aggregated = 0;  // messages folded into the global model this slot
};

struct RunArtifacts {
  ModelParams final_model;
  std::vector<EpochMetrics> series;
};

/// The slot-driven EHFL loop. Per slot, in order:
///   1. every client draws a harvest;
///   2. busy clients run their next batch (finalizing after batch kappa-1);
///   3. idle clients with a pending message and battery >= 1 upload it;
///   4. at offset 0: broadcast to idle clients, then selection and age update;
///   5. idle clients that have not acted this slot and pass the policy's start
///      test launch training (batch 0 runs immediately);
///   6. at offset S-1: aggregate the inbox, close the epoch's metrics.
class Simulation {
 public:
  explicit Simulation(const Config& config);

  /// Advances one slot. Returns the slot trace.
  SlotTrace step_slot();

  /// Server broadcast: every idle client's local model becomes the global one.
  void broadcast();

  RunArtifacts run_to_completion();

  const Config& config() const noexcept { return config_; }
  const SlotClock& clock() const noexcept { return clock_; }
  const std::vector<ClientState>& clients() const noexcept { return clients_; }
  std::vector<ClientState>& mutable_clients() noexcept { return clients_; }
  const ModelParams& global_model() const noexcept { return global_; }
  void set_global_model(ModelParams m) { global_ = std::move(m); }
  const std::vector<ModelMessage>& inbox() const noexcept { return inbox_; }
  const EnergyLedger& ledger() const noexcept { return ledger_; }
  const std::vector<EpochMetrics>& series() const noexcept { return series_; }
  const std::vector<Dataset>& client_data() const noexcept { return data_; }
  const Dataset& test_set() const noexcept { return test_; }
  const Minibatch& probe_batch(std::size_t client) const { return probe_batches_.at(client); }
  const std::optional<SelectionDecision>& last_selection() const noexcept { return selection_; }
  std::int64_t total_harvested() const noexcept { return harvested_units_; }

  double evaluate_f1() const;

 private:
  void train_one_batch(ClientState& c);
  void epoch_start();
  void epoch_end();

  Config config_;
  std::size_t feature_layer_;
  SlotClock clock_;
  std::vector<ClientState> clients_;
  std::vector<Dataset> data_;
  std::vector<BatchStream> batches_;
  std::vector<Minibatch> probe_batches_;
  std::vector<HarvestProcess> harvesters_;
  Dataset test_;
  ModelParams global_;
  std::vector<ModelMessage> inbox_;
  Scheduler scheduler_;
  EnergyLedger ledger_;
  std::optional<SelectionDecision> selection_;
  std::vector<std::optional<double>> epoch_distance_;  // probe results at the epoch's broadcast
  std::vector<bool> launched_this_epoch_;
  std::vector<EpochMetrics> series_;
  std::int64_t epoch_trainings_ = 0;
  std::int64_t epoch_transmissions_ = 0;
  std::int64_t harvested_units_ = 0;
};

}  // namespace ehfl
