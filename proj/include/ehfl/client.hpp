#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ehfl/datagen.hpp"
#include "ehfl/energy.hpp"
#include "ehfl/learner.hpp"
#include "ehfl/semantics.hpp"

namespace ehfl {

using SlotIndex = std::int64_t;
using EpochIndex = std::int64_t;

/// One simulated device.
struct ClientState {
  int id = 0;
  Battery battery;
  ModelParams local_model;  // w_i
  std::optional<ModelMessage> pending_message;
  std::optional<SlotIndex> busy_until;  // exclusive
  std::size_t train_batch_cursor = 0;   // b in [0, kappa)
  VAoIState vaoi;
  std::optional<FeatureVector> historical_moment;  // h_i
  std::optional<EpochIndex> last_train_epoch;      // tau_i = t - last_train_epoch
  std::optional<EpochIndex> last_participation;    // last epoch with q_i = 1
  std::int64_t opportunity_counter = 0;

  // in-flight training
  EpochIndex training_epoch = 0;
  std::vector<FeatureVector> batch_features;
  std::size_t samples_seen = 0;

  bool busy(SlotIndex slot) const noexcept { return busy_until && slot < *busy_until; }
  bool idle(SlotIndex slot) const noexcept { return !busy(slot); }
};

/// Closes a kappa-batch training run: h_i = (sum of batch feature sums) / samples_seen,
/// the final weights become the pending message, and the training epoch is recorded.
/// Throws std::logic_error if fewer than kappa feature sums were collected.
void finalize_training(ClientState& client, std::span<const FeatureVector> per_batch_features,
                       std::size_t samples_seen, std::size_t kappa, std::size_t dataset_size);

}  // namespace ehfl
