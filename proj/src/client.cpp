#include "ehfl/client.hpp"

#include <stdexcept>
#include <string>

namespace ehfl {

void finalize_training(ClientState& client, std::span<const FeatureVector> per_batch_features,
                       std::size_t samples_seen, std::size_t kappa, std::size_t dataset_size) {
  if (per_batch_features.size() != kappa)
    throw std::logic_error("finalize_training: expected " + std::to_string(kappa) + " batch feature sums, got " +
                           std::to_string(per_batch_features.size()));
  FeatureVector sum{std::vector<double>(per_batch_features.front().size(), 0.0)};
  for (const auto& f : per_batch_features) {
    if (f.size() != sum.size()) throw ShapeError("finalize_training: feature length mismatch");
    for (std::size_t j = 0; j < f.size(); ++j) sum.values[j] += f.values[j];
  }
  client.historical_moment = mean_features(sum, static_cast<double>(samples_seen));
  client.pending_message = ModelMessage{client.local_model, dataset_size, client.id};
  client.last_train_epoch = client.training_epoch;
}

}  // namespace ehfl
