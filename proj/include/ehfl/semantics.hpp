#pragma once

#include <cstdint>
#include <limits>
#include <optional>

#include "ehfl/learner.hpp"

namespace ehfl {

/// Version age X_i(t). The source/receiver version counters are never stored;
/// only their difference matters to the scheduler.
struct VAoIState {
  std::int64_t age = 0;
  std::optional<double> last_distance;
};

/// Euclidean distance; throws ShapeError on length mismatch.
double feature_distance(const FeatureVector& v, const FeatureVector& h);

/// Batch-mean features, (1/n) * sum.
FeatureVector mean_features(const FeatureVector& sum, double n);

inline constexpr double kNoHistory = std::numeric_limits<double>::infinity();

/// Age evolution with the feature proxy:
///   q = 1        -> 0
///   m >= mu      -> age + 1
///   otherwise    -> age
/// A missing distance (client never trained) counts as m = +inf.
VAoIState update_age(VAoIState state, bool q, std::optional<double> m, double mu);

/// Forward pass of the global model on the client's probe batch and distance of
/// the batch-mean features to the stored historical moment. Returns kNoHistory
/// when the client has no moment yet. Pure.
double probe(const ModelParams& global_model, const Minibatch& probe_batch,
             const std::optional<FeatureVector>& historical_moment, std::size_t feature_layer);

}  // namespace ehfl
