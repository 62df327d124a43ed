#include "ehfl/semantics.hpp"

#include <cmath>

namespace ehfl {

double feature_distance(const FeatureVector& v, const FeatureVector& h) {
  if (v.size() != h.size()) throw ShapeError("feature_distance: length mismatch");
  double ss = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double d = v.values[i] - h.values[i];
    ss += d * d;
  }
  return std::sqrt(ss);
}

FeatureVector mean_features(const FeatureVector& sum, double n) {
  if (!(n > 0.0)) throw std::invalid_argument("mean_features: normalizer must be positive");
  FeatureVector out = sum;
  for (double& v : out.values) v /= n;
  return out;
}

VAoIState update_age(VAoIState state, bool q, std::optional<double> m, double mu) {
  state.last_distance = m;
  if (q) {
    state.age = 0;
  } else if (!m || *m >= mu) {
    ++state.age;
  }
  return state;
}

double probe(const ModelParams& global_model, const Minibatch& probe_batch,
             const std::optional<FeatureVector>& historical_moment, std::size_t feature_layer) {
  if (!historical_moment) return kNoHistory;
  const ForwardResult fr = forward(global_model, probe_batch, feature_layer);
  return feature_distance(mean_features(fr.features, static_cast<double>(probe_batch.size())), *historical_moment);
}

}  // namespace ehfl
