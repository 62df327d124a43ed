#include "ehfl/timeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ehfl {

namespace {

Dataset load_or_generate_pool(const Config& c, std::uint64_t seed) {
  if (!c.dataset.empty()) return load_dataset(c.dataset);
  // Twice the partition demand per class, so skewed draws rarely hit the fallback.
  const std::size_t demand = c.clients * c.samples_per_client;
  const auto classes = static_cast<std::size_t>(c.classes);
  PoolSpec spec{c.classes, c.input_dim, (2 * demand + classes - 1) / classes, c.class_spread};
  return generate_pool(spec, seed, mix64(seed ^ static_cast<std::uint64_t>(Stream::Pool)));
}

Dataset load_or_generate_test(const Config& c, std::uint64_t seed) {
  if (!c.test_dataset.empty()) return load_dataset(c.test_dataset);
  PoolSpec spec{c.classes, c.input_dim, c.test_per_class, c.class_spread};
  return generate_pool(spec, seed, mix64(seed ^ static_cast<std::uint64_t>(Stream::TestSet)));
}

}  // namespace

namespace {

const Config& validated(const Config& c) {
  c.validate();
  return c;
}

}  // namespace

Simulation::Simulation(const Config& config)
    : config_(validated(config)),
      feature_layer_(config.resolved_feature_layer()),
      scheduler_(config.policy_config(), config.geometry(), config.clients,
                 make_stream(*config.seed, Stream::Selection)),
      ledger_(config.kappa) {
  const std::uint64_t seed = *config_.seed;
  clock_ = SlotClock{0, config_.slots_per_epoch, config_.epochs};

  Dataset pool = load_or_generate_pool(config_, seed);
  test_ = load_or_generate_test(config_, seed);
  if (pool.inputs.cols != config_.input_dim || test_.inputs.cols != config_.input_dim)
    throw ConfigError("input_dim", "does not match the dataset file");
  if (pool.classes != config_.classes || test_.classes != config_.classes)
    throw ConfigError("classes", "does not match the dataset file");

  Rng part_rng = make_stream(seed, Stream::Partition);
  data_ = dirichlet_partition(pool, PartitionSpec{config_.alpha, config_.clients, config_.samples_per_client},
                              part_rng);

  Rng init_rng = make_stream(seed, Stream::Init);
  global_ = init_model(config_.layer_sizes(), config_.init, config_.init_scale, init_rng);

  clients_.reserve(config_.clients);
  for (std::size_t i = 0; i < config_.clients; ++i) {
    ClientState c;
    c.id = static_cast<int>(i);
    c.battery = Battery(config_.e_max, config_.e_init);
    c.local_model = ModelParams(config_.layer_sizes());  // zero until the first broadcast
    clients_.push_back(std::move(c));

    harvesters_.emplace_back(config_.p_bc, make_stream(seed, Stream::Harvest, i));
    batches_.emplace_back(data_[i].size(), make_stream(seed, Stream::Batches, i));

    // Fixed probe subset, chosen once.
    Rng probe_rng = make_stream(seed, Stream::Probe, i);
    std::vector<std::size_t> rows(data_[i].size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    std::shuffle(rows.begin(), rows.end(), probe_rng);
    rows.resize(config_.batch_size);
    probe_batches_.push_back(make_batch(data_[i], rows));
  }
  epoch_distance_.assign(config_.clients, std::nullopt);
  launched_this_epoch_.assign(config_.clients, false);
}

void Simulation::broadcast() {
  for (auto& c : clients_)
    if (c.idle(clock_.slot)) c.local_model = global_;
}

void Simulation::train_one_batch(ClientState& c) {
  const auto i = static_cast<std::size_t>(c.id);
  const auto rows = batches_[i].next(config_.batch_size);
  TrainStep step = batch_train(c.local_model, make_batch(data_[i], rows), config_.gamma, feature_layer_);
  c.local_model = std::move(step.model);
  c.batch_features.push_back(std::move(step.features));
  c.samples_seen += rows.size();
  if (++c.train_batch_cursor == static_cast<std::size_t>(config_.kappa)) {
    finalize_training(c, c.batch_features, c.samples_seen, static_cast<std::size_t>(config_.kappa), data_[i].size());
    c.batch_features.clear();
    c.samples_seen = 0;
    c.train_batch_cursor = 0;
  }
}

void Simulation::epoch_start() {
  const EpochIndex t = clock_.epoch();
  broadcast();
  std::fill(launched_this_epoch_.begin(), launched_this_epoch_.end(), false);

  for (std::size_t i = 0; i < clients_.size(); ++i) {
    const double m = probe(global_, probe_batches_[i], clients_[i].historical_moment, feature_layer_);
    epoch_distance_[i] = std::isinf(m) ? std::nullopt : std::optional<double>(m);
  }

  selection_ = scheduler_.select(clients_);
  if (config_.policy == PolicyKind::Vaoi) {
    for (std::size_t i = 0; i < clients_.size(); ++i) {
      const bool q = selection_->q[i];
      clients_[i].vaoi = update_age(clients_[i].vaoi, q, epoch_distance_[i], config_.mu);
      if (q) clients_[i].last_participation = t;
    }
  }
}

void Simulation::epoch_end() {
  const EpochIndex t = clock_.epoch();
  if (!inbox_.empty()) {
    global_ = aggregate(inbox_);
    inbox_.clear();
  }

  std::int64_t participants = 0;
  if (config_.policy == PolicyKind::Vaoi) {
    participants = static_cast<std::int64_t>(selection_->selected.size());
  } else {
    // Baselines: a launch within the epoch counts as participation.
    for (std::size_t i = 0; i < clients_.size(); ++i) {
      const bool q = launched_this_epoch_[i];
      participants += q ? 1 : 0;
      clients_[i].vaoi = update_age(clients_[i].vaoi, q, epoch_distance_[i], config_.mu);
      if (q) clients_[i].last_participation = t;
    }
  }

  double age_sum = 0.0;
  for (const auto& c : clients_) age_sum += static_cast<double>(c.vaoi.age);

  EpochMetrics m;
  m.epoch = t;
  m.macro_f1 = evaluate_f1();
  m.mean_vaoi = age_sum / static_cast<double>(clients_.size());
  m.cum_energy = ledger_.cum_energy();
  m.trainings_started = epoch_trainings_;
  m.transmissions = epoch_transmissions_;
  m.participants = participants;
  series_.push_back(m);
  epoch_trainings_ = 0;
  epoch_transmissions_ = 0;
}

SlotTrace Simulation::step_slot() {
  const SlotIndex s = clock_.slot;
  const std::size_t n = clients_.size();
  SlotTrace trace;
  trace.slot = s;
  trace.harvested.assign(n, false);
  trace.trained_batch.assign(n, false);
  trace.transmitted.assign(n, false);
  trace.started.assign(n, false);

  // 1. harvest
  for (std::size_t i = 0; i < n; ++i) {
    const auto h = harvest(clients_[i].battery, harvesters_[i]);
    trace.harvested[i] = h.harvested;
    harvested_units_ += h.stored ? 1 : 0;
  }

  // 2. training progress
  for (std::size_t i = 0; i < n; ++i) {
    auto& c = clients_[i];
    if (c.busy(s) && c.train_batch_cursor > 0) {
      train_one_batch(c);
      trace.trained_batch[i] = true;
    }
  }

  // 3. uploads
  std::vector<bool> acted(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    auto& c = clients_[i];
    if (c.idle(s) && c.pending_message && try_transmit(c.battery)) {
      inbox_.push_back(std::move(*c.pending_message));
      c.pending_message.reset();
      ledger_.record_transmission();
      ++epoch_transmissions_;
      acted[i] = true;
      trace.transmitted[i] = true;
    }
  }

  // 4. broadcast + selection
  if (clock_.offset() == 0) epoch_start();

  // 5. launches
  for (std::size_t i = 0; i < n; ++i) {
    auto& c = clients_[i];
    if (acted[i] || c.busy(s)) continue;
    if (!scheduler_.may_start(c, s)) continue;
    if (!try_start_training(c.battery, config_.kappa)) continue;
    scheduler_.on_started(c);
    ledger_.record_training_start();
    ++epoch_trainings_;
    launched_this_epoch_[i] = true;
    c.busy_until = s + config_.kappa;
    c.training_epoch = clock_.epoch();
    c.train_batch_cursor = 0;
    c.batch_features.clear();
    c.samples_seen = 0;
    train_one_batch(c);  // w^(t,1) from the snapshot w^(t,0) = local model
    trace.started[i] = true;
    trace.trained_batch[i] = true;
  }

  // 6. aggregation
  if (clock_.offset() == clock_.slots_per_epoch - 1) {
    trace.aggregated = inbox_.size();
    epoch_end();
  }

  trace.battery_after.reserve(n);
  for (const auto& c : clients_) trace.battery_after.push_back(c.battery.level());
  ++clock_.slot;
  return trace;
}

RunArtifacts Simulation::run_to_completion() {
  while (!clock_.done()) step_slot();
  return RunArtifacts{global_, series_};
}

double Simulation::evaluate_f1() const {
  const auto pred = predict(global_, test_.inputs);
  return macro_f1(pred, test_.labels, config_.classes);
}

}  // namespace ehfl
