#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ehfl/learner.hpp"
#include "ehfl/scheduler.hpp"

namespace ehfl {

/// Configuration problem. `key()` names the offending setting.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::runtime_error(key.empty() ? message : key + ": " + message), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

struct Config {
  // topology and clock
  std::size_t clients = 20;          // N
  std::int64_t epochs = 200;         // T
  std::int64_t slots_per_epoch = 30; // S
  // energy
  std::int64_t kappa = 20;
  double p_bc = 0.1;
  std::int64_t e_max = 25;
  std::int64_t e_init = 0;
  // learning
  double gamma = 0.05;
  std::vector<std::size_t> hidden{32};
  std::size_t feature_layer = 0;  // 0 = output (logits) layer
  InitKind init = InitKind::Uniform;
  double init_scale = 0.1;
  // data
  int classes = 4;
  std::size_t input_dim = 16;
  double alpha = 0.1;
  std::size_t samples_per_client = 60;
  std::size_t batch_size = 3;
  std::size_t test_per_class = 250;
  double class_spread = 0.5;
  std::string dataset;       // optional binary pool file
  std::string test_dataset;  // required with `dataset`
  // scheduling
  PolicyKind policy = PolicyKind::Vaoi;
  std::size_t k = 5;
  double mu = 0.5;
  std::size_t groups = 0;  // 0 = N / k
  SelectionVariant selection = SelectionVariant::TopK;
  // run
  std::optional<std::uint64_t> seed;
  std::string output = "out";

  std::vector<std::size_t> layer_sizes() const;
  std::size_t resolved_feature_layer() const;
  std::size_t resolved_groups() const;
  PolicyConfig policy_config() const;
  SlotGeometry geometry() const { return SlotGeometry{slots_per_epoch, kappa}; }

  /// Throws ConfigError naming the violated constraint; returns warnings.
  std::vector<std::string> validate() const;

  /// Canonical key = value rendering (round-trips through parse).
  std::string to_text() const;
};

/// Names accepted by set_key / config files, in canonical order.
const std::vector<std::string>& config_keys();

/// Assigns one key from its textual value. Unknown keys are rejected.
void set_key(Config& config, const std::string& key, const std::string& value);

/// Applies a `key = value` text (lines, '#' comments) onto `config`.
void apply_config_text(Config& config, const std::string& text, const std::string& origin = "<text>");
void apply_config_file(Config& config, const std::filesystem::path& path);

/// Built-in presets: "desk" and "paper". Neither sets a seed.
Config preset(const std::string& name);

}  // namespace ehfl
