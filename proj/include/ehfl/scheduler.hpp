#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ehfl/client.hpp"
#include "ehfl/rng.hpp"

namespace ehfl {

enum class PolicyKind { Vaoi, FedAvgGreedy, FedBacys, FedBacysOdd };

std::string_view to_string(PolicyKind kind) noexcept;
std::optional<PolicyKind> parse_policy(std::string_view name) noexcept;

/// How ages become a participant set.
enum class SelectionVariant { TopK, Proportional };

struct PolicyConfig {
  PolicyKind kind = PolicyKind::Vaoi;
  std::size_t k = 1;
  std::size_t groups = 1;  // G, FedBacys family
  double mu = 0.5;
  SelectionVariant variant = SelectionVariant::TopK;
};

struct SelectionDecision {
  std::vector<int> selected;  // ascending client ids
  std::vector<bool> q;        // q[i] == 1 iff i is selected

  bool contains(int id) const { return q.at(static_cast<std::size_t>(id)); }
};

/// Selects the k largest ages. Ties go to the client whose
/// last participation is oldest (never = oldest), then to the lower id.
/// All-zero ages select a uniform random k-subset from `rng`.
SelectionDecision vaoi_select(std::span<const std::int64_t> ages,
                              std::span<const std::optional<EpochIndex>> last_participation, std::size_t k,
                              Rng& rng, SelectionVariant variant = SelectionVariant::TopK);

struct SlotGeometry {
  std::int64_t slots_per_epoch = 30;  // S
  std::int64_t kappa = 20;

  /// The single start offset FedBacys allows: training ends on the penultimate
  /// slot and the last slot is left for the upload.
  std::int64_t fedbacys_start_offset() const noexcept { return slots_per_epoch - kappa - 1; }
};

bool fedavg_greedy_eligibility(const ClientState& client, SlotIndex slot, std::int64_t kappa);

bool fedbacys_eligibility(const ClientState& client, SlotIndex slot, const SlotGeometry& geometry,
                          std::size_t groups);

/// Counts the FedBacys opportunity and accepts only odd-numbered ones.
bool fedbacys_odd_eligibility(ClientState& client, SlotIndex slot, const SlotGeometry& geometry,
                              std::size_t groups);

/// Per-run policy state shared by the timeline.
class Scheduler {
 public:
  Scheduler(PolicyConfig config, SlotGeometry geometry, std::size_t clients, Rng selection_rng);

  const PolicyConfig& config() const noexcept { return config_; }

  /// Selection at the broadcast slot. Non-selecting policies return an empty set.
  SelectionDecision select(std::span<const ClientState> clients);

  /// Phase-5 start test for one idle client that has not acted this slot.
  /// Battery and pending checks are part of every policy.
  bool may_start(ClientState& client, SlotIndex slot);

  void on_started(const ClientState& client);

 private:
  PolicyConfig config_;
  SlotGeometry geometry_;
  Rng rng_;
  std::vector<bool> eligible_;  // vaoi: selected this epoch and not yet started
};

}  // namespace ehfl
