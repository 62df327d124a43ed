#include "ehfl/scheduler.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace ehfl {

std::string_view to_string(PolicyKind kind) noexcept {
  switch (kind) {
    case PolicyKind::Vaoi: return "vaoi";
    case PolicyKind::FedAvgGreedy: return "fedavg";
    case PolicyKind::FedBacys: return "fedbacys";
    case PolicyKind::FedBacysOdd: return "fedbacys_odd";
  }
  return "?";
}

std::optional<PolicyKind> parse_policy(std::string_view name) noexcept {
  if (name == "vaoi") return PolicyKind::Vaoi;
  if (name == "fedavg" || name == "fedavg_greedy") return PolicyKind::FedAvgGreedy;
  if (name == "fedbacys") return PolicyKind::FedBacys;
  if (name == "fedbacys_odd") return PolicyKind::FedBacysOdd;
  return std::nullopt;
}

namespace {

// Strict weak order: larger age first, then stalest participation, then id.
struct Precedence {
  std::span<const std::int64_t> ages;
  std::span<const std::optional<EpochIndex>> last;

  bool operator()(std::size_t a, std::size_t b) const {
    if (ages[a] != ages[b]) return ages[a] > ages[b];
    const EpochIndex la = last[a].value_or(-1);
    const EpochIndex lb = last[b].value_or(-1);
    if (la != lb) return la < lb;
    return a < b;
  }
};

std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::min(static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)), n - 1);
}

}  // namespace

SelectionDecision vaoi_select(std::span<const std::int64_t> ages,
                              std::span<const std::optional<EpochIndex>> last_participation, std::size_t k,
                              Rng& rng, SelectionVariant variant) {
  if (k == 0) throw std::invalid_argument("vaoi_select: k must be >= 1");
  if (ages.size() != last_participation.size()) throw std::invalid_argument("vaoi_select: length mismatch");
  const std::size_t n = ages.size();
  const std::size_t take = std::min(k, n);

  SelectionDecision d;
  d.q.assign(n, false);
  const std::int64_t total = std::accumulate(ages.begin(), ages.end(), std::int64_t{0});

  std::vector<std::size_t> ids(n);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  if (total == 0) {
    // partial Fisher-Yates
    for (std::size_t i = 0; i < take; ++i) std::swap(ids[i], ids[i + uniform_index(rng, n - i)]);
  } else if (variant == SelectionVariant::Proportional) {
    // Sequential draws without replacement, probability proportional to age.
    std::vector<std::size_t> pool = ids;
    std::vector<std::size_t> chosen;
    std::int64_t mass = total;
    while (chosen.size() < take && mass > 0) {
      double u = uniform01(rng) * static_cast<double>(mass);
      std::size_t pick = pool.size();
      for (std::size_t j = 0; j < pool.size(); ++j) {
        const auto a = static_cast<double>(ages[pool[j]]);
        if (a <= 0.0) continue;
        pick = j;
        if (u < a) break;
        u -= a;
      }
      chosen.push_back(pool[pick]);
      mass -= ages[pool[pick]];
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
    }
    std::sort(pool.begin(), pool.end(), Precedence{ages, last_participation});
    for (std::size_t j = 0; chosen.size() < take; ++j) chosen.push_back(pool[j]);
    ids = std::move(chosen);
  } else {
    std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(take), ids.end(),
                      Precedence{ages, last_participation});
  }
  for (std::size_t i = 0; i < take; ++i) {
    d.q[ids[i]] = true;
    d.selected.push_back(static_cast<int>(ids[i]));
  }
  std::sort(d.selected.begin(), d.selected.end());
  return d;
}

bool fedavg_greedy_eligibility(const ClientState& client, SlotIndex slot, std::int64_t kappa) {
  return client.idle(slot) && !client.pending_message && client.battery.level() >= kappa;
}

bool fedbacys_eligibility(const ClientState& client, SlotIndex slot, const SlotGeometry& geometry,
                          std::size_t groups) {
  if (groups == 0) throw std::invalid_argument("fedbacys: groups must be >= 1");
  if (geometry.fedbacys_start_offset() < 0) throw std::invalid_argument("fedbacys: S - kappa - 1 < 0");
  const auto g = static_cast<std::int64_t>(groups);
  const std::int64_t epoch = slot / geometry.slots_per_epoch;
  const std::int64_t offset = slot % geometry.slots_per_epoch;
  if (epoch % g != client.id % g) return false;
  if (offset != geometry.fedbacys_start_offset()) return false;
  return fedavg_greedy_eligibility(client, slot, geometry.kappa);
}

bool fedbacys_odd_eligibility(ClientState& client, SlotIndex slot, const SlotGeometry& geometry,
                              std::size_t groups) {
  if (!fedbacys_eligibility(client, slot, geometry, groups)) return false;
  ++client.opportunity_counter;
  return client.opportunity_counter % 2 == 1;
}

Scheduler::Scheduler(PolicyConfig config, SlotGeometry geometry, std::size_t clients, Rng selection_rng)
    : config_(config), geometry_(geometry), rng_(std::move(selection_rng)), eligible_(clients, false) {
  if (config_.k == 0 || config_.k > clients) throw std::invalid_argument("scheduler: k must lie in [1, N]");
  if (config_.groups == 0) throw std::invalid_argument("scheduler: groups must be >= 1");
}

SelectionDecision Scheduler::select(std::span<const ClientState> clients) {
  if (config_.kind != PolicyKind::Vaoi) return SelectionDecision{{}, std::vector<bool>(clients.size(), false)};
  std::vector<std::int64_t> ages;
  std::vector<std::optional<EpochIndex>> last;
  for (const auto& c : clients) {
    ages.push_back(c.vaoi.age);
    last.push_back(c.last_participation);
  }
  auto d = vaoi_select(ages, last, config_.k, rng_, config_.variant);
  eligible_ = d.q;
  return d;
}

bool Scheduler::may_start(ClientState& client, SlotIndex slot) {
  switch (config_.kind) {
    case PolicyKind::Vaoi:
      return eligible_[static_cast<std::size_t>(client.id)] &&
             fedavg_greedy_eligibility(client, slot, geometry_.kappa);
    case PolicyKind::FedAvgGreedy: return fedavg_greedy_eligibility(client, slot, geometry_.kappa);
    case PolicyKind::FedBacys: return fedbacys_eligibility(client, slot, geometry_, config_.groups);
    case PolicyKind::FedBacysOdd: return fedbacys_odd_eligibility(client, slot, geometry_, config_.groups);
  }
  return false;
}

void Scheduler::on_started(const ClientState& client) { eligible_[static_cast<std::size_t>(client.id)] = false; }

}  // namespace ehfl
