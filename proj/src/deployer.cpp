#include "servesim/deployer.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "servesim/errors.h"

namespace servesim {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Candidate {
  double objective = kInf;
  Seconds latency = kInf;
  std::vector<std::size_t> chain;  // topology indices in visit order
};

[[noreturn]] void throw_infeasible(Tokens needed, Tokens capacity) {
  const Tokens shortfall = needed - capacity;
  throw InfeasibleError("no device subset can hold the model: short by " +
                            std::to_string(shortfall) + " of " +
                            std::to_string(needed) + " layers",
                        shortfall);
}

std::vector<Tokens> layer_caps(const ModelSpec& model, const Topology& topo,
                               Bytes kv_reserve) {
  std::vector<Tokens> caps(topo.size());
  for (std::size_t i = 0; i < topo.size(); ++i) {
    caps[i] = max_layers(topo.node(i), model.memory_per_layer(), kv_reserve,
                         model.num_layers());
  }
  return caps;
}

DeviceMap map_from_chain(const std::vector<std::size_t>& chain,
                         const std::vector<Tokens>& caps, const Topology& topo,
                         Tokens num_layers) {
  std::vector<DeviceMapEntry> entries;
  Tokens next = 0;
  for (std::size_t idx : chain) {
    const Tokens take = std::min(num_layers - next, caps[idx]);
    entries.push_back({topo.node(idx).id, next, next + take - 1});
    next += take;
  }
  return DeviceMap(std::move(entries), num_layers);
}

// Bitmask DP over visit orders of one subset. `members` holds topology
// indices in the subset's canonical order. Updates `best` on improvement.
void solve_subset(const std::vector<std::size_t>& members,
                  const std::vector<Tokens>& caps, const Topology& topo,
                  const ModelSpec& model, const DeployerConfig& cfg,
                  Candidate& best) {
  const std::size_t k = members.size();
  const std::uint32_t full = (1u << k) - 1;
  const Tokens total = model.num_layers();
  const double m = model.memory_per_layer();

  // Layers already placed once the devices in `mark` are visited, in any
  // order: greedy filling makes this min(total, sum of caps).
  std::vector<Tokens> placed(full + 1, 0);
  for (std::uint32_t mark = 1; mark <= full; ++mark) {
    const int low = std::countr_zero(mark);
    placed[mark] = std::min(total, placed[mark & (mark - 1)] + caps[members[low]]);
  }

  std::vector<double> dp(static_cast<std::size_t>(full + 1) * k, kInf);
  std::vector<int> parent(dp.size(), -1);
  auto at = [k](std::uint32_t mark, std::size_t i) {
    return static_cast<std::size_t>(mark) * k + i;
  };

  for (std::size_t i = 0; i < k; ++i) {
    const Tokens layers = std::min(total, caps[members[i]]);
    dp[at(1u << i, i)] = compute_cost(topo.node(members[i]), layers, m, cfg.p);
  }
  for (std::uint32_t mark = 1; mark < full; ++mark) {
    // A chain that already holds every layer cannot take another device.
    if (placed[mark] >= total) continue;
    const Tokens remaining = total - placed[mark];
    for (std::size_t i = 0; i < k; ++i) {
      const double base = dp[at(mark, i)];
      if (base == kInf) continue;
      for (std::size_t j = 0; j < k; ++j) {
        if (mark & (1u << j)) continue;
        const Tokens layers = std::min(remaining, caps[members[j]]);
        const double cand =
            base + topo.latency(members[i], members[j]) +
            compute_cost(topo.node(members[j]), layers, m, cfg.p);
        const std::size_t slot = at(mark | (1u << j), j);
        if (cand < dp[slot]) {
          dp[slot] = cand;
          parent[slot] = static_cast<int>(i);
        }
      }
    }
  }

  const double utilization =
      static_cast<double>(k) / static_cast<double>(topo.size());
  std::vector<std::size_t> chain(k);
  for (std::size_t last = 0; last < k; ++last) {
    double latency = dp[at(full, last)];
    if (latency == kInf) continue;

    // Walk parents back to recover the visit order.
    std::uint32_t mark = full;
    std::size_t cur = last;
    for (std::size_t pos = k; pos-- > 0;) {
      chain[pos] = members[cur];
      const int prev = parent[at(mark, cur)];
      mark &= ~(1u << cur);
      if (prev < 0) break;
      cur = static_cast<std::size_t>(prev);
    }

    if (cfg.literal_final_sum) {
      const Tokens layers = placed[full] - placed[full & ~(1u << last)];
      const double own =
          compute_cost(topo.node(members[last]), layers, m, cfg.p);
      for (std::size_t idx : chain) {
        latency = latency + topo.latency(members[last], idx) + own;
      }
    }
    const double objective = cfg.a1 * latency + cfg.a2 * utilization;
    const bool better =
        objective < best.objective ||
        (objective == best.objective && latency < best.latency);
    if (!better) continue;

    best.objective = objective;
    best.latency = latency;
    best.chain = chain;
  }
}

}  // namespace

Seconds compute_cost(const DeviceNode& device, Tokens layers_assigned,
                     double memory_per_layer, double p) {
  if (!(device.performance > 0.0)) {
    throw ConfigError("device " + std::to_string(device.id) +
                      " has non-positive performance");
  }
  if (layers_assigned < 0) throw ContractError("negative layer count");
  if (layers_assigned == 0) return 0.0;
  return p * static_cast<double>(layers_assigned) * memory_per_layer /
         device.performance;
}

Tokens max_layers(const DeviceNode& device, double memory_per_layer,
                  Bytes kv_reserve, Tokens total_layers) {
  if (!(memory_per_layer > 0.0)) {
    throw ContractError("memory per layer must be > 0");
  }
  if (device.memory <= kv_reserve) return 0;
  const double headroom = static_cast<double>(device.memory - kv_reserve);
  const double fit = std::floor(headroom / memory_per_layer);
  if (fit >= static_cast<double>(total_layers)) return total_layers;
  return static_cast<Tokens>(fit);
}

Placement plan_helr(const ModelSpec& model, const Topology& topo,
                    const DeployerConfig& cfg) {
  cfg.validate();
  const std::size_t n = topo.size();
  if (n == 0) throw_infeasible(model.num_layers(), 0);
  if (n > kMaxPlannerDevices) {
    throw ConfigError("planner supports at most " +
                      std::to_string(kMaxPlannerDevices) + " devices, got " +
                      std::to_string(n));
  }
  const auto caps = layer_caps(model, topo, cfg.kv_reserve);
  const Tokens capacity = std::accumulate(caps.begin(), caps.end(), Tokens{0});
  if (capacity < model.num_layers()) {
    throw_infeasible(model.num_layers(), capacity);
  }

  Candidate best;
  std::vector<std::size_t> members;
  for (std::size_t size = 1; size <= n; ++size) {
    for (std::uint32_t subset = 1; subset < (1u << n); ++subset) {
      if (static_cast<std::size_t>(std::popcount(subset)) != size) continue;
      members.clear();
      Tokens subset_cap = 0;
      bool hosts_all = true;
      for (std::size_t i = 0; i < n; ++i) {
        if (!(subset & (1u << i))) continue;
        members.push_back(i);
        subset_cap += caps[i];
        hosts_all = hosts_all && caps[i] > 0;
      }
      // Every chain member must receive at least one layer.
      if (!hosts_all || subset_cap < model.num_layers()) continue;

      std::stable_sort(members.begin(), members.end(),
                       [&topo](std::size_t a, std::size_t b) {
                         const auto& x = topo.node(a);
                         const auto& y = topo.node(b);
                         if (x.performance != y.performance) {
                           return x.performance > y.performance;
                         }
                         return x.memory > y.memory;
                       });
      solve_subset(members, caps, topo, model, cfg, best);
    }
  }
  if (best.chain.empty()) throw_infeasible(model.num_layers(), capacity);

  return Placement{map_from_chain(best.chain, caps, topo, model.num_layers()),
                   best.objective, best.latency};
}

Placement plan_he(const ModelSpec& model, const Topology& topo,
                  DeployerConfig cfg) {
  cfg.a1 = 0.0;
  if (!(cfg.a2 > 0.0)) cfg.a2 = 1.0;
  return plan_helr(model, topo, cfg);
}

Placement plan_lr(const ModelSpec& model, const Topology& topo,
                  DeployerConfig cfg) {
  cfg.a1 = 10.0;
  cfg.a2 = 1.0;
  return plan_helr(model, topo, cfg);
}

DeviceMap plan_bgs(const ModelSpec& model, const Topology& topo,
                   Bytes kv_reserve) {
  const auto caps = layer_caps(model, topo, kv_reserve);
  std::vector<std::size_t> order(topo.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&topo](std::size_t a, std::size_t b) {
                     const auto& x = topo.node(a);
                     const auto& y = topo.node(b);
                     if (x.memory != y.memory) return x.memory > y.memory;
                     return x.id < y.id;
                   });

  std::vector<std::size_t> chain;
  Tokens placed = 0;
  for (std::size_t idx : order) {
    if (placed >= model.num_layers()) break;
    if (caps[idx] == 0) continue;
    chain.push_back(idx);
    placed += std::min(caps[idx], model.num_layers() - placed);
  }
  if (placed < model.num_layers()) {
    throw_infeasible(model.num_layers(), placed);
  }
  return map_from_chain(chain, caps, topo, model.num_layers());
}

Seconds chain_latency(const DeviceMap& map, const ModelSpec& model,
                      const Topology& topo, double p) {
  const double m = model.memory_per_layer();
  Seconds total = 0.0;
  std::size_t prev = 0;
  bool first = true;
  for (const auto& e : map.entries()) {
    const std::size_t idx = topo.index_of(e.device);
    const Seconds cost = compute_cost(topo.node(idx), e.size(), m, p);
    total = first ? cost : total + topo.latency(prev, idx) + cost;
    prev = idx;
    first = false;
  }
  return total;
}

bool is_planner_name(std::string_view name) {
  return name == "helr" || name == "he" || name == "lr" || name == "bgs";
}

Placement plan_by_name(std::string_view name, const ModelSpec& model,
                       const Topology& topo, const DeployerConfig& cfg) {
  if (name == "helr") return plan_helr(model, topo, cfg);
  if (name == "he") return plan_he(model, topo, cfg);
  if (name == "lr") return plan_lr(model, topo, cfg);
  if (name == "bgs") {
    cfg.validate();
    DeviceMap map = plan_bgs(model, topo, cfg.kv_reserve);
    const Seconds latency = chain_latency(map, model, topo, cfg.p);
    const double utilization = static_cast<double>(map.device_count()) /
                               static_cast<double>(topo.size());
    return Placement{std::move(map), cfg.a1 * latency + cfg.a2 * utilization,
                     latency};
  }
  throw ConfigError("unknown planner '" + std::string(name) +
                    "' (expected helr, he, lr or bgs)");
}

}  // namespace servesim
