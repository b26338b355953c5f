#pragma once

#include <string_view>

#include "servesim/types.h"

namespace servesim {

// Largest topology the subset-enumerating planners accept.
inline constexpr std::size_t kMaxPlannerDevices = 16;

// p * layers * m / performance. Throws ConfigError if performance <= 0.
Seconds compute_cost(const DeviceNode& device, Tokens layers_assigned,
                     double memory_per_layer, double p);

// min(total_layers, floor((memory - kv_reserve) / m)), 0 without headroom.
Tokens max_layers(const DeviceNode& device, double memory_per_layer,
                  Bytes kv_reserve, Tokens total_layers);

struct Placement {
  DeviceMap map;
  // a1 * chain_latency + a2 * |S| / |D| for the chosen chain.
  double objective = 0.0;
  // Compute plus link time along the chain (plus the final-device sum when
  // DeployerConfig::literal_final_sum is set).
  Seconds chain_latency = 0.0;
};

// Enumerates every device subset that can hold the model and, within each,
// runs a bitmask DP over visit orders (dp[mark][last] = cheapest chain that
// visits exactly `mark` and ends at `last`). Layers are filled greedily along
// the chain. Ties resolve to the smaller subset, then the lower subset mask,
// then the first chain found. Throws InfeasibleError if no subset fits.
Placement plan_helr(const ModelSpec& model, const Topology& topo,
                    const DeployerConfig& cfg);

// plan_helr with a1 = 0 (fewest devices; ties resolved by latency).
Placement plan_he(const ModelSpec& model, const Topology& topo,
                  DeployerConfig cfg);

// plan_helr with a1:a2 = 10:1.
Placement plan_lr(const ModelSpec& model, const Topology& topo,
                  DeployerConfig cfg);

// Greedy baseline: devices by descending memory (ties by id), each filled to
// capacity until every layer is placed.
DeviceMap plan_bgs(const ModelSpec& model, const Topology& topo,
                   Bytes kv_reserve = 0);

// Latency of an arbitrary map under the deployer's cost terms.
Seconds chain_latency(const DeviceMap& map, const ModelSpec& model,
                      const Topology& topo, double p);

// Dispatch by name: helr | he | lr | bgs. For bgs the objective is computed
// with cfg's weights over the greedy chain.
Placement plan_by_name(std::string_view name, const ModelSpec& model,
                       const Topology& topo, const DeployerConfig& cfg);

bool is_planner_name(std::string_view name);

}  // namespace servesim
