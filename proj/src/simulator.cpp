#include "servesim/simulator.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <unordered_map>

#include "servesim/errors.h"

namespace servesim {

std::string_view comm_mode_name(CommMode mode) {
  return mode == CommMode::kPerBatch ? "per_batch" : "per_iteration";
}

CommMode parse_comm_mode(std::string_view name) {
  if (name == "per_batch") return CommMode::kPerBatch;
  if (name == "per_iteration") return CommMode::kPerIteration;
  throw ConfigError("unknown comm mode '" + std::string(name) +
                    "' (expected per_batch or per_iteration)");
}

std::string_view event_kind_name(EventKind kind) {
  switch (kind) {
    case EventKind::kBatchStart:
      return "batch_start";
    case EventKind::kBatchEnd:
      return "batch_end";
    case EventKind::kRequestDone:
      return "request_done";
  }
  return "unknown";
}

Seconds CostModel::per_batch_comm(const DeviceMap& map,
                                  const Topology& topo) const {
  Seconds total = 0.0;
  const auto& entries = map.entries();
  for (std::size_t i = 1; i < entries.size(); ++i) {
    total += topo.latency(topo.index_of(entries[i - 1].device),
                          topo.index_of(entries[i].device));
  }
  return total;
}

SimResult simulate(std::span<const BatchPlan> plans,
                   std::span<const Request> requests, const DeviceMap& map,
                   const Topology& topo, const ModelSpec& model,
                   const CostModel& cost) {
  if (map.num_layers() != model.num_layers()) {
    throw ContractError("device map has " + std::to_string(map.num_layers()) +
                        " layers but model " + model.name() + " has " +
                        std::to_string(model.num_layers()));
  }

  for (const auto& e : map.entries()) {
    const bool known = std::any_of(
        topo.nodes().begin(), topo.nodes().end(),
        [&e](const DeviceNode& d) { return d.id == e.device; });
    if (!known) {
      throw ContractError("device map uses device " +
                          std::to_string(e.device) +
                          " which is not in the topology");
    }
  }

  std::unordered_map<RequestId, std::size_t> index;
  index.reserve(requests.size());
  for (std::size_t i = 0; i < requests.size(); ++i) {
    if (!index.emplace(requests[i].id(), i).second) {
      throw ContractError("duplicate request id " +
                          std::to_string(requests[i].id()));
    }
  }

  // Per-device share of every batch's tokens, in chain order.
  struct Stage {
    std::size_t node;
    double share;
  };
  std::vector<Stage> stages;
  for (const auto& e : map.entries()) {
    stages.push_back({topo.index_of(e.device),
                      static_cast<double>(e.size()) /
                          static_cast<double>(model.num_layers())});
  }
  const Seconds chain_comm = cost.per_batch_comm(map, topo);

  SimResult result;
  SimMetrics& metrics = result.metrics;
  metrics.device_utilization.assign(topo.size(), 0.0);
  metrics.request_ids.reserve(requests.size());
  for (const auto& r : requests) metrics.request_ids.push_back(r.id());
  metrics.request_latency.assign(requests.size(), 0.0);
  metrics.num_batches = plans.size();

  std::vector<bool> done(requests.size(), false);
  std::vector<Seconds> busy(topo.size(), 0.0);
  Seconds origin = 0.0;
  if (!requests.empty()) {
    origin = std::min_element(requests.begin(), requests.end(),
                              [](const Request& a, const Request& b) {
                                return a.arrival_time() < b.arrival_time();
                              })
                 ->arrival_time();
  }
  Seconds clock = origin;

  for (std::size_t b = 0; b < plans.size(); ++b) {
    const BatchPlan& plan = plans[b];
    Seconds ready = clock;
    Tokens true_max = 0;
    for (RequestId id : plan.request_ids()) {
      auto it = index.find(id);
      if (it == index.end() || done[it->second]) {
        throw ContractError("plans do not partition the requests (request " +
                            std::to_string(id) + ")");
      }
      done[it->second] = true;
      const Request& r = requests[it->second];
      ready = std::max(ready, r.arrival_time());
      true_max = std::max(true_max, r.true_output_len());
      metrics.padding_tokens += plan.padded_input_len() - r.input_len();
    }

    const Tokens steps = std::max(plan.max_output_len(), true_max);
    const Tokens tokens = static_cast<Tokens>(plan.size()) * steps;
    Seconds service = 0.0;
    for (const auto& stage : stages) {
      const Seconds t = cost.per_token_time(
          topo.node(stage.node), static_cast<double>(tokens) * stage.share);
      busy[stage.node] += t;
      service += t;
    }
    service += cost.comm_mode == CommMode::kPerBatch
                   ? chain_comm
                   : chain_comm * static_cast<double>(steps);

    const Seconds end = ready + service;
    result.log.push_back({ready, EventKind::kBatchStart, b});
    result.log.push_back({end, EventKind::kBatchEnd, b});
    for (RequestId id : plan.request_ids()) {
      const std::size_t i = index.at(id);
      metrics.request_latency[i] = end - requests[i].arrival_time();
      result.log.push_back({end, EventKind::kRequestDone, id});
    }
    metrics.generated_tokens += tokens;
    clock = end;
  }
  if (std::find(done.begin(), done.end(), false) != done.end()) {
    throw ContractError("plans do not cover every request");
  }

  metrics.makespan = clock - origin;
  if (!requests.empty()) {
    const auto& lat = metrics.request_latency;
    metrics.mean_latency = std::accumulate(lat.begin(), lat.end(), 0.0) /
                           static_cast<double>(lat.size());
    std::vector<Seconds> sorted = lat;
    std::sort(sorted.begin(), sorted.end());
    const auto rank = static_cast<std::size_t>(
        std::ceil(0.95 * static_cast<double>(sorted.size())));
    metrics.p95_latency = sorted[std::max<std::size_t>(rank, 1) - 1];
    std::size_t violations = 0;
    for (std::size_t i = 0; i < requests.size(); ++i) {
      if (lat[i] > requests[i].slo()) ++violations;
    }
    metrics.slo_violation_rate = static_cast<double>(violations) /
                                 static_cast<double>(requests.size());
  }
  if (metrics.makespan > 0.0) {
    metrics.throughput =
        static_cast<double>(metrics.generated_tokens) / metrics.makespan;
    for (std::size_t d = 0; d < topo.size(); ++d) {
      metrics.device_utilization[d] =
          std::min(1.0, busy[d] / metrics.makespan);
    }
  }
  return result;
}

}  // namespace servesim
