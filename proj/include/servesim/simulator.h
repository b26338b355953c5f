#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "servesim/types.h"

namespace servesim {

enum class CommMode {
  kPerBatch,      // chain link latency charged once per batch
  kPerIteration,  // charged once per generated token step
};

std::string_view comm_mode_name(CommMode mode);
CommMode parse_comm_mode(std::string_view name);

// Linear service-time model: a device spends tokens / performance seconds on
// its share of the work, plus chain communication.
struct CostModel {
  CommMode comm_mode = CommMode::kPerBatch;

  Seconds per_token_time(const DeviceNode& device, double tokens) const {
    return tokens / device.performance;
  }
  // Sum of consecutive link latencies along the map's chain.
  Seconds per_batch_comm(const DeviceMap& map, const Topology& topo) const;
};

enum class EventKind { kBatchStart, kBatchEnd, kRequestDone };

std::string_view event_kind_name(EventKind kind);

struct Event {
  Seconds time = 0.0;
  EventKind kind = EventKind::kBatchStart;
  // Batch index for batch events, request id for kRequestDone.
  std::uint64_t payload = 0;

  friend bool operator==(const Event&, const Event&) = default;
};

using EventLog = std::vector<Event>;

struct SimResult {
  SimMetrics metrics;
  EventLog log;
};

// Runs `plans` back to back on one deployed replica. A batch starts once the
// previous batch has finished and all of its members have arrived. It
// generates until every member's real output is done, but never less than
// the plan's predicted maximum: |batch| * max(plan max, true max) tokens.
// Throws ContractError if the plans do not partition `requests` or the map
// does not fit the model/topology.
SimResult simulate(std::span<const BatchPlan> plans,
                   std::span<const Request> requests, const DeviceMap& map,
                   const Topology& topo, const ModelSpec& model,
                   const CostModel& cost);

}  // namespace servesim
