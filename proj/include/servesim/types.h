#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace servesim {

using RequestId = std::uint64_t;
using DeviceId = std::uint32_t;
using Tokens = std::int64_t;
using Bytes = std::uint64_t;
using Seconds = double;

// One inference query. Immutable; the profiler produces a copy carrying the
// predicted output length.
class Request {
 public:
  Request(RequestId id, Seconds arrival_time, Tokens input_len,
          Tokens true_output_len, Seconds slo,
          std::optional<Tokens> predicted_output_len = std::nullopt);

  RequestId id() const { return id_; }
  Seconds arrival_time() const { return arrival_time_; }
  Tokens input_len() const { return input_len_; }
  Tokens true_output_len() const { return true_output_len_; }
  // Relative deadline, measured from arrival_time.
  Seconds slo() const { return slo_; }
  const std::optional<Tokens>& predicted_output_len() const {
    return predicted_output_len_;
  }
  bool profiled() const { return predicted_output_len_.has_value(); }

  // Predicted length; throws ContractError when the request is unprofiled.
  Tokens predicted() const;

  Request with_prediction(Tokens predicted_output_len) const;

  friend bool operator==(const Request&, const Request&) = default;

 private:
  RequestId id_;
  Seconds arrival_time_;
  Tokens input_len_;
  Tokens true_output_len_;
  Seconds slo_;
  std::optional<Tokens> predicted_output_len_;
};

class ModelSpec {
 public:
  ModelSpec(std::string name, Bytes total_memory, Tokens num_layers,
            Tokens hidden_dim, Bytes kv_bytes_per_elem = 4);

  const std::string& name() const { return name_; }
  Bytes total_memory() const { return total_memory_; }
  Tokens num_layers() const { return num_layers_; }
  Tokens hidden_dim() const { return hidden_dim_; }
  Bytes kv_bytes_per_elem() const { return kv_bytes_per_elem_; }
  double memory_per_layer() const {
    return static_cast<double>(total_memory_) /
           static_cast<double>(num_layers_);
  }

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;

 private:
  std::string name_;
  Bytes total_memory_;
  Tokens num_layers_;
  Tokens hidden_dim_;
  Bytes kv_bytes_per_elem_;
};

struct DeviceNode {
  DeviceId id = 0;
  Bytes memory = 0;
  // Tokens per second; the unit is a modeling choice shared by the
  // deployer's cost term and the simulator.
  double performance = 1.0;
  double power_cap = 0.0;  // watts, informational

  friend bool operator==(const DeviceNode&, const DeviceNode&) = default;
};

// Accelerators plus symmetric pairwise link latencies (seconds).
class Topology {
 public:
  Topology(std::vector<DeviceNode> nodes,
           std::vector<std::vector<Seconds>> link_latency);

  const std::vector<DeviceNode>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }
  const DeviceNode& node(std::size_t index) const { return nodes_.at(index); }
  Seconds latency(std::size_t a, std::size_t b) const {
    return link_latency_[a][b];
  }
  const std::vector<std::vector<Seconds>>& link_latency() const {
    return link_latency_;
  }
  // Position of the node with the given id; throws ValidationError if absent.
  std::size_t index_of(DeviceId id) const;

  friend bool operator==(const Topology&, const Topology&) = default;

 private:
  std::vector<DeviceNode> nodes_;
  std::vector<std::vector<Seconds>> link_latency_;
};

struct DeviceMapEntry {
  DeviceId device = 0;
  Tokens layer_start = 0;  // inclusive
  Tokens layer_end = 0;    // inclusive

  Tokens size() const { return layer_end - layer_start + 1; }

  friend bool operator==(const DeviceMapEntry&,
                         const DeviceMapEntry&) = default;
};

// Contiguous layer ranges in pipeline order, covering [0, num_layers).
class DeviceMap {
 public:
  DeviceMap(std::vector<DeviceMapEntry> entries, Tokens num_layers);

  const std::vector<DeviceMapEntry>& entries() const { return entries_; }
  Tokens num_layers() const { return num_layers_; }
  std::size_t device_count() const { return entries_.size(); }
  // Layers hosted by `device`, 0 when it is not part of the map.
  Tokens layers_on(DeviceId device) const;

  // Checks the map against a concrete deployment: every device exists, the
  // layer count matches, and each range fits in memory minus the KV reserve.
  void validate_against(const ModelSpec& model, const Topology& topo,
                        Bytes kv_reserve) const;

  friend bool operator==(const DeviceMap&, const DeviceMap&) = default;

 private:
  std::vector<DeviceMapEntry> entries_;
  Tokens num_layers_;
};

class BatchPlan {
 public:
  BatchPlan(std::vector<RequestId> request_ids, Tokens padded_input_len,
            Tokens max_output_len);

  // Builds the plan for `members` in the given order, using predicted output
  // lengths; throws ContractError if any member is unprofiled.
  static BatchPlan from_members(std::span<const Request> members);

  const std::vector<RequestId>& request_ids() const { return request_ids_; }
  std::size_t size() const { return request_ids_.size(); }
  Tokens padded_input_len() const { return padded_input_len_; }
  Tokens max_output_len() const { return max_output_len_; }

  friend bool operator==(const BatchPlan&, const BatchPlan&) = default;

 private:
  std::vector<RequestId> request_ids_;
  Tokens padded_input_len_;
  Tokens max_output_len_;
};

struct SchedulerConfig {
  double w1 = 0.5;
  double w2 = 0.5;
  double l1_overhead = 1.0;
  double l2_overhead = 1.0;
  double threshold = 500.0;
  std::size_t max_batch_size = 8;
  // Use (length + O_CM) for the output term instead of (length - O_CM).
  bool additive_output_term = false;

  void validate() const;
};

struct DeployerConfig {
  double a1 = 1.0;
  double a2 = 1.0;
  double p = 1.0;
  Bytes kv_reserve = 0;
  // Adds sum over subset members j of (link(last, j) + compute(last)) to
  // every completed chain.
  bool literal_final_sum = false;

  void validate() const;
};

struct SimMetrics {
  std::vector<Seconds> request_latency;  // parallel to request_ids
  std::vector<RequestId> request_ids;  // input request order
  Seconds mean_latency = 0.0;
  Seconds p95_latency = 0.0;
  double throughput = 0.0;  // generated tokens / makespan
  std::vector<double> device_utilization;  // indexed like Topology::nodes()
  double slo_violation_rate = 0.0;
  Seconds makespan = 0.0;
  Tokens generated_tokens = 0;
  Tokens padding_tokens = 0;
  std::size_t num_batches = 0;
};

}  // namespace servesim
