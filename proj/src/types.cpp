#include "servesim/types.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "servesim/errors.h"

namespace servesim {
namespace {

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

std::string id_str(RequestId id) { return "request " + std::to_string(id); }

}  // namespace

Request::Request(RequestId id, Seconds arrival_time, Tokens input_len,
                 Tokens true_output_len, Seconds slo,
                 std::optional<Tokens> predicted_output_len)
    : id_(id),
      arrival_time_(arrival_time),
      input_len_(input_len),
      true_output_len_(true_output_len),
      slo_(slo),
      predicted_output_len_(predicted_output_len) {
  if (!std::isfinite(arrival_time) || arrival_time < 0.0) {
    throw ValidationError(id_str(id) + ": arrival_time must be finite and >= 0");
  }
  if (input_len < 1) {
    throw ValidationError(id_str(id) + ": input_len must be >= 1");
  }
  if (true_output_len < 1) {
    throw ValidationError(id_str(id) + ": true_output_len must be >= 1");
  }
  if (!finite_positive(slo)) {
    throw ValidationError(id_str(id) + ": slo must be finite and > 0");
  }
  if (predicted_output_len && *predicted_output_len < 1) {
    throw ValidationError(id_str(id) + ": predicted_output_len must be >= 1");
  }
}

Tokens Request::predicted() const {
  if (!predicted_output_len_) {
    throw ContractError(id_str(id_) + " has no predicted output length");
  }
  return *predicted_output_len_;
}

Request Request::with_prediction(Tokens predicted_output_len) const {
  return Request(id_, arrival_time_, input_len_, true_output_len_, slo_,
                 predicted_output_len);
}

ModelSpec::ModelSpec(std::string name, Bytes total_memory, Tokens num_layers,
                     Tokens hidden_dim, Bytes kv_bytes_per_elem)
    : name_(std::move(name)),
      total_memory_(total_memory),
      num_layers_(num_layers),
      hidden_dim_(hidden_dim),
      kv_bytes_per_elem_(kv_bytes_per_elem) {
  if (total_memory == 0) {
    throw ValidationError("model " + name_ + ": total_memory must be > 0");
  }
  if (num_layers < 1) {
    throw ValidationError("model " + name_ + ": num_layers must be >= 1");
  }
  if (hidden_dim < 1) {
    throw ValidationError("model " + name_ + ": hidden_dim must be >= 1");
  }
  if (kv_bytes_per_elem == 0) {
    throw ValidationError("model " + name_ +
                          ": kv_bytes_per_elem must be >= 1");
  }
}

Topology::Topology(std::vector<DeviceNode> nodes,
                   std::vector<std::vector<Seconds>> link_latency)
    : nodes_(std::move(nodes)), link_latency_(std::move(link_latency)) {
  const std::size_t n = nodes_.size();
  if (link_latency_.size() != n) {
    throw ValidationError("topology: latency matrix has " +
                          std::to_string(link_latency_.size()) +
                          " rows for " + std::to_string(n) + " nodes");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto& node = nodes_[i];
    if (!finite_positive(node.performance)) {
      throw ValidationError("topology: device " + std::to_string(node.id) +
                            " performance must be finite and > 0");
    }
    if (!std::isfinite(node.power_cap) || node.power_cap < 0.0) {
      throw ValidationError("topology: device " + std::to_string(node.id) +
                            " power cap must be finite and >= 0");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (nodes_[j].id == node.id) {
        throw ValidationError("topology: duplicate device id " +
                              std::to_string(node.id));
      }
    }
    if (link_latency_[i].size() != n) {
      throw ValidationError("topology: latency matrix row " +
                            std::to_string(i) + " is not of length " +
                            std::to_string(n));
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (link_latency_[i][i] != 0.0) {
      throw ValidationError("topology: latency diagonal must be 0 at " +
                            std::to_string(i));
    }
    for (std::size_t j = 0; j < n; ++j) {
      const double v = link_latency_[i][j];
      if (!std::isfinite(v) || v < 0.0) {
        throw ValidationError("topology: latency must be finite and >= 0");
      }
      if (v != link_latency_[j][i]) {
        throw ValidationError("topology: latency matrix is not symmetric at (" +
                              std::to_string(i) + ", " + std::to_string(j) +
                              ")");
      }
    }
  }
}

std::size_t Topology::index_of(DeviceId id) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].id == id) return i;
  }
  throw ValidationError("topology has no device " + std::to_string(id));
}

DeviceMap::DeviceMap(std::vector<DeviceMapEntry> entries, Tokens num_layers)
    : entries_(std::move(entries)), num_layers_(num_layers) {
  if (num_layers < 1) {
    throw ValidationError("device map: num_layers must be >= 1");
  }
  if (entries_.empty()) {
    throw ValidationError("device map is empty");
  }
  Tokens next = 0;
  Tokens covered = 0;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (e.layer_start != next || e.layer_end < e.layer_start) {
      throw ValidationError("device map entry " + std::to_string(i) +
                            " is not contiguous (expected start " +
                            std::to_string(next) + ")");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (entries_[j].device == e.device) {
        throw ValidationError("device map lists device " +
                              std::to_string(e.device) + " twice");
      }
    }
    covered += e.size();
    next = e.layer_end + 1;
  }
  if (covered != num_layers) {
    throw ValidationError("device map covers " + std::to_string(covered) +
                          " layers, model has " + std::to_string(num_layers));
  }
}

Tokens DeviceMap::layers_on(DeviceId device) const {
  for (const auto& e : entries_) {
    if (e.device == device) return e.size();
  }
  return 0;
}

void DeviceMap::validate_against(const ModelSpec& model, const Topology& topo,
                                 Bytes kv_reserve) const {
  if (num_layers_ != model.num_layers()) {
    throw ContractError("device map has " + std::to_string(num_layers_) +
                        " layers, model " + model.name() + " has " +
                        std::to_string(model.num_layers()));
  }
  const double m = model.memory_per_layer();
  for (const auto& e : entries_) {
    const auto& node = topo.node(topo.index_of(e.device));
    const double need = static_cast<double>(e.size()) * m;
    const double have = node.memory > kv_reserve
                            ? static_cast<double>(node.memory - kv_reserve)
                            : 0.0;
    if (need > have) {
      throw ValidationError("device " + std::to_string(e.device) +
                            " cannot hold " + std::to_string(e.size()) +
                            " layers within its memory headroom");
    }
  }
}

BatchPlan::BatchPlan(std::vector<RequestId> request_ids,
                     Tokens padded_input_len, Tokens max_output_len)
    : request_ids_(std::move(request_ids)),
      padded_input_len_(padded_input_len),
      max_output_len_(max_output_len) {
  if (request_ids_.empty()) throw ValidationError("batch plan is empty");
  if (padded_input_len < 1 || max_output_len < 1) {
    throw ValidationError("batch plan lengths must be >= 1");
  }
}

BatchPlan BatchPlan::from_members(std::span<const Request> members) {
  if (members.empty()) throw ValidationError("batch plan is empty");
  std::vector<RequestId> ids;
  ids.reserve(members.size());
  Tokens padded = 0;
  Tokens max_out = 0;
  for (const auto& r : members) {
    ids.push_back(r.id());
    padded = std::max(padded, r.input_len());
    max_out = std::max(max_out, r.predicted());
  }
  return BatchPlan(std::move(ids), padded, max_out);
}

void SchedulerConfig::validate() const {
  auto nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };
  if (!nonneg(w1) || !nonneg(w2)) {
    throw ConfigError("scheduler weights w1, w2 must be finite and >= 0");
  }
  if (!(w1 + w2 > 0.0)) throw ConfigError("scheduler needs w1 + w2 > 0");
  if (!nonneg(l1_overhead) || !nonneg(l2_overhead)) {
    throw ConfigError("scheduler overheads L1, L2 must be finite and >= 0");
  }
  if (!finite_positive(threshold)) {
    throw ConfigError("scheduler threshold must be finite and > 0");
  }
  if (max_batch_size < 1) {
    throw ConfigError("scheduler max_batch_size must be >= 1");
  }
}

void DeployerConfig::validate() const {
  auto nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };
  if (!nonneg(a1) || !nonneg(a2)) {
    throw ConfigError("deployer weights a1, a2 must be finite and >= 0");
  }
  if (!(a1 + a2 > 0.0)) throw ConfigError("deployer needs a1 + a2 > 0");
  if (!finite_positive(p)) {
    throw ConfigError("deployer p must be finite and > 0");
  }
}

}  // namespace servesim
