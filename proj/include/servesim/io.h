#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "servesim/deployer.h"
#include "servesim/types.h"

namespace servesim {

// File formats. Traces, batch plans and metric records are JSON Lines (one
// object per line, blank lines ignored); topologies, models and device maps
// are single JSON documents. Every parser throws ParseError (with a 1-based
// line number where the format is line-oriented) for malformed input and
// ValidationError for well-formed records that violate a domain invariant.

// Trace line: {"id", "arrival_time", "input_len", "true_output_len", "slo"}
// with an optional "predicted_output_len".
std::vector<Request> parse_trace(const std::string& text);
std::string emit_trace(std::span<const Request> trace);

// {"devices": [{"id", "memory_bytes", "performance", "power_watts"}...],
//  "latency": [[...]]}
// or, instead of "latency", a class matrix over {X, PIX, NODE}:
//  "link_classes": [["X", "PIX", ...]...], "class_latency": {"PIX": s, ...}
// X must appear exactly on the diagonal. Emission always writes "latency".
Topology parse_topology(const std::string& text);
std::string emit_topology(const Topology& topo);

// {"name", "total_memory", "num_layers", "hidden_dim", "kv_bytes_per_elem"}
ModelSpec parse_model(const std::string& text);
std::string emit_model(const ModelSpec& model);

// {"num_layers", "entries": [{"device", "layer_start", "layer_end"}...],
//  "objective", "chain_latency"}
Placement parse_placement(const std::string& text);
std::string emit_placement(const Placement& placement);

// Line: {"batch", "request_ids", "padded_input_len", "max_output_len"}
std::vector<BatchPlan> parse_plans(const std::string& text);
std::string emit_plans(std::span<const BatchPlan> plans);

// Flat summary of one simulation run.
struct MetricsRecord {
  std::string label;
  std::string scheduler;
  std::string planner;
  std::string predictor;
  std::uint64_t seed = 0;
  std::uint64_t num_requests = 0;
  std::uint64_t num_batches = 0;
  std::uint64_t devices_used = 0;
  std::int64_t generated_tokens = 0;
  std::int64_t padding_tokens = 0;
  double makespan = 0.0;
  double mean_latency = 0.0;
  double p95_latency = 0.0;
  double throughput = 0.0;
  double slo_violation_rate = 0.0;
  double mean_utilization = 0.0;  // over devices in the map
  std::vector<double> utilization;  // per topology device

  friend bool operator==(const MetricsRecord&,
                         const MetricsRecord&) = default;
};

MetricsRecord make_record(std::string label, const std::string& scheduler,
                          const std::string& planner,
                          const std::string& predictor, std::uint64_t seed,
                          const SimMetrics& metrics, const DeviceMap& map);

std::vector<MetricsRecord> parse_metrics(const std::string& text);
std::string emit_metrics(std::span<const MetricsRecord> records);

// CSV with a fixed header; per-device utilization is ';'-joined.
std::string report_csv(std::span<const MetricsRecord> records);
// Aligned plain-text table for terminals.
std::string report_table(std::span<const MetricsRecord> records);

// Whole-file helpers; throw IoError.
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace servesim
