#pragma once

#include <string>
#include <string_view>

#include "servesim/experiment.h"
#include "servesim/types.h"

namespace servesim {

// Applies a key-value config file on top of `base`. One `key = value` per
// line, '#' starts a comment. Recognized keys:
//   scheduler: w1 w2 l1_overhead l2_overhead threshold max_batch_size
//              additive_output_term
//   deployer:  a1 a2 p kv_reserve literal_final_sum
//   cost:      comm_mode (per_batch | per_iteration)
//   profiler:  predictor (oracle | bucketed | noisy | constant) bucket_width
//              error_rate constant_value monitor (on | off) monitor_gamma
//              monitor_cap
// Unknown keys and malformed values raise ParseError with the line number;
// the merged result is validated and may raise ConfigError.
ExperimentConfig parse_config(const std::string& text,
                              ExperimentConfig base = {});

// Built-in inputs so the CLI runs without any files.
//   model "chatglm2-6b": 28 layers, hidden 4096, ~12.5 GB of fp16 weights.
//   topology "rtx3090x4": four 24 GiB accelerators with power caps
//   350/300/250/150 W (performance proportional to the cap), linked by the
//   PIX/NODE classes in four_gpu_topology_json().
std::string four_gpu_topology_json(double pix_latency = 5e-6,
                                   double node_latency = 2e-5);
Topology builtin_topology(std::string_view name);
ModelSpec builtin_model(std::string_view name);

// Resolves a --model / --topology argument: a built-in name or a file path.
ModelSpec load_model_arg(const std::string& arg);
Topology load_topology_arg(const std::string& arg);

}  // namespace servesim
