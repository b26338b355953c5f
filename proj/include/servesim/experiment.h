#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "servesim/deployer.h"
#include "servesim/profiler.h"
#include "servesim/simulator.h"
#include "servesim/types.h"

namespace servesim {

// Everything tunable about one end-to-end run.
struct ExperimentConfig {
  SchedulerConfig scheduler;
  DeployerConfig deployer;
  CostModel cost;
  Predictor predictor = OraclePredictor{};
  MonitorConfig monitor;
};

// Named (scheduler, planner) combinations:
//   baseline = fifo + bgs, ud = fifo + helr, ub = slo-odbs + bgs,
//   ua = slo-odbs + helr.
struct Preset {
  std::string scheduler;
  std::string planner;
};

Preset resolve_preset(std::string_view name);
std::vector<std::string> preset_names();

// Predicts output lengths for a whole trace. Requests are visited in arrival
// order and, when the monitor is enabled, each outcome feeds the monitor
// before the next prediction. The result keeps the input order.
std::vector<Request> profile_trace(std::span<const Request> trace,
                                   const Predictor& predictor,
                                   const MonitorConfig& monitor,
                                   std::uint64_t seed,
                                   MonitorState* final_state = nullptr);

struct ExperimentResult {
  std::string scheduler;
  std::string planner;
  std::vector<Request> profiled;
  std::vector<BatchPlan> plans;
  Placement placement;
  SimMetrics metrics;
  EventLog log;
};

ExperimentResult run_experiment(std::span<const Request> trace,
                                const Topology& topo, const ModelSpec& model,
                                std::string_view scheduler_name,
                                std::string_view planner_name,
                                const ExperimentConfig& cfg,
                                std::uint64_t seed);

ExperimentResult run_preset(std::span<const Request> trace,
                            const Topology& topo, const ModelSpec& model,
                            std::string_view preset,
                            const ExperimentConfig& cfg, std::uint64_t seed);

}  // namespace servesim
