#include "servesim/experiment.h"

#include <algorithm>
#include <numeric>

#include "servesim/batcher.h"
#include "servesim/errors.h"

namespace servesim {

Preset resolve_preset(std::string_view name) {
  if (name == "baseline") return {"fifo", "bgs"};
  if (name == "ud") return {"fifo", "helr"};
  if (name == "ub") return {"slo-odbs", "bgs"};
  if (name == "ua") return {"slo-odbs", "helr"};
  throw ConfigError("unknown preset '" + std::string(name) +
                    "' (expected baseline, ud, ub or ua)");
}

std::vector<std::string> preset_names() {
  return {"baseline", "ud", "ub", "ua"};
}

std::vector<Request> profile_trace(std::span<const Request> trace,
                                   const Predictor& predictor,
                                   const MonitorConfig& monitor,
                                   std::uint64_t seed,
                                   MonitorState* final_state) {
  validate(predictor);
  monitor.validate();
  std::vector<std::size_t> order(trace.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&trace](std::size_t a, std::size_t b) {
                     if (trace[a].arrival_time() != trace[b].arrival_time()) {
                       return trace[a].arrival_time() < trace[b].arrival_time();
                     }
                     return trace[a].id() < trace[b].id();
                   });

  std::vector<Request> out(trace.begin(), trace.end());
  MonitorState state;
  for (std::size_t i : order) {
    out[i] = profile(trace[i], predictor, state, seed);
    if (monitor.enabled) {
      state = observe_completion(state, out[i].predicted(),
                                 trace[i].true_output_len(), monitor);
    }
  }
  if (final_state) *final_state = state;
  return out;
}

ExperimentResult run_experiment(std::span<const Request> trace,
                                const Topology& topo, const ModelSpec& model,
                                std::string_view scheduler_name,
                                std::string_view planner_name,
                                const ExperimentConfig& cfg,
                                std::uint64_t seed) {
  if (!is_scheduler_name(scheduler_name)) {
    throw ConfigError("unknown scheduler '" + std::string(scheduler_name) +
                      "'");
  }
  if (!is_planner_name(planner_name)) {
    throw ConfigError("unknown planner '" + std::string(planner_name) + "'");
  }
  auto profiled = profile_trace(trace, cfg.predictor, cfg.monitor, seed);
  auto plans = schedule_by_name(scheduler_name, profiled, cfg.scheduler);
  auto placement = plan_by_name(planner_name, model, topo, cfg.deployer);
  auto sim = simulate(plans, profiled, placement.map, topo, model, cfg.cost);
  return ExperimentResult{std::string(scheduler_name),
                          std::string(planner_name),
                          std::move(profiled),
                          std::move(plans),
                          std::move(placement),
                          std::move(sim.metrics),
                          std::move(sim.log)};
}

ExperimentResult run_preset(std::span<const Request> trace,
                            const Topology& topo, const ModelSpec& model,
                            std::string_view preset,
                            const ExperimentConfig& cfg, std::uint64_t seed) {
  const Preset p = resolve_preset(preset);
  return run_experiment(trace, topo, model, p.scheduler, p.planner, cfg, seed);
}

}  // namespace servesim
