// servesim command-line front end.
//
//   servesim gen       synthetic trace (JSON Lines)
//   servesim plan      topology + model -> device map
//   servesim schedule  trace -> batch plans
//   servesim simulate  trace + topology + model + preset -> metrics record
//   servesim report    metrics records -> table (stdout) and CSV

#include <charconv>
#include <cstdint>
#include <cstring>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "servesim/batcher.h"
#include "servesim/config.h"
#include "servesim/deployer.h"
#include "servesim/errors.h"
#include "servesim/experiment.h"
#include "servesim/io.h"
#include "servesim/workload.h"

namespace {

using namespace servesim;

int exit_code_for(const Error& e) {
  const std::string cat = e.category();
  if (cat == "io") return 3;
  if (cat == "parse") return 4;
  if (cat == "validation") return 5;
  if (cat == "config") return 6;
  if (cat == "infeasible") return 7;
  return 8;
}

void emit(const std::string& out_path, const std::string& content) {
  if (out_path.empty() || out_path == "-") {
    std::cout << content;
  } else {
    write_file(out_path, content);
  }
}

ExperimentConfig load_config(const std::string& path) {
  if (path.empty()) return ExperimentConfig{};
  return parse_config(read_file(path));
}

std::vector<Request> profiled_trace(const std::vector<Request>& trace,
                                    const ExperimentConfig& cfg,
                                    std::uint64_t seed) {
  bool all_profiled = !trace.empty();
  for (const auto& r : trace) all_profiled = all_profiled && r.profiled();
  if (all_profiled) return trace;
  return profile_trace(trace, cfg.predictor, cfg.monitor, seed);
}

std::string shortest(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trace-driven simulator for SLO-aware LLM batch scheduling "
               "and layer placement"};
  app.require_subcommand(1);

  std::string out;
  std::string config_path;
  std::uint64_t seed = 0;

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a synthetic trace");
  TraceGenConfig gen_cfg;
  std::string arrival = "poisson";
  std::string len_dist = "uniform";
  gen->add_option("-n,--n", gen_cfg.n, "Number of requests")
      ->capture_default_str();
  gen->add_option("--seed", seed, "Random seed")->capture_default_str();
  gen->add_option("--arrival", arrival, "poisson | burst | uniform")
      ->capture_default_str();
  gen->add_option("--rate", gen_cfg.rate, "Poisson arrival rate (req/s)")
      ->capture_default_str();
  gen->add_option("--window", gen_cfg.window, "Uniform arrival window (s)")
      ->capture_default_str();
  gen->add_option("--len-dist", len_dist, "uniform | lognormal")
      ->capture_default_str();
  gen->add_option("--input-min", gen_cfg.input_min)->capture_default_str();
  gen->add_option("--input-max", gen_cfg.input_max)->capture_default_str();
  gen->add_option("--output-min", gen_cfg.output_min)->capture_default_str();
  gen->add_option("--output-max", gen_cfg.output_max)->capture_default_str();
  gen->add_option("--slo-min", gen_cfg.slo_min, "Minimum SLO (s)")
      ->capture_default_str();
  gen->add_option("--slo-max", gen_cfg.slo_max, "Maximum SLO (s)")
      ->capture_default_str();
  gen->add_option("--out", out, "Output path (default stdout)");

  // plan
  auto* plan = app.add_subcommand("plan", "Place model layers on devices");
  std::string topology_arg;
  std::string model_arg;
  std::string planner = "helr";
  plan->add_option("--topology", topology_arg,
                   "Topology file or built-in name (rtx3090x4)")
      ->required();
  plan->add_option("--model", model_arg,
                   "Model file or built-in name (chatglm2-6b)")
      ->required();
  plan->add_option("--planner", planner, "helr | he | lr | bgs")
      ->capture_default_str();
  plan->add_option("--config", config_path, "Key-value config file");
  plan->add_option("--out", out, "Output path (default stdout)");

  // schedule
  auto* schedule = app.add_subcommand("schedule", "Batch a trace");
  std::string trace_path;
  std::string scheduler = "slo-odbs";
  schedule->add_option("--trace", trace_path, "Trace file (JSON Lines)")
      ->required();
  schedule->add_option("--scheduler", scheduler, "slo-odbs | slo-dbs | odbs | fifo")
      ->capture_default_str();
  schedule->add_option("--config", config_path, "Key-value config file");
  schedule->add_option("--seed", seed, "Profiler seed")->capture_default_str();
  schedule->add_option("--out", out, "Output path (default stdout)");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Run one end-to-end experiment");
  std::string preset;
  std::string label;
  std::string events_path;
  std::optional<std::string> sim_scheduler;
  std::optional<std::string> sim_planner;
  sim->add_option("--trace", trace_path, "Trace file (JSON Lines)")->required();
  sim->add_option("--topology", topology_arg,
                  "Topology file or built-in name (rtx3090x4)")
      ->required();
  sim->add_option("--model", model_arg,
                  "Model file or built-in name (chatglm2-6b)")
      ->required();
  auto* preset_opt =
      sim->add_option("--preset", preset, "baseline | ud | ub | ua");
  sim->add_option("--scheduler", sim_scheduler, "Scheduler override")
      ->excludes(preset_opt);
  sim->add_option("--planner", sim_planner, "Planner override")
      ->excludes(preset_opt);
  sim->add_option("--config", config_path, "Key-value config file");
  sim->add_option("--seed", seed, "Profiler seed")->capture_default_str();
  sim->add_option("--label", label, "Record label (default: preset name)");
  sim->add_option("--events", events_path, "Also write the event log here");
  sim->add_option("--out", out, "Output path (default stdout)");

  // report
  auto* report = app.add_subcommand("report", "Tabulate metrics records");
  std::vector<std::string> inputs;
  std::string csv_path;
  report->add_option("--in", inputs, "Metrics files (JSON Lines)")
      ->required();
  report->add_option("--csv", csv_path, "Write CSV here");
  report->add_option("--out", out, "Table output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen) {
      gen_cfg.arrival = parse_arrival_model(arrival);
      gen_cfg.len_dist = parse_length_dist(len_dist);
      emit(out, emit_trace(gen_trace(gen_cfg, seed)));
    } else if (*plan) {
      const auto cfg = load_config(config_path);
      const auto topo = load_topology_arg(topology_arg);
      const auto model = load_model_arg(model_arg);
      emit(out,
           emit_placement(plan_by_name(planner, model, topo, cfg.deployer)));
    } else if (*schedule) {
      const auto cfg = load_config(config_path);
      const auto trace = profiled_trace(parse_trace(read_file(trace_path)),
                                        cfg, seed);
      emit(out, emit_plans(schedule_by_name(scheduler, trace, cfg.scheduler)));
    } else if (*sim) {
      const auto cfg = load_config(config_path);
      std::string sched_name;
      std::string plan_name;
      if (!preset.empty()) {
        const Preset p = resolve_preset(preset);
        sched_name = p.scheduler;
        plan_name = p.planner;
      } else {
        if (!sim_scheduler || !sim_planner) {
          std::cerr << "usage error: simulate needs --preset or both "
                       "--scheduler and --planner\n";
          return 2;
        }
        sched_name = *sim_scheduler;
        plan_name = *sim_planner;
      }
      const auto trace = parse_trace(read_file(trace_path));
      const auto topo = load_topology_arg(topology_arg);
      const auto model = load_model_arg(model_arg);
      const auto result = run_experiment(trace, topo, model, sched_name,
                                         plan_name, cfg, seed);
      if (label.empty()) {
        label = preset.empty() ? sched_name + "+" + plan_name : preset;
      }
      const MetricsRecord record =
          make_record(label, sched_name, plan_name,
                      predictor_name(cfg.predictor), seed, result.metrics,
                      result.placement.map);
      if (!events_path.empty()) {
        std::string log;
        for (const auto& ev : result.log) {
          log += shortest(ev.time) + " " +
                 std::string(event_kind_name(ev.kind)) + " " +
                 std::to_string(ev.payload) + "\n";
        }
        write_file(events_path, log);
      }
      emit(out, emit_metrics(std::span(&record, 1)));
    } else if (*report) {
      std::vector<MetricsRecord> records;
      for (const auto& path : inputs) {
        auto part = parse_metrics(read_file(path));
        records.insert(records.end(), part.begin(), part.end());
      }
      if (!csv_path.empty()) write_file(csv_path, report_csv(records));
      emit(out, report_table(records));
    }
  } catch (const Error& e) {
    std::cerr << e.category() << " error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
