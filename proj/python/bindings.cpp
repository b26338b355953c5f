#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "servesim/batcher.h"
#include "servesim/config.h"
#include "servesim/deployer.h"
#include "servesim/errors.h"
#include "servesim/experiment.h"
#include "servesim/io.h"
#include "servesim/memory.h"
#include "servesim/simulator.h"
#include "servesim/workload.h"

namespace py = pybind11;
using namespace servesim;

namespace {

std::vector<Request> profile_with(const std::vector<Request>& trace,
                                  const ExperimentConfig& cfg,
                                  std::uint64_t seed) {
  return profile_trace(trace, cfg.predictor, cfg.monitor, seed);
}

py::list events_to_list(const EventLog& log) {
  py::list out;
  for (const auto& e : log) {
    out.append(py::make_tuple(e.time, std::string(event_kind_name(e.kind)),
                              e.payload));
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Trace-driven simulator for SLO-aware batching and layer placement";

  auto base = py::register_exception<Error>(m, "ServesimError");
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<ContractError>(m, "ContractError", base.ptr());
  py::register_exception<ConsistencyError>(m, "ConsistencyError", base.ptr());
  py::register_exception<SizingError>(m, "SizingError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<InfeasibleError>(m, "InfeasibleError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());

  py::class_<Request>(m, "Request")
      .def(py::init<RequestId, Seconds, Tokens, Tokens, Seconds,
                    std::optional<Tokens>>(),
           py::arg("id"), py::arg("arrival_time"), py::arg("input_len"),
           py::arg("true_output_len"), py::arg("slo"),
           py::arg("predicted_output_len") = std::nullopt)
      .def_property_readonly("id", &Request::id)
      .def_property_readonly("arrival_time", &Request::arrival_time)
      .def_property_readonly("input_len", &Request::input_len)
      .def_property_readonly("true_output_len", &Request::true_output_len)
      .def_property_readonly("slo", &Request::slo)
      .def_property_readonly("predicted_output_len",
                             &Request::predicted_output_len)
      .def_property_readonly("profiled", &Request::profiled)
      .def("with_prediction", &Request::with_prediction)
      .def(py::self == py::self)
      .def("__repr__", [](const Request& r) {
        return "Request(id=" + std::to_string(r.id()) +
               ", input_len=" + std::to_string(r.input_len()) +
               ", true_output_len=" + std::to_string(r.true_output_len()) +
               ")";
      });

  py::class_<ModelSpec>(m, "ModelSpec")
      .def(py::init<std::string, Bytes, Tokens, Tokens, Bytes>(),
           py::arg("name"), py::arg("total_memory"), py::arg("num_layers"),
           py::arg("hidden_dim"), py::arg("kv_bytes_per_elem") = 4)
      .def_property_readonly("name", &ModelSpec::name)
      .def_property_readonly("total_memory", &ModelSpec::total_memory)
      .def_property_readonly("num_layers", &ModelSpec::num_layers)
      .def_property_readonly("hidden_dim", &ModelSpec::hidden_dim)
      .def_property_readonly("kv_bytes_per_elem",
                             &ModelSpec::kv_bytes_per_elem)
      .def_property_readonly("memory_per_layer", &ModelSpec::memory_per_layer)
      .def(py::self == py::self);

  py::class_<DeviceNode>(m, "DeviceNode")
      .def(py::init<DeviceId, Bytes, double, double>(), py::arg("id"),
           py::arg("memory"), py::arg("performance"),
           py::arg("power_cap") = 0.0)
      .def_readonly("id", &DeviceNode::id)
      .def_readonly("memory", &DeviceNode::memory)
      .def_readonly("performance", &DeviceNode::performance)
      .def_readonly("power_cap", &DeviceNode::power_cap);

  py::class_<Topology>(m, "Topology")
      .def(py::init<std::vector<DeviceNode>,
                    std::vector<std::vector<Seconds>>>(),
           py::arg("nodes"), py::arg("latency"))
      .def_property_readonly("nodes", &Topology::nodes)
      .def_property_readonly("latency", &Topology::link_latency)
      .def("__len__", &Topology::size)
      .def(py::self == py::self);

  py::class_<DeviceMapEntry>(m, "DeviceMapEntry")
      .def_readonly("device", &DeviceMapEntry::device)
      .def_readonly("layer_start", &DeviceMapEntry::layer_start)
      .def_readonly("layer_end", &DeviceMapEntry::layer_end)
      .def("__repr__", [](const DeviceMapEntry& e) {
        return "DeviceMapEntry(device=" + std::to_string(e.device) +
               ", layers=" + std::to_string(e.layer_start) + ".." +
               std::to_string(e.layer_end) + ")";
      });

  py::class_<DeviceMap>(m, "DeviceMap")
      .def_property_readonly("entries", &DeviceMap::entries)
      .def_property_readonly("num_layers", &DeviceMap::num_layers)
      .def_property_readonly("device_count", &DeviceMap::device_count)
      .def("layers_on", &DeviceMap::layers_on)
      .def(py::self == py::self);

  py::class_<BatchPlan>(m, "BatchPlan")
      .def_property_readonly("request_ids", &BatchPlan::request_ids)
      .def_property_readonly("padded_input_len", &BatchPlan::padded_input_len)
      .def_property_readonly("max_output_len", &BatchPlan::max_output_len)
      .def("__len__", &BatchPlan::size)
      .def(py::self == py::self);

  py::class_<Placement>(m, "Placement")
      .def_readonly("map", &Placement::map)
      .def_readonly("objective", &Placement::objective)
      .def_readonly("chain_latency", &Placement::chain_latency);

  py::class_<SchedulerConfig>(m, "SchedulerConfig")
      .def(py::init<>())
      .def_readwrite("w1", &SchedulerConfig::w1)
      .def_readwrite("w2", &SchedulerConfig::w2)
      .def_readwrite("l1_overhead", &SchedulerConfig::l1_overhead)
      .def_readwrite("l2_overhead", &SchedulerConfig::l2_overhead)
      .def_readwrite("threshold", &SchedulerConfig::threshold)
      .def_readwrite("max_batch_size", &SchedulerConfig::max_batch_size)
      .def_readwrite("additive_output_term",
                     &SchedulerConfig::additive_output_term);

  py::class_<DeployerConfig>(m, "DeployerConfig")
      .def(py::init<>())
      .def_readwrite("a1", &DeployerConfig::a1)
      .def_readwrite("a2", &DeployerConfig::a2)
      .def_readwrite("p", &DeployerConfig::p)
      .def_readwrite("kv_reserve", &DeployerConfig::kv_reserve)
      .def_readwrite("literal_final_sum", &DeployerConfig::literal_final_sum);

  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def(py::init<>())
      .def_readwrite("scheduler", &ExperimentConfig::scheduler)
      .def_readwrite("deployer", &ExperimentConfig::deployer)
      .def_property(
          "comm_mode",
          [](const ExperimentConfig& c) {
            return std::string(comm_mode_name(c.cost.comm_mode));
          },
          [](ExperimentConfig& c, const std::string& name) {
            c.cost.comm_mode = parse_comm_mode(name);
          })
      .def_property_readonly("predictor", [](const ExperimentConfig& c) {
        return predictor_name(c.predictor);
      });

  py::class_<SimMetrics>(m, "SimMetrics")
      .def_readonly("request_ids", &SimMetrics::request_ids)
      .def_readonly("request_latency", &SimMetrics::request_latency)
      .def_readonly("mean_latency", &SimMetrics::mean_latency)
      .def_readonly("p95_latency", &SimMetrics::p95_latency)
      .def_readonly("throughput", &SimMetrics::throughput)
      .def_readonly("device_utilization", &SimMetrics::device_utilization)
      .def_readonly("slo_violation_rate", &SimMetrics::slo_violation_rate)
      .def_readonly("makespan", &SimMetrics::makespan)
      .def_readonly("generated_tokens", &SimMetrics::generated_tokens)
      .def_readonly("padding_tokens", &SimMetrics::padding_tokens)
      .def_readonly("num_batches", &SimMetrics::num_batches);

  py::class_<ExperimentResult>(m, "ExperimentResult")
      .def_readonly("scheduler", &ExperimentResult::scheduler)
      .def_readonly("planner", &ExperimentResult::planner)
      .def_readonly("profiled", &ExperimentResult::profiled)
      .def_readonly("plans", &ExperimentResult::plans)
      .def_readonly("placement", &ExperimentResult::placement)
      .def_readonly("metrics", &ExperimentResult::metrics)
      .def_property_readonly("events", [](const ExperimentResult& r) {
        return events_to_list(r.log);
      });

  py::class_<TraceGenConfig>(m, "TraceGenConfig")
      .def(py::init<>())
      .def_readwrite("n", &TraceGenConfig::n)
      .def_readwrite("rate", &TraceGenConfig::rate)
      .def_readwrite("window", &TraceGenConfig::window)
      .def_readwrite("input_min", &TraceGenConfig::input_min)
      .def_readwrite("input_max", &TraceGenConfig::input_max)
      .def_readwrite("output_min", &TraceGenConfig::output_min)
      .def_readwrite("output_max", &TraceGenConfig::output_max)
      .def_readwrite("slo_min", &TraceGenConfig::slo_min)
      .def_readwrite("slo_max", &TraceGenConfig::slo_max)
      .def_property(
          "arrival",
          [](const TraceGenConfig& c) {
            switch (c.arrival) {
              case ArrivalModel::kPoisson:
                return "poisson";
              case ArrivalModel::kBurst:
                return "burst";
              case ArrivalModel::kUniform:
                return "uniform";
            }
            return "poisson";
          },
          [](TraceGenConfig& c, const std::string& name) {
            c.arrival = parse_arrival_model(name);
          })
      .def_property(
          "len_dist",
          [](const TraceGenConfig& c) {
            return c.len_dist == LengthDist::kUniform ? "uniform"
                                                      : "lognormal";
          },
          [](TraceGenConfig& c, const std::string& name) {
            c.len_dist = parse_length_dist(name);
          });

  m.def("kv_cache_peak_bytes", &kv_cache_peak_bytes, py::arg("model"),
        py::arg("batch_size"), py::arg("input_len"), py::arg("max_output"));
  m.def(
      "plan_token_cost",
      [](const std::vector<BatchPlan>& plans,
         const std::vector<Request>& requests) {
        const TokenCost c = plan_token_cost(plans, requests);
        return py::make_tuple(c.generated, c.padding);
      },
      py::arg("plans"), py::arg("requests"),
      "Returns (generated_tokens, padding_tokens).");

  m.def("gen_trace", &gen_trace, py::arg("config"), py::arg("seed"));
  m.def("parse_config", &parse_config, py::arg("text"),
        py::arg("base") = ExperimentConfig{});
  m.def("profile_trace", &profile_with, py::arg("trace"),
        py::arg("config") = ExperimentConfig{}, py::arg("seed") = 0);

  m.def(
      "schedule",
      [](const std::string& name, const std::vector<Request>& requests,
         const SchedulerConfig& cfg) {
        return schedule_by_name(name, requests, cfg);
      },
      py::arg("name"), py::arg("requests"),
      py::arg("config") = SchedulerConfig{});
  m.def("plan", &plan_by_name, py::arg("name"), py::arg("model"),
        py::arg("topology"), py::arg("config") = DeployerConfig{});

  m.def(
      "simulate",
      [](const std::vector<BatchPlan>& plans,
         const std::vector<Request>& requests, const DeviceMap& map,
         const Topology& topo, const ModelSpec& model,
         const std::string& comm_mode) {
        CostModel cost;
        cost.comm_mode = parse_comm_mode(comm_mode);
        SimResult r = simulate(plans, requests, map, topo, model, cost);
        return py::make_tuple(r.metrics, events_to_list(r.log));
      },
      py::arg("plans"), py::arg("requests"), py::arg("map"),
      py::arg("topology"), py::arg("model"),
      py::arg("comm_mode") = "per_batch",
      "Returns (SimMetrics, [(time, kind, payload), ...]).");

  m.def(
      "run_experiment",
      [](const std::vector<Request>& trace, const Topology& topo,
         const ModelSpec& model, const std::string& scheduler,
         const std::string& planner, const ExperimentConfig& cfg,
         std::uint64_t seed) {
        return run_experiment(trace, topo, model, scheduler, planner, cfg,
                              seed);
      },
      py::arg("trace"), py::arg("topology"), py::arg("model"),
      py::arg("scheduler"), py::arg("planner"),
      py::arg("config") = ExperimentConfig{}, py::arg("seed") = 0);
  m.def(
      "run_preset",
      [](const std::vector<Request>& trace, const Topology& topo,
         const ModelSpec& model, const std::string& preset,
         const ExperimentConfig& cfg, std::uint64_t seed) {
        return run_preset(trace, topo, model, preset, cfg, seed);
      },
      py::arg("trace"), py::arg("topology"), py::arg("model"),
      py::arg("preset"), py::arg("config") = ExperimentConfig{},
      py::arg("seed") = 0);
  m.def("preset_names", &preset_names);

  m.def("builtin_model", &builtin_model, py::arg("name") = "chatglm2-6b");
  m.def("builtin_topology", &builtin_topology,
        py::arg("name") = "rtx3090x4");

  m.def("parse_trace", &parse_trace);
  m.def("emit_trace", [](const std::vector<Request>& t) {
    return emit_trace(t);
  });
  m.def("parse_topology", &parse_topology);
  m.def("emit_topology", &emit_topology);
  m.def("parse_model", &parse_model);
  m.def("emit_model", &emit_model);
  m.def("parse_placement", &parse_placement);
  m.def("emit_placement", &emit_placement);
  m.def("parse_plans", &parse_plans);
  m.def("emit_plans", [](const std::vector<BatchPlan>& p) {
    return emit_plans(p);
  });
}
