#include "servesim/io.h"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "servesim/errors.h"

namespace servesim {
namespace {

using nlohmann::json;

// Field access with format errors mapped to ParseError at `line`.
class Fields {
 public:
  Fields(const json& obj, std::size_t line, const char* what)
      : obj_(obj), line_(line), what_(what) {
    if (!obj.is_object()) fail("expected a JSON object");
  }

  void only(std::initializer_list<const char*> allowed) const {
    for (const auto& [key, _] : obj_.items()) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || key == a;
      if (!ok) fail("unknown field '" + key + "'");
    }
  }

  bool has(const char* key) const { return obj_.contains(key); }

  const json& raw(const char* key) const {
    auto it = obj_.find(key);
    if (it == obj_.end()) fail(std::string("missing field '") + key + "'");
    return *it;
  }

  std::uint64_t u64(const char* key) const {
    const json& v = raw(key);
    if (!v.is_number_unsigned()) {
      fail(std::string("field '") + key + "' must be a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }

  std::int64_t i64(const char* key) const {
    const json& v = raw(key);
    if (v.is_number_unsigned()) {
      const auto u = v.get<std::uint64_t>();
      if (u > static_cast<std::uint64_t>(
                  std::numeric_limits<std::int64_t>::max())) {
        fail(std::string("field '") + key + "' is out of range");
      }
      return static_cast<std::int64_t>(u);
    }
    if (!v.is_number_integer()) {
      fail(std::string("field '") + key + "' must be an integer");
    }
    return v.get<std::int64_t>();
  }

  double num(const char* key) const {
    const json& v = raw(key);
    if (!v.is_number()) fail(std::string("field '") + key + "' must be a number");
    return v.get<double>();
  }

  std::string str(const char* key) const {
    const json& v = raw(key);
    if (!v.is_string()) fail(std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(std::string(what_) + ": " + msg, line_);
  }

 private:
  const json& obj_;
  std::size_t line_;
  const char* what_;
};

json parse_json(const std::string& text, std::size_t line, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string(what) + ": malformed JSON (" + e.what() + ")",
                     line);
  }
}

// Calls fn(json, line_number) for every non-blank line.
template <typename Fn>
void for_each_line(const std::string& text, const char* what, Fn&& fn) {
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    fn(parse_json(line, number, what), number);
  }
}

// Re-raises invariant violations with the offending line attached.
template <typename Fn>
auto at_line(std::size_t line, Fn&& fn) {
  try {
    return fn();
  } catch (const ValidationError& e) {
    throw ValidationError("line " + std::to_string(line) + ": " + e.what());
  }
}

std::string shortest(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

std::string dump_line(const json& j) { return j.dump() + "\n"; }

}  // namespace

std::vector<Request> parse_trace(const std::string& text) {
  std::vector<Request> out;
  std::unordered_set<RequestId> ids;
  for_each_line(text, "trace", [&](const json& j, std::size_t line) {
    Fields f(j, line, "trace");
    f.only({"id", "arrival_time", "input_len", "true_output_len", "slo",
            "predicted_output_len"});
    const RequestId id = f.u64("id");
    if (!ids.insert(id).second) {
      f.fail("duplicate request id " + std::to_string(id));
    }
    std::optional<Tokens> predicted;
    if (f.has("predicted_output_len")) predicted = f.i64("predicted_output_len");
    const double arrival = f.num("arrival_time");
    const Tokens input = f.i64("input_len");
    const Tokens output = f.i64("true_output_len");
    const double slo = f.num("slo");
    out.push_back(at_line(line, [&] {
      return Request(id, arrival, input, output, slo, predicted);
    }));
  });
  return out;
}

std::string emit_trace(std::span<const Request> trace) {
  std::string out;
  for (const auto& r : trace) {
    json j = {{"id", r.id()},
              {"arrival_time", r.arrival_time()},
              {"input_len", r.input_len()},
              {"true_output_len", r.true_output_len()},
              {"slo", r.slo()}};
    if (r.profiled()) j["predicted_output_len"] = r.predicted();
    out += dump_line(j);
  }
  return out;
}

Topology parse_topology(const std::string& text) {
  const json doc = parse_json(text, 0, "topology");
  Fields f(doc, 0, "topology");
  f.only({"devices", "latency", "link_classes", "class_latency"});
  const json& devs = f.raw("devices");
  if (!devs.is_array()) f.fail("'devices' must be an array");

  std::vector<DeviceNode> nodes;
  for (const json& d : devs) {
    Fields df(d, 0, "topology device");
    df.only({"id", "memory_bytes", "performance", "power_watts"});
    const auto id = df.u64("id");
    if (id > std::numeric_limits<DeviceId>::max()) df.fail("id out of range");
    DeviceNode node;
    node.id = static_cast<DeviceId>(id);
    node.memory = df.u64("memory_bytes");
    node.performance = df.num("performance");
    node.power_cap = df.has("power_watts") ? df.num("power_watts") : 0.0;
    nodes.push_back(node);
  }
  const std::size_t n = nodes.size();

  std::vector<std::vector<Seconds>> latency(n, std::vector<Seconds>(n, 0.0));
  const bool has_matrix = f.has("latency");
  const bool has_classes = f.has("link_classes");
  if (has_matrix == has_classes) {
    f.fail("exactly one of 'latency' or 'link_classes' is required");
  }
  auto check_rows = [&](const json& m, const char* key) {
    if (!m.is_array() || m.size() != n) {
      f.fail(std::string("'") + key + "' must have one row per device");
    }
    for (const json& row : m) {
      if (!row.is_array() || row.size() != n) {
        f.fail(std::string("'") + key + "' must be square");
      }
    }
  };

  if (has_matrix) {
    const json& m = f.raw("latency");
    check_rows(m, "latency");
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (!m[i][j].is_number()) f.fail("latency entries must be numbers");
        latency[i][j] = m[i][j].get<double>();
      }
    }
  } else {
    const json& m = f.raw("link_classes");
    check_rows(m, "link_classes");
    const json& map = f.raw("class_latency");
    if (!map.is_object()) f.fail("'class_latency' must be an object");
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (!m[i][j].is_string() || !m[j][i].is_string()) {
          f.fail("link classes must be strings");
        }
        const auto cls = m[i][j].get<std::string>();
        if ((cls == "X") != (i == j)) {
          f.fail("class X must appear exactly on the diagonal (at " +
                 std::to_string(i) + ", " + std::to_string(j) + ")");
        }
        if (cls != m[j][i].get<std::string>()) {
          f.fail("link classes are not symmetric");
        }
        if (cls == "X") continue;
        if (cls != "PIX" && cls != "NODE") {
          f.fail("unknown link class '" + cls + "'");
        }
        auto it = map.find(cls);
        if (it == map.end() || !it->is_number()) {
          f.fail("no latency given for link class '" + cls + "'");
        }
        latency[i][j] = it->get<double>();
      }
    }
  }
  return Topology(std::move(nodes), std::move(latency));
}

std::string emit_topology(const Topology& topo) {
  json devs = json::array();
  for (const auto& d : topo.nodes()) {
    devs.push_back({{"id", d.id},
                    {"memory_bytes", d.memory},
                    {"performance", d.performance},
                    {"power_watts", d.power_cap}});
  }
  json doc = {{"devices", devs}, {"latency", topo.link_latency()}};
  return doc.dump(2) + "\n";
}

ModelSpec parse_model(const std::string& text) {
  const json doc = parse_json(text, 0, "model");
  Fields f(doc, 0, "model");
  f.only({"name", "total_memory", "num_layers", "hidden_dim",
          "kv_bytes_per_elem"});
  return ModelSpec(f.str("name"), f.u64("total_memory"), f.i64("num_layers"),
                   f.i64("hidden_dim"),
                   f.has("kv_bytes_per_elem") ? f.u64("kv_bytes_per_elem") : 4);
}

std::string emit_model(const ModelSpec& model) {
  json doc = {{"name", model.name()},
              {"total_memory", model.total_memory()},
              {"num_layers", model.num_layers()},
              {"hidden_dim", model.hidden_dim()},
              {"kv_bytes_per_elem", model.kv_bytes_per_elem()}};
  return doc.dump(2) + "\n";
}

Placement parse_placement(const std::string& text) {
  const json doc = parse_json(text, 0, "device map");
  Fields f(doc, 0, "device map");
  f.only({"num_layers", "entries", "objective", "chain_latency"});
  const json& arr = f.raw("entries");
  if (!arr.is_array()) f.fail("'entries' must be an array");
  std::vector<DeviceMapEntry> entries;
  for (const json& e : arr) {
    Fields ef(e, 0, "device map entry");
    ef.only({"device", "layer_start", "layer_end"});
    const auto dev = ef.u64("device");
    if (dev > std::numeric_limits<DeviceId>::max()) ef.fail("device out of range");
    entries.push_back({static_cast<DeviceId>(dev), ef.i64("layer_start"),
                       ef.i64("layer_end")});
  }
  return Placement{DeviceMap(std::move(entries), f.i64("num_layers")),
                   f.has("objective") ? f.num("objective") : 0.0,
                   f.has("chain_latency") ? f.num("chain_latency") : 0.0};
}

std::string emit_placement(const Placement& placement) {
  json entries = json::array();
  for (const auto& e : placement.map.entries()) {
    entries.push_back({{"device", e.device},
                       {"layer_start", e.layer_start},
                       {"layer_end", e.layer_end}});
  }
  json doc = {{"num_layers", placement.map.num_layers()},
              {"entries", entries},
              {"objective", placement.objective},
              {"chain_latency", placement.chain_latency}};
  return doc.dump(2) + "\n";
}

std::vector<BatchPlan> parse_plans(const std::string& text) {
  std::vector<BatchPlan> out;
  for_each_line(text, "batch plans", [&](const json& j, std::size_t line) {
    Fields f(j, line, "batch plan");
    f.only({"batch", "request_ids", "padded_input_len", "max_output_len"});
    const json& ids = f.raw("request_ids");
    if (!ids.is_array()) f.fail("'request_ids' must be an array");
    std::vector<RequestId> members;
    for (const json& id : ids) {
      if (!id.is_number_unsigned()) f.fail("request ids must be integers");
      members.push_back(id.get<RequestId>());
    }
    const Tokens padded = f.i64("padded_input_len");
    const Tokens max_out = f.i64("max_output_len");
    out.push_back(at_line(line, [&] {
      return BatchPlan(std::move(members), padded, max_out);
    }));
  });
  return out;
}

std::string emit_plans(std::span<const BatchPlan> plans) {
  std::string out;
  for (std::size_t i = 0; i < plans.size(); ++i) {
    out += dump_line({{"batch", i},
                      {"request_ids", plans[i].request_ids()},
                      {"padded_input_len", plans[i].padded_input_len()},
                      {"max_output_len", plans[i].max_output_len()}});
  }
  return out;
}

MetricsRecord make_record(std::string label, const std::string& scheduler,
                          const std::string& planner,
                          const std::string& predictor, std::uint64_t seed,
                          const SimMetrics& metrics, const DeviceMap& map) {
  MetricsRecord r;
  r.label = std::move(label);
  r.scheduler = scheduler;
  r.planner = planner;
  r.predictor = predictor;
  r.seed = seed;
  r.num_requests = metrics.request_ids.size();
  r.num_batches = metrics.num_batches;
  r.devices_used = map.device_count();
  r.generated_tokens = metrics.generated_tokens;
  r.padding_tokens = metrics.padding_tokens;
  r.makespan = metrics.makespan;
  r.mean_latency = metrics.mean_latency;
  r.p95_latency = metrics.p95_latency;
  r.throughput = metrics.throughput;
  r.slo_violation_rate = metrics.slo_violation_rate;
  r.utilization = metrics.device_utilization;
  double used = 0.0;
  for (std::size_t d = 0; d < r.utilization.size(); ++d) used += r.utilization[d];
  r.mean_utilization =
      map.device_count() ? used / static_cast<double>(map.device_count()) : 0.0;
  return r;
}

std::vector<MetricsRecord> parse_metrics(const std::string& text) {
  std::vector<MetricsRecord> out;
  for_each_line(text, "metrics", [&](const json& j, std::size_t line) {
    Fields f(j, line, "metrics");
    f.only({"label", "scheduler", "planner", "predictor", "seed",
            "num_requests", "num_batches", "devices_used", "generated_tokens",
            "padding_tokens", "makespan", "mean_latency", "p95_latency",
            "throughput", "slo_violation_rate", "mean_utilization",
            "utilization"});
    MetricsRecord r;
    r.label = f.str("label");
    r.scheduler = f.str("scheduler");
    r.planner = f.str("planner");
    r.predictor = f.str("predictor");
    r.seed = f.u64("seed");
    r.num_requests = f.u64("num_requests");
    r.num_batches = f.u64("num_batches");
    r.devices_used = f.u64("devices_used");
    r.generated_tokens = f.i64("generated_tokens");
    r.padding_tokens = f.i64("padding_tokens");
    r.makespan = f.num("makespan");
    r.mean_latency = f.num("mean_latency");
    r.p95_latency = f.num("p95_latency");
    r.throughput = f.num("throughput");
    r.slo_violation_rate = f.num("slo_violation_rate");
    r.mean_utilization = f.num("mean_utilization");
    const json& u = f.raw("utilization");
    if (!u.is_array()) f.fail("'utilization' must be an array");
    for (const json& v : u) {
      if (!v.is_number()) f.fail("utilization entries must be numbers");
      r.utilization.push_back(v.get<double>());
    }
    out.push_back(std::move(r));
  });
  return out;
}

std::string emit_metrics(std::span<const MetricsRecord> records) {
  std::string out;
  for (const auto& r : records) {
    out += dump_line({{"label", r.label},
                      {"scheduler", r.scheduler},
                      {"planner", r.planner},
                      {"predictor", r.predictor},
                      {"seed", r.seed},
                      {"num_requests", r.num_requests},
                      {"num_batches", r.num_batches},
                      {"devices_used", r.devices_used},
                      {"generated_tokens", r.generated_tokens},
                      {"padding_tokens", r.padding_tokens},
                      {"makespan", r.makespan},
                      {"mean_latency", r.mean_latency},
                      {"p95_latency", r.p95_latency},
                      {"throughput", r.throughput},
                      {"slo_violation_rate", r.slo_violation_rate},
                      {"mean_utilization", r.mean_utilization},
                      {"utilization", r.utilization}});
  }
  return out;
}

std::string report_csv(std::span<const MetricsRecord> records) {
  std::string out =
      "label,scheduler,planner,predictor,seed,num_requests,num_batches,"
      "devices_used,generated_tokens,padding_tokens,makespan,mean_latency,"
      "p95_latency,throughput,slo_violation_rate,mean_utilization,"
      "utilization\n";
  auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + "\"";
  };
  for (const auto& r : records) {
    std::string util;
    for (std::size_t i = 0; i < r.utilization.size(); ++i) {
      if (i) util += ';';
      util += shortest(r.utilization[i]);
    }
    out += quote(r.label) + ',' + quote(r.scheduler) + ',' + quote(r.planner) +
           ',' + quote(r.predictor) + ',' + std::to_string(r.seed) + ',' +
           std::to_string(r.num_requests) + ',' +
           std::to_string(r.num_batches) + ',' +
           std::to_string(r.devices_used) + ',' +
           std::to_string(r.generated_tokens) + ',' +
           std::to_string(r.padding_tokens) + ',' + shortest(r.makespan) +
           ',' + shortest(r.mean_latency) + ',' + shortest(r.p95_latency) +
           ',' + shortest(r.throughput) + ',' +
           shortest(r.slo_violation_rate) + ',' +
           shortest(r.mean_utilization) + ',' + util + '\n';
  }
  return out;
}

std::string report_table(std::span<const MetricsRecord> records) {
  const std::vector<std::string> header = {
      "label",   "scheduler", "planner",  "devices", "batches", "tokens",
      "mean(s)", "p95(s)",    "tok/s",    "slo-viol", "util"};
  std::vector<std::vector<std::string>> rows;
  auto fixed = [](double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return std::string(buf);
  };
  for (const auto& r : records) {
    rows.push_back({r.label, r.scheduler, r.planner,
                    std::to_string(r.devices_used),
                    std::to_string(r.num_batches),
                    std::to_string(r.generated_tokens),
                    fixed(r.mean_latency, 2), fixed(r.p95_latency, 2),
                    fixed(r.throughput, 1), fixed(r.slo_violation_rate, 4),
                    fixed(r.mean_utilization, 3)});
  }
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    width[c] = header[c].size();
    for (const auto& row : rows) width[c] = std::max(width[c], row[c].size());
  }
  auto line = [&](const std::vector<std::string>& cells) {
    std::string s;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c) s += "  ";
      // Text columns left-aligned, numbers right-aligned.
      const std::string pad(width[c] - cells[c].size(), ' ');
      s += c < 3 ? cells[c] + pad : pad + cells[c];
    }
    while (!s.empty() && s.back() == ' ') s.pop_back();
    return s + "\n";
  };
  std::string out = line(header);
  std::size_t total = 0;
  for (auto w : width) total += w;
  out += std::string(total + 2 * (width.size() - 1), '-') + "\n";
  for (const auto& row : rows) out += line(row);
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading '" + path + "'");
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw IoError("error writing '" + path + "'");
}

}  // namespace servesim
