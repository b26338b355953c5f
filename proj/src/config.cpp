#include "servesim/config.h"

#include <charconv>
#include <cstdio>
#include <sstream>

#include "servesim/errors.h"
#include "servesim/io.h"

namespace servesim {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& v, std::size_t line) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ParseError("expected a number, got '" + v + "'", line);
  }
  return out;
}

std::uint64_t to_u64(const std::string& v, std::size_t line) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ParseError("expected a non-negative integer, got '" + v + "'", line);
  }
  return out;
}

bool to_bool(const std::string& v, std::size_t line) {
  if (v == "true" || v == "on" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "off" || v == "0" || v == "no") return false;
  throw ParseError("expected a boolean, got '" + v + "'", line);
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, ExperimentConfig base) {
  ExperimentConfig cfg = std::move(base);
  std::string predictor_kind = predictor_name(cfg.predictor);
  Tokens bucket_width = 50;
  double error_rate = 0.0049;
  Tokens constant_value = 512;
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, BucketedPredictor>) {
          bucket_width = p.bucket_width;
        } else if constexpr (std::is_same_v<T, NoisyPredictor>) {
          bucket_width = p.bucket_width;
          error_rate = p.error_rate;
        } else if constexpr (std::is_same_v<T, ConstantPredictor>) {
          constant_value = p.value;
        }
      },
      cfg.predictor);

  std::istringstream in(text);
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string body = trim(std::string_view(raw).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ParseError("expected 'key = value'", line);
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (value.empty()) throw ParseError("missing value for '" + key + "'", line);

    auto& s = cfg.scheduler;
    auto& d = cfg.deployer;
    if (key == "w1") {
      s.w1 = to_double(value, line);
    } else if (key == "w2") {
      s.w2 = to_double(value, line);
    } else if (key == "l1_overhead") {
      s.l1_overhead = to_double(value, line);
    } else if (key == "l2_overhead") {
      s.l2_overhead = to_double(value, line);
    } else if (key == "threshold") {
      s.threshold = to_double(value, line);
    } else if (key == "max_batch_size") {
      s.max_batch_size = to_u64(value, line);
    } else if (key == "additive_output_term") {
      s.additive_output_term = to_bool(value, line);
    } else if (key == "a1") {
      d.a1 = to_double(value, line);
    } else if (key == "a2") {
      d.a2 = to_double(value, line);
    } else if (key == "p") {
      d.p = to_double(value, line);
    } else if (key == "kv_reserve") {
      d.kv_reserve = to_u64(value, line);
    } else if (key == "literal_final_sum") {
      d.literal_final_sum = to_bool(value, line);
    } else if (key == "comm_mode") {
      try {
        cfg.cost.comm_mode = parse_comm_mode(value);
      } catch (const ConfigError& e) {
        throw ParseError(e.what(), line);
      }
    } else if (key == "predictor") {
      if (value != "oracle" && value != "bucketed" && value != "noisy" &&
          value != "constant") {
        throw ParseError("unknown predictor '" + value + "'", line);
      }
      predictor_kind = value;
    } else if (key == "bucket_width") {
      bucket_width = static_cast<Tokens>(to_u64(value, line));
    } else if (key == "error_rate") {
      error_rate = to_double(value, line);
    } else if (key == "constant_value") {
      constant_value = static_cast<Tokens>(to_u64(value, line));
    } else if (key == "monitor") {
      cfg.monitor.enabled = to_bool(value, line);
    } else if (key == "monitor_gamma") {
      cfg.monitor.gamma = to_double(value, line);
    } else if (key == "monitor_cap") {
      cfg.monitor.cap = to_double(value, line);
    } else {
      throw ParseError("unknown config key '" + key + "'", line);
    }
  }

  if (predictor_kind == "oracle") {
    cfg.predictor = OraclePredictor{};
  } else if (predictor_kind == "bucketed") {
    cfg.predictor = BucketedPredictor{bucket_width};
  } else if (predictor_kind == "noisy") {
    cfg.predictor = NoisyPredictor{error_rate, bucket_width};
  } else {
    cfg.predictor = ConstantPredictor{constant_value};
  }

  cfg.scheduler.validate();
  cfg.deployer.validate();
  cfg.monitor.validate();
  validate(cfg.predictor);
  return cfg;
}

std::string four_gpu_topology_json(double pix_latency, double node_latency) {
  constexpr unsigned long long kMem = 24ULL << 30;
  char buf[2048];
  std::snprintf(buf, sizeof(buf),
                R"({
  "devices": [
    {"id": 0, "memory_bytes": %llu, "performance": 700, "power_watts": 350},
    {"id": 1, "memory_bytes": %llu, "performance": 600, "power_watts": 300},
    {"id": 2, "memory_bytes": %llu, "performance": 500, "power_watts": 250},
    {"id": 3, "memory_bytes": %llu, "performance": 300, "power_watts": 150}
  ],
  "link_classes": [
    ["X", "PIX", "NODE", "NODE"],
    ["PIX", "X", "NODE", "NODE"],
    ["NODE", "NODE", "X", "PIX"],
    ["NODE", "NODE", "PIX", "X"]
  ],
  "class_latency": {"PIX": %.17g, "NODE": %.17g}
}
)",
                kMem, kMem, kMem, kMem, pix_latency, node_latency);
  return buf;
}

Topology builtin_topology(std::string_view name) {
  if (name == "rtx3090x4") return parse_topology(four_gpu_topology_json());
  throw ConfigError("unknown built-in topology '" + std::string(name) + "'");
}

ModelSpec builtin_model(std::string_view name) {
  if (name == "chatglm2-6b") {
    return ModelSpec("chatglm2-6b", 12'487'168'000ULL, 28, 4096, 4);
  }
  throw ConfigError("unknown built-in model '" + std::string(name) + "'");
}

ModelSpec load_model_arg(const std::string& arg) {
  if (arg == "chatglm2-6b") return builtin_model(arg);
  return parse_model(read_file(arg));
}

Topology load_topology_arg(const std::string& arg) {
  if (arg == "rtx3090x4") return builtin_topology(arg);
  return parse_topology(read_file(arg));
}

}  // namespace servesim
