#include "servesim/workload.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "servesim/errors.h"

namespace servesim {

ArrivalModel parse_arrival_model(std::string_view name) {
  if (name == "poisson") return ArrivalModel::kPoisson;
  if (name == "burst") return ArrivalModel::kBurst;
  if (name == "uniform") return ArrivalModel::kUniform;
  throw ConfigError("unknown arrival model '" + std::string(name) +
                    "' (expected poisson, burst or uniform)");
}

LengthDist parse_length_dist(std::string_view name) {
  if (name == "uniform") return LengthDist::kUniform;
  if (name == "lognormal") return LengthDist::kLogNormal;
  throw ConfigError("unknown length distribution '" + std::string(name) +
                    "' (expected uniform or lognormal)");
}

void TraceGenConfig::validate() const {
  if (n < 1) throw ConfigError("trace size must be >= 1");
  if (arrival == ArrivalModel::kPoisson && !(std::isfinite(rate) && rate > 0)) {
    throw ConfigError("arrival rate must be finite and > 0");
  }
  if (arrival == ArrivalModel::kUniform &&
      !(std::isfinite(window) && window >= 0)) {
    throw ConfigError("arrival window must be finite and >= 0");
  }
  if (input_min < 1 || input_max < input_min) {
    throw ConfigError("input length range must satisfy 1 <= min <= max");
  }
  if (output_min < 1 || output_max < output_min) {
    throw ConfigError("output length range must satisfy 1 <= min <= max");
  }
  if (!(std::isfinite(slo_min) && std::isfinite(slo_max) && slo_min > 0 &&
        slo_max >= slo_min)) {
    throw ConfigError("slo range must satisfy 0 < min <= max");
  }
}

std::vector<Request> gen_trace(const TraceGenConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 gen(seed);

  auto draw_len = [&](Tokens lo, Tokens hi) -> Tokens {
    if (cfg.len_dist == LengthDist::kUniform) {
      return std::uniform_int_distribution<Tokens>(lo, hi)(gen);
    }
    const double median = 0.5 * static_cast<double>(lo + hi);
    std::lognormal_distribution<double> dist(std::log(median), 0.5);
    const double v = std::round(dist(gen));
    return std::clamp(static_cast<Tokens>(v), lo, hi);
  };
  std::exponential_distribution<double> gap(cfg.rate);
  std::uniform_real_distribution<double> when(0.0, cfg.window);
  std::uniform_real_distribution<double> slo(cfg.slo_min, cfg.slo_max);

  std::vector<double> arrivals(cfg.n, 0.0);
  double clock = 0.0;
  for (auto& t : arrivals) {
    switch (cfg.arrival) {
      case ArrivalModel::kPoisson:
        clock += gap(gen);
        t = clock;
        break;
      case ArrivalModel::kBurst:
        t = 0.0;
        break;
      case ArrivalModel::kUniform:
        t = when(gen);
        break;
    }
  }
  std::sort(arrivals.begin(), arrivals.end());

  std::vector<Request> trace;
  trace.reserve(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    const Tokens input = draw_len(cfg.input_min, cfg.input_max);
    const Tokens output = draw_len(cfg.output_min, cfg.output_max);
    const double s = std::min(slo(gen), cfg.slo_max);
    trace.emplace_back(static_cast<RequestId>(i), arrivals[i], input, output,
                       s);
  }
  return trace;
}

}  // namespace servesim
