#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "servesim/types.h"

namespace servesim {

enum class ArrivalModel {
  kPoisson,  // exponential inter-arrival gaps at `rate` requests/s
  kBurst,    // everything arrives at t = 0
  kUniform,  // arrival times uniform over [0, window]
};

enum class LengthDist {
  kUniform,    // integer uniform over [min, max]
  kLogNormal,  // lognormal fitted to the range midpoint, clamped to [min, max]
};

ArrivalModel parse_arrival_model(std::string_view name);
LengthDist parse_length_dist(std::string_view name);

struct TraceGenConfig {
  std::size_t n = 200;
  ArrivalModel arrival = ArrivalModel::kPoisson;
  double rate = 50.0;     // requests per second, poisson only
  double window = 10.0;   // seconds, uniform only
  LengthDist len_dist = LengthDist::kUniform;
  Tokens input_min = 16;
  Tokens input_max = 512;
  Tokens output_min = 16;
  Tokens output_max = 512;
  Seconds slo_min = 1.0;
  Seconds slo_max = 350.0;

  // Throws ConfigError on invalid parameters.
  void validate() const;
};

// Seeded synthetic trace with ids 0..n-1 in arrival order; SLOs are uniform
// over [slo_min, slo_max].
std::vector<Request> gen_trace(const TraceGenConfig& cfg, std::uint64_t seed);

}  // namespace servesim
