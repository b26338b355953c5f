#pragma once

#include <cstdint>
#include <string>
#include <variant>

#include "servesim/types.h"

namespace servesim {

// Output-length predictors standing in for a learned bucket classifier.
struct OraclePredictor {};

struct BucketedPredictor {
  Tokens bucket_width = 50;
};

// Bucketed, but with probability error_rate the bucket is displaced by one
// in either direction (upward only from the first bucket).
struct NoisyPredictor {
  double error_rate = 0.0049;
  Tokens bucket_width = 50;
};

struct ConstantPredictor {
  Tokens value = 512;
};

using Predictor = std::variant<OraclePredictor, BucketedPredictor,
                               NoisyPredictor, ConstantPredictor>;

// Throws ConfigError on a malformed predictor.
void validate(const Predictor& predictor);
std::string predictor_name(const Predictor& predictor);

struct MonitorConfig {
  bool enabled = true;
  double gamma = 1.1;
  double cap = 2.0;

  void validate() const;
};

struct MonitorState {
  std::int64_t corrections = 0;
  double inflation_factor = 1.0;  // >= 1
};

// 1-based bucket index: bucket k covers ((k-1)*width, k*width].
Tokens bucket_of(Tokens length, Tokens bucket_width);

// Returns `request` with predicted_output_len set. Randomness (noisy
// predictor only) is derived from (seed, request id), so the result does not
// depend on the order requests are profiled in.
Request profile(const Request& request, const Predictor& predictor,
                const MonitorState& monitor, std::uint64_t seed);

MonitorState observe_completion(const MonitorState& monitor, Tokens predicted,
                                Tokens actual, const MonitorConfig& cfg = {});

}  // namespace servesim
