#pragma once

#include <span>

#include "servesim/types.h"

namespace servesim {

// Peak KV-cache footprint: kv_bytes_per_elem * b * l * h * (s + n).
// Throws SizingError if the product does not fit in 64 bits.
Bytes kv_cache_peak_bytes(const ModelSpec& model, Tokens batch_size,
                          Tokens max_input, Tokens max_output);

struct TokenCost {
  Tokens generated = 0;  // |batch| * max_output_len
  Tokens padding = 0;    // sum of (padded_input_len - input_len)

  TokenCost& operator+=(const TokenCost& o) {
    generated += o.generated;
    padding += o.padding;
    return *this;
  }
  friend bool operator==(const TokenCost&, const TokenCost&) = default;
};

// `members` must be exactly the plan's requests, in any order, and the plan's
// lengths must be their maxima.
TokenCost batch_token_cost(const BatchPlan& batch,
                           std::span<const Request> members);

// Sums batch_token_cost over `plans`; every request in `requests` has to
// appear in exactly one plan.
TokenCost plan_token_cost(std::span<const BatchPlan> plans,
                          std::span<const Request> requests);

}  // namespace servesim
