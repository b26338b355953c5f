#include "servesim/memory.h"

#include <algorithm>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "servesim/errors.h"

namespace servesim {
namespace {

Bytes checked_mul(Bytes a, Bytes b) {
  Bytes out = 0;
  if (__builtin_mul_overflow(a, b, &out)) {
    throw SizingError("KV cache size overflows 64-bit byte count");
  }
  return out;
}

}  // namespace

Bytes kv_cache_peak_bytes(const ModelSpec& model, Tokens batch_size,
                          Tokens max_input, Tokens max_output) {
  if (batch_size < 1) throw ContractError("batch_size must be >= 1");
  if (max_input < 0) throw ContractError("max_input must be >= 0");
  if (max_output < 0) throw ContractError("max_output must be >= 0");

  Bytes seq = 0;
  if (__builtin_add_overflow(static_cast<Bytes>(max_input),
                             static_cast<Bytes>(max_output), &seq)) {
    throw SizingError("sequence length overflows");
  }
  Bytes v = model.kv_bytes_per_elem();
  v = checked_mul(v, static_cast<Bytes>(batch_size));
  v = checked_mul(v, static_cast<Bytes>(model.num_layers()));
  v = checked_mul(v, static_cast<Bytes>(model.hidden_dim()));
  return checked_mul(v, seq);
}

TokenCost batch_token_cost(const BatchPlan& batch,
                           std::span<const Request> members) {
  if (members.size() != batch.size()) {
    throw ConsistencyError("batch has " + std::to_string(batch.size()) +
                           " ids but " + std::to_string(members.size()) +
                           " members were given");
  }
  std::unordered_set<RequestId> ids(batch.request_ids().begin(),
                                    batch.request_ids().end());
  if (ids.size() != batch.size()) {
    throw ConsistencyError("batch lists a request id twice");
  }
  Tokens max_in = 0;
  Tokens max_out = 0;
  for (const auto& r : members) {
    if (ids.erase(r.id()) == 0) {
      throw ConsistencyError("request " + std::to_string(r.id()) +
                             " is not a member of the batch");
    }
    max_in = std::max(max_in, r.input_len());
    max_out = std::max(max_out, r.predicted());
  }
  if (max_in != batch.padded_input_len() ||
      max_out != batch.max_output_len()) {
    throw ConsistencyError("batch lengths do not match member maxima");
  }

  TokenCost cost;
  cost.generated = static_cast<Tokens>(batch.size()) * batch.max_output_len();
  for (const auto& r : members) {
    cost.padding += batch.padded_input_len() - r.input_len();
  }
  return cost;
}

TokenCost plan_token_cost(std::span<const BatchPlan> plans,
                          std::span<const Request> requests) {
  std::unordered_map<RequestId, const Request*> by_id;
  by_id.reserve(requests.size());
  for (const auto& r : requests) {
    if (!by_id.emplace(r.id(), &r).second) {
      throw ConsistencyError("request " + std::to_string(r.id()) +
                             " appears twice in the request set");
    }
  }

  TokenCost total;
  std::size_t seen = 0;
  std::vector<Request> members;
  for (const auto& plan : plans) {
    members.clear();
    for (RequestId id : plan.request_ids()) {
      auto it = by_id.find(id);
      if (it == by_id.end() || it->second == nullptr) {
        throw ConsistencyError("request " + std::to_string(id) +
                               " is unknown or planned twice");
      }
      members.push_back(*it->second);
      it->second = nullptr;
    }
    seen += members.size();
    total += batch_token_cost(plan, members);
  }
  if (seen != requests.size()) {
    throw ConsistencyError(std::to_string(requests.size() - seen) +
                           " requests are missing from the plans");
  }
  return total;
}

}  // namespace servesim
