#include "servesim/batcher.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "servesim/errors.h"

namespace servesim {
namespace {

constexpr double kCmEpsilon = 1e-12;

std::vector<const Request*> sorted_view(std::span<const Request> requests,
                                        bool by_slo) {
  std::vector<const Request*> order;
  order.reserve(requests.size());
  for (const auto& r : requests) order.push_back(&r);
  std::stable_sort(order.begin(), order.end(),
                   [by_slo](const Request* a, const Request* b) {
                     if (by_slo && a->slo() != b->slo()) {
                       return a->slo() < b->slo();
                     }
                     if (a->arrival_time() != b->arrival_time()) {
                       return a->arrival_time() < b->arrival_time();
                     }
                     return a->id() < b->id();
                   });
  return order;
}

BatchPlan make_plan(const std::vector<const Request*>& members) {
  std::vector<Request> copies;
  copies.reserve(members.size());
  for (const Request* r : members) copies.push_back(*r);
  return BatchPlan::from_members(copies);
}

}  // namespace

double admission_cost(const BatchState& state, const Request& q,
                      const SchedulerConfig& cfg) {
  const double width = static_cast<double>(state.current.size() + 1);
  const double len = static_cast<double>(q.predicted());
  const double gap =
      cfg.additive_output_term ? len + state.o_cm : len - state.o_cm;
  const double latency_total = (q.slo() + state.l_cm) * width * cfg.l1_overhead;
  const double length_total = gap * width * cfg.l2_overhead;
  return cfg.w1 * latency_total + cfg.w2 * length_total;
}

std::size_t dynamic_batch_cap(double cm, const SchedulerConfig& cfg) {
  const double raw = std::floor(cfg.threshold / std::max(cm, kCmEpsilon));
  const double hi = static_cast<double>(cfg.max_batch_size);
  if (!(raw >= 1.0)) return 1;
  if (raw >= hi) return cfg.max_batch_size;
  return static_cast<std::size_t>(raw);
}

std::vector<BatchPlan> schedule_slo_odbs(std::span<const Request> requests,
                                         const SchedulerConfig& cfg) {
  cfg.validate();
  for (const auto& r : requests) {
    if (!r.profiled()) {
      throw ContractError("request " + std::to_string(r.id()) +
                          " reached the batcher without a prediction");
    }
  }

  std::vector<BatchPlan> batches;
  BatchState state;
  state.dynamic_cap = cfg.max_batch_size;

  auto flush = [&] {
    if (state.current.empty()) return;
    batches.push_back(make_plan(state.current));
    state.current.clear();
    state.l_cm = 0.0;
    state.o_cm = 0.0;
    state.cm = 0.0;
  };

  for (const Request* q : sorted_view(requests, /*by_slo=*/true)) {
    const double len = static_cast<double>(q->predicted());
    const double metric = cfg.w1 * len + cfg.w2 * q->slo();
    if (state.current.empty() ||
        admission_cost(state, *q, cfg) <= cfg.threshold) {
      state.current.push_back(q);
      state.l_cm = std::max(state.l_cm, q->slo());
      state.o_cm = std::max(state.o_cm, len);
      state.cm = std::max(state.cm, metric);
    } else {
      flush();
      state.current.push_back(q);
      state.l_cm = q->slo();
      state.o_cm = len;
      state.cm = metric;
    }
    state.dynamic_cap = dynamic_batch_cap(state.cm, cfg);
    if (state.current.size() >= state.dynamic_cap) flush();
  }
  flush();
  return batches;
}

std::vector<BatchPlan> schedule_slo_dbs(std::span<const Request> requests,
                                        SchedulerConfig cfg) {
  cfg.w1 = 0.0;
  return schedule_slo_odbs(requests, cfg);
}

std::vector<BatchPlan> schedule_odbs(std::span<const Request> requests,
                                     SchedulerConfig cfg) {
  cfg.w2 = 0.0;
  return schedule_slo_odbs(requests, cfg);
}

std::vector<BatchPlan> schedule_fifo(std::span<const Request> requests,
                                     std::size_t max_batch_size) {
  if (max_batch_size < 1) throw ConfigError("max_batch_size must be >= 1");
  for (const auto& r : requests) {
    if (!r.profiled()) {
      throw ContractError("request " + std::to_string(r.id()) +
                          " reached the batcher without a prediction");
    }
  }
  const auto order = sorted_view(requests, /*by_slo=*/false);
  std::vector<BatchPlan> batches;
  std::vector<const Request*> chunk;
  for (const Request* r : order) {
    chunk.push_back(r);
    if (chunk.size() == max_batch_size) {
      batches.push_back(make_plan(chunk));
      chunk.clear();
    }
  }
  if (!chunk.empty()) batches.push_back(make_plan(chunk));
  return batches;
}

bool is_scheduler_name(std::string_view name) {
  return name == "slo-odbs" || name == "slo-dbs" || name == "odbs" ||
         name == "fifo";
}

std::vector<BatchPlan> schedule_by_name(std::string_view name,
                                        std::span<const Request> requests,
                                        const SchedulerConfig& cfg) {
  if (name == "slo-odbs") return schedule_slo_odbs(requests, cfg);
  if (name == "slo-dbs") return schedule_slo_dbs(requests, cfg);
  if (name == "odbs") return schedule_odbs(requests, cfg);
  if (name == "fifo") return schedule_fifo(requests, cfg.max_batch_size);
  throw ConfigError("unknown scheduler '" + std::string(name) +
                    "' (expected slo-odbs, slo-dbs, odbs or fifo)");
}

}  // namespace servesim
