#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "servesim/types.h"

namespace servesim {

// Running state of the batch under construction during the SLO-ordered scan.
struct BatchState {
  std::vector<const Request*> current;
  Seconds l_cm = 0.0;  // max SLO in `current`
  double o_cm = 0.0;   // max predicted output length in `current`
  double cm = 0.0;     // max composite metric in `current`
  std::size_t dynamic_cap = 1;
};

// Composite admission cost of adding `q` to the batch in `state`:
// w1 * (slo + L_CM) * (n + 1) * L1 + w2 * (len -/+ O_CM) * (n + 1) * L2.
double admission_cost(const BatchState& state, const Request& q,
                      const SchedulerConfig& cfg);

// Batch-size cap derived from the composite metric:
// clamp(floor(threshold / max(cm, eps)), 1, max_batch_size).
std::size_t dynamic_batch_cap(double cm, const SchedulerConfig& cfg);

// SLO- and output-length-driven dynamic batching. Requests are scanned in
// ascending SLO order (ties by arrival time, then id); a request joins the
// open batch when the batch is empty or its admission cost is within the
// threshold, otherwise the batch is closed. Batches are also closed when
// they reach the dynamic cap. Throws ContractError on unprofiled requests.
std::vector<BatchPlan> schedule_slo_odbs(std::span<const Request> requests,
                                         const SchedulerConfig& cfg);

// schedule_slo_odbs with w1 = 0.
std::vector<BatchPlan> schedule_slo_dbs(std::span<const Request> requests,
                                        SchedulerConfig cfg);

// schedule_slo_odbs with w2 = 0.
std::vector<BatchPlan> schedule_odbs(std::span<const Request> requests,
                                     SchedulerConfig cfg);

// Arrival order (ties by id), consecutive chunks of max_batch_size.
std::vector<BatchPlan> schedule_fifo(std::span<const Request> requests,
                                     std::size_t max_batch_size);

// Dispatch by name: slo-odbs | slo-dbs | odbs | fifo.
std::vector<BatchPlan> schedule_by_name(std::string_view name,
                                        std::span<const Request> requests,
                                        const SchedulerConfig& cfg);

bool is_scheduler_name(std::string_view name);

}  // namespace servesim
