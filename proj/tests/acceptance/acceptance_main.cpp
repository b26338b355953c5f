// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include <sys/wait.h>

#include <boost/multiprecision/cpp_int.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "oracles/helr_bruteforce.h"
#include "oracles/partitions.h"
#include "servesim/batcher.h"
#include "servesim/config.h"
#include "servesim/deployer.h"
#include "servesim/errors.h"
#include "servesim/experiment.h"
#include "servesim/io.h"
#include "servesim/memory.h"
#include "servesim/profiler.h"
#include "servesim/simulator.h"
#include "servesim/workload.h"
#include "test_util.h"

namespace {

using namespace servesim;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Simulation runs collected by criteria 4 and 5 for the conservation check.
struct RunRecord {
  std::string origin;
  std::size_t num_requests = 0;
  std::vector<BatchPlan> plans;
  std::vector<Request> requests;
  SimResult result;
};
std::vector<RunRecord> g_runs;

void record_run(std::string origin, std::vector<BatchPlan> plans,
                std::vector<Request> requests, SimResult result) {
  const std::size_t n = requests.size();
  g_runs.push_back({std::move(origin), n, std::move(plans),
                    std::move(requests), std::move(result)});
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Outcome timed(double budget_s, const std::function<Outcome()>& body) {
  const auto start = Clock::now();
  Outcome out = body();
  const double took = seconds_since(start);
  std::ostringstream os;
  os << out.detail << (out.detail.empty() ? "" : "; ") << took << " s (budget "
     << budget_s << " s)";
  out.detail = os.str();
  if (took >= budget_s) out.pass = false;
  return out;
}

Request profiled(RequestId id, Seconds slo, Tokens len, Tokens input,
                 Seconds arrival) {
  return Request(id, arrival, input, len, slo, len);
}

// 1. KV-cache size against a big-integer oracle.
Outcome kv_exactness() {
  using boost::multiprecision::cpp_int;
  std::mt19937_64 gen(1001);
  std::uniform_int_distribution<Tokens> layers(1, 256);
  std::uniform_int_distribution<Tokens> hidden(1, 16384);
  std::uniform_int_distribution<Tokens> batch(1, 512);
  std::uniform_int_distribution<Tokens> seq(0, 1 << 20);
  const cpp_int limit(std::numeric_limits<Bytes>::max());
  int exact = 0, overflow = 0;
  for (int i = 0; i < 1000; ++i) {
    const ModelSpec model("m", 1, layers(gen), hidden(gen), 4);
    const Tokens b = batch(gen), s = seq(gen), n = seq(gen);
    const cpp_int want = cpp_int(4) * b * model.num_layers() *
                         model.hidden_dim() * (cpp_int(s) + n);
    if (want > limit) {
      try {
        kv_cache_peak_bytes(model, b, s, n);
        return {false, "missed overflow at tuple " + std::to_string(i)};
      } catch (const SizingError&) {
        ++overflow;
      }
      continue;
    }
    if (cpp_int(kv_cache_peak_bytes(model, b, s, n)) != want) {
      return {false, "mismatch at tuple " + std::to_string(i)};
    }
    ++exact;
  }
  return {true, std::to_string(exact) + " exact, " + std::to_string(overflow) +
                    " overflow-rejected"};
}

// 2. Placement optimality against exhaustive chain enumeration.
Outcome helr_optimality() {
  std::mt19937_64 gen(2002);
  std::uniform_int_distribution<Bytes> mem(0, 40);
  std::uniform_int_distribution<int> perf(1, 20);
  std::uniform_real_distribution<double> lat(0.0, 5.0);
  std::uniform_real_distribution<double> weight(0.0, 3.0);
  std::uniform_int_distribution<Tokens> layer_count(1, 60);
  int compared = 0, infeasible = 0;
  for (int t = 0; t < 900; ++t) {
    const std::size_t n = 1 + t % 4;
    std::vector<DeviceNode> nodes;
    for (std::size_t i = 0; i < n; ++i) {
      nodes.push_back({static_cast<DeviceId>(i), mem(gen) * 1000,
                       static_cast<double>(perf(gen)), 100.0});
    }
    std::vector<std::vector<double>> l(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) l[i][j] = l[j][i] = lat(gen);
    }
    const Topology topo(std::move(nodes), std::move(l));
    const Tokens layers = layer_count(gen);
    const ModelSpec model("m", static_cast<Bytes>(layers) * (500 + gen() % 1500),
                          layers, 8);
    DeployerConfig cfg;
    cfg.a1 = weight(gen);
    cfg.a2 = weight(gen) + 0.01;
    cfg.p = 0.5 + weight(gen);
    cfg.literal_final_sum = t % 5 == 0;

    const auto want = oracle::brute_force_helr(model, topo, cfg);
    if (!want.feasible) {
      try {
        plan_helr(model, topo, cfg);
        return {false, "planner found a placement the oracle rejects"};
      } catch (const InfeasibleError&) {
        ++infeasible;
      }
      continue;
    }
    const Placement got = plan_helr(model, topo, cfg);
    if (got.objective != want.objective) {
      std::ostringstream os;
      os.precision(17);
      os << "topology " << t << ": objective " << got.objective << " vs "
         << want.objective;
      return {false, os.str()};
    }
    ++compared;
  }
  const bool enough = compared >= 500;
  return {enough, std::to_string(compared) + " feasible topologies equal, " +
                      std::to_string(infeasible) + " infeasible agreed"};
}

std::vector<Request> random_set(std::mt19937_64& gen, std::size_t n) {
  std::uniform_int_distribution<Tokens> len(1, 128);
  std::uniform_int_distribution<int> slo(1, 60);
  std::uniform_int_distribution<int> arrival(0, 8);
  std::vector<Request> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(profiled(i, slo(gen), len(gen), len(gen), arrival(gen)));
  }
  return out;
}

SchedulerConfig random_sched(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> w(0.0, 2.0);
  std::uniform_real_distribution<double> thr(1.0, 2000.0);
  SchedulerConfig cfg;
  cfg.w1 = w(gen) + 0.01;
  cfg.w2 = w(gen) + 0.01;
  cfg.l1_overhead = 0.5 + w(gen);
  cfg.l2_overhead = 0.5 + w(gen);
  cfg.threshold = thr(gen);
  cfg.max_batch_size = 1 + gen() % 16;
  cfg.additive_output_term = gen() % 4 == 0;
  return cfg;
}

// 3. Batcher invariants.
Outcome batcher_invariants() {
  std::mt19937_64 gen(3003);
  for (int t = 0; t < 1000; ++t) {
    const auto reqs = random_set(gen, 1 + gen() % 40);
    const SchedulerConfig cfg = random_sched(gen);
    const auto plans = schedule_slo_odbs(reqs, cfg);

    std::multiset<RequestId> seen;
    for (const auto& p : plans) {
      seen.insert(p.request_ids().begin(), p.request_ids().end());
    }
    std::multiset<RequestId> want;
    for (const auto& r : reqs) want.insert(r.id());
    if (seen != want) return {false, "set " + std::to_string(t) + ": (a)"};

    double prev = -std::numeric_limits<double>::infinity();
    for (const auto& p : plans) {
      double lo = std::numeric_limits<double>::infinity();
      for (RequestId id : p.request_ids()) lo = std::min(lo, reqs[id].slo());
      if (lo < prev) return {false, "set " + std::to_string(t) + ": (b)"};
      prev = lo;
    }

    SchedulerConfig no_w1 = cfg;
    no_w1.w1 = 0.0;
    SchedulerConfig no_w2 = cfg;
    no_w2.w2 = 0.0;
    if (schedule_slo_odbs(reqs, no_w1) != schedule_slo_dbs(reqs, cfg) ||
        schedule_slo_odbs(reqs, no_w2) != schedule_odbs(reqs, cfg)) {
      return {false, "set " + std::to_string(t) + ": (c)"};
    }
  }
  return {true, "1000 sets"};
}

const ModelSpec& sim_model() {
  static const ModelSpec model = builtin_model("chatglm2-6b");
  return model;
}
const Topology& sim_topology() {
  static const Topology topo = builtin_topology("rtx3090x4");
  return topo;
}

// 4. Generated-token dominance and optimality gap.
Outcome token_dominance() {
  std::mt19937_64 gen(4004);
  const Placement placement =
      plan_helr(sim_model(), sim_topology(), DeployerConfig{});
  std::int64_t gap_any = 0, gap_same = 0, worst_any = 0;
  int strict = 0, optimal = 0;
  for (int t = 0; t < 500; ++t) {
    const auto reqs = random_set(gen, 1 + t % 8);
    const SchedulerConfig cfg = random_sched(gen);
    const auto plans = schedule_slo_odbs(reqs, cfg);
    const auto single = schedule_fifo(reqs, reqs.size());
    const Tokens ours = plan_token_cost(plans, reqs).generated;
    const Tokens fifo = plan_token_cost(single, reqs).generated;
    if (ours > fifo) {
      return {false, "set " + std::to_string(t) + ": " +
                         std::to_string(ours) + " > " + std::to_string(fifo)};
    }
    strict += ours < fifo;

    std::vector<std::int64_t> lens;
    for (const auto& r : reqs) lens.push_back(r.predicted());
    const auto bounds = oracle::partition_token_bounds(lens);
    gap_any += ours - bounds.best_any;
    gap_same += ours - bounds.best_with_blocks[plans.size()];
    worst_any = std::max<std::int64_t>(worst_any, ours - bounds.best_any);
    optimal += ours == bounds.best_any;

    record_run("c4 set " + std::to_string(t), plans, reqs,
               simulate(plans, reqs, placement.map, sim_topology(),
                        sim_model(), CostModel{}));
  }

  // Outputs {5, 5, 50, 50}: split 2*5 + 2*50 = 110 vs one batch 4*50 = 200.
  std::vector<Request> four = {profiled(0, 1, 5, 8, 0), profiled(1, 1, 5, 8, 0),
                               profiled(2, 2, 50, 8, 0),
                               profiled(3, 2, 50, 8, 0)};
  SchedulerConfig split;
  split.w1 = 0.0;
  split.w2 = 1.0;
  split.threshold = 100.0;
  const auto four_plans = schedule_slo_odbs(four, split);
  const Tokens four_ours = plan_token_cost(four_plans, four).generated;
  const Tokens four_fifo =
      plan_token_cost(schedule_fifo(four, four.size()), four).generated;
  record_run("c4 constructed", four_plans, four,
             simulate(four_plans, four, placement.map, sim_topology(),
                      sim_model(), CostModel{}));

  std::ostringstream os;
  os << "500 sets dominated (" << strict << " strictly); constructed "
     << four_ours << " vs " << four_fifo << "; gap to best partition mean "
     << static_cast<double>(gap_any) / 500 << " max " << worst_any
     << " tokens, gap at equal batch count mean "
     << static_cast<double>(gap_same) / 500 << "; optimal in " << optimal
     << "/500";
  return {four_ours == 110 && four_fifo == 200, os.str()};
}

// 5. Preset ordering on synthetic traces.
Outcome preset_ordering() {
  const int traces = 20;
  int latency_ok = 0, slo_ok = 0, devices_ok = 0;
  double base_sum = 0.0, ua_sum = 0.0;
  const ExperimentConfig cfg;
  for (int s = 0; s < traces; ++s) {
    TraceGenConfig gen_cfg;
    gen_cfg.n = 200;
    const auto trace = gen_trace(gen_cfg, 5000 + s);
    const std::uint64_t seed = 77 + s;
    auto base = run_preset(trace, sim_topology(), sim_model(), "baseline",
                           cfg, seed);
    auto ud = run_preset(trace, sim_topology(), sim_model(), "ud", cfg, seed);
    auto ub = run_preset(trace, sim_topology(), sim_model(), "ub", cfg, seed);
    auto ua = run_preset(trace, sim_topology(), sim_model(), "ua", cfg, seed);

    latency_ok += ua.metrics.mean_latency <= base.metrics.mean_latency;
    slo_ok += ua.metrics.slo_violation_rate <= ub.metrics.slo_violation_rate &&
              ub.metrics.slo_violation_rate <= base.metrics.slo_violation_rate;
    const DeviceMap bgs = plan_bgs(sim_model(), sim_topology());
    devices_ok += ud.placement.map.device_count() <= bgs.device_count();
    base_sum += base.metrics.mean_latency;
    ua_sum += ua.metrics.mean_latency;

    for (auto* run : {&base, &ud, &ub, &ua}) {
      record_run("c5 seed " + std::to_string(s) + " " + run->scheduler + "+" +
                     run->planner,
                 run->plans, run->profiled,
                 SimResult{run->metrics, run->log});
    }
  }
  std::ostringstream os;
  os << "(a) ua<=baseline latency " << latency_ok << "/" << traces
     << " (mean " << ua_sum / traces << " vs " << base_sum / traces
     << " s), (b) ua<=ub<=baseline SLO violations " << slo_ok << "/"
     << traces << ", (c) ud<=bgs devices " << devices_ok << "/" << traces;
  const bool pass = latency_ok * 100 >= 95 * traces &&
                    slo_ok * 100 >= 90 * traces && devices_ok == traces;
  return {pass, os.str()};
}

// 6. Predictor guarantees.
Outcome profiler_guarantees() {
  std::mt19937_64 gen(6006);
  std::uniform_int_distribution<Tokens> len(1, 4096);
  const MonitorState fresh;
  const BucketedPredictor bucketed{50};
  for (int i = 0; i < 100000; ++i) {
    const Request r(static_cast<RequestId>(i), 0.0, 1, len(gen), 1.0);
    if (profile(r, bucketed, fresh, 0).predicted() < r.true_output_len()) {
      return {false, "bucketed under-predicted length " +
                         std::to_string(r.true_output_len())};
    }
  }

  const double rate = 0.0049;
  const int draws = 100000;
  const NoisyPredictor noisy{rate, 50};
  int hits = 0;
  for (int i = 0; i < draws; ++i) {
    const Request r(static_cast<RequestId>(i), 0.0, 1, len(gen), 1.0);
    const Tokens p = profile(r, noisy, fresh, 6006).predicted();
    hits += bucket_of(p, 50) == bucket_of(r.true_output_len(), 50);
  }
  const double acc = static_cast<double>(hits) / draws;
  const double target = 1.0 - rate;
  const double se = std::sqrt(target * (1.0 - target) / draws);
  std::ostringstream os;
  os.precision(6);
  os << "bucketed never under-predicts over 1e5 lengths; noisy accuracy "
     << acc << " vs " << target << " +/- " << 3 * se;
  return {std::abs(acc - target) <= 3 * se, os.str()};
}

// 7. Conservation over every run of criteria 4 and 5.
Outcome conservation() {
  std::size_t product_exact = 0;
  for (const auto& run : g_runs) {
    const SimMetrics& m = run.result.metrics;
    const double tokens = static_cast<double>(m.generated_tokens);
    // throughput is the correctly rounded quotient tokens / makespan, so the
    // exact residual of throughput * makespan is within half an ulp of it.
    if (m.throughput != tokens / m.makespan) {
      return {false, run.origin + ": throughput is not tokens / makespan"};
    }
    const double residual = std::fma(m.throughput, m.makespan, -tokens);
    const double ulp = std::nextafter(m.throughput, INFINITY) - m.throughput;
    if (std::abs(residual) > 0.5 * ulp * m.makespan) {
      return {false, run.origin + ": throughput * makespan residual too big"};
    }
    product_exact += m.throughput * m.makespan == tokens;

    Tokens expected = 0;
    std::unordered_map<RequestId, const Request*> by_id;
    for (const auto& r : run.requests) by_id[r.id()] = &r;
    for (const auto& p : run.plans) {
      Tokens true_max = 0;
      for (RequestId id : p.request_ids()) {
        true_max = std::max(true_max, by_id.at(id)->true_output_len());
      }
      expected += static_cast<Tokens>(p.size()) *
                  std::max(true_max, p.max_output_len());
    }
    if (expected != m.generated_tokens) {
      return {false, run.origin + ": generated token count mismatch"};
    }

    std::multiset<RequestId> done;
    for (const auto& e : run.result.log) {
      if (e.kind == EventKind::kRequestDone) done.insert(e.payload);
    }
    std::multiset<RequestId> want;
    for (const auto& r : run.requests) want.insert(r.id());
    if (done != want) {
      return {false, run.origin + ": request completion count mismatch"};
    }
  }
  std::ostringstream os;
  os << g_runs.size() << " runs; tokens conserved, each request done once; "
     << "floating product equals tokens bit-for-bit in " << product_exact
     << "/" << g_runs.size() << ", rest within half an ulp";
  return {!g_runs.empty(), os.str()};
}

#ifdef SERVESIM_CLI_PATH
std::string run_cli(const std::string& args, int* code) {
  const std::string cmd =
      std::string(SERVESIM_CLI_PATH) + " " + args + " 2>&1";
  std::string out;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) {
    *code = -1;
    return out;
  }
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof(buf), pipe)) > 0) out.append(buf, got);
  const int status = pclose(pipe);
  *code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return out;
}
#endif

// 8. Round-trips and CLI determinism.
Outcome roundtrip_determinism() {
  std::mt19937_64 gen(8008);
  int checked = 0;
  for (int t = 0; t < 50; ++t) {
    TraceGenConfig gc;
    gc.n = 1 + gen() % 300;
    gc.arrival = static_cast<ArrivalModel>(t % 3);
    gc.len_dist = static_cast<LengthDist>(t % 2);
    const auto raw = gen_trace(gc, gen());
    const auto trace = profile_trace(raw, NoisyPredictor{0.1, 16}, {}, t);
    if (parse_trace(emit_trace(raw)) != raw ||
        parse_trace(emit_trace(trace)) != trace) {
      return {false, "trace round-trip, case " + std::to_string(t)};
    }
    const auto plans = schedule_slo_odbs(trace, random_sched(gen));
    if (parse_plans(emit_plans(plans)) != plans) {
      return {false, "plans round-trip, case " + std::to_string(t)};
    }
    const auto topo = testing::random_topology(gen, 1 + gen() % 6);
    if (parse_topology(emit_topology(topo)) != topo) {
      return {false, "topology round-trip, case " + std::to_string(t)};
    }
    const Tokens layers = 1 + gen() % 100;
    const ModelSpec model("m" + std::to_string(t),
                          static_cast<Bytes>(layers) * (200 + gen() % 1500),
                          layers, 1 + gen() % 8192, 1 + gen() % 8);
    if (parse_model(emit_model(model)) != model) {
      return {false, "model round-trip, case " + std::to_string(t)};
    }
    try {
      const Placement p = plan_helr(model, topo, {});
      const Placement back = parse_placement(emit_placement(p));
      if (back.map != p.map || back.objective != p.objective ||
          back.chain_latency != p.chain_latency) {
        return {false, "placement round-trip, case " + std::to_string(t)};
      }
      const auto sim =
          simulate(plans, trace, p.map, topo, model, CostModel{});
      const MetricsRecord rec = make_record("case" + std::to_string(t),
                                            "slo-odbs", "helr", "noisy", t,
                                            sim.metrics, p.map);
      const std::vector<MetricsRecord> recs = {rec};
      if (parse_metrics(emit_metrics(recs)) != recs) {
        return {false, "metrics round-trip, case " + std::to_string(t)};
      }
    } catch (const InfeasibleError&) {
    }
    ++checked;
  }

  std::string cli_note = "CLI not built";
#ifdef SERVESIM_CLI_PATH
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() /
                       ("servesim_accept_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const std::string trace_path = (dir / "trace.jsonl").string();
  const std::string cfg_path = (dir / "noisy.cfg").string();
  write_file(cfg_path, "predictor = noisy\nerror_rate = 0.2\n");
  const std::vector<std::string> invocations = {
      "gen --n 200 --seed 9 --out " + trace_path,
      "gen --n 50 --seed 3 --arrival uniform --len-dist lognormal",
      "plan --topology rtx3090x4 --model chatglm2-6b --planner helr",
      "schedule --trace " + trace_path + " --scheduler slo-odbs --config " +
          cfg_path + " --seed 4",
      "simulate --trace " + trace_path +
          " --topology rtx3090x4 --model chatglm2-6b --preset ua --config " +
          cfg_path + " --seed 4 --events " + (dir / "ev.txt").string()};
  int identical = 0;
  for (const auto& args : invocations) {
    int c1 = 0, c2 = 0;
    const std::string a = run_cli(args, &c1);
    const std::string ev1 =
        fs::exists(dir / "ev.txt") ? read_file((dir / "ev.txt").string()) : "";
    const std::string trace1 =
        fs::exists(trace_path) ? read_file(trace_path) : "";
    const std::string b = run_cli(args, &c2);
    const std::string ev2 =
        fs::exists(dir / "ev.txt") ? read_file((dir / "ev.txt").string()) : "";
    const std::string trace2 =
        fs::exists(trace_path) ? read_file(trace_path) : "";
    if (c1 != 0 || c2 != 0 || a != b || ev1 != ev2 || trace1 != trace2) {
      fs::remove_all(dir);
      return {false, "CLI output differs or failed for: " + args};
    }
    ++identical;
  }
  fs::remove_all(dir);
  cli_note = std::to_string(identical) + " CLI invocations bit-identical";
#endif
  return {true, std::to_string(checked) + " round-trip cases; " + cli_note};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> body;
  };
  const std::vector<Criterion> criteria = {
      {1, "KV-cache size exactness", 1.0, kv_exactness},
      {2, "placement optimality", 30.0, helr_optimality},
      {3, "batcher invariants", 30.0, batcher_invariants},
      {4, "token dominance", 60.0, token_dominance},
      {5, "preset ordering", 120.0, preset_ordering},
      {6, "profiler guarantees", 60.0, profiler_guarantees},
      {7, "simulator conservation", 60.0, conservation},
      {8, "round-trip and determinism", 120.0, roundtrip_determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome out;
    try {
      out = timed(c.budget_s, c.body);
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    failed += !out.pass;
    std::cout << (out.pass ? "PASS" : "FAIL") << " criterion " << c.id << " ("
              << c.name << "): " << out.detail << std::endl;
  }
  std::cout << (failed ? "FAILED " : "ALL PASSED ") << criteria.size() - failed
            << "/" << criteria.size() << std::endl;
  return failed ? 1 : 0;
}
