#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numeric>

#include "servesim/batcher.h"
#include "servesim/config.h"
#include "servesim/deployer.h"
#include "servesim/errors.h"
#include "servesim/experiment.h"
#include "servesim/io.h"
#include "servesim/workload.h"

namespace servesim {
namespace {

TEST(TraceIoTest, RoundTrip) {
  TraceGenConfig cfg;
  cfg.n = 50;
  auto trace = gen_trace(cfg, 3);
  trace[4] = trace[4].with_prediction(77);
  const auto text = emit_trace(trace);
  EXPECT_EQ(parse_trace(text), trace);
  EXPECT_EQ(emit_trace(parse_trace(text)), text);
}

TEST(TraceIoTest, EmptyAndBlankLines) {
  EXPECT_TRUE(parse_trace("").empty());
  EXPECT_TRUE(parse_trace("\n\n").empty());
  const std::string line =
      R"({"id":1,"arrival_time":0.5,"input_len":3,"true_output_len":4,"slo":2})";
  EXPECT_EQ(parse_trace("\n" + line + "\n\n").size(), 1u);
}

TEST(TraceIoTest, ErrorsCarryLineNumbers) {
  const std::string good =
      R"({"id":1,"arrival_time":0,"input_len":3,"true_output_len":4,"slo":2})";
  const std::string neg_slo =
      R"({"id":2,"arrival_time":0,"input_len":3,"true_output_len":4,"slo":-1})";
  try {
    parse_trace(good + "\n" + neg_slo + "\n");
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  try {
    parse_trace(good + "\n" + good + "\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  try {
    parse_trace(good + "\n{not json\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(parse_trace(R"({"id":1,"arrival_time":0,"input_len":3,)"
                           R"("true_output_len":4,"slo":2,"colour":1})"),
               ParseError);
  EXPECT_THROW(parse_trace(R"({"id":1,"arrival_time":0,"input_len":3.5,)"
                           R"("true_output_len":4,"slo":2})"),
               ParseError);
}

TEST(TopologyIoTest, LinkClassesExpandToMatrix) {
  const Topology topo = parse_topology(four_gpu_topology_json(1.0, 2.0));
  ASSERT_EQ(topo.size(), 4u);
  const std::vector<std::vector<double>> want = {
      {0, 1, 2, 2}, {1, 0, 2, 2}, {2, 2, 0, 1}, {2, 2, 1, 0}};
  EXPECT_EQ(topo.link_latency(), want);
  EXPECT_EQ(topo.node(3).performance, 300.0);
}

TEST(TopologyIoTest, RoundTrip) {
  const Topology topo = builtin_topology("rtx3090x4");
  EXPECT_EQ(parse_topology(emit_topology(topo)), topo);
}

TEST(TopologyIoTest, RejectsBadClassMatrices) {
  const std::string devices =
      R"("devices":[{"id":0,"memory_bytes":1,"performance":1,"power_watts":1},)"
      R"({"id":1,"memory_bytes":1,"performance":1,"power_watts":1}])";
  auto with = [&](const std::string& classes) {
    return "{" + devices + ",\"link_classes\":" + classes +
           R"(,"class_latency":{"PIX":1,"NODE":2}})";
  };
  EXPECT_NO_THROW(parse_topology(with(R"([["X","PIX"],["PIX","X"]])")));
  EXPECT_THROW(parse_topology(with(R"([["X","X"],["X","X"]])")), ParseError);
  EXPECT_THROW(parse_topology(with(R"([["X","PIX"],["NODE","X"]])")),
               ParseError);
  EXPECT_THROW(parse_topology(with(R"([["X","SYS"],["SYS","X"]])")),
               ParseError);
  EXPECT_THROW(parse_topology("{" + devices + "}"), ParseError);
  EXPECT_THROW(parse_topology("{" + devices +
                              R"(,"latency":[[0,1],[2,0]]})"),
               ValidationError);
}

TEST(ModelIoTest, RoundTrip) {
  const ModelSpec model = builtin_model("chatglm2-6b");
  EXPECT_EQ(parse_model(emit_model(model)), model);
  EXPECT_THROW(parse_model(R"({"name":"m","total_memory":10,"num_layers":0,)"
                           R"("hidden_dim":4,"kv_bytes_per_elem":4})"),
               ValidationError);
}

TEST(PlacementIoTest, RoundTrip) {
  const Placement p =
      plan_helr(builtin_model("chatglm2-6b"), builtin_topology("rtx3090x4"),
                {});
  const Placement back = parse_placement(emit_placement(p));
  EXPECT_EQ(back.map, p.map);
  EXPECT_EQ(back.objective, p.objective);
  EXPECT_EQ(back.chain_latency, p.chain_latency);
}

TEST(PlansIoTest, RoundTrip) {
  TraceGenConfig cfg;
  cfg.n = 40;
  const auto trace =
      profile_trace(gen_trace(cfg, 9), OraclePredictor{}, {}, 0);
  const auto plans = schedule_slo_odbs(trace, {});
  EXPECT_EQ(parse_plans(emit_plans(plans)), plans);
  EXPECT_TRUE(parse_plans("").empty());
}

TEST(MetricsIoTest, RoundTripAndCsv) {
  MetricsRecord r;
  r.label = "a,b";
  r.scheduler = "fifo";
  r.planner = "bgs";
  r.predictor = "oracle";
  r.seed = 7;
  r.num_requests = 3;
  r.num_batches = 2;
  r.devices_used = 1;
  r.generated_tokens = 100;
  r.makespan = 0.1;
  r.mean_latency = 1.0 / 3.0;
  r.throughput = 1000.0;
  r.utilization = {0.25, 0.0};
  r.mean_utilization = 0.25;
  const std::vector<MetricsRecord> records = {r, r};
  EXPECT_EQ(parse_metrics(emit_metrics(records)), records);

  const std::string csv = report_csv(records);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "label,scheduler,planner,predictor,seed,num_requests,num_batches,"
            "devices_used,generated_tokens,padding_tokens,makespan,"
            "mean_latency,p95_latency,throughput,slo_violation_rate,"
            "mean_utilization,utilization");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_NE(csv.find("\"a,b\",fifo,bgs,oracle,7,3,2,1,100,0,0.1,"),
            std::string::npos);
  EXPECT_NE(csv.find(",0.25;0\n"), std::string::npos);
  EXPECT_FALSE(report_table(records).empty());
}

TEST(FileIoTest, MissingFileIsAnIoError) {
  EXPECT_THROW(read_file("/nonexistent/servesim/trace.jsonl"), IoError);
  const auto path =
      std::filesystem::temp_directory_path() / "servesim_io_test.txt";
  write_file(path.string(), "abc\n");
  EXPECT_EQ(read_file(path.string()), "abc\n");
  std::filesystem::remove(path);
}

TEST(ConfigParseTest, KeysAndErrors) {
  const auto cfg = parse_config(
      "# tuned\n"
      "w1 = 0.25\n"
      "threshold=900  # inline\n"
      "max_batch_size = 16\n"
      "literal_final_sum = true\n"
      "comm_mode = per_iteration\n"
      "predictor = noisy\n"
      "error_rate = 0.1\n"
      "bucket_width = 20\n"
      "monitor = off\n");
  EXPECT_EQ(cfg.scheduler.w1, 0.25);
  EXPECT_EQ(cfg.scheduler.threshold, 900.0);
  EXPECT_EQ(cfg.scheduler.max_batch_size, 16u);
  EXPECT_TRUE(cfg.deployer.literal_final_sum);
  EXPECT_EQ(cfg.cost.comm_mode, CommMode::kPerIteration);
  const auto* noisy = std::get_if<NoisyPredictor>(&cfg.predictor);
  ASSERT_NE(noisy, nullptr);
  EXPECT_EQ(noisy->error_rate, 0.1);
  EXPECT_EQ(noisy->bucket_width, 20);
  EXPECT_FALSE(cfg.monitor.enabled);

  try {
    parse_config("w1 = 1\nwidth = 3\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(parse_config("w1 = fast\n"), ParseError);
  EXPECT_THROW(parse_config("w1\n"), ParseError);
  EXPECT_THROW(parse_config("w1 = 0\nw2 = 0\n"), ConfigError);
}

TEST(GenTraceTest, DeterministicAndWithinRanges) {
  TraceGenConfig cfg;
  cfg.n = 300;
  const auto a = gen_trace(cfg, 42);
  EXPECT_EQ(a, gen_trace(cfg, 42));
  EXPECT_NE(a, gen_trace(cfg, 43));
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].id(), i);
    if (i > 0) {
      EXPECT_LE(a[i - 1].arrival_time(), a[i].arrival_time());
    }
    EXPECT_GE(a[i].slo(), cfg.slo_min);
    EXPECT_LE(a[i].slo(), cfg.slo_max);
    EXPECT_GE(a[i].input_len(), cfg.input_min);
    EXPECT_LE(a[i].input_len(), cfg.input_max);
    EXPECT_GE(a[i].true_output_len(), cfg.output_min);
    EXPECT_LE(a[i].true_output_len(), cfg.output_max);
    EXPECT_FALSE(a[i].profiled());
  }
}

TEST(GenTraceTest, SloMeanMatchesUniform) {
  TraceGenConfig cfg;
  cfg.n = 1000;
  const auto trace = gen_trace(cfg, 5);
  double sum = 0.0;
  for (const auto& r : trace) sum += r.slo();
  const double mean = sum / cfg.n;
  const double width = cfg.slo_max - cfg.slo_min;
  const double sigma = width / std::sqrt(12.0) / std::sqrt(1000.0);
  EXPECT_NEAR(mean, (cfg.slo_min + cfg.slo_max) / 2, 3 * sigma);
}

TEST(GenTraceTest, ArrivalModels) {
  TraceGenConfig cfg;
  cfg.n = 100;
  cfg.arrival = ArrivalModel::kBurst;
  for (const auto& r : gen_trace(cfg, 1)) EXPECT_EQ(r.arrival_time(), 0.0);
  cfg.arrival = ArrivalModel::kUniform;
  cfg.window = 3.0;
  for (const auto& r : gen_trace(cfg, 1)) EXPECT_LE(r.arrival_time(), 3.0);
  cfg.len_dist = LengthDist::kLogNormal;
  for (const auto& r : gen_trace(cfg, 1)) {
    EXPECT_GE(r.true_output_len(), cfg.output_min);
    EXPECT_LE(r.true_output_len(), cfg.output_max);
  }
  EXPECT_THROW(parse_arrival_model("weibull"), ConfigError);
  cfg.slo_min = 5;
  cfg.slo_max = 1;
  EXPECT_THROW(gen_trace(cfg, 1), ConfigError);
}

}  // namespace
}  // namespace servesim
