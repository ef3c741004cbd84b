#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "tetra_sds/tetra_sds.hpp"

using namespace tetra_sds;

namespace {

ScenarioConfig small_config() {
  ScenarioConfig cfg;
  cfg.traffic.n_f = 10;
  cfg.traffic.n_c = 100;
  cfg.run_length_multiframes = 200;
  cfg.warmup_multiframes = 20;
  cfg.replications = 3;
  cfg.threads = 1;
  return cfg;
}

// Independent timeline arithmetic for the error-free single-user oracle:
// 8 half-slot ticks per frame, MCCH on ticks 0 and 1, frame 18 is index 17.
constexpr std::int64_t kTicksPerFrame = 8;
constexpr double kHalfSlot = 0.0070835;

bool frame18(std::int64_t t) { return (t / kTicksPerFrame) % 18 == 17; }
bool mcch(std::int64_t t) { return t % kTicksPerFrame < 2; }

std::int64_t next_usable(std::int64_t t) {
  while (!mcch(t) || frame18(t)) ++t;
  return t;
}

std::int64_t ceil_tick(double seconds) {
  auto t = static_cast<std::int64_t>(std::ceil(seconds / kHalfSlot - 1e-9));
  return std::max<std::int64_t>(t, 0);
}

struct OracleDelivery {
  double generated;
  double closed;
};

// One responder, no other traffic, no errors.  Each report waits for the
// previous one's ACK, accesses at the next usable MCCH subslot, gets its
// eight reserved subslots from the frame after the access, and is ACKed at
// the next usable subslot after the last fragment.
std::vector<OracleDelivery> oracle_timeline(const std::vector<double>& arrivals, int fragments) {
  std::vector<OracleDelivery> out;
  std::int64_t free_from = 0;
  for (double g : arrivals) {
    const std::int64_t access = next_usable(std::max(ceil_tick(g), free_from));
    const std::int64_t frame = access - access % kTicksPerFrame;
    std::int64_t t = frame + kTicksPerFrame;
    std::int64_t last = access;
    for (int k = 0; k < fragments - 1; ++k) {
      t = next_usable(t);
      last = t;
      ++t;
    }
    const std::int64_t ack = next_usable(last + 1);
    out.push_back({g, static_cast<double>(ack + 1) * kHalfSlot});
    free_from = ack;
  }
  return out;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(TETRA_SDS_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("tetra_sds_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST(EventQueue, OrdersByTickClassTimeStation) {
  EventQueue q;
  Event a;
  a.tick = 5;
  a.cls = EventClass::Timer;
  Event b = a;
  b.cls = EventClass::Arrival;
  b.time = 0.03;
  Event c = b;
  c.time = 0.02;
  Event d = a;
  d.tick = 4;
  Event e = a;
  e.cls = EventClass::Subslot;
  for (const auto& ev : {a, b, c, d, e}) q.push(ev);
  std::vector<std::pair<Tick, EventClass>> order;
  std::vector<double> times;
  while (!q.empty()) {
    const auto ev = q.pop();
    order.emplace_back(ev.tick, ev.cls);
    times.push_back(ev.time);
  }
  EXPECT_EQ(order[0].first, 4);
  EXPECT_EQ(order[1].second, EventClass::Arrival);
  EXPECT_DOUBLE_EQ(times[1], 0.02);
  EXPECT_DOUBLE_EQ(times[2], 0.03);
  EXPECT_EQ(order[3].second, EventClass::Subslot);
  EXPECT_EQ(order[4].second, EventClass::Timer);
}

TEST(EventQueue, RejectsPastEvents) {
  EventQueue q;
  Event e;
  e.tick = 10;
  q.push(e);
  q.pop();
  e.tick = 9;
  EXPECT_THROW(q.push(e), std::logic_error);
}

TEST(Engine, DeterministicForFixedSeed) {
  const auto cfg = small_config();
  const auto a = run_replication(cfg, 1);
  const auto b = run_replication(cfg, 1);
  EXPECT_EQ(a, b);
  const auto c = run_replication(cfg, 2);
  EXPECT_NE(a.counts.generated, 0);
  EXPECT_FALSE(a == c);
}

TEST(Engine, ThreadCountDoesNotChangeResults) {
  auto cfg = small_config();
  cfg.replications = 4;
  cfg.threads = 1;
  const auto serial = run_replications(cfg);
  cfg.threads = 4;
  EXPECT_EQ(run_replications(cfg), serial);
}

TEST(Engine, ConservationPerMessageKind) {
  auto cfg = small_config();
  cfg.traffic.n_c = 300;
  cfg.holding_timer.mode = HoldingTimerSetting::Mode::InverseRate;
  cfg.environment = Environment::HT;
  for (std::uint64_t rep = 0; rep < 3; ++rep) {
    const auto r = run_replication_detailed(cfg, rep);
    for (const auto& k : r.by_kind) EXPECT_TRUE(k.conserved());
    EXPECT_TRUE(r.summary.counts.conserved());
    EXPECT_GT(r.summary.counts.generated, 0);
    EXPECT_GE(r.summary.failure_probability, 0.0);
    EXPECT_LE(r.summary.failure_probability, 1.0);
  }
}

TEST(Engine, EmptySystem) {
  auto cfg = small_config();
  cfg.traffic.n_f = 0;
  cfg.traffic.n_c = 0;
  const auto r = run_replication_detailed(cfg, 0);
  EXPECT_EQ(r.summary.counts.generated, 0);
  EXPECT_FALSE(r.summary.average_delay.has_value());
  EXPECT_FALSE(r.summary.average_paoi.has_value());
  EXPECT_DOUBLE_EQ(r.summary.failure_probability, 0.0);
  EXPECT_EQ(r.bs.successes, 0);
}

TEST(Engine, HorizonIsThousandMultiframes) {
  ScenarioConfig cfg;
  EXPECT_NEAR(cfg.horizon_seconds(), 1020.024, 1e-9);
  auto small = small_config();
  const auto r = run_replication_detailed(small, 0);
  for (const auto& [flow, rec] : r.metrics.ack_flows()) {
    for (const auto& d : rec.deliveries) {
      EXPECT_LE(d.closed_at, small.horizon_seconds() + TimingConstants::subslot_duration);
    }
  }
}

TEST(Engine, StreamNamesAreDistinct) {
  const auto cfg = small_config();
  const auto r = run_replication_detailed(cfg, 0);
  const std::set<std::string> unique(r.stream_names.begin(), r.stream_names.end());
  EXPECT_EQ(unique.size(), r.stream_names.size());
  EXPECT_EQ(r.stream_names.size(), 6u * static_cast<std::size_t>(cfg.traffic.n_tot()));
}

TEST(Engine, ResponderArrivalsIndependentOfBackground) {
  // Responder streams are keyed by role and index, so adding background
  // users must not change how many reports the responders generate.
  auto cfg = small_config();
  cfg.traffic.n_c = 0;
  const auto a = run_replication_detailed(cfg, 4);
  cfg.traffic.n_c = 400;
  const auto b = run_replication_detailed(cfg, 4);
  EXPECT_EQ(a.by_kind[static_cast<std::size_t>(MessageKind::Report)].generated,
            b.by_kind[static_cast<std::size_t>(MessageKind::Report)].generated);
}

TEST(Engine, ErrorFreeSingleResponderMatchesOracle) {
  ScenarioConfig cfg;
  cfg.traffic.n_f = 1;
  cfg.traffic.n_c = 0;
  cfg.traffic.feedback_per_responder_per_s = 0.0;
  cfg.error_free_channel = true;
  cfg.run_length_multiframes = 1000;
  cfg.warmup_multiframes = 0;
  for (std::uint64_t rep = 0; rep < 3; ++rep) {
    const auto r = run_replication_detailed(cfg, rep);
    RngStream s(cfg.master_seed, rep, "responder/0/sds");
    std::vector<double> arrivals;
    for (double t = sample_interarrival(cfg.traffic.lambda_o, s); t < cfg.horizon_seconds();
         t += sample_interarrival(cfg.traffic.lambda_o, s)) {
      arrivals.push_back(t);
    }
    const auto expected = oracle_timeline(arrivals, fragments_needed(800, 92));
    const auto& rec = r.metrics.ack_flows().at(FlowKey{0, 1});
    ASSERT_LE(rec.deliveries.size(), expected.size());
    ASSERT_GE(rec.deliveries.size() + 2, expected.size());
    for (std::size_t i = 0; i < rec.deliveries.size(); ++i) {
      EXPECT_NEAR(rec.deliveries[i].generated_at, expected[i].generated, 1e-12) << i;
      EXPECT_NEAR(rec.deliveries[i].closed_at, expected[i].closed, 1e-9) << "message " << i;
    }
    EXPECT_TRUE(rec.drops.empty());
    EXPECT_EQ(r.bs.collisions, 0);
  }
}

TEST(Engine, PaoiMatchesBruteForceReplay) {
  for (int scenario = 0; scenario < 4; ++scenario) {
    auto cfg = small_config();
    cfg.traffic.n_c = 100 * scenario;
    cfg.environment = static_cast<Environment>(scenario % 3);
    cfg.traffic.lambda_o = 0.05 + 0.1 * scenario;
    const auto r = run_replication_detailed(cfg, static_cast<std::uint64_t>(scenario));
    const double w = cfg.warmup_seconds();
    double delay = 0.0, paoi = 0.0;
    long long nd = 0, np = 0;
    for (const auto& [flow, rec] : r.metrics.ack_flows()) {
      for (std::size_t i = 0; i < rec.deliveries.size(); ++i) {
        const auto& d = rec.deliveries[i];
        if (d.generated_at < w) continue;
        delay += d.closed_at - d.generated_at;
        ++nd;
        if (i > 0) {
          paoi += d.closed_at - rec.deliveries[i - 1].generated_at;
          ++np;
        }
      }
    }
    ASSERT_GT(np, 0);
    EXPECT_EQ(r.summary.delay_samples, nd);
    EXPECT_EQ(r.summary.paoi_samples, np);
    EXPECT_NEAR(*r.summary.average_delay, delay / nd, 1e-9);
    EXPECT_NEAR(*r.summary.average_paoi, paoi / np, 1e-9);
  }
}

TEST(Sweep, FiveRowsAndCsv) {
  auto cfg = small_config();
  cfg.replications = 2;
  const auto table = run_sweep(cfg, "n_c", {"100", "200", "300", "400", "500"});
  ASSERT_EQ(table.rows.size(), 5u);
  const auto csv = to_csv(table);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6);
  EXPECT_EQ(csv.rfind(csv_header(), 0), 0u);
  EXPECT_NE(csv.find("n_c,500,"), std::string::npos);
}

TEST(Sweep, RejectsBadAxisOrValues) {
  const auto cfg = small_config();
  EXPECT_THROW(run_sweep(cfg, "n_c", {}), ValidationError);
  EXPECT_THROW(run_sweep(cfg, "bandwidth", {"1"}), ValidationError);
  EXPECT_THROW(run_sweep(cfg, "n_c", {"900"}), ValidationError);
  EXPECT_EQ(canonical_axis("N_C"), "n_c");
  EXPECT_EQ(canonical_axis("propagation"), "model");
}

TEST(Sweep, SidecarSitsNextToCsv) {
  EXPECT_EQ(sidecar_path("/tmp/out/results.csv"), std::filesystem::path("/tmp/out/results.scenario"));
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch_dir("cli_exit");
  const std::string quick = "--set run.length_multiframes=60 --set metrics.warmup_multiframes=5 "
                            "--replications 2 -q";
  EXPECT_EQ(run_cli(quick + " --out " + (dir / "ok.csv").string()), 0);
  EXPECT_TRUE(std::filesystem::exists(dir / "ok.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "ok.scenario"));
  EXPECT_EQ(run_cli(quick + " --set traffic.n_c=900 --out " + (dir / "bad.csv").string()), 2);
  EXPECT_EQ(run_cli(quick + " --sweep wt= --out " + (dir / "bad.csv").string()), 2);
  EXPECT_EQ(run_cli(quick + " --sweep colour=1,2 --out " + (dir / "bad.csv").string()), 2);
  EXPECT_EQ(run_cli(quick + " --scenario /nonexistent/x.scenario --out " + (dir / "bad.csv").string()), 3);
  EXPECT_EQ(run_cli(quick + " --out /nonexistent/dir/x.csv"), 3);
  EXPECT_NE(run_cli("--no-such-flag"), 0);
  std::filesystem::remove_all(dir);
}

TEST(Cli, SidecarReplayIsByteIdentical) {
  const auto dir = scratch_dir("cli_replay");
  const std::string first = (dir / "first.csv").string();
  const std::string second = (dir / "second.csv").string();
  ASSERT_EQ(run_cli("--set run.length_multiframes=80 --set metrics.warmup_multiframes=5 "
                    "--replications 3 --seed 99 --sweep wt=5,10 -q --out " + first),
            0);
  ASSERT_EQ(run_cli("--scenario " + (dir / "first.scenario").string() + " -q --out " + second), 0);
  const auto a = slurp(first);
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(second));
  EXPECT_EQ(slurp(dir / "first.scenario").substr(slurp(dir / "first.scenario").find('\n')),
            slurp(dir / "second.scenario").substr(slurp(dir / "second.scenario").find('\n')));
  std::filesystem::remove_all(dir);
}
