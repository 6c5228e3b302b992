#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dcb/sim.hpp"

using namespace dcb;
using Catch::Approx;

namespace {

const std::string kFixtures = FIXTURES_DIR;

template <typename F>
Errc code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected a dcb::Error");
  return Errc::io_error;
}

Scenario isolated_wlan(double load_bps, TrafficModel::Kind kind = TrafficModel::Kind::poisson) {
  Scenario sc;
  sc.error_probability = 0.0;
  WlanConfig w;
  w.id = "A";
  w.ap = {0, 0};
  w.stas = {{0, 1}};
  w.allocation = make_allocation({1, 1}, 1);
  w.policy = Policy::OP;
  w.traffic.kind = kind;
  w.traffic.load_bps = load_bps;
  w.traffic.burst_packets = kind == TrafficModel::Kind::bursty ? 10 : 1;
  sc.wlans.push_back(w);
  sc.finalize();
  return sc;
}

Scenario toy2(bool overlap) {
  return load_config(kFixtures + (overlap ? "/toy_scenario_2_overlap.json"
                                          : "/toy_scenario_2_nonoverlap.json"));
}

SimSummary quick_run(const Scenario& sc, double duration, std::uint64_t seed,
                     std::ostream* trace = nullptr) {
  SimOptions opt;
  opt.duration_s = duration;
  opt.seed = seed;
  opt.trace = trace;
  return run_simulation(sc, opt);
}

void check_conservation(const SimSummary& s) {
  for (const WlanMetrics& m : s.wlans) {
    REQUIRE(m.generated == m.delivered + m.drops + m.in_buffer);
    REQUIRE(m.in_flight <= m.in_buffer);
  }
}

}  // namespace

TEST_CASE("isolated WLAN carries its offered load") {
  Scenario sc = isolated_wlan(76.8e6);
  const SimSummary s = quick_run(sc, 50.0, 42);
  REQUIRE(s.wlans[0].throughput_bps == Approx(76.8e6).epsilon(0.02));
  REQUIRE(s.wlans[0].drop_ratio == 0.0);
  REQUIRE_FALSE(s.wlans[0].saturated);
  REQUIRE(s.carrier_sense_violations == 0);
  check_conservation(s);
}

TEST_CASE("a fixed seed reproduces bit-identical metrics") {
  Scenario sc = load_config(kFixtures + "/toy_scenario_1.json");
  const SimSummary a = quick_run(sc, 20.0, 7);
  const SimSummary b = quick_run(sc, 20.0, 7);
  REQUIRE(a == b);
  const SimSummary c = quick_run(sc, 20.0, 8);
  REQUIRE(a.wlans != c.wlans);
}

TEST_CASE("packet conservation holds exactly") {
  for (double load : {5e6, 76.8e6, 200e6}) {
    Scenario sc = isolated_wlan(load);
    check_conservation(quick_run(sc, 10.0, 3));
  }
  check_conservation(quick_run(toy2(true), 10.0, 3));
  check_conservation(quick_run(toy2(false), 10.0, 3));
}

TEST_CASE("saturation fills the buffer before packets drop") {
  Scenario sc = isolated_wlan(200e6);  // above the 20 MHz capacity
  const SimSummary s = quick_run(sc, 20.0, 5);
  REQUIRE(s.wlans[0].drop_ratio > 0.0);
  REQUIRE(s.wlans[0].buffer_filled);
  REQUIRE(s.wlans[0].saturated);
  REQUIRE(s.wlans[0].throughput_bps < 200e6);
}

TEST_CASE("aggregation grows from one packet to the cap across loads") {
  double prev = 0.0;
  for (double load : {2e6, 20e6, 60e6, 100e6, 150e6}) {
    Scenario sc = isolated_wlan(load);
    const SimSummary s = quick_run(sc, 20.0, 11);
    const double agg = s.wlans[0].avg_aggregated;
    REQUIRE(agg >= 1.0);
    REQUIRE(agg <= 64.0);
    REQUIRE(agg >= prev - 0.5);  // monotone trend, small noise allowed
    prev = agg;
  }
  REQUIRE(quick_run(isolated_wlan(1e6), 20.0, 11).wlans[0].avg_aggregated ==
          Approx(1.0).margin(0.05));
  REQUIRE(quick_run(isolated_wlan(200e6), 20.0, 11).wlans[0].avg_aggregated ==
          Approx(64.0).margin(0.5));
}

TEST_CASE("non-overlapping allocations decouple the three-WLAN toy") {
  Scenario sc = toy2(false);
  for (WlanConfig& w : sc.wlans) w.traffic.load_bps = 120e6;  // below the 40 MHz rate
  sc.finalize();
  const SimSummary s = quick_run(sc, 30.0, 21);
  for (const WlanMetrics& m : s.wlans) {
    REQUIRE(m.throughput_bps == Approx(120e6).epsilon(0.02));
    REQUIRE(m.drop_ratio == 0.0);
  }
  REQUIRE(s.carrier_sense_violations == 0);
}

TEST_CASE("bursty arrivals carry the same offered load") {
  Scenario sc = isolated_wlan(50e6, TrafficModel::Kind::bursty);
  const SimSummary s = quick_run(sc, 30.0, 17);
  REQUIRE(s.wlans[0].throughput_bps == Approx(50e6).epsilon(0.03));
  check_conservation(s);
}

TEST_CASE("frame errors cut throughput under saturation") {
  Scenario sc = isolated_wlan(200e6);
  const double clean = quick_run(sc, 20.0, 9).wlans[0].throughput_bps;
  sc.error_probability = 0.1;
  sc.finalize();
  const double noisy = quick_run(sc, 20.0, 9).wlans[0].throughput_bps;
  REQUIRE(noisy < clean);
  REQUIRE(noisy == Approx(clean * 0.9).epsilon(0.05));
}

TEST_CASE("same-primary neighbours only overlap on simultaneous expiry") {
  // two WLANs sharing primary 1, stations placed between the APs so that
  // concurrent transmissions cannot be captured
  Scenario sc;
  sc.error_probability = 0.0;
  WlanConfig a;
  a.id = "A";
  a.ap = {0, 0};
  a.stas = {{4, 0}};
  a.allocation = make_allocation({1, 1}, 1);
  a.policy = Policy::OP;
  a.traffic.load_bps = 80e6;
  WlanConfig b = a;
  b.id = "B";
  b.ap = {10, 0};
  b.stas = {{6, 0}};
  sc.wlans = {a, b};
  sc.finalize();

  std::ostringstream trace;
  const SimSummary s = quick_run(sc, 10.0, 33, &trace);
  REQUIRE(s.carrier_sense_violations == 0);
  REQUIRE(s.wlans[0].collisions + s.wlans[1].collisions > 0);

  // replay the trace: transmissions of the two WLANs must never overlap in
  // time unless they started in the same instant
  struct Span {
    double start = 0, end = 0;
  };
  std::vector<Span> spans[2];
  std::map<std::string, int> ids{{"A", 0}, {"B", 1}};
  std::istringstream in(trace.str());
  std::string line;
  double open_start[2] = {-1, -1};
  while (std::getline(in, line)) {
    std::istringstream row(line);
    double t;
    std::string id, kind, range;
    row >> t >> id >> kind >> range;
    const int w = ids.at(id);
    if (kind == "tx-start") open_start[w] = t;
    if (kind == "tx-end" || kind == "cts-timeout") {
      REQUIRE(open_start[w] >= 0);
      spans[w].push_back({open_start[w], t});
      open_start[w] = -1;
    }
  }
  REQUIRE(spans[0].size() > 100);
  REQUIRE(spans[1].size() > 100);
  for (const Span& x : spans[0])
    for (const Span& y : spans[1]) {
      if (x.start < y.end && y.start < x.end)  // temporal overlap
        REQUIRE(x.start == y.start);
    }
}

TEST_CASE("capture effect resolves close-range ties") {
  // the toy pair decodes concurrent transmissions thanks to the short
  // AP-STA links, so simultaneous expiries complete as successes
  Scenario sc = load_config(kFixtures + "/toy_scenario_1.json");
  for (WlanConfig& w : sc.wlans) {
    w.policy = Policy::SCB;
    w.traffic.load_bps = 300e6;
  }
  sc.finalize();
  const SimSummary s = quick_run(sc, 20.0, 3);
  REQUIRE(s.wlans[0].collisions == 0);
  REQUIRE(s.wlans[1].collisions == 0);
  REQUIRE(s.wlans[0].successes > 1000);
}

TEST_CASE("trace is emitted only on request and is line structured") {
  Scenario sc = isolated_wlan(20e6);
  std::ostringstream trace;
  quick_run(sc, 1.0, 2, &trace);
  REQUIRE_FALSE(trace.str().empty());
  std::istringstream in(trace.str());
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    double t;
    std::string id, kind, range, outcome;
    REQUIRE((row >> t >> id >> kind >> range >> outcome));
    REQUIRE(t >= 0.0);
    REQUIRE(id == "A");
  }
}

TEST_CASE("invalid runs are rejected") {
  Scenario sc = isolated_wlan(1e6);
  SimOptions opt;
  opt.duration_s = 0.0;
  REQUIRE(code_of([&] { run_simulation(sc, opt); }) == Errc::invalid_scenario);

  Scenario bad;
  WlanConfig w;
  w.id = "A";
  w.ap = {0, 0};
  w.stas = {{0, 0}};  // coincident with the AP
  w.allocation = make_allocation({1, 1}, 1);
  w.traffic.load_bps = 1e6;
  bad.wlans.push_back(w);
  REQUIRE(code_of([&] { bad.finalize(); }) == Errc::invalid_scenario);

  Scenario neg = isolated_wlan(1e6);
  neg.wlans[0].traffic.load_bps = -1.0;
  REQUIRE(code_of([&] { neg.finalize(); }) == Errc::invalid_scenario);
}

TEST_CASE("starvation ratio") {
  std::vector<WlanMetrics> metrics(6);
  std::vector<double> loads(6, 100e6);
  for (WlanMetrics& m : metrics) m.throughput_bps = 100e6;
  metrics[1].throughput_bps = 10e6;
  metrics[4].throughput_bps = 5e6;
  REQUIRE(starvation_ratio(metrics, loads, 0.5) == Approx(2.0 / 6.0));
  REQUIRE(starvation_ratio(metrics, loads, 0.01) == 0.0);

  SECTION("meeting the load exactly never starves") {
    for (WlanMetrics& m : metrics) m.throughput_bps = 100e6;
    REQUIRE(starvation_ratio(metrics, loads, 0.99) == 0.0);
  }
  SECTION("zero-load WLANs cannot starve") {
    std::vector<double> zeros(6, 0.0);
    for (WlanMetrics& m : metrics) m.throughput_bps = 0.0;
    REQUIRE(starvation_ratio(metrics, zeros, 0.5) == 0.0);
  }
  SECTION("threshold validation") {
    REQUIRE(code_of([&] { starvation_ratio(metrics, loads, 0.0); }) == Errc::usage_error);
    REQUIRE(code_of([&] { starvation_ratio(metrics, loads, 1.5); }) == Errc::usage_error);
  }
}

TEST_CASE("delay share comparison") {
  WlanMetrics d1, d2;
  d1.successes = d2.successes = 1;
  d1.packet_delay_s = 0.005;
  d2.packet_delay_s = 0.010;
  REQUIRE(delay_share_compare(d1, d2, 1e-3) == DelayOutcome::first_better);
  d1.packet_delay_s = 0.0103;
  REQUIRE(delay_share_compare(d1, d2, 1e-3) == DelayOutcome::draw);
  REQUIRE(delay_share_compare(d2, d2, 1e-3) == DelayOutcome::draw);
  d1.packet_delay_s = 0.015;
  REQUIRE(delay_share_compare(d1, d2, 1e-3) == DelayOutcome::second_better);
  WlanMetrics silent;
  REQUIRE(code_of([&] { delay_share_compare(d1, silent, 1e-3); }) == Errc::missing_metrics);
}

TEST_CASE("success probability") {
  REQUIRE(success_probability(95e6, 100e6, 0.05));
  REQUIRE_FALSE(success_probability(94.9e6, 100e6, 0.05));
  REQUIRE(success_probability(100e6, 100e6, 0.0));
  REQUIRE(code_of([] { success_probability(1e6, 0.0, 0.05); }) == Errc::zero_load);
}

TEST_CASE("throughput respects the load and the airtime capacity") {
  // effective capacity of the widest usable channel, backoff overhead ignored
  auto airtime_cap = [](const Scenario& sc, int w) {
    const WlanConfig& cfg = sc.wlans[static_cast<std::size_t>(w)];
    const double rx = received_power_dbm(sc.radio, sc.ap_node(w), sc.sta_node(w));
    const auto mcs = select_mcs(sc.mcs, rx, cfg.allocation.allocated.width());
    REQUIRE(mcs);
    return sc.timing.max_aggregation * sc.timing.packet_bits /
           (t_successful_us(sc.timing, cfg.allocation.allocated.width(), *mcs,
                            sc.timing.max_aggregation) *
            1e-6);
  };
  for (double load : {20e6, 76.8e6, 200e6}) {
    Scenario sc = isolated_wlan(load);
    const SimSummary s = quick_run(sc, 20.0, 23);
    REQUIRE(s.wlans[0].throughput_bps <= load * 1.02);
    REQUIRE(s.wlans[0].throughput_bps <= airtime_cap(sc, 0));
  }
  Scenario ov = toy2(true);
  for (WlanConfig& w : ov.wlans) w.traffic.load_bps = 400e6;
  ov.finalize();
  const SimSummary s = quick_run(ov, 10.0, 23);
  for (int w = 0; w < 3; ++w) {
    REQUIRE(s.wlans[static_cast<std::size_t>(w)].throughput_bps <= 400e6 * 1.02);
    REQUIRE(s.wlans[static_cast<std::size_t>(w)].throughput_bps <= airtime_cap(ov, w));
  }
}

TEST_CASE("SCB blocking retries without growing the contention window") {
  // B holds channel 2 often; A's SCB needs {1,2} entirely free, so it gets
  // blocked at backoff expiry but never collides
  Scenario sc;
  sc.error_probability = 0.0;
  WlanConfig a;
  a.id = "A";
  a.ap = {0, 0};
  a.stas = {{0, 1}};
  a.allocation = make_allocation({1, 2}, 1);
  a.policy = Policy::SCB;
  a.traffic.load_bps = 40e6;
  WlanConfig b;
  b.id = "B";
  b.ap = {8, 0};
  b.stas = {{8, 1}};
  b.allocation = make_allocation({2, 2}, 2);
  b.policy = Policy::OP;
  b.traffic.load_bps = 80e6;
  sc.wlans = {a, b};
  sc.finalize();

  std::ostringstream trace;
  const SimSummary s = quick_run(sc, 20.0, 13, &trace);
  REQUIRE(trace.str().find("scb-blocked") != std::string::npos);
  REQUIRE(s.wlans[0].collisions == 0);  // blocking is not a failed attempt
  REQUIRE(s.wlans[0].throughput_bps == Approx(40e6).epsilon(0.02));
  check_conservation(s);
}

TEST_CASE("multiple stations share a WLAN with per-frame destinations") {
  Scenario sc;
  sc.error_probability = 0.0;
  WlanConfig w;
  w.id = "A";
  w.ap = {0, 0};
  w.stas = {{0, 1}, {1.5, 0}, {0, -2.5}};
  w.allocation = make_allocation({1, 2}, 1);
  w.policy = Policy::AM;
  w.traffic.load_bps = 60e6;
  sc.wlans.push_back(w);
  sc.finalize();
  const SimSummary s = quick_run(sc, 20.0, 31);
  REQUIRE(s.wlans[0].throughput_bps == Approx(60e6).epsilon(0.02));
  REQUIRE(s.carrier_sense_violations == 0);
  check_conservation(s);
}

TEST_CASE("raw packet delays are collected on demand") {
  Scenario sc = isolated_wlan(10e6);
  SimOptions opt;
  opt.duration_s = 5.0;
  opt.seed = 3;
  opt.collect_packet_delays = true;
  const SimSummary s = run_simulation(sc, opt);
  REQUIRE(s.packet_delays_s.size() == 1);
  REQUIRE(s.packet_delays_s[0].size() == s.wlans[0].delivered);
  double sum = 0.0;
  for (double d : s.packet_delays_s[0]) {
    REQUIRE(d >= 0.0);
    sum += d;
  }
  REQUIRE(sum / static_cast<double>(s.packet_delays_s[0].size()) ==
          Approx(s.wlans[0].packet_delay_s).epsilon(1e-9));
}

TEST_CASE("low load favours short access delays") {
  Scenario sc = isolated_wlan(20e6);
  const SimSummary s = quick_run(sc, 20.0, 19);
  REQUIRE(s.wlans[0].packet_delay_s > 0.0);
  REQUIRE(s.wlans[0].packet_delay_s < 0.02);
  REQUIRE(s.wlans[0].avg_aggregated < 4.0);
}
