#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

#include "dcb/phy.hpp"
#include "dcb/rng.hpp"

using namespace dcb;
using Catch::Approx;

namespace {

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

RadioEnvironment two_node_env(double d) {
  RadioEnvironment env;
  env.positions = {{0, 0}, {d, 0}};
  return env;
}

}  // namespace

TEST_CASE("path loss dual slope") {
  REQUIRE(path_loss_db(1.0) == Approx(53.2));
  REQUIRE(path_loss_db(9.0) == Approx(77.8195).margin(5e-4));
  REQUIRE(path_loss_db(100.0) == Approx(114.6));
  REQUIRE(code_of([] { path_loss_db(0.0); }) == Errc::non_positive_distance);
  REQUIRE(code_of([] { path_loss_db(-2.0); }) == Errc::non_positive_distance);

  SECTION("the first slope applies up to and including the breakpoint") {
    REQUIRE(path_loss_db(9.0) == Approx(53.2 + 25.8 * std::log10(9.0)));
    REQUIRE(path_loss_db(9.0 + 1e-9) == Approx(56.4 + 29.1 * std::log10(9.0)).margin(1e-6));
  }
  SECTION("strictly increasing within each branch") {
    double prev = path_loss_db(0.5);
    for (double d = 0.6; d <= 9.0; d += 0.1) {
      REQUIRE(path_loss_db(d) > prev);
      prev = path_loss_db(d);
    }
    prev = path_loss_db(9.5);
    for (double d = 10.0; d < 60.0; d += 0.5) {
      REQUIRE(path_loss_db(d) > prev);
      prev = path_loss_db(d);
    }
  }
}

TEST_CASE("received power link budget") {
  RadioEnvironment env = two_node_env(1.0);
  REQUIRE(received_power_dbm(env, 0, 1) == Approx(15.0 - 53.2));

  // boundary construction: distance whose path loss is exactly 97 dB puts a
  // 15 dBm transmitter at the -82 dBm CCA level
  const double d = std::pow(10.0, (97.0 - 56.4) / 29.1);
  env = two_node_env(d);
  REQUIRE(received_power_dbm(env, 0, 1) == Approx(-82.0).margin(1e-9));

  env = two_node_env(1.0);
  env.tx_gain_db = 3.0;
  env.rx_gain_db = 2.0;
  REQUIRE(received_power_dbm(env, 0, 1) == Approx(-33.2));

  env.positions[1] = env.positions[0];
  REQUIRE(code_of([&] { received_power_dbm(env, 0, 1); }) == Errc::non_positive_distance);
}

TEST_CASE("per channel transmit power") {
  REQUIRE(per_channel_tx_power_dbm(15.0, 1) == Approx(15.0));
  REQUIRE(per_channel_tx_power_dbm(15.0, 2) == Approx(11.9897).margin(5e-4));
  REQUIRE(per_channel_tx_power_dbm(15.0, 8) == Approx(5.9691).margin(5e-4));
  REQUIRE(code_of([] { per_channel_tx_power_dbm(15.0, 3); }) == Errc::invalid_width);
}

TEST_CASE("sensed power on a channel") {
  RadioEnvironment env;
  env.positions = {{0, 0}, {1, 0}, {0, 1}};

  SECTION("no transmitters: floor") {
    REQUIRE(sensed_power_dbm(env, 0, {}, 1) == kPowerFloorDbm);
  }
  SECTION("one in-channel transmitter") {
    // -60 dBm at the listener: per-channel power 0 dBm over a path loss of 60
    const double d = std::pow(10.0, (60.0 - 53.2) / 25.8);  // first slope, d < 9 m
    env.positions = {{0, 0}, {d, 0}};
    std::vector<ActiveTransmission> active{{1, {1, 1}, 0.0}};
    REQUIRE(sensed_power_dbm(env, 0, active, 1) == Approx(-60.0).margin(1e-9));
  }
  SECTION("two equal in-channel contributions add in the linear domain") {
    const double d = std::pow(10.0, (60.0 - 53.2) / 25.8);  // first slope, d < 9 m
    env.positions = {{0, 0}, {d, 0}, {-d, 0}};
    std::vector<ActiveTransmission> active{{1, {1, 1}, 0.0}, {2, {1, 1}, 0.0}};
    REQUIRE(sensed_power_dbm(env, 0, active, 1) == Approx(-56.9897).margin(5e-4));
  }
  SECTION("adjacent leakage decays per channel step") {
    const double d = std::pow(10.0, (60.0 - 53.2) / 25.8);  // first slope, d < 9 m
    env.positions = {{0, 0}, {d, 0}};
    std::vector<ActiveTransmission> active{{1, {3, 4}, 0.0}};
    REQUIRE(sensed_power_dbm(env, 0, active, 3) == Approx(-60.0).margin(1e-9));
    REQUIRE(sensed_power_dbm(env, 0, active, 2) == Approx(-80.0).margin(1e-9));
    REQUIRE(sensed_power_dbm(env, 0, active, 1) == Approx(-100.0).margin(1e-9));
    REQUIRE(sensed_power_dbm(env, 0, active, 5) == Approx(-80.0).margin(1e-9));
  }
  SECTION("combining two active sets equals combining their mW sums") {
    RandomStream rng(7);
    for (int trial = 0; trial < 200; ++trial) {
      RadioEnvironment e;
      e.positions.push_back({0, 0});
      std::vector<ActiveTransmission> a, b;
      for (int i = 0; i < 6; ++i) {
        e.positions.push_back({rng.uniform(1.0, 40.0), rng.uniform(1.0, 40.0)});
        const int width = 1 << rng.uniform_int(4);
        const int left = 1 + static_cast<int>(rng.uniform_int(8 / width)) * width;
        ActiveTransmission tx{static_cast<int>(i + 1),
                              {left, left + width - 1},
                              per_channel_tx_power_dbm(15.0, width)};
        (i % 2 == 0 ? a : b).push_back(tx);
      }
      std::vector<ActiveTransmission> both = a;
      both.insert(both.end(), b.begin(), b.end());
      for (int c = 1; c <= kBasicChannels; ++c) {
        const double combined = dbm_to_mw(sensed_power_dbm(e, 0, both, c));
        const double split = dbm_to_mw(sensed_power_dbm(e, 0, a, c)) +
                             dbm_to_mw(sensed_power_dbm(e, 0, b, c));
        REQUIRE(combined == Approx(split).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("sinr") {
  RadioEnvironment env;
  REQUIRE(sinr_db(env, -40.0, kPowerFloorDbm) == Approx(55.0).margin(1e-6));
  REQUIRE(sinr_db(env, -40.0, -60.0) == Approx(20.0).margin(2e-3));
  env.noise_dbm = -300.0;
  REQUIRE(sinr_db(env, -50.0, -50.0) == Approx(0.0).margin(1e-9));
}

TEST_CASE("mcs selection") {
  const McsTable& t = default_mcs_table();
  REQUIRE(t.entries.size() == 12);
  SECTION("rates nondecreasing, sensitivities increasing in index and width") {
    for (int w : {1, 2, 4, 8}) {
      double rate = 0.0, sens = -1e9;
      for (const McsEntry& e : t.entries) {
        REQUIRE(bits_per_symbol(w, e) >= rate);
        rate = bits_per_symbol(w, e);
        REQUIRE(e.min_sensitivity_dbm[static_cast<std::size_t>(width_index(w))] > sens);
        sens = e.min_sensitivity_dbm[static_cast<std::size_t>(width_index(w))];
      }
    }
    for (const McsEntry& e : t.entries)
      for (int wi = 1; wi < 4; ++wi)
        REQUIRE(e.min_sensitivity_dbm[static_cast<std::size_t>(wi)] >
                e.min_sensitivity_dbm[static_cast<std::size_t>(wi - 1)]);
  }
  SECTION("selection") {
    REQUIRE(select_mcs(t, -30.0, 1)->index == 11);
    REQUIRE(select_mcs(t, -30.0, 8)->index == 11);
    REQUIRE(select_mcs(t, -82.0, 1)->index == 0);
    REQUIRE_FALSE(select_mcs(t, -82.5, 1).has_value());
    REQUIRE(select_mcs(t, -60.0, 1)->index == 7);  // MCS 8 needs -59 dBm
  }
}

TEST_CASE("bits per symbol") {
  const McsTable& t = default_mcs_table();
  REQUIRE(bits_per_symbol(1, t.at(11)) == Approx(1950.0));
  REQUIRE(bits_per_symbol(2, t.at(11)) == Approx(3900.0));
  REQUIRE(bits_per_symbol(1, t.at(0)) == Approx(117.0));
  SECTION("raw rates") {
    MacTiming timing;
    REQUIRE(bits_per_symbol(1, t.at(11)) / timing.symbol_us == Approx(121.875));
    REQUIRE(bits_per_symbol(2, t.at(11)) / timing.symbol_us == Approx(243.75));
  }
  SECTION("20->40 MHz doubles exactly; wider widths follow the subcarrier table") {
    for (const McsEntry& e : t.entries) {
      REQUIRE(bits_per_symbol(2, e) == Approx(2.0 * bits_per_symbol(1, e)));
      REQUIRE(bits_per_symbol(4, e) == Approx(bits_per_symbol(1, e) * 980.0 / 234.0));
      REQUIRE(bits_per_symbol(8, e) == Approx(bits_per_symbol(1, e) * 1960.0 / 234.0));
    }
  }
}

namespace {

struct AirtimeCase {
  int width;       // basic channels
  int mcs;
  int n_agg;
  double data_us;
  double t_suc_us;
};

// Hand-computed from the frame formulas with the default constants before
// the implementation existed.
constexpr AirtimeCase kAirtimeOracle[] = {
    {1, 0, 1, 1860, 2155},   {1, 0, 64, 108276, 108571}, {1, 11, 1, 276, 571},
    {1, 11, 64, 6660, 6955}, {2, 0, 1, 1012, 1307},      {2, 0, 64, 54228, 54523},
    {2, 11, 1, 228, 523},    {2, 11, 64, 3412, 3707},    {4, 0, 1, 580, 875},
    {4, 0, 64, 25988, 26283}, {4, 11, 1, 196, 491},      {4, 11, 64, 1716, 2011},
    {8, 0, 1, 372, 667},     {8, 0, 64, 13076, 13371},   {8, 11, 1, 180, 475},
    {8, 11, 64, 948, 1243},
};

}  // namespace

TEST_CASE("frame durations against the hand-computed table") {
  MacTiming timing;
  const McsTable& t = default_mcs_table();
  for (const AirtimeCase& c : kAirtimeOracle) {
    const FrameDurations d = frame_durations(timing, c.width, t.at(c.mcs), c.n_agg);
    INFO("width " << c.width << " mcs " << c.mcs << " n " << c.n_agg);
    REQUIRE(d.rts_us == 56.0);
    REQUIRE(d.cts_us == 48.0);
    REQUIRE(d.back_us == 100.0);
    REQUIRE(d.data_us == c.data_us);
    REQUIRE(t_successful_us(timing, c.width, t.at(c.mcs), c.n_agg) == c.t_suc_us);
  }
}

TEST_CASE("successful exchange duration") {
  MacTiming timing;
  const McsTable& t = default_mcs_table();
  REQUIRE(t_successful_us(timing, 1, t.at(11), 64) == 6955.0);

  SECTION("effective rates sit under the raw rates") {
    const double frame_bits = 64.0 * 12000.0;
    const double eff20 = frame_bits / (6955.0 * 1e-6) / 1e6;
    const double eff40 = frame_bits / (t_successful_us(timing, 2, t.at(11), 64) * 1e-6) / 1e6;
    REQUIRE(eff20 == Approx(110.424).margin(5e-3));
    REQUIRE(eff40 == Approx(207.176).margin(5e-3));
    for (const AirtimeCase& c : kAirtimeOracle) {
      const double eff =
          c.n_agg * 12000.0 / t_successful_us(timing, c.width, t.at(c.mcs), c.n_agg);
      const double raw = bits_per_symbol(c.width, t.at(c.mcs)) / timing.symbol_us;
      REQUIRE(eff < raw);
    }
  }
  SECTION("more aggregation, longer frame") {
    REQUIRE(frame_durations(timing, 1, t.at(11), 1).data_us <
            frame_durations(timing, 1, t.at(11), 64).data_us);
  }
  SECTION("aggregation bounds") {
    REQUIRE(code_of([&] { frame_durations(timing, 1, t.at(11), 0); }) ==
            Errc::invalid_aggregation);
    REQUIRE(code_of([&] { t_successful_us(timing, 1, t.at(11), 65); }) ==
            Errc::invalid_aggregation);
  }
}

TEST_CASE("attempt rate constants") {
  MacTiming timing;
  REQUIRE(timing.mean_backoff_slots() == Approx(7.5));
  REQUIRE(timing.attempt_rate_per_s() == Approx(14814.8148).margin(1e-3));
}

TEST_CASE("mcs table text file") {
  SECTION("the shipped table matches the compiled-in defaults") {
    std::ifstream in(std::string(FIXTURES_DIR) + "/mcs_table.txt");
    REQUIRE(in.good());
    REQUIRE(load_mcs_table(in) == default_mcs_table());
  }
  SECTION("parse errors name the problem") {
    std::istringstream bad("0 1 half -82 -79 -76 -73\n");
    REQUIRE(code_of([&] { load_mcs_table(bad); }) == Errc::parse_error);
    std::istringstream missing("0 1 1/2 -82 -79\n");
    REQUIRE(code_of([&] { load_mcs_table(missing); }) == Errc::parse_error);
    std::istringstream empty("# nothing\n");
    REQUIRE(code_of([&] { load_mcs_table(empty); }) == Errc::parse_error);
  }
}
