#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <limits>
#include <optional>
#include <ostream>
#include <queue>
#include <string>
#include <vector>

#include "dcb/channels.hpp"
#include "dcb/errors.hpp"
#include "dcb/phy.hpp"
#include "dcb/rng.hpp"
#include "dcb/scenario.hpp"

namespace dcb {

struct WlanMetrics {
  double throughput_bps = 0.0;  // Gamma
  double access_delay_s = 0.0;  // delta
  double packet_delay_s = 0.0;  // d
  double drop_ratio = 0.0;      // phi
  double avg_aggregated = 0.0;  // n_a
  std::uint64_t attempts = 0;
  std::uint64_t successes = 0;
  std::uint64_t collisions = 0;
  std::uint64_t drops = 0;
  std::uint64_t generated = 0;
  std::uint64_t delivered = 0;
  std::uint64_t in_buffer = 0;   // at the horizon, including the in-flight frame
  std::uint64_t in_flight = 0;   // packets of an unfinished exchange at the horizon
  bool buffer_filled = false;    // queue reached capacity at least once
  bool saturated = false;

  bool transmitted_any() const { return successes > 0; }

  friend bool operator==(const WlanMetrics&, const WlanMetrics&) = default;
};

struct SimOptions {
  double duration_s = 0.0;
  std::uint64_t seed = 1;
  std::ostream* trace = nullptr;
  bool collect_packet_delays = false;
};

struct SimSummary {
  std::vector<WlanMetrics> wlans;
  std::vector<std::vector<double>> packet_delays_s;  // only when requested
  std::uint64_t events_processed = 0;
  std::uint64_t carrier_sense_violations = 0;
  double duration_s = 0.0;

  friend bool operator==(const SimSummary&, const SimSummary&) = default;
};

namespace detail {

enum class EvKind : int {
  exchange_end = 0,
  rts_boundary = 1,
  nav_expire = 2,
  retry = 3,
  difs_done = 4,
  backoff_expire = 5,
  arrival = 6,
};

struct Event {
  std::int64_t t_ns;
  int kind;
  int wlan;
  std::uint64_t tag;
  std::uint64_t seq;

  bool operator>(const Event& o) const {
    if (t_ns != o.t_ns) return t_ns > o.t_ns;
    if (kind != o.kind) return kind > o.kind;
    if (wlan != o.wlan) return wlan > o.wlan;
    return seq > o.seq;
  }
};

enum class Mode { idle, blocked, wait_difs, counting, tx, timeout_wait };

/// Event-driven CSMA/CA engine over one scenario. Strictly single-threaded
/// and deterministic: one event queue with total ordering (time, event-type
/// rank, WLAN id, sequence number) and independent per-WLAN random streams.
class Simulator {
 public:
  Simulator(const Scenario& sc, const SimOptions& opt) : sc_(sc), opt_(opt) {
    if (!(opt.duration_s > 0.0))
      raise(Errc::invalid_scenario, "simulation duration must be > 0");
    end_ns_ = to_ns(opt.duration_s * 1e6);
    init();
  }

  SimSummary run() {
    while (!queue_.empty()) {
      const Event ev = queue_.top();
      if (ev.t_ns > end_ns_) break;
      queue_.pop();
      ++events_;
      dispatch(ev);
    }
    return finalize();
  }

 private:
  struct Station {
    // configuration
    ChannelAllocation alloc;
    Policy policy = Policy::OP;
    TrafficModel traffic;
    int ap_node = 0;
    int sta_base = 0;
    int sta_count = 1;
    // random streams: arrivals, backoff, PU draws, frame errors, destinations
    RandomStream arrivals, backoff, pu, eta, dest;
    // buffer
    std::deque<std::int64_t> buffer;
    // contention state
    Mode mode = Mode::idle;
    std::uint64_t epoch = 0;
    int stage = 0;
    bool have_counter = false;
    std::int64_t remaining_slots = 0;
    std::int64_t count_anchor_ns = 0;
    std::int64_t nav_until_ns = std::numeric_limits<std::int64_t>::min();
    // channel view
    std::array<bool, kBasicChannels> busy{};
    std::array<std::int64_t, kBasicChannels> busy_since{};
    std::array<std::int64_t, kBasicChannels> idle_since{};
    // in-flight exchange
    bool tx_active = false;
    ChannelRange tx_range;
    std::int64_t tx_start_ns = 0;
    std::int64_t tx_air_ns = 0;
    int tx_n_agg = 0;
    int tx_dest = 0;
    bool tx_corrupted = false;
    bool tx_eta_fail = false;
    // metrics
    std::uint64_t generated = 0, drops = 0, delivered = 0;
    std::uint64_t attempts = 0, successes = 0, collisions = 0;
    std::uint64_t agg_sum = 0, delivered_bits = 0;
    double delay_sum_ns = 0.0;
    std::uint64_t delay_count = 0;
    double access_sum_ns = 0.0;
    std::uint64_t access_count = 0;
    std::int64_t last_success_start_ns = -1;
    bool backlog_broken = true;
    bool buffer_filled = false;
    std::vector<double> raw_delays;
  };

  static std::int64_t to_ns(double us) { return std::llround(us * 1000.0); }

  void init() {
    const int n = sc_.wlan_count();
    slot_ns_ = to_ns(sc_.timing.slot_us);
    sifs_ns_ = to_ns(sc_.timing.sifs_us);
    difs_ns_ = to_ns(sc_.timing.difs_us);
    pifs_ns_ = to_ns(sc_.timing.pifs_us);
    cca_mw_ = dbm_to_mw(sc_.radio.cca_dbm);
    noise_mw_ = dbm_to_mw(sc_.radio.noise_dbm);
    for (int g = 0; g < kBasicChannels; ++g)
      leak_mult_[static_cast<std::size_t>(g)] =
          std::pow(10.0, sc_.radio.adjacent_leakage_db * g / 10.0);

    const std::size_t nodes = sc_.radio.positions.size();
    rx_dbm_.assign(nodes * nodes, kPowerFloorDbm);
    rx_mw_.assign(nodes * nodes, 0.0);
    for (std::size_t a = 0; a < nodes; ++a)
      for (std::size_t b = 0; b < nodes; ++b) {
        if (a == b) continue;
        const double dbm = sc_.radio.tx_power_dbm + sc_.radio.tx_gain_db +
                           sc_.radio.rx_gain_db -
                           path_loss_db(distance(sc_.radio.positions[a],
                                                 sc_.radio.positions[b]),
                                        sc_.radio.breakpoint_m);
        rx_dbm_[a * nodes + b] = dbm;
        rx_mw_[a * nodes + b] = dbm_to_mw(dbm);
      }

    stations_.resize(static_cast<std::size_t>(n));
    for (int w = 0; w < n; ++w) {
      Station& s = stations_[static_cast<std::size_t>(w)];
      const WlanConfig& cfg = sc_.wlans[static_cast<std::size_t>(w)];
      s.alloc = cfg.allocation;
      s.policy = cfg.policy;
      s.traffic = cfg.traffic;
      s.ap_node = sc_.ap_node(w);
      s.sta_base = sc_.sta_node(w, 0);
      s.sta_count = sc_.sta_count(w);
      const std::uint64_t wt = static_cast<std::uint64_t>(w);
      s.arrivals = RandomStream(derive_seed(opt_.seed, wt, stream_tag("arrivals")));
      s.backoff = RandomStream(derive_seed(opt_.seed, wt, stream_tag("backoff")));
      s.pu = RandomStream(derive_seed(opt_.seed, wt, stream_tag("pu")));
      s.eta = RandomStream(derive_seed(opt_.seed, wt, stream_tag("eta")));
      s.dest = RandomStream(derive_seed(opt_.seed, wt, stream_tag("dest")));
      s.busy_since.fill(std::numeric_limits<std::int64_t>::min() / 4);
      s.idle_since.fill(std::numeric_limits<std::int64_t>::min() / 4);
      if (s.traffic.load_bps > 0.0) schedule_next_arrival(w, 0);
    }
  }

  // --- scheduling ---------------------------------------------------------

  void schedule(EvKind kind, std::int64_t t, int wlan, std::uint64_t tag = 0) {
    queue_.push(Event{t, static_cast<int>(kind), wlan, tag, seq_++});
  }

  void schedule_next_arrival(int w, std::int64_t now) {
    Station& s = stations_[static_cast<std::size_t>(w)];
    const double packets_per_arrival =
        s.traffic.kind == TrafficModel::Kind::bursty ? s.traffic.burst_packets : 1;
    const double mean_gap_s =
        packets_per_arrival * sc_.timing.packet_bits / s.traffic.load_bps;
    const double gap = s.arrivals.exponential(mean_gap_s);
    schedule(EvKind::arrival, now + std::llround(gap * 1e9), w);
  }

  // --- power and sensing --------------------------------------------------

  double contribution_mw(int tx_wlan, int node, int channel) const {
    const Station& t = stations_[static_cast<std::size_t>(tx_wlan)];
    const double base =
        rx_mw_[static_cast<std::size_t>(t.ap_node) * sc_.radio.positions.size() +
               static_cast<std::size_t>(node)];
    const int gap = channel_gap(t.tx_range, channel);
    return base / static_cast<double>(t.tx_range.width()) *
           leak_mult_[static_cast<std::size_t>(gap)];
  }

  double sensed_mw(int listener_wlan, int channel) const {
    const Station& l = stations_[static_cast<std::size_t>(listener_wlan)];
    double sum = 0.0;
    for (int v = 0; v < sc_.wlan_count(); ++v) {
      if (v == listener_wlan) continue;
      if (!stations_[static_cast<std::size_t>(v)].tx_active) continue;
      sum += contribution_mw(v, l.ap_node, channel);
    }
    return sum;
  }

  double interference_mw_at(int node, const ChannelRange& band, int exclude_wlan) const {
    double sum = 0.0;
    for (int v = 0; v < sc_.wlan_count(); ++v) {
      if (v == exclude_wlan) continue;
      if (!stations_[static_cast<std::size_t>(v)].tx_active) continue;
      for (int c = band.left; c <= band.right; ++c) sum += contribution_mw(v, node, c);
    }
    return sum;
  }

  double sinr_at(int node, int tx_wlan, const ChannelRange& band) const {
    const Station& t = stations_[static_cast<std::size_t>(tx_wlan)];
    const double signal =
        rx_dbm_[static_cast<std::size_t>(t.ap_node) * sc_.radio.positions.size() +
                static_cast<std::size_t>(node)];
    const double denom = interference_mw_at(node, band, tx_wlan) + noise_mw_;
    return signal - mw_to_dbm(denom);
  }

  /// Re-derives every station's per-channel busy view after a radiation
  /// change; freezes counters whose primary turned busy and re-arms DIFS for
  /// stations whose primary turned idle.
  void update_sensing(std::int64_t t) {
    for (int w = 0; w < sc_.wlan_count(); ++w) {
      Station& s = stations_[static_cast<std::size_t>(w)];
      const int pc = s.alloc.primary;
      const bool primary_was = s.busy[static_cast<std::size_t>(pc - 1)];
      for (int c = 1; c <= kBasicChannels; ++c) {
        const bool now = sensed_mw(w, c) >= cca_mw_;
        const auto ci = static_cast<std::size_t>(c - 1);
        if (now != s.busy[ci]) {
          if (now)
            s.busy_since[ci] = t;
          else
            s.idle_since[ci] = t;
          s.busy[ci] = now;
        }
      }
      const bool primary_now = s.busy[static_cast<std::size_t>(pc - 1)];
      if (s.tx_active) continue;  // a transmitter reacts when its exchange ends
      if (!primary_was && primary_now) {
        if (s.mode == Mode::wait_difs) {
          ++s.epoch;
          s.mode = Mode::blocked;
        } else if (s.mode == Mode::counting) {
          const std::int64_t elapsed = (t - s.count_anchor_ns) / slot_ns_;
          const std::int64_t rem = s.remaining_slots - elapsed;
          if (rem > 0) {
            // the slot in progress does not count; expiry event is now stale
            s.remaining_slots = rem;
            ++s.epoch;
            s.mode = Mode::blocked;
          }
          // rem == 0: its expiry fires at exactly t and stays committed
        }
      } else if (primary_was && !primary_now) {
        if (s.mode == Mode::blocked && !s.buffer.empty() && t >= s.nav_until_ns)
          start_difs(w, t);
      }
    }
  }

  // --- contention ---------------------------------------------------------

  void start_difs(int w, std::int64_t t) {
    Station& s = stations_[static_cast<std::size_t>(w)];
    s.mode = Mode::wait_difs;
    ++s.epoch;
    schedule(EvKind::difs_done, t + difs_ns_, w, s.epoch);
  }

  void contend(int w, std::int64_t t) {
    Station& s = stations_[static_cast<std::size_t>(w)];
    if (s.busy[static_cast<std::size_t>(s.alloc.primary - 1)] || t < s.nav_until_ns) {
      ++s.epoch;
      s.mode = Mode::blocked;
    } else {
      start_difs(w, t);
    }
  }

  void set_nav(int w, std::int64_t until, std::int64_t) {
    Station& s = stations_[static_cast<std::size_t>(w)];
    if (until > s.nav_until_ns) {
      s.nav_until_ns = until;
      schedule(EvKind::nav_expire, until, w);
    }
  }

  int cw(const Station& s) const {
    return sc_.timing.cw_min << std::min(s.stage, sc_.timing.backoff_stages);
  }

  // --- event handlers -----------------------------------------------------

  void dispatch(const Event& ev) {
    switch (static_cast<EvKind>(ev.kind)) {
      case EvKind::exchange_end: on_exchange_end(ev); break;
      case EvKind::rts_boundary: on_rts_boundary(ev); break;
      case EvKind::nav_expire: on_nav_expire(ev); break;
      case EvKind::retry: on_retry(ev); break;
      case EvKind::difs_done: on_difs_done(ev); break;
      case EvKind::backoff_expire: on_backoff_expire(ev); break;
      case EvKind::arrival: on_arrival(ev); break;
    }
  }

  void on_arrival(const Event& ev) {
    Station& s = stations_[static_cast<std::size_t>(ev.wlan)];
    const int packets =
        s.traffic.kind == TrafficModel::Kind::bursty ? s.traffic.burst_packets : 1;
    for (int i = 0; i < packets; ++i) {
      ++s.generated;
      if (static_cast<int>(s.buffer.size()) >= sc_.timing.buffer_packets) {
        ++s.drops;
        s.buffer_filled = true;
        trace(ev.t_ns, ev.wlan, "drop", std::nullopt, "buffer-full");
      } else {
        s.buffer.push_back(ev.t_ns);
        if (static_cast<int>(s.buffer.size()) >= sc_.timing.buffer_packets)
          s.buffer_filled = true;
        if (s.buffer.size() == 1 && s.mode == Mode::idle) contend(ev.wlan, ev.t_ns);
      }
    }
    schedule_next_arrival(ev.wlan, ev.t_ns);
  }

  void on_difs_done(const Event& ev) {
    Station& s = stations_[static_cast<std::size_t>(ev.wlan)];
    if (ev.tag != s.epoch || s.mode != Mode::wait_difs) return;
    if (!s.have_counter) {
      s.remaining_slots =
          static_cast<std::int64_t>(s.backoff.uniform_int(static_cast<std::uint64_t>(cw(s))));
      s.have_counter = true;
    }
    s.mode = Mode::counting;
    s.count_anchor_ns = ev.t_ns;
    schedule(EvKind::backoff_expire, ev.t_ns + s.remaining_slots * slot_ns_, ev.wlan,
             s.epoch);
  }

  /// Channels sensed continuously idle for at least a PIFS before t. A
  /// radiation that began exactly at t does not disqualify: the listener
  /// committed in the same slot and cannot have sensed it.
  ChannelSet qualified_idle_set(const Station& s, std::int64_t t) const {
    ChannelSet idle;
    for (int c = 1; c <= kBasicChannels; ++c) {
      const auto ci = static_cast<std::size_t>(c - 1);
      if (s.busy[ci] && s.busy_since[ci] != t) continue;
      if (t - s.idle_since[ci] >= pifs_ns_) idle.set(c);
    }
    return idle;
  }

  void on_backoff_expire(const Event& ev) {
    Station& s = stations_[static_cast<std::size_t>(ev.wlan)];
    if (ev.tag != s.epoch || s.mode != Mode::counting) return;
    s.remaining_slots = 0;
    const ChannelSet idle = qualified_idle_set(s, ev.t_ns);
    if (!idle.test(s.alloc.primary)) {
      // cannot happen while the freeze bookkeeping is consistent
      ++cs_violations_;
      s.have_counter = false;
      contend(ev.wlan, ev.t_ns);
      return;
    }
    const double draw = s.policy == Policy::PU ? s.pu.uniform01() : 0.0;
    const auto range = select_channel(s.policy, s.alloc, idle, draw);
    if (!range) {
      trace(ev.t_ns, ev.wlan, "scb-blocked", std::nullopt, "-");
      s.have_counter = false;  // fresh draw, same contention window
      contend(ev.wlan, ev.t_ns);
      return;
    }
    start_exchange(ev.wlan, *range, ev.t_ns);
  }

  void start_exchange(int w, const ChannelRange& range, std::int64_t t) {
    Station& s = stations_[static_cast<std::size_t>(w)];
    ++s.attempts;
    s.tx_range = range;
    s.tx_start_ns = t;
    s.tx_n_agg = std::min<int>(static_cast<int>(s.buffer.size()), sc_.timing.max_aggregation);
    s.tx_dest = s.sta_count > 1
                    ? s.sta_base + static_cast<int>(s.dest.uniform_int(
                                       static_cast<std::uint64_t>(s.sta_count)))
                    : s.sta_base;
    s.tx_eta_fail = false;

    const double rx = rx_dbm_[static_cast<std::size_t>(s.ap_node) *
                                  sc_.radio.positions.size() +
                              static_cast<std::size_t>(s.tx_dest)];
    const auto mcs = select_mcs(sc_.mcs, rx, range.width());
    const McsEntry& entry = mcs ? *mcs : sc_.mcs.entries.front();
    const FrameDurations f =
        frame_durations(sc_.timing, range.width(), entry, s.tx_n_agg);
    rts_ns_cache_ = to_ns(f.rts_us);
    s.tx_air_ns = to_ns(f.rts_us) + 3 * sifs_ns_ + to_ns(f.cts_us) + to_ns(f.data_us) +
                  to_ns(f.back_us);

    // carrier-sense audit: every chosen channel must have been PIFS-idle
    for (int c = range.left; c <= range.right; ++c) {
      const auto ci = static_cast<std::size_t>(c - 1);
      const bool fresh = s.busy[ci] && s.busy_since[ci] == t;
      if ((s.busy[ci] && !fresh) || t - s.idle_since[ci] < pifs_ns_) ++cs_violations_;
    }

    s.tx_corrupted = !mcs || sinr_at(s.tx_dest, w, range) <= sc_.radio.capture_threshold_db;
    s.tx_active = true;
    s.mode = Mode::tx;
    ++s.epoch;

    // a new interferer may push ongoing receptions below the capture threshold
    for (int v = 0; v < sc_.wlan_count(); ++v) {
      if (v == w) continue;
      Station& o = stations_[static_cast<std::size_t>(v)];
      if (!o.tx_active || o.tx_corrupted) continue;
      if (sinr_at(o.tx_dest, v, o.tx_range) <= sc_.radio.capture_threshold_db)
        o.tx_corrupted = true;
    }
    // NAV: idle neighbors that decode this preamble on their primary defer
    // until the announced exchange end
    for (int v = 0; v < sc_.wlan_count(); ++v) {
      if (v == w) continue;
      Station& o = stations_[static_cast<std::size_t>(v)];
      if (o.tx_active) continue;
      if (!range.contains(o.alloc.primary)) continue;
      if (sinr_at(o.ap_node, w, range) > sc_.radio.capture_threshold_db)
        set_nav(v, t + s.tx_air_ns, t);
    }
    update_sensing(t);
    schedule(EvKind::rts_boundary, t + rts_ns_cache_, w);
    trace(t, w, "tx-start", range, mcs ? "mcs" + std::to_string(entry.index) : "no-link");
  }

  void on_rts_boundary(const Event& ev) {
    Station& s = stations_[static_cast<std::size_t>(ev.wlan)];
    if (!s.tx_active) return;
    if (s.tx_corrupted) {
      // no CTS: free the channel and back off with a doubled window
      s.tx_active = false;
      update_sensing(ev.t_ns);
      ++s.collisions;
      s.mode = Mode::timeout_wait;
      const std::int64_t cts_ns =
          to_ns(legacy_frame_us(sc_.timing, sc_.timing.cts_bits));
      schedule(EvKind::retry, ev.t_ns + sifs_ns_ + cts_ns + slot_ns_, ev.wlan);
      trace(ev.t_ns, ev.wlan, "cts-timeout", s.tx_range, "-");
      return;
    }
    s.tx_eta_fail = s.eta.uniform01() < sc_.error_probability;
    schedule(EvKind::exchange_end, s.tx_start_ns + s.tx_air_ns, ev.wlan);
  }

  void on_retry(const Event& ev) {
    Station& s = stations_[static_cast<std::size_t>(ev.wlan)];
    if (s.mode != Mode::timeout_wait) return;
    s.stage = std::min(s.stage + 1, sc_.timing.backoff_stages);
    s.have_counter = false;
    contend(ev.wlan, ev.t_ns);
  }

  void on_nav_expire(const Event& ev) {
    Station& s = stations_[static_cast<std::size_t>(ev.wlan)];
    if (ev.t_ns < s.nav_until_ns) return;  // superseded by a longer NAV
    if (s.mode == Mode::blocked && !s.buffer.empty() &&
        !s.busy[static_cast<std::size_t>(s.alloc.primary - 1)])
      start_difs(ev.wlan, ev.t_ns);
  }

  void on_exchange_end(const Event& ev) {
    Station& s = stations_[static_cast<std::size_t>(ev.wlan)];
    if (!s.tx_active) return;
    s.tx_active = false;
    update_sensing(ev.t_ns);
    const bool success = !s.tx_corrupted && !s.tx_eta_fail;
    if (success) {
      for (int i = 0; i < s.tx_n_agg; ++i) {
        const std::int64_t arrival = s.buffer.front();
        s.buffer.pop_front();
        s.delay_sum_ns += static_cast<double>(ev.t_ns - arrival);
        if (opt_.collect_packet_delays)
          s.raw_delays.push_back(static_cast<double>(ev.t_ns - arrival) * 1e-9);
        ++s.delay_count;
      }
      s.delivered += static_cast<std::uint64_t>(s.tx_n_agg);
      s.delivered_bits +=
          static_cast<std::uint64_t>(s.tx_n_agg) *
          static_cast<std::uint64_t>(sc_.timing.packet_bits);
      ++s.successes;
      s.agg_sum += static_cast<std::uint64_t>(s.tx_n_agg);
      if (s.last_success_start_ns >= 0 && !s.backlog_broken) {
        s.access_sum_ns += static_cast<double>(s.tx_start_ns - s.last_success_start_ns);
        ++s.access_count;
      }
      s.last_success_start_ns = s.tx_start_ns;
      s.backlog_broken = s.buffer.empty();
      s.stage = 0;
      s.have_counter = false;
      trace(ev.t_ns, ev.wlan, "tx-end", s.tx_range,
            "ok n=" + std::to_string(s.tx_n_agg));
    } else {
      ++s.collisions;
      s.stage = std::min(s.stage + 1, sc_.timing.backoff_stages);
      s.have_counter = false;
      trace(ev.t_ns, ev.wlan, "tx-end", s.tx_range,
            s.tx_eta_fail ? "frame-error" : "not-decoded");
    }
    if (!s.buffer.empty())
      contend(ev.wlan, ev.t_ns);
    else
      s.mode = Mode::idle;
  }

  // --- reporting ----------------------------------------------------------

  void trace(std::int64_t t, int wlan, const char* kind,
             std::optional<ChannelRange> range, const std::string& outcome) {
    if (!opt_.trace) return;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", static_cast<double>(t) / 1000.0);
    (*opt_.trace) << buf << ' ' << sc_.wlans[static_cast<std::size_t>(wlan)].id << ' '
                  << kind << ' ' << (range ? to_string(*range) : std::string("-")) << ' '
                  << outcome << '\n';
  }

  SimSummary finalize() {
    SimSummary out;
    out.duration_s = opt_.duration_s;
    out.events_processed = events_;
    out.carrier_sense_violations = cs_violations_;
    for (int w = 0; w < sc_.wlan_count(); ++w) {
      Station& s = stations_[static_cast<std::size_t>(w)];
      WlanMetrics m;
      m.generated = s.generated;
      m.delivered = s.delivered;
      m.drops = s.drops;
      m.attempts = s.attempts;
      m.successes = s.successes;
      m.collisions = s.collisions;
      m.in_buffer = s.buffer.size();
      m.in_flight = s.tx_active ? static_cast<std::uint64_t>(s.tx_n_agg) : 0;
      m.buffer_filled = s.buffer_filled;
      m.throughput_bps = static_cast<double>(s.delivered_bits) / opt_.duration_s;
      m.packet_delay_s = s.delay_count ? s.delay_sum_ns / static_cast<double>(s.delay_count) * 1e-9 : 0.0;
      m.access_delay_s = s.access_count ? s.access_sum_ns / static_cast<double>(s.access_count) * 1e-9 : 0.0;
      m.drop_ratio = s.generated ? static_cast<double>(s.drops) / static_cast<double>(s.generated) : 0.0;
      m.avg_aggregated = s.successes ? static_cast<double>(s.agg_sum) / static_cast<double>(s.successes) : 0.0;
      m.saturated = m.drop_ratio > 0.0;
      out.wlans.push_back(m);
      if (opt_.collect_packet_delays) out.packet_delays_s.push_back(std::move(s.raw_delays));
    }
    return out;
  }

  const Scenario& sc_;
  SimOptions opt_;
  std::int64_t end_ns_ = 0;
  std::int64_t slot_ns_ = 0, sifs_ns_ = 0, difs_ns_ = 0, pifs_ns_ = 0;
  std::int64_t rts_ns_cache_ = 0;
  double cca_mw_ = 0.0, noise_mw_ = 0.0;
  std::array<double, kBasicChannels> leak_mult_{};
  std::vector<double> rx_dbm_, rx_mw_;
  std::vector<Station> stations_;
  std::priority_queue<Event, std::vector<Event>, std::greater<Event>> queue_;
  std::uint64_t seq_ = 0;
  std::uint64_t events_ = 0;
  std::uint64_t cs_violations_ = 0;
};

}  // namespace detail

/// Runs the event-driven engine. Deterministic given (scenario, duration,
/// seed); per-WLAN random streams keep arrivals, backoff, PU draws and frame
/// errors independent of each other.
inline SimSummary run_simulation(const Scenario& sc, const SimOptions& opt) {
  detail::Simulator sim(sc, opt);
  return sim.run();
}

/// Fraction of WLANs delivering less than epsilon of their offered load.
/// Zero-load WLANs cannot starve.
inline double starvation_ratio(const std::vector<WlanMetrics>& metrics,
                               const std::vector<double>& loads_bps, double epsilon) {
  if (!(epsilon > 0.0) || epsilon > 1.0)
    raise(Errc::usage_error, "starvation threshold must be in (0,1]");
  if (metrics.size() != loads_bps.size())
    raise(Errc::usage_error, "metrics/loads size mismatch");
  if (metrics.empty()) return 0.0;
  int starving = 0;
  for (std::size_t i = 0; i < metrics.size(); ++i)
    if (loads_bps[i] > 0.0 && metrics[i].throughput_bps < epsilon * loads_bps[i])
      ++starving;
  return static_cast<double>(starving) / static_cast<double>(metrics.size());
}

enum class DelayOutcome { first_better, second_better, draw };

inline const char* delay_outcome_name(DelayOutcome o) {
  switch (o) {
    case DelayOutcome::first_better: return "first-better";
    case DelayOutcome::second_better: return "second-better";
    case DelayOutcome::draw: return "draw";
  }
  return "?";
}

/// Compares mean packet delay of the same WLAN under two policies with a
/// draw margin.
inline DelayOutcome delay_share_compare(const WlanMetrics& first,
                                        const WlanMetrics& second, double margin_s) {
  if (!first.transmitted_any() || !second.transmitted_any())
    raise(Errc::missing_metrics, "delay comparison needs transmissions under both policies");
  const double diff = first.packet_delay_s - second.packet_delay_s;
  if (diff < -margin_s) return DelayOutcome::first_better;
  if (diff > margin_s) return DelayOutcome::second_better;
  return DelayOutcome::draw;
}

/// Whether a WLAN carried its offered load up to the tolerance margin.
inline bool success_probability(double throughput_bps, double load_bps,
                                double margin) {
  if (!(load_bps > 0.0)) raise(Errc::zero_load, "offered load must be > 0");
  return throughput_bps >= (1.0 - margin) * load_bps;
}

}  // namespace dcb
