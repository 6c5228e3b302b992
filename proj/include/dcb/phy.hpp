#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dcb/channels.hpp"
#include "dcb/errors.hpp"

namespace dcb {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

inline double distance(const Point& a, const Point& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

/// dBm floor standing in for "no power at all".
inline constexpr double kPowerFloorDbm = -300.0;

inline double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }
inline double mw_to_dbm(double mw) {
  if (!(mw > 0.0)) return kPowerFloorDbm;
  return 10.0 * std::log10(mw);
}

/// Radio parameters plus the flattened node positions of a scenario.
struct RadioEnvironment {
  std::vector<Point> positions;

  double tx_power_dbm = 15.0;           // P_tx
  double tx_gain_db = 0.0;              // G_tx
  double rx_gain_db = 0.0;              // G_rx
  double cca_dbm = -82.0;               // clear channel assessment threshold
  double capture_threshold_db = 20.0;   // CE, minimum SINR for decoding
  double noise_dbm = -95.0;             // N
  double adjacent_leakage_db = -20.0;   // P_nu, per basic-channel step, < 0
  double breakpoint_m = 9.0;            // d1 of the dual-slope path loss

  friend bool operator==(const RadioEnvironment&, const RadioEnvironment&) = default;
};

inline void validate_radio(const RadioEnvironment& env) {
  if (!(env.capture_threshold_db > 0))
    raise(Errc::invalid_scenario, "capture threshold must be > 0 dB");
  if (!(env.adjacent_leakage_db < 0))
    raise(Errc::invalid_scenario, "adjacent leakage factor must be < 0 dB");
  if (!(env.breakpoint_m > 0))
    raise(Errc::invalid_scenario, "path-loss breakpoint must be > 0 m");
}

/// Dual-slope log-distance path loss for 5 GHz indoor room-corridor
/// conditions. The first slope applies up to and including the breakpoint.
inline double path_loss_db(double d_m, double breakpoint_m = 9.0) {
  if (!(d_m > 0.0))
    raise(Errc::non_positive_distance, "path loss undefined for d <= 0");
  if (d_m <= breakpoint_m) return 53.2 + 25.8 * std::log10(d_m);
  return 56.4 + 29.1 * std::log10(d_m);
}

/// Full-band received power over the link budget P_tx + G_tx + G_rx - PL(d).
inline double received_power_dbm(const RadioEnvironment& env, int tx_node, int rx_node) {
  const double d = distance(env.positions.at(static_cast<std::size_t>(tx_node)),
                            env.positions.at(static_cast<std::size_t>(rx_node)));
  return env.tx_power_dbm + env.tx_gain_db + env.rx_gain_db -
         path_loss_db(d, env.breakpoint_m);
}

/// Transmit power lands per basic channel: the total is spread evenly over
/// the bonded width.
inline double per_channel_tx_power_dbm(double tx_power_dbm, int width) {
  if (!valid_block_width(width))
    raise(Errc::invalid_width, "width " + std::to_string(width) + " not in {1,2,4,8}");
  return tx_power_dbm - 10.0 * std::log10(static_cast<double>(width));
}

/// One on-air transmission as seen by listeners.
struct ActiveTransmission {
  int tx_node = 0;
  ChannelRange range;
  double per_channel_dbm = 0.0;  // at the transmitter, before path loss
};

/// Linear-domain (mW) contribution of one transmission on one basic channel
/// at a receiver, given the full-band received power in mW. Out-of-block
/// channels are attenuated by |P_nu| dB per channel-index step.
inline double channel_contribution_mw(double rx_full_band_mw, int width,
                                      const ChannelRange& range, int channel,
                                      double leakage_db) {
  const double per_channel = rx_full_band_mw / static_cast<double>(width);
  const int gap = channel_gap(range, channel);
  if (gap == 0) return per_channel;
  return per_channel * std::pow(10.0, leakage_db * gap / 10.0);
}

/// Power sensed by a listener on one basic channel: the mW sum of every
/// active transmitter's in-channel or leaked contribution.
inline double sensed_power_dbm(const RadioEnvironment& env, int listener,
                               const std::vector<ActiveTransmission>& active,
                               int channel) {
  double sum_mw = 0.0;
  for (const ActiveTransmission& tx : active) {
    if (tx.tx_node == listener) continue;
    const double d = distance(env.positions.at(static_cast<std::size_t>(tx.tx_node)),
                              env.positions.at(static_cast<std::size_t>(listener)));
    const double rx_per_channel =
        tx.per_channel_dbm + env.tx_gain_db + env.rx_gain_db -
        path_loss_db(d, env.breakpoint_m);
    const int gap = channel_gap(tx.range, channel);
    sum_mw += dbm_to_mw(rx_per_channel + env.adjacent_leakage_db * gap);
  }
  return mw_to_dbm(sum_mw);
}

/// SINR with the environment's noise folded in; interference in dBm may be
/// the floor value when no interferer is active.
inline double sinr_db(const RadioEnvironment& env, double signal_dbm,
                      double interference_dbm) {
  const double denom_mw = dbm_to_mw(interference_dbm) + dbm_to_mw(env.noise_dbm);
  return signal_dbm - mw_to_dbm(denom_mw);
}

// ---------------------------------------------------------------------------
// MCS table
// ---------------------------------------------------------------------------

inline constexpr std::array<int, 4> kDataSubcarriers{234, 468, 980, 1960};

inline int width_index(int width) {
  switch (width) {
    case 1: return 0;
    case 2: return 1;
    case 4: return 2;
    case 8: return 3;
  }
  raise(Errc::invalid_width, "width " + std::to_string(width) + " not in {1,2,4,8}");
}

struct McsEntry {
  int index = 0;
  int modulation_bits = 1;  // Y_m
  int code_num = 1;         // Y_c numerator
  int code_den = 2;         // Y_c denominator
  std::array<double, 4> min_sensitivity_dbm{};  // per width 20/40/80/160 MHz

  friend bool operator==(const McsEntry&, const McsEntry&) = default;
};

struct McsTable {
  std::vector<McsEntry> entries;

  const McsEntry& at(int index) const {
    for (const McsEntry& e : entries)
      if (e.index == index) return e;
    raise(Errc::invalid_scenario, "MCS index " + std::to_string(index) + " not in table");
  }

  friend bool operator==(const McsTable&, const McsTable&) = default;
};

/// IEEE 802.11ax single-stream MCS set with the standard minimum receiver
/// input levels for 20 MHz, +3 dB per bandwidth doubling.
inline const McsTable& default_mcs_table() {
  static const McsTable table = [] {
    constexpr std::array<double, 12> base{-82, -79, -77, -74, -70, -66,
                                          -65, -64, -59, -57, -54, -52};
    constexpr std::array<int, 12> mod{1, 2, 2, 4, 4, 6, 6, 6, 8, 8, 10, 10};
    constexpr std::array<std::pair<int, int>, 12> code{{{1, 2},
                                                        {1, 2},
                                                        {3, 4},
                                                        {1, 2},
                                                        {3, 4},
                                                        {2, 3},
                                                        {3, 4},
                                                        {5, 6},
                                                        {3, 4},
                                                        {5, 6},
                                                        {3, 4},
                                                        {5, 6}}};
    McsTable t;
    for (int i = 0; i < 12; ++i) {
      McsEntry e;
      e.index = i;
      e.modulation_bits = mod[static_cast<std::size_t>(i)];
      e.code_num = code[static_cast<std::size_t>(i)].first;
      e.code_den = code[static_cast<std::size_t>(i)].second;
      for (int w = 0; w < 4; ++w)
        e.min_sensitivity_dbm[static_cast<std::size_t>(w)] =
            base[static_cast<std::size_t>(i)] + 3.0 * w;
      t.entries.push_back(e);
    }
    return t;
  }();
  return table;
}

/// Parses the plain-text MCS table: one row per MCS,
///   index  modulation_bits  code_rate(a/b)  sens20  sens40  sens80  sens160
/// '#' starts a comment.
inline McsTable load_mcs_table(std::istream& in) {
  McsTable t;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream row(line);
    McsEntry e;
    std::string rate;
    if (!(row >> e.index)) continue;  // blank line
    if (!(row >> e.modulation_bits >> rate))
      raise(Errc::parse_error,
            "mcs table line " + std::to_string(lineno) + ": expected modulation and rate");
    const auto slash = rate.find('/');
    try {
      if (slash == std::string::npos)
        raise(Errc::parse_error, "rate");
      e.code_num = std::stoi(rate.substr(0, slash));
      e.code_den = std::stoi(rate.substr(slash + 1));
    } catch (const std::exception&) {
      raise(Errc::parse_error, "mcs table line " + std::to_string(lineno) +
                                   ": coding rate must look like '5/6', got '" + rate + "'");
    }
    for (int w = 0; w < 4; ++w)
      if (!(row >> e.min_sensitivity_dbm[static_cast<std::size_t>(w)]))
        raise(Errc::parse_error, "mcs table line " + std::to_string(lineno) +
                                     ": expected four sensitivities");
    if (e.code_num <= 0 || e.code_den <= 0 || e.modulation_bits <= 0)
      raise(Errc::parse_error,
            "mcs table line " + std::to_string(lineno) + ": nonpositive field");
    t.entries.push_back(e);
  }
  if (t.entries.empty()) raise(Errc::parse_error, "mcs table: no rows");
  return t;
}

/// Data bits carried per OFDM symbol: Y_sc * Y_m * Y_c with one spatial
/// stream. May be fractional (e.g. 80 MHz at coding rate 5/6).
inline double bits_per_symbol(int width, const McsEntry& mcs) {
  const int ysc = kDataSubcarriers[static_cast<std::size_t>(width_index(width))];
  return static_cast<double>(ysc) * mcs.modulation_bits *
         (static_cast<double>(mcs.code_num) / static_cast<double>(mcs.code_den));
}

/// Highest MCS whose minimum sensitivity at the given width is met by the
/// received power; nullopt when even MCS 0 fails.
inline std::optional<McsEntry> select_mcs(const McsTable& table, double rx_power_dbm,
                                          int width) {
  const auto w = static_cast<std::size_t>(width_index(width));
  std::optional<McsEntry> best;
  for (const McsEntry& e : table.entries)
    if (rx_power_dbm >= e.min_sensitivity_dbm[w] &&
        (!best || e.index > best->index))
      best = e;
  return best;
}

// ---------------------------------------------------------------------------
// MAC timing
// ---------------------------------------------------------------------------

/// Legacy control frames ride at 24 bits per OFDM symbol.
inline constexpr int kLegacyBitsPerSymbol = 24;

struct MacTiming {
  double slot_us = 9.0;           // T_e
  double sifs_us = 16.0;          // T_SIFS
  double difs_us = 34.0;          // T_DIFS
  double pifs_us = 25.0;          // T_PIFS
  double phy_legacy_us = 20.0;    // T_PHY-leg
  double phy_he_su_us = 164.0;    // T_PHY-HE-SU
  double legacy_symbol_us = 4.0;  // sigma_leg
  double symbol_us = 16.0;        // sigma

  int packet_bits = 12000;        // L_D
  int back_bits = 432;            // L_BACK
  int rts_bits = 160;             // L_RTS
  int cts_bits = 112;             // L_CTS
  int service_bits = 16;          // L_SF
  int mpdu_delimiter_bits = 32;   // L_MD
  int mac_header_bits = 320;      // L_MH
  int tail_bits = 18;             // L_TB

  int max_aggregation = 64;       // N_a
  int buffer_packets = 150;       // N_b
  int cw_min = 16;                // CW_min
  int backoff_stages = 5;         // m

  double mean_backoff_slots() const { return (cw_min - 1) / 2.0; }

  /// Packet transmission attempt rate lambda = 1/(E[B] * T_e), per second.
  double attempt_rate_per_s() const {
    return 1e6 / (mean_backoff_slots() * slot_us);
  }

  friend bool operator==(const MacTiming&, const MacTiming&) = default;
};

inline void validate_timing(const MacTiming& t) {
  const double durs[] = {t.slot_us,       t.sifs_us,          t.difs_us,
                         t.pifs_us,       t.phy_legacy_us,    t.phy_he_su_us,
                         t.legacy_symbol_us, t.symbol_us};
  for (double d : durs)
    if (!(d > 0)) raise(Errc::invalid_scenario, "MAC timing durations must be > 0");
  const int counts[] = {t.packet_bits,   t.back_bits,       t.rts_bits,
                        t.cts_bits,      t.service_bits,    t.mpdu_delimiter_bits,
                        t.mac_header_bits, t.tail_bits,     t.max_aggregation,
                        t.buffer_packets, t.cw_min,         t.backoff_stages};
  for (int c : counts)
    if (c <= 0) raise(Errc::invalid_scenario, "MAC frame/backoff constants must be > 0");
}

struct FrameDurations {
  double rts_us = 0;
  double cts_us = 0;
  double data_us = 0;
  double back_us = 0;

  friend bool operator==(const FrameDurations&, const FrameDurations&) = default;
};

namespace detail {

inline std::int64_t ceil_div(std::int64_t num, std::int64_t den) {
  return (num + den - 1) / den;
}

inline double legacy_frame_us(const MacTiming& t, int payload_bits) {
  const std::int64_t bits = t.service_bits + payload_bits + t.tail_bits;
  return t.phy_legacy_us +
         static_cast<double>(ceil_div(bits, kLegacyBitsPerSymbol)) * t.legacy_symbol_us;
}

/// OFDM symbols for the data frame, computed in exact integer arithmetic so
/// fractional per-symbol rates (e.g. 980*10*5/6) round identically everywhere.
inline std::int64_t data_symbols(const MacTiming& t, int width, const McsEntry& mcs,
                                 int n_agg) {
  const std::int64_t bits =
      t.service_bits +
      static_cast<std::int64_t>(n_agg) *
          (t.mpdu_delimiter_bits + t.mac_header_bits + t.packet_bits) +
      t.tail_bits;
  const std::int64_t num =
      static_cast<std::int64_t>(kDataSubcarriers[static_cast<std::size_t>(
          width_index(width))]) *
      mcs.modulation_bits * mcs.code_num;
  return ceil_div(bits * mcs.code_den, num);
}

}  // namespace detail

/// Airtime of the four frames of one exchange. Control frames always ride in
/// legacy mode; the data frame carries n_agg aggregated packets at the given
/// width and MCS.
inline FrameDurations frame_durations(const MacTiming& t, int width, const McsEntry& mcs,
                                      int n_agg) {
  if (n_agg < 1 || n_agg > t.max_aggregation)
    raise(Errc::invalid_aggregation, "n_agg " + std::to_string(n_agg) +
                                         " outside [1," +
                                         std::to_string(t.max_aggregation) + "]");
  FrameDurations d;
  d.rts_us = detail::legacy_frame_us(t, t.rts_bits);
  d.cts_us = detail::legacy_frame_us(t, t.cts_bits);
  d.back_us = detail::legacy_frame_us(t, t.back_bits);
  d.data_us = t.phy_he_su_us +
              static_cast<double>(detail::data_symbols(t, width, mcs, n_agg)) * t.symbol_us;
  return d;
}

/// Duration of one successful transmission:
/// RTS + 3 SIFS + CTS + DATA + BACK + DIFS + one empty slot.
inline double t_successful_us(const MacTiming& t, int width, const McsEntry& mcs,
                              int n_agg) {
  const FrameDurations d = frame_durations(t, width, mcs, n_agg);
  return d.rts_us + 3.0 * t.sifs_us + d.cts_us + d.data_us + d.back_us + t.difs_us +
         t.slot_us;
}

}  // namespace dcb
