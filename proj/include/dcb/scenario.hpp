#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dcb/channels.hpp"
#include "dcb/errors.hpp"
#include "dcb/phy.hpp"
#include "dcb/rng.hpp"

namespace dcb {

inline constexpr int kConfigSchemaVersion = 1;

struct TrafficModel {
  enum class Kind { poisson, bursty };

  Kind kind = Kind::poisson;
  double load_bps = 0.0;   // offered load, data bits per second
  int burst_packets = 1;   // n_b, bursty only

  friend bool operator==(const TrafficModel&, const TrafficModel&) = default;
};

struct WlanConfig {
  std::string id;
  Point ap;
  std::vector<Point> stas;
  ChannelAllocation allocation;
  Policy policy = Policy::OP;
  TrafficModel traffic;

  friend bool operator==(const WlanConfig&, const WlanConfig&) = default;
};

/// One scenario shared by the analytical and the event-driven engine. Node
/// positions are flattened into the radio environment: APs first in WLAN
/// order, then the STAs of each WLAN.
struct Scenario {
  RadioEnvironment radio;
  MacTiming timing;
  McsTable mcs = default_mcs_table();
  double error_probability = 0.0;  // eta, per data frame
  std::vector<WlanConfig> wlans;
  nlohmann::ordered_json generator;  // deployment spec echo, may be null

  int wlan_count() const { return static_cast<int>(wlans.size()); }
  int ap_node(int w) const { return w; }
  int sta_node(int w, int k = 0) const {
    return sta_offsets_.at(static_cast<std::size_t>(w)) + k;
  }
  int sta_count(int w) const {
    return static_cast<int>(wlans[static_cast<std::size_t>(w)].stas.size());
  }

  /// Rebuild positions and validate invariants. Must be called after the
  /// WLAN list or any position is mutated.
  void finalize() {
    validate_radio(radio);
    validate_timing(timing);
    if (error_probability < 0.0 || error_probability > 1.0)
      raise(Errc::invalid_scenario, "error probability outside [0,1]");
    radio.positions.clear();
    sta_offsets_.clear();
    for (const WlanConfig& w : wlans) {
      validate_allocation(w.allocation);
      if (w.stas.empty())
        raise(Errc::invalid_scenario, "WLAN " + w.id + " has no stations");
      if (w.traffic.load_bps < 0.0)
        raise(Errc::invalid_scenario, "WLAN " + w.id + " has negative load");
      if (w.traffic.burst_packets < 1)
        raise(Errc::invalid_scenario, "WLAN " + w.id + " has burst size < 1");
      radio.positions.push_back(w.ap);
    }
    for (WlanConfig& w : wlans) {
      sta_offsets_.push_back(static_cast<int>(radio.positions.size()));
      for (const Point& p : w.stas) radio.positions.push_back(p);
    }
    for (std::size_t i = 0; i < radio.positions.size(); ++i)
      for (std::size_t j = i + 1; j < radio.positions.size(); ++j)
        if (distance(radio.positions[i], radio.positions[j]) < 1e-9)
          raise(Errc::invalid_scenario, "two nodes share the same position");
  }

 private:
  std::vector<int> sta_offsets_;
};

// ---------------------------------------------------------------------------
// Deployment generation
// ---------------------------------------------------------------------------

struct WidthLaw {
  bool uniform = false;    // uniform over {1,2,4,8}
  int fixed_channels = 8;  // used when !uniform

  friend bool operator==(const WidthLaw&, const WidthLaw&) = default;
};

struct PolicyLaw {
  bool uniform = false;  // uniform over the four policies
  Policy fixed = Policy::AM;

  friend bool operator==(const PolicyLaw&, const PolicyLaw&) = default;
};

struct LoadLaw {
  bool uniform = false;
  double fixed_bps = 0.0;
  double min_bps = 0.0;
  double max_bps = 0.0;

  friend bool operator==(const LoadLaw&, const LoadLaw&) = default;
};

/// Optional pinned WLAN at the map centre with its own allocation width and
/// policy (the "WLAN under study" layout).
struct CentralPin {
  bool enabled = false;
  int allocation_channels = 8;
  Policy policy = Policy::AM;

  friend bool operator==(const CentralPin&, const CentralPin&) = default;
};

struct DeploymentSpec {
  double map_width_m = 80.0;
  double map_height_m = 80.0;
  int wlan_count = 6;
  double min_ap_separation_m = 8.0;  // d_AP-AP^min
  double ap_sta_min_m = 1.0;
  double ap_sta_max_m = 4.0;
  int stas_per_wlan = 1;
  WidthLaw width_law;
  PolicyLaw policy_law;
  LoadLaw load_law;
  TrafficModel::Kind traffic_kind = TrafficModel::Kind::poisson;
  int burst_packets = 10;
  CentralPin central;
  std::uint64_t seed = 1;
  int rejection_budget = 100000;

  // engine parameters carried into generated scenarios
  RadioEnvironment radio;
  MacTiming timing;
  double error_probability = 0.1;

  friend bool operator==(const DeploymentSpec&, const DeploymentSpec&) = default;
};

inline void validate_deployment_spec(const DeploymentSpec& s) {
  if (s.map_width_m <= 0 || s.map_height_m <= 0)
    raise(Errc::invalid_scenario, "map dimensions must be positive");
  if (s.wlan_count < 1) raise(Errc::invalid_scenario, "wlan_count must be >= 1");
  if (s.min_ap_separation_m < 0)
    raise(Errc::invalid_scenario, "min AP separation must be >= 0");
  if (!(s.ap_sta_min_m > 0) || s.ap_sta_max_m < s.ap_sta_min_m)
    raise(Errc::invalid_scenario, "AP-STA distance range is empty");
  if (s.stas_per_wlan < 1) raise(Errc::invalid_scenario, "stas_per_wlan must be >= 1");
  if (s.load_law.uniform && s.load_law.max_bps < s.load_law.min_bps)
    raise(Errc::invalid_scenario, "load range is empty");
  if (!s.width_law.uniform && !valid_block_width(s.width_law.fixed_channels))
    raise(Errc::invalid_scenario, "fixed allocation width must be in {1,2,4,8}");
}

inline std::string wlan_label(int index) {
  std::string label;
  int i = index;
  do {
    label.insert(label.begin(), static_cast<char>('A' + i % 26));
    i = i / 26 - 1;
  } while (i >= 0);
  return label;
}

namespace json_io {
nlohmann::ordered_json deployment_spec_to_json(const DeploymentSpec& s);
}

/// Draws a scenario from a deployment spec. Pure function of (spec, seed):
/// APs by rejection sampling under the minimum separation, each STA at a
/// uniform angle and uniform radius from its AP, then primary / width /
/// policy / load per the configured laws.
inline Scenario generate(const DeploymentSpec& spec, std::uint64_t seed) {
  validate_deployment_spec(spec);
  RandomStream rng(derive_seed(seed, stream_tag("deployment")));

  Scenario sc;
  sc.radio = spec.radio;
  sc.radio.positions.clear();
  sc.timing = spec.timing;
  sc.error_probability = spec.error_probability;

  // AP placement by rejection sampling. A placement prefix can make the
  // remaining points infeasible on dense maps, so a stalled point discards
  // the whole prefix and redraws; the total attempt budget still bounds it.
  std::vector<Point> aps;
  int attempts = 0;
  int stalled = 0;
  while (static_cast<int>(aps.size()) < spec.wlan_count) {
    Point p;
    bool pinned = spec.central.enabled && aps.empty();
    if (pinned) {
      p = Point{spec.map_width_m / 2.0, spec.map_height_m / 2.0};
    } else {
      p = Point{rng.uniform(0.0, spec.map_width_m), rng.uniform(0.0, spec.map_height_m)};
    }
    bool ok = true;
    for (const Point& q : aps)
      if (distance(p, q) < spec.min_ap_separation_m) {
        ok = false;
        break;
      }
    if (ok) {
      aps.push_back(p);
      stalled = 0;
    } else if (pinned) {
      raise(Errc::packing_failure, "cannot pin central WLAN at the required separation");
    } else if (++stalled >= 1000) {
      aps.clear();
      stalled = 0;
    }
    if (++attempts > spec.rejection_budget)
      raise(Errc::packing_failure,
            "AP placement exceeded rejection budget of " +
                std::to_string(spec.rejection_budget) + " attempts");
  }

  for (int w = 0; w < spec.wlan_count; ++w) {
    WlanConfig cfg;
    cfg.id = wlan_label(w);
    cfg.ap = aps[static_cast<std::size_t>(w)];
    for (int k = 0; k < spec.stas_per_wlan; ++k) {
      const double angle = rng.uniform(0.0, 2.0 * M_PI);
      const double radius = rng.uniform(spec.ap_sta_min_m, spec.ap_sta_max_m);
      cfg.stas.push_back(
          Point{cfg.ap.x + radius * std::cos(angle), cfg.ap.y + radius * std::sin(angle)});
    }
    const int primary = 1 + static_cast<int>(rng.uniform_int(kBasicChannels));
    int width;
    const bool pinned = spec.central.enabled && w == 0;
    if (pinned) {
      width = spec.central.allocation_channels;
    } else if (spec.width_law.uniform) {
      width = 1 << rng.uniform_int(4);
    } else {
      width = spec.width_law.fixed_channels;
    }
    cfg.allocation = make_allocation(aligned_block(primary, width), primary);
    if (pinned) {
      cfg.policy = spec.central.policy;
    } else if (spec.policy_law.uniform) {
      cfg.policy = static_cast<Policy>(rng.uniform_int(4));
    } else {
      cfg.policy = spec.policy_law.fixed;
    }
    cfg.traffic.kind = spec.traffic_kind;
    cfg.traffic.burst_packets =
        spec.traffic_kind == TrafficModel::Kind::bursty ? spec.burst_packets : 1;
    cfg.traffic.load_bps = spec.load_law.uniform
                               ? rng.uniform(spec.load_law.min_bps, spec.load_law.max_bps)
                               : spec.load_law.fixed_bps;
    sc.wlans.push_back(std::move(cfg));
  }

  DeploymentSpec echo = spec;
  echo.seed = seed;
  sc.generator = json_io::deployment_spec_to_json(echo);
  sc.finalize();
  return sc;
}

inline Scenario generate(const DeploymentSpec& spec) { return generate(spec, spec.seed); }

// ---------------------------------------------------------------------------
// Config file I/O (versioned JSON)
// ---------------------------------------------------------------------------

namespace json_io {

using json = nlohmann::ordered_json;

template <typename T>
T require(const json& j, const std::string& field) {
  if (!j.contains(field))
    raise(Errc::parse_error, "missing field '" + field + "'");
  try {
    return j.at(field).get<T>();
  } catch (const nlohmann::json::exception& e) {
    raise(Errc::parse_error, "field '" + field + "': " + e.what());
  }
}

template <typename T>
T get_or(const json& j, const std::string& field, T fallback) {
  if (!j.contains(field)) return fallback;
  try {
    return j.at(field).get<T>();
  } catch (const nlohmann::json::exception& e) {
    raise(Errc::parse_error, "field '" + field + "': " + e.what());
  }
}

inline json point_to_json(const Point& p) { return json::array({p.x, p.y}); }

inline Point point_from_json(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 2)
    raise(Errc::parse_error, "field '" + field + "': expected [x, y]");
  return Point{j[0].get<double>(), j[1].get<double>()};
}

inline json radio_to_json(const RadioEnvironment& r) {
  return json{{"tx_power_dbm", r.tx_power_dbm},
              {"tx_gain_db", r.tx_gain_db},
              {"rx_gain_db", r.rx_gain_db},
              {"cca_dbm", r.cca_dbm},
              {"capture_threshold_db", r.capture_threshold_db},
              {"noise_dbm", r.noise_dbm},
              {"adjacent_leakage_db", r.adjacent_leakage_db},
              {"breakpoint_m", r.breakpoint_m}};
}

inline RadioEnvironment radio_from_json(const json& j) {
  RadioEnvironment r;
  r.tx_power_dbm = get_or(j, "tx_power_dbm", r.tx_power_dbm);
  r.tx_gain_db = get_or(j, "tx_gain_db", r.tx_gain_db);
  r.rx_gain_db = get_or(j, "rx_gain_db", r.rx_gain_db);
  r.cca_dbm = get_or(j, "cca_dbm", r.cca_dbm);
  r.capture_threshold_db = get_or(j, "capture_threshold_db", r.capture_threshold_db);
  r.noise_dbm = get_or(j, "noise_dbm", r.noise_dbm);
  r.adjacent_leakage_db = get_or(j, "adjacent_leakage_db", r.adjacent_leakage_db);
  r.breakpoint_m = get_or(j, "breakpoint_m", r.breakpoint_m);
  return r;
}

inline json timing_to_json(const MacTiming& t) {
  return json{{"slot_us", t.slot_us},
              {"sifs_us", t.sifs_us},
              {"difs_us", t.difs_us},
              {"pifs_us", t.pifs_us},
              {"phy_legacy_us", t.phy_legacy_us},
              {"phy_he_su_us", t.phy_he_su_us},
              {"legacy_symbol_us", t.legacy_symbol_us},
              {"symbol_us", t.symbol_us},
              {"packet_bits", t.packet_bits},
              {"back_bits", t.back_bits},
              {"rts_bits", t.rts_bits},
              {"cts_bits", t.cts_bits},
              {"service_bits", t.service_bits},
              {"mpdu_delimiter_bits", t.mpdu_delimiter_bits},
              {"mac_header_bits", t.mac_header_bits},
              {"tail_bits", t.tail_bits},
              {"max_aggregation", t.max_aggregation},
              {"buffer_packets", t.buffer_packets},
              {"cw_min", t.cw_min},
              {"backoff_stages", t.backoff_stages}};
}

inline MacTiming timing_from_json(const json& j) {
  MacTiming t;
  t.slot_us = get_or(j, "slot_us", t.slot_us);
  t.sifs_us = get_or(j, "sifs_us", t.sifs_us);
  t.difs_us = get_or(j, "difs_us", t.difs_us);
  t.pifs_us = get_or(j, "pifs_us", t.pifs_us);
  t.phy_legacy_us = get_or(j, "phy_legacy_us", t.phy_legacy_us);
  t.phy_he_su_us = get_or(j, "phy_he_su_us", t.phy_he_su_us);
  t.legacy_symbol_us = get_or(j, "legacy_symbol_us", t.legacy_symbol_us);
  t.symbol_us = get_or(j, "symbol_us", t.symbol_us);
  t.packet_bits = get_or(j, "packet_bits", t.packet_bits);
  t.back_bits = get_or(j, "back_bits", t.back_bits);
  t.rts_bits = get_or(j, "rts_bits", t.rts_bits);
  t.cts_bits = get_or(j, "cts_bits", t.cts_bits);
  t.service_bits = get_or(j, "service_bits", t.service_bits);
  t.mpdu_delimiter_bits = get_or(j, "mpdu_delimiter_bits", t.mpdu_delimiter_bits);
  t.mac_header_bits = get_or(j, "mac_header_bits", t.mac_header_bits);
  t.tail_bits = get_or(j, "tail_bits", t.tail_bits);
  t.max_aggregation = get_or(j, "max_aggregation", t.max_aggregation);
  t.buffer_packets = get_or(j, "buffer_packets", t.buffer_packets);
  t.cw_min = get_or(j, "cw_min", t.cw_min);
  t.backoff_stages = get_or(j, "backoff_stages", t.backoff_stages);
  return t;
}

inline json mcs_to_json(const McsTable& t) {
  json rows = json::array();
  for (const McsEntry& e : t.entries) {
    json row = json::array();
    row.push_back(e.index);
    row.push_back(e.modulation_bits);
    row.push_back(std::to_string(e.code_num) + "/" + std::to_string(e.code_den));
    for (double s : e.min_sensitivity_dbm) row.push_back(s);
    rows.push_back(row);
  }
  return rows;
}

inline McsTable mcs_from_json(const json& rows) {
  McsTable t;
  for (const json& row : rows) {
    if (!row.is_array() || row.size() != 7)
      raise(Errc::parse_error, "mcs_table rows must be [index, mod, rate, s20, s40, s80, s160]");
    McsEntry e;
    e.index = row[0].get<int>();
    e.modulation_bits = row[1].get<int>();
    const std::string rate = row[2].get<std::string>();
    const auto slash = rate.find('/');
    if (slash == std::string::npos)
      raise(Errc::parse_error, "mcs_table coding rate must look like '5/6'");
    e.code_num = std::stoi(rate.substr(0, slash));
    e.code_den = std::stoi(rate.substr(slash + 1));
    for (int w = 0; w < 4; ++w)
      e.min_sensitivity_dbm[static_cast<std::size_t>(w)] =
          row[static_cast<std::size_t>(3 + w)].get<double>();
    t.entries.push_back(e);
  }
  if (t.entries.empty()) raise(Errc::parse_error, "mcs_table: no rows");
  return t;
}

inline json traffic_to_json(const TrafficModel& t) {
  json j{{"kind", t.kind == TrafficModel::Kind::poisson ? "poisson" : "bursty"},
         {"load_bps", t.load_bps}};
  if (t.kind == TrafficModel::Kind::bursty) j["burst_packets"] = t.burst_packets;
  return j;
}

inline TrafficModel traffic_from_json(const json& j) {
  TrafficModel t;
  const std::string kind = require<std::string>(j, "kind");
  if (kind == "poisson") {
    t.kind = TrafficModel::Kind::poisson;
  } else if (kind == "bursty") {
    t.kind = TrafficModel::Kind::bursty;
    t.burst_packets = require<int>(j, "burst_packets");
  } else {
    raise(Errc::parse_error, "traffic kind '" + kind + "' is not poisson|bursty");
  }
  t.load_bps = require<double>(j, "load_bps");
  return t;
}

inline json wlan_to_json(const WlanConfig& w) {
  json stas = json::array();
  for (const Point& p : w.stas) stas.push_back(point_to_json(p));
  return json{{"id", w.id},
              {"ap", point_to_json(w.ap)},
              {"stas", stas},
              {"primary", w.allocation.primary},
              {"allocation", json::array({w.allocation.allocated.left,
                                          w.allocation.allocated.right})},
              {"policy", policy_name(w.policy)},
              {"traffic", traffic_to_json(w.traffic)}};
}

inline WlanConfig wlan_from_json(const json& j) {
  WlanConfig w;
  w.id = require<std::string>(j, "id");
  if (!j.contains("ap")) raise(Errc::parse_error, "wlan '" + w.id + "': missing field 'ap'");
  w.ap = point_from_json(j.at("ap"), "ap");
  if (!j.contains("stas"))
    raise(Errc::parse_error, "wlan '" + w.id + "': missing field 'stas'");
  for (const json& p : j.at("stas")) w.stas.push_back(point_from_json(p, "stas"));
  const int primary = require<int>(j, "primary");
  const auto alloc = require<std::vector<int>>(j, "allocation");
  if (alloc.size() != 2)
    raise(Errc::parse_error, "wlan '" + w.id + "': allocation must be [left, right]");
  try {
    w.allocation = make_allocation(ChannelRange{alloc[0], alloc[1]}, primary);
  } catch (const Error& e) {
    raise(Errc::parse_error, "wlan '" + w.id + "': " + e.what());
  }
  w.policy = parse_policy(require<std::string>(j, "policy"));
  if (!j.contains("traffic"))
    raise(Errc::parse_error, "wlan '" + w.id + "': missing field 'traffic'");
  w.traffic = traffic_from_json(j.at("traffic"));
  return w;
}

inline json scenario_to_json(const Scenario& sc) {
  json j;
  j["version"] = kConfigSchemaVersion;
  j["kind"] = "scenario";
  j["environment"] = radio_to_json(sc.radio);
  j["timing"] = timing_to_json(sc.timing);
  j["error_probability"] = sc.error_probability;
  if (!(sc.mcs == default_mcs_table())) j["mcs_table"] = mcs_to_json(sc.mcs);
  json wl = json::array();
  for (const WlanConfig& w : sc.wlans) wl.push_back(wlan_to_json(w));
  j["wlans"] = wl;
  if (!sc.generator.is_null()) j["generator"] = sc.generator;
  return j;
}

inline Scenario scenario_from_json(const json& j, const std::string& base_dir = {}) {
  const int version = require<int>(j, "version");
  if (version != kConfigSchemaVersion)
    raise(Errc::schema_version_mismatch,
          "config version " + std::to_string(version) + ", expected " +
              std::to_string(kConfigSchemaVersion));
  Scenario sc;
  if (j.contains("environment")) sc.radio = radio_from_json(j.at("environment"));
  if (j.contains("timing")) sc.timing = timing_from_json(j.at("timing"));
  sc.error_probability = get_or(j, "error_probability", 0.0);
  if (j.contains("mcs_table") && !j.at("mcs_table").is_null())
    sc.mcs = mcs_from_json(j.at("mcs_table"));
  if (j.contains("mcs_table_file") && !j.at("mcs_table_file").is_null()) {
    std::string file = require<std::string>(j, "mcs_table_file");
    if (!base_dir.empty() && !file.empty() && file.front() != '/')
      file = base_dir + "/" + file;
    std::ifstream in(file);
    if (!in) raise(Errc::io_error, "cannot open mcs_table_file '" + file + "'");
    sc.mcs = load_mcs_table(in);
  }
  if (!j.contains("wlans")) raise(Errc::parse_error, "missing field 'wlans'");
  for (const json& w : j.at("wlans")) sc.wlans.push_back(wlan_from_json(w));
  if (j.contains("generator")) sc.generator = j.at("generator");
  try {
    sc.finalize();
  } catch (const Error& e) {
    if (e.code() == Errc::invalid_scenario) throw;
    raise(Errc::parse_error, e.what());
  }
  return sc;
}

inline json law_to_json(const WidthLaw& l) {
  if (l.uniform) return json{{"kind", "uniform"}};
  return json{{"kind", "fixed"}, {"channels", l.fixed_channels}};
}

inline json law_to_json(const PolicyLaw& l) {
  if (l.uniform) return json{{"kind", "uniform"}};
  return json{{"kind", "fixed"}, {"policy", policy_name(l.fixed)}};
}

inline json law_to_json(const LoadLaw& l) {
  if (l.uniform) return json{{"kind", "uniform"}, {"min_bps", l.min_bps}, {"max_bps", l.max_bps}};
  return json{{"kind", "fixed"}, {"bps", l.fixed_bps}};
}

inline json deployment_spec_to_json(const DeploymentSpec& s) {
  json j;
  j["version"] = kConfigSchemaVersion;
  j["kind"] = "deployment-spec";
  j["map"] = json::array({s.map_width_m, s.map_height_m});
  j["wlan_count"] = s.wlan_count;
  j["min_ap_separation_m"] = s.min_ap_separation_m;
  j["ap_sta_distance_m"] = json::array({s.ap_sta_min_m, s.ap_sta_max_m});
  j["stas_per_wlan"] = s.stas_per_wlan;
  j["width_law"] = law_to_json(s.width_law);
  j["policy_law"] = law_to_json(s.policy_law);
  j["load_law"] = law_to_json(s.load_law);
  j["traffic"] = s.traffic_kind == TrafficModel::Kind::poisson ? "poisson" : "bursty";
  if (s.traffic_kind == TrafficModel::Kind::bursty) j["burst_packets"] = s.burst_packets;
  if (s.central.enabled)
    j["central_wlan"] = json{{"allocation_channels", s.central.allocation_channels},
                             {"policy", policy_name(s.central.policy)}};
  j["environment"] = radio_to_json(s.radio);
  j["timing"] = timing_to_json(s.timing);
  j["error_probability"] = s.error_probability;
  j["seed"] = s.seed;
  j["rejection_budget"] = s.rejection_budget;
  return j;
}

inline DeploymentSpec deployment_spec_from_json(const json& j) {
  const int version = require<int>(j, "version");
  if (version != kConfigSchemaVersion)
    raise(Errc::schema_version_mismatch,
          "spec version " + std::to_string(version) + ", expected " +
              std::to_string(kConfigSchemaVersion));
  DeploymentSpec s;
  const auto map = require<std::vector<double>>(j, "map");
  if (map.size() != 2) raise(Errc::parse_error, "field 'map' must be [width, height]");
  s.map_width_m = map[0];
  s.map_height_m = map[1];
  s.wlan_count = require<int>(j, "wlan_count");
  s.min_ap_separation_m = require<double>(j, "min_ap_separation_m");
  const auto dist = require<std::vector<double>>(j, "ap_sta_distance_m");
  if (dist.size() != 2)
    raise(Errc::parse_error, "field 'ap_sta_distance_m' must be [min, max]");
  s.ap_sta_min_m = dist[0];
  s.ap_sta_max_m = dist[1];
  s.stas_per_wlan = get_or(j, "stas_per_wlan", 1);
  if (j.contains("width_law")) {
    const json& l = j.at("width_law");
    s.width_law.uniform = require<std::string>(l, "kind") == "uniform";
    if (!s.width_law.uniform) s.width_law.fixed_channels = require<int>(l, "channels");
  }
  if (j.contains("policy_law")) {
    const json& l = j.at("policy_law");
    s.policy_law.uniform = require<std::string>(l, "kind") == "uniform";
    if (!s.policy_law.uniform)
      s.policy_law.fixed = parse_policy(require<std::string>(l, "policy"));
  }
  if (j.contains("load_law")) {
    const json& l = j.at("load_law");
    s.load_law.uniform = require<std::string>(l, "kind") == "uniform";
    if (s.load_law.uniform) {
      s.load_law.min_bps = require<double>(l, "min_bps");
      s.load_law.max_bps = require<double>(l, "max_bps");
    } else {
      s.load_law.fixed_bps = require<double>(l, "bps");
    }
  }
  const std::string traffic = get_or<std::string>(j, "traffic", "poisson");
  if (traffic == "poisson") {
    s.traffic_kind = TrafficModel::Kind::poisson;
  } else if (traffic == "bursty") {
    s.traffic_kind = TrafficModel::Kind::bursty;
    s.burst_packets = require<int>(j, "burst_packets");
  } else {
    raise(Errc::parse_error, "traffic '" + traffic + "' is not poisson|bursty");
  }
  if (j.contains("central_wlan") && !j.at("central_wlan").is_null()) {
    const json& c = j.at("central_wlan");
    s.central.enabled = true;
    s.central.allocation_channels = require<int>(c, "allocation_channels");
    s.central.policy = parse_policy(require<std::string>(c, "policy"));
  }
  if (j.contains("environment")) s.radio = radio_from_json(j.at("environment"));
  if (j.contains("timing")) s.timing = timing_from_json(j.at("timing"));
  s.error_probability = get_or(j, "error_probability", 0.1);
  s.seed = get_or<std::uint64_t>(j, "seed", 1);
  s.rejection_budget = get_or(j, "rejection_budget", 100000);
  validate_deployment_spec(s);
  return s;
}

}  // namespace json_io

inline nlohmann::ordered_json parse_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::io_error, "cannot open '" + path + "'");
  try {
    return nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    raise(Errc::parse_error, path + ": " + e.what());
  }
}

inline Scenario load_config(const std::string& path) {
  const auto slash = path.find_last_of('/');
  const std::string base_dir = slash == std::string::npos ? "" : path.substr(0, slash);
  return json_io::scenario_from_json(parse_json_file(path), base_dir);
}

inline void save_config(const Scenario& sc, const std::string& path) {
  std::ofstream out(path);
  if (!out) raise(Errc::io_error, "cannot open '" + path + "' for writing");
  out << json_io::scenario_to_json(sc).dump(2) << '\n';
}

inline DeploymentSpec load_deployment_spec(const std::string& path) {
  return json_io::deployment_spec_from_json(parse_json_file(path));
}

inline void save_deployment_spec(const DeploymentSpec& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) raise(Errc::io_error, "cannot open '" + path + "' for writing");
  out << json_io::deployment_spec_to_json(s).dump(2) << '\n';
}

}  // namespace dcb
