#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "dcb/ctmn.hpp"
#include "dcb/errors.hpp"
#include "dcb/scenario.hpp"
#include "dcb/sim.hpp"

namespace dcb {

enum class OutputFormat { csv, jsonl };

inline OutputFormat parse_format(const std::string& s) {
  if (s == "csv") return OutputFormat::csv;
  if (s == "jsonl" || s == "json-lines") return OutputFormat::jsonl;
  raise(Errc::usage_error, "format '" + s + "' is not csv|jsonl");
}

/// Delay CDF sampling points, in percent.
inline constexpr std::array<int, 13> kDelayQuantiles{1,  5,  10, 20, 30, 40, 50,
                                                     60, 70, 80, 90, 95, 99};

struct SweepAxes {
  std::vector<Policy> policies;
  std::vector<double> loads_bps;
  int repetitions = 1;
  double duration_s = 20.0;
  std::uint64_t master_seed = 1;
  int workers = 1;
  std::vector<double> epsilons{0.25, 0.5, 0.75};
  double delay_margin_s = 1e-3;
  bool collect_raw_delays = false;
};

inline void validate_axes(const SweepAxes& a) {
  if (a.policies.empty()) raise(Errc::usage_error, "sweep needs a nonempty policy set");
  if (a.loads_bps.empty()) raise(Errc::usage_error, "sweep needs a nonempty load grid");
  if (a.repetitions < 1) raise(Errc::usage_error, "sweep needs repetitions >= 1");
  if (!(a.duration_s > 0.0)) raise(Errc::usage_error, "sweep duration must be > 0");
  if (a.workers < 1) raise(Errc::usage_error, "worker count must be >= 1");
}

struct SweepCell {
  int rep = 0;
  int policy_index = 0;
  int load_index = 0;
  bool failed = false;
  std::string error;
  Scenario scenario;
  SimSummary summary;
};

struct SweepResult {
  SweepAxes axes;
  std::vector<SweepCell> cells;  // rep-major, then policy, then load
  bool all_ok = true;

  const SweepCell& cell(int rep, int policy, int load) const {
    const auto p = static_cast<std::size_t>(axes.policies.size());
    const auto l = static_cast<std::size_t>(axes.loads_bps.size());
    return cells[(static_cast<std::size_t>(rep) * p + static_cast<std::size_t>(policy)) * l +
                 static_cast<std::size_t>(load)];
  }
};

/// Scenario for one sweep cell. The deployment depends only on (master seed,
/// rep), so policy and load overlays compare like against like; a pinned
/// central WLAN receives the overlays alone, with its neighbours keeping
/// their law-drawn configuration.
inline Scenario sweep_cell_scenario(const DeploymentSpec& spec, const SweepAxes& axes,
                                    int rep, int policy_index, int load_index) {
  Scenario sc =
      generate(spec, derive_seed(axes.master_seed, stream_tag("deployment"),
                                 static_cast<std::uint64_t>(rep)));
  const Policy p = axes.policies[static_cast<std::size_t>(policy_index)];
  const double load = axes.loads_bps[static_cast<std::size_t>(load_index)];
  if (spec.central.enabled) {
    sc.wlans[0].policy = p;
    sc.wlans[0].traffic.load_bps = load;
  } else {
    for (WlanConfig& w : sc.wlans) {
      w.policy = p;
      w.traffic.load_bps = load;
    }
  }
  sc.finalize();
  return sc;
}

/// Runs the full deployments x policies x loads grid in a pool of workers.
/// Per-cell results are deterministic functions of the master seed and the
/// grid indices, so the pool width never changes the output.
inline SweepResult run_sweep(const DeploymentSpec& spec, const SweepAxes& axes) {
  validate_axes(axes);
  SweepResult result;
  result.axes = axes;
  const int total = axes.repetitions * static_cast<int>(axes.policies.size()) *
                    static_cast<int>(axes.loads_bps.size());
  result.cells.resize(static_cast<std::size_t>(total));

  std::atomic<int> next{0};
  auto work = [&] {
    for (int i = next.fetch_add(1); i < total; i = next.fetch_add(1)) {
      const int loads = static_cast<int>(axes.loads_bps.size());
      const int policies = static_cast<int>(axes.policies.size());
      SweepCell& cell = result.cells[static_cast<std::size_t>(i)];
      cell.load_index = i % loads;
      cell.policy_index = (i / loads) % policies;
      cell.rep = i / (loads * policies);
      try {
        cell.scenario =
            sweep_cell_scenario(spec, axes, cell.rep, cell.policy_index, cell.load_index);
        SimOptions opt;
        opt.duration_s = axes.duration_s;
        opt.seed = derive_seed(axes.master_seed, stream_tag("simulation"),
                               static_cast<std::uint64_t>(cell.rep),
                               static_cast<std::uint64_t>(cell.load_index));
        opt.collect_packet_delays = axes.collect_raw_delays;
        cell.summary = run_simulation(cell.scenario, opt);
      } catch (const Error& e) {
        cell.failed = true;
        cell.error = e.what();
      }
    }
  };

  if (axes.workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < axes.workers; ++t) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
  }
  for (const SweepCell& c : result.cells)
    if (c.failed) result.all_ok = false;
  return result;
}

// ---------------------------------------------------------------------------
// Result tables
// ---------------------------------------------------------------------------

namespace table {

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline const char* kSimulateHeader =
    "scenario_id,wlan_id,policy,primary,alloc_left,alloc_right,load_bps,"
    "throughput_bps,access_delay_s,packet_delay_s,drop_ratio,avg_agg,saturated";

inline void simulate_row(std::ostream& out, OutputFormat format,
                         const std::string& scenario_id, const Scenario& sc, int w,
                         const WlanMetrics& m) {
  const WlanConfig& cfg = sc.wlans[static_cast<std::size_t>(w)];
  if (format == OutputFormat::csv) {
    out << scenario_id << ',' << cfg.id << ',' << policy_name(cfg.policy) << ','
        << cfg.allocation.primary << ',' << cfg.allocation.allocated.left << ','
        << cfg.allocation.allocated.right << ',' << fmt(cfg.traffic.load_bps) << ','
        << fmt(m.throughput_bps) << ',' << fmt(m.access_delay_s) << ','
        << fmt(m.packet_delay_s) << ',' << fmt(m.drop_ratio) << ','
        << fmt(m.avg_aggregated) << ',' << (m.saturated ? 1 : 0) << '\n';
  } else {
    nlohmann::ordered_json j{{"scenario_id", scenario_id},
                             {"wlan_id", cfg.id},
                             {"policy", policy_name(cfg.policy)},
                             {"primary", cfg.allocation.primary},
                             {"alloc_left", cfg.allocation.allocated.left},
                             {"alloc_right", cfg.allocation.allocated.right},
                             {"load_bps", cfg.traffic.load_bps},
                             {"throughput_bps", m.throughput_bps},
                             {"access_delay_s", m.access_delay_s},
                             {"packet_delay_s", m.packet_delay_s},
                             {"drop_ratio", m.drop_ratio},
                             {"avg_agg", m.avg_aggregated},
                             {"saturated", m.saturated}};
    out << j.dump() << '\n';
  }
}

inline const char* kAnalyzeHeader =
    "scenario_id,wlan_id,policy,primary,alloc_left,alloc_right,load_bps,rho,"
    "throughput_bps,saturated,n_states,iterations";

inline void analyze_row(std::ostream& out, OutputFormat format,
                        const std::string& scenario_id, const Scenario& sc, int w,
                        const FixedPointResult& r) {
  const WlanConfig& cfg = sc.wlans[static_cast<std::size_t>(w)];
  const WlanLoad& l = r.loads[static_cast<std::size_t>(w)];
  const double gamma = r.throughput[static_cast<std::size_t>(w)];
  if (format == OutputFormat::csv) {
    out << scenario_id << ',' << cfg.id << ',' << policy_name(cfg.policy) << ','
        << cfg.allocation.primary << ',' << cfg.allocation.allocated.left << ','
        << cfg.allocation.allocated.right << ',' << fmt(l.offered_bps) << ','
        << fmt(l.rho) << ',' << fmt(gamma) << ',' << (l.saturated ? 1 : 0) << ','
        << r.chain.n() << ',' << r.iterations << '\n';
  } else {
    nlohmann::ordered_json j{{"scenario_id", scenario_id},
                             {"wlan_id", cfg.id},
                             {"policy", policy_name(cfg.policy)},
                             {"primary", cfg.allocation.primary},
                             {"alloc_left", cfg.allocation.allocated.left},
                             {"alloc_right", cfg.allocation.allocated.right},
                             {"load_bps", l.offered_bps},
                             {"rho", l.rho},
                             {"throughput_bps", gamma},
                             {"saturated", l.saturated},
                             {"n_states", r.chain.n()},
                             {"iterations", r.iterations}};
    out << j.dump() << '\n';
  }
}

}  // namespace table

struct SweepSummaryRow {
  Policy policy;
  double load_bps = 0;
  int cells_ok = 0;
  int cells_failed = 0;
  double mean_throughput_bps = 0;
  double min_throughput_bps = 0;
  double max_throughput_bps = 0;
  double mean_access_delay_s = 0;
  double mean_packet_delay_s = 0;
  std::vector<double> starvation;         // one per epsilon, mean over cells
  std::vector<double> delay_quantiles_s;  // one per kDelayQuantiles
};

inline std::vector<SweepSummaryRow> summarize_sweep(const SweepResult& r) {
  std::vector<SweepSummaryRow> rows;
  for (std::size_t p = 0; p < r.axes.policies.size(); ++p) {
    for (std::size_t l = 0; l < r.axes.loads_bps.size(); ++l) {
      SweepSummaryRow row;
      row.policy = r.axes.policies[p];
      row.load_bps = r.axes.loads_bps[l];
      row.starvation.assign(r.axes.epsilons.size(), 0.0);
      std::vector<double> delays;
      double tsum = 0, asum = 0, dsum = 0;
      int nw = 0;
      row.min_throughput_bps = std::numeric_limits<double>::infinity();
      row.max_throughput_bps = -std::numeric_limits<double>::infinity();
      for (int rep = 0; rep < r.axes.repetitions; ++rep) {
        const SweepCell& cell = r.cell(rep, static_cast<int>(p), static_cast<int>(l));
        if (cell.failed) {
          ++row.cells_failed;
          continue;
        }
        ++row.cells_ok;
        std::vector<double> loads;
        for (const WlanConfig& w : cell.scenario.wlans) loads.push_back(w.traffic.load_bps);
        for (std::size_t e = 0; e < r.axes.epsilons.size(); ++e)
          row.starvation[e] += starvation_ratio(cell.summary.wlans, loads, r.axes.epsilons[e]);
        for (const WlanMetrics& m : cell.summary.wlans) {
          tsum += m.throughput_bps;
          asum += m.access_delay_s;
          dsum += m.packet_delay_s;
          delays.push_back(m.packet_delay_s);
          row.min_throughput_bps = std::min(row.min_throughput_bps, m.throughput_bps);
          row.max_throughput_bps = std::max(row.max_throughput_bps, m.throughput_bps);
          ++nw;
        }
      }
      if (nw > 0) {
        row.mean_throughput_bps = tsum / nw;
        row.mean_access_delay_s = asum / nw;
        row.mean_packet_delay_s = dsum / nw;
      } else {
        row.min_throughput_bps = 0;
        row.max_throughput_bps = 0;
      }
      if (row.cells_ok > 0)
        for (double& s : row.starvation) s /= row.cells_ok;
      std::sort(delays.begin(), delays.end());
      for (int q : kDelayQuantiles) {
        if (delays.empty()) {
          row.delay_quantiles_s.push_back(0.0);
        } else {
          auto idx = static_cast<std::size_t>(
              std::max(0.0, std::ceil(q / 100.0 * static_cast<double>(delays.size())) - 1));
          row.delay_quantiles_s.push_back(delays[std::min(idx, delays.size() - 1)]);
        }
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

struct DelayShareRow {
  Policy first;
  Policy second;
  double load_bps = 0;
  int first_better = 0;
  int second_better = 0;
  int draws = 0;
  int incomparable = 0;
};

/// Pairwise policy comparison of per-WLAN mean packet delay across paired
/// deployments (same rep, same load). With a pinned central WLAN only that
/// WLAN is compared.
inline std::vector<DelayShareRow> delay_share_outcomes(const SweepResult& r,
                                                       bool central_only) {
  std::vector<DelayShareRow> rows;
  const int np = static_cast<int>(r.axes.policies.size());
  for (int p1 = 0; p1 < np; ++p1) {
    for (int p2 = p1 + 1; p2 < np; ++p2) {
      for (std::size_t l = 0; l < r.axes.loads_bps.size(); ++l) {
        DelayShareRow row;
        row.first = r.axes.policies[static_cast<std::size_t>(p1)];
        row.second = r.axes.policies[static_cast<std::size_t>(p2)];
        row.load_bps = r.axes.loads_bps[l];
        for (int rep = 0; rep < r.axes.repetitions; ++rep) {
          const SweepCell& a = r.cell(rep, p1, static_cast<int>(l));
          const SweepCell& b = r.cell(rep, p2, static_cast<int>(l));
          if (a.failed || b.failed) {
            ++row.incomparable;
            continue;
          }
          const std::size_t wlans = central_only ? 1 : a.summary.wlans.size();
          for (std::size_t w = 0; w < wlans; ++w) {
            try {
              switch (delay_share_compare(a.summary.wlans[w], b.summary.wlans[w],
                                          r.axes.delay_margin_s)) {
                case DelayOutcome::first_better: ++row.first_better; break;
                case DelayOutcome::second_better: ++row.second_better; break;
                case DelayOutcome::draw: ++row.draws; break;
              }
            } catch (const Error&) {
              ++row.incomparable;
            }
          }
        }
        rows.push_back(row);
      }
    }
  }
  return rows;
}

inline void write_sweep_results(std::ostream& out, OutputFormat format,
                                const SweepResult& r) {
  if (format == OutputFormat::csv)
    out << "rep,sweep_policy,sweep_load_bps," << table::kSimulateHeader << ",error\n";
  for (const SweepCell& cell : r.cells) {
    const std::string id = "rep" + std::to_string(cell.rep);
    const char* policy =
        policy_name(r.axes.policies[static_cast<std::size_t>(cell.policy_index)]);
    const double load = r.axes.loads_bps[static_cast<std::size_t>(cell.load_index)];
    if (cell.failed) {
      if (format == OutputFormat::csv) {
        out << cell.rep << ',' << policy << ',' << table::fmt(load)
            << ',' << id << ",,,,,,,,,,,," << cell.error << '\n';
      } else {
        nlohmann::ordered_json j{{"rep", cell.rep},
                                 {"sweep_policy", policy},
                                 {"sweep_load_bps", load},
                                 {"scenario_id", id},
                                 {"error", cell.error}};
        out << j.dump() << '\n';
      }
      continue;
    }
    for (int w = 0; w < cell.scenario.wlan_count(); ++w) {
      const WlanMetrics& m = cell.summary.wlans[static_cast<std::size_t>(w)];
      const WlanConfig& cfg = cell.scenario.wlans[static_cast<std::size_t>(w)];
      if (format == OutputFormat::csv) {
        out << cell.rep << ',' << policy << ',' << table::fmt(load) << ',' << id << ','
            << cfg.id << ',' << policy_name(cfg.policy) << ',' << cfg.allocation.primary
            << ',' << cfg.allocation.allocated.left << ','
            << cfg.allocation.allocated.right << ',' << table::fmt(cfg.traffic.load_bps)
            << ',' << table::fmt(m.throughput_bps) << ',' << table::fmt(m.access_delay_s)
            << ',' << table::fmt(m.packet_delay_s) << ',' << table::fmt(m.drop_ratio)
            << ',' << table::fmt(m.avg_aggregated) << ',' << (m.saturated ? 1 : 0)
            << ",\n";
      } else {
        nlohmann::ordered_json j{{"rep", cell.rep},
                                 {"sweep_policy", policy},
                                 {"sweep_load_bps", load},
                                 {"scenario_id", id},
                                 {"wlan_id", cfg.id},
                                 {"policy", policy_name(cfg.policy)},
                                 {"primary", cfg.allocation.primary},
                                 {"alloc_left", cfg.allocation.allocated.left},
                                 {"alloc_right", cfg.allocation.allocated.right},
                                 {"load_bps", cfg.traffic.load_bps},
                                 {"throughput_bps", m.throughput_bps},
                                 {"access_delay_s", m.access_delay_s},
                                 {"packet_delay_s", m.packet_delay_s},
                                 {"drop_ratio", m.drop_ratio},
                                 {"avg_agg", m.avg_aggregated},
                                 {"saturated", m.saturated}};
        out << j.dump() << '\n';
      }
    }
  }
}

inline void write_sweep_summary(std::ostream& out, OutputFormat format,
                                const SweepResult& r) {
  const std::vector<SweepSummaryRow> rows = summarize_sweep(r);
  if (format == OutputFormat::csv) {
    out << "policy,load_bps,cells_ok,cells_failed,mean_throughput_bps,"
           "min_throughput_bps,max_throughput_bps,mean_access_delay_s,"
           "mean_packet_delay_s";
    for (double e : r.axes.epsilons) out << ",starvation_eps" << table::fmt(e);
    for (int q : kDelayQuantiles) out << ",delay_q" << q << "_s";
    out << '\n';
    for (const SweepSummaryRow& row : rows) {
      out << policy_name(row.policy) << ',' << table::fmt(row.load_bps) << ','
          << row.cells_ok << ',' << row.cells_failed << ','
          << table::fmt(row.mean_throughput_bps) << ','
          << table::fmt(row.min_throughput_bps) << ','
          << table::fmt(row.max_throughput_bps) << ','
          << table::fmt(row.mean_access_delay_s) << ','
          << table::fmt(row.mean_packet_delay_s);
      for (double s : row.starvation) out << ',' << table::fmt(s);
      for (double d : row.delay_quantiles_s) out << ',' << table::fmt(d);
      out << '\n';
    }
  } else {
    for (const SweepSummaryRow& row : rows) {
      nlohmann::ordered_json j{{"policy", policy_name(row.policy)},
                               {"load_bps", row.load_bps},
                               {"cells_ok", row.cells_ok},
                               {"cells_failed", row.cells_failed},
                               {"mean_throughput_bps", row.mean_throughput_bps},
                               {"min_throughput_bps", row.min_throughput_bps},
                               {"max_throughput_bps", row.max_throughput_bps},
                               {"mean_access_delay_s", row.mean_access_delay_s},
                               {"mean_packet_delay_s", row.mean_packet_delay_s}};
      for (std::size_t e = 0; e < r.axes.epsilons.size(); ++e)
        j["starvation_eps" + table::fmt(r.axes.epsilons[e])] = row.starvation[e];
      for (std::size_t q = 0; q < kDelayQuantiles.size(); ++q)
        j["delay_q" + std::to_string(kDelayQuantiles[q]) + "_s"] = row.delay_quantiles_s[q];
      out << j.dump() << '\n';
    }
  }
}

inline void write_raw_delays(std::ostream& out, OutputFormat format, const SweepResult& r) {
  if (format == OutputFormat::csv) out << "rep,sweep_policy,sweep_load_bps,wlan_id,delay_s\n";
  for (const SweepCell& cell : r.cells) {
    if (cell.failed || cell.summary.packet_delays_s.empty()) continue;
    const char* policy =
        policy_name(r.axes.policies[static_cast<std::size_t>(cell.policy_index)]);
    const double load = r.axes.loads_bps[static_cast<std::size_t>(cell.load_index)];
    for (int w = 0; w < cell.scenario.wlan_count(); ++w) {
      const std::string& id = cell.scenario.wlans[static_cast<std::size_t>(w)].id;
      for (double d : cell.summary.packet_delays_s[static_cast<std::size_t>(w)]) {
        if (format == OutputFormat::csv) {
          out << cell.rep << ',' << policy << ',' << table::fmt(load) << ',' << id << ','
              << table::fmt(d) << '\n';
        } else {
          nlohmann::ordered_json j{{"rep", cell.rep},
                                   {"sweep_policy", policy},
                                   {"sweep_load_bps", load},
                                   {"wlan_id", id},
                                   {"delay_s", d}};
          out << j.dump() << '\n';
        }
      }
    }
  }
}

inline void write_delay_share(std::ostream& out, OutputFormat format, const SweepResult& r,
                              bool central_only) {
  const std::vector<DelayShareRow> rows = delay_share_outcomes(r, central_only);
  if (format == OutputFormat::csv)
    out << "policy_first,policy_second,load_bps,first_better,second_better,draws,"
           "incomparable\n";
  for (const DelayShareRow& row : rows) {
    if (format == OutputFormat::csv) {
      out << policy_name(row.first) << ',' << policy_name(row.second) << ','
          << table::fmt(row.load_bps) << ',' << row.first_better << ','
          << row.second_better << ',' << row.draws << ',' << row.incomparable << '\n';
    } else {
      nlohmann::ordered_json j{{"policy_first", policy_name(row.first)},
                               {"policy_second", policy_name(row.second)},
                               {"load_bps", row.load_bps},
                               {"first_better", row.first_better},
                               {"second_better", row.second_better},
                               {"draws", row.draws},
                               {"incomparable", row.incomparable}};
      out << j.dump() << '\n';
    }
  }
}

}  // namespace dcb
