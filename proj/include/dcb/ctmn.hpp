#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "dcb/channels.hpp"
#include "dcb/errors.hpp"
#include "dcb/phy.hpp"
#include "dcb/rng.hpp"
#include "dcb/scenario.hpp"

namespace dcb {

/// A state of the Markov network: the set of WLANs currently transmitting
/// and the channel each one holds. Entries are kept sorted by WLAN index so
/// equality is structural.
struct CtmnState {
  std::vector<std::pair<int, ChannelRange>> active;

  bool contains(int wlan) const {
    for (const auto& [w, r] : active)
      if (w == wlan) return true;
    return false;
  }

  const ChannelRange* range_of(int wlan) const {
    for (const auto& [w, r] : active)
      if (w == wlan) return &r;
    return nullptr;
  }

  CtmnState with(int wlan, const ChannelRange& range) const {
    CtmnState next = *this;
    next.active.emplace_back(wlan, range);
    std::sort(next.active.begin(), next.active.end());
    return next;
  }

  CtmnState without(int wlan) const {
    CtmnState next;
    for (const auto& entry : active)
      if (entry.first != wlan) next.active.push_back(entry);
    return next;
  }

  friend bool operator==(const CtmnState&, const CtmnState&) = default;
  friend auto operator<=>(const CtmnState&, const CtmnState&) = default;
};

inline std::string state_label(const CtmnState& s, const Scenario& sc) {
  if (s.active.empty()) return "{}";
  std::string out;
  for (const auto& [w, r] : s.active) {
    out += sc.wlans[static_cast<std::size_t>(w)].id;
    out += "[" + to_string(r) + "]";
  }
  return out;
}

/// Forward transition s -> s' where `wlan` starts transmitting, weighted by
/// the policy's selection probability alpha.
struct CtmnEdge {
  int from = 0;
  int to = 0;
  int wlan = 0;
  double alpha = 0.0;
};

/// Departure of one active transmission: s -> s \ {wlan}. The rate mu and
/// the SINR gate are bound from the scenario's PHY context.
struct CtmnDeparture {
  int state = 0;
  int wlan = 0;
  int back_to = 0;
  ChannelRange range;
  double mu_per_s = 0.0;
  double sinr_db = 0.0;
  bool decodable = false;
  int mcs_index = -1;
};

/// Per-WLAN offered load and its fixed-point iterate.
struct WlanLoad {
  double offered_bps = 0.0;       // ell_w
  double rho = 1.0;               // long-run backlog probability, in [0,1]
  double attempt_rate_per_s = 0;  // lambda_w
  double mean_backoff_slots = 0;  // E[B]
  bool saturated = false;
};

struct Ctmn {
  std::vector<CtmnState> states;
  std::vector<CtmnEdge> forward;
  std::vector<CtmnDeparture> departures;
  bool rates_bound = false;

  /// Off-diagonal generator entries (from, to, rate), filled by bind_rates.
  std::vector<std::tuple<int, int, double>> rate_entries;

  int n() const { return static_cast<int>(states.size()); }
};

/// Basic channels an inactive WLAN senses idle (below CCA at its AP) given
/// the transmissions active in the state.
inline ChannelSet idle_channels_in_state(const Scenario& sc, const CtmnState& state,
                                         int wlan) {
  if (state.contains(wlan))
    raise(Errc::wlan_active, "WLAN " + sc.wlans[static_cast<std::size_t>(wlan)].id +
                                 " is already transmitting in this state");
  std::vector<ActiveTransmission> active;
  for (const auto& [w, r] : state.active)
    active.push_back({sc.ap_node(w), r,
                      per_channel_tx_power_dbm(sc.radio.tx_power_dbm, r.width())});
  ChannelSet idle;
  for (int c = 1; c <= kBasicChannels; ++c)
    if (sensed_power_dbm(sc.radio, sc.ap_node(wlan), active, c) < sc.radio.cca_dbm)
      idle.set(c);
  return idle;
}

struct BuildOptions {
  std::size_t max_states = 1'000'000;
};

/// Explores the reachable state space from the empty state. Forward edges
/// follow each policy's feasible transitions; every active transmission can
/// also terminate, so the space is closed under single departures (a WLAN
/// may end up holding a narrower channel than the one it would pick in the
/// remaining state).
inline Ctmn build_state_space(const Scenario& sc, const BuildOptions& opts = {}) {
  Ctmn chain;
  std::map<CtmnState, int> index;
  std::deque<int> frontier;

  auto intern = [&](const CtmnState& s) {
    auto [it, inserted] = index.try_emplace(s, chain.n());
    if (inserted) {
      chain.states.push_back(s);
      if (chain.states.size() > opts.max_states)
        raise(Errc::state_explosion,
              "state space exceeded " + std::to_string(opts.max_states) + " states");
      frontier.push_back(it->second);
    }
    return it->second;
  };

  intern(CtmnState{});
  while (!frontier.empty()) {
    const int si = frontier.front();
    frontier.pop_front();
    // forward: any inactive WLAN with an idle primary may start
    for (int w = 0; w < sc.wlan_count(); ++w) {
      const CtmnState state = chain.states[static_cast<std::size_t>(si)];
      if (state.contains(w)) continue;
      const WlanConfig& cfg = sc.wlans[static_cast<std::size_t>(w)];
      const ChannelSet idle = idle_channels_in_state(sc, state, w);
      if (!idle.test(cfg.allocation.primary)) continue;
      for (const WeightedRange& wr : feasible_transitions(cfg.policy, cfg.allocation, idle)) {
        const int ti = intern(state.with(w, wr.range));
        chain.forward.push_back({si, ti, w, wr.probability});
      }
    }
    // departures: any active transmission may end
    const CtmnState state = chain.states[static_cast<std::size_t>(si)];
    for (const auto& [w, r] : state.active) {
      const int ti = intern(state.without(w));
      chain.departures.push_back({si, w, ti, r});
    }
  }
  return chain;
}

/// SINR at a WLAN's station for its transmission in a state, with every
/// other active transmission as interference (leakage included) plus noise.
inline double state_sinr_db(const Scenario& sc, const CtmnState& state, int wlan,
                            const ChannelRange& range) {
  const int sta = sc.sta_node(wlan, 0);
  const double signal = received_power_dbm(sc.radio, sc.ap_node(wlan), sta);
  double interference_mw = 0.0;
  for (const auto& [v, rv] : state.active) {
    if (v == wlan) continue;
    const double rx_full =
        dbm_to_mw(received_power_dbm(sc.radio, sc.ap_node(v), sta));
    for (int c = range.left; c <= range.right; ++c)
      interference_mw += channel_contribution_mw(rx_full, rv.width(), rv, c,
                                                 sc.radio.adjacent_leakage_db);
  }
  return sinr_db(sc.radio, signal, mw_to_dbm(interference_mw));
}

/// Binds transition rates: forward edges at rho * lambda * alpha, departures
/// at mu = 1/T_suc for the transmission's width and link-budget MCS with
/// full aggregation. Raises NoLink when a state holds an undecodable link.
inline void bind_rates(Ctmn& chain, const Scenario& sc, const std::vector<WlanLoad>& loads) {
  if (loads.size() != static_cast<std::size_t>(sc.wlan_count()))
    raise(Errc::invalid_scenario, "loads must match the scenario's WLAN count");
  for (CtmnDeparture& dep : chain.departures) {
    const int w = dep.wlan;
    const double rx =
        received_power_dbm(sc.radio, sc.ap_node(w), sc.sta_node(w, 0));
    const auto mcs = select_mcs(sc.mcs, rx, dep.range.width());
    if (!mcs)
      raise(Errc::no_link, "WLAN " + sc.wlans[static_cast<std::size_t>(w)].id +
                               " has no decodable MCS at width " +
                               std::to_string(dep.range.width()));
    dep.mcs_index = mcs->index;
    dep.mu_per_s = 1e6 / t_successful_us(sc.timing, dep.range.width(), *mcs,
                                         sc.timing.max_aggregation);
    dep.sinr_db =
        state_sinr_db(sc, chain.states[static_cast<std::size_t>(dep.state)], w, dep.range);
    dep.decodable = dep.sinr_db > sc.radio.capture_threshold_db;
  }
  chain.rate_entries.clear();
  for (const CtmnEdge& e : chain.forward) {
    const WlanLoad& l = loads[static_cast<std::size_t>(e.wlan)];
    const double rate = l.rho * l.attempt_rate_per_s * e.alpha;
    if (rate > 0.0) chain.rate_entries.emplace_back(e.from, e.to, rate);
  }
  for (const CtmnDeparture& dep : chain.departures)
    chain.rate_entries.emplace_back(dep.state, dep.back_to, dep.mu_per_s);
  chain.rates_bound = true;
}

namespace detail {

/// Dense stationary solve: global balance with one equation replaced by the
/// normalization constraint, partial-pivot elimination plus iterative
/// refinement.
inline std::vector<double> solve_stationary_dense(const Ctmn& chain) {
  const int n = chain.n();
  std::vector<double> M(static_cast<std::size_t>(n) * n, 0.0);
  auto at = [&](int r, int c) -> double& {
    return M[static_cast<std::size_t>(r) * n + c];
  };
  // rows: balance of each state; columns: pi entries
  for (const auto& [from, to, rate] : chain.rate_entries) {
    at(to, from) += rate;
    at(from, from) -= rate;
  }
  // replace the last balance row by sum(pi) = 1
  std::vector<double> A(M);
  std::vector<double> b(static_cast<std::size_t>(n), 0.0);
  for (int c = 0; c < n; ++c) A[static_cast<std::size_t>(n - 1) * n + c] = 1.0;
  b[static_cast<std::size_t>(n - 1)] = 1.0;

  // LU with partial pivoting
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  std::vector<double> LU(A);
  auto lu = [&](int r, int c) -> double& {
    return LU[static_cast<std::size_t>(r) * n + c];
  };
  for (int k = 0; k < n; ++k) {
    int pivot = k;
    double best = std::abs(lu(k, k));
    for (int r = k + 1; r < n; ++r)
      if (std::abs(lu(r, k)) > best) {
        best = std::abs(lu(r, k));
        pivot = r;
      }
    if (best == 0.0)
      raise(Errc::singular_system, "stationary solve hit a zero pivot (chain not irreducible?)");
    if (pivot != k) {
      for (int c = 0; c < n; ++c) std::swap(lu(k, c), lu(pivot, c));
      std::swap(perm[static_cast<std::size_t>(k)], perm[static_cast<std::size_t>(pivot)]);
    }
    for (int r = k + 1; r < n; ++r) {
      lu(r, k) /= lu(k, k);
      const double f = lu(r, k);
      if (f != 0.0)
        for (int c = k + 1; c < n; ++c) lu(r, c) -= f * lu(k, c);
    }
  }
  auto solve_with_lu = [&](const std::vector<double>& rhs) {
    std::vector<double> x(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] = rhs[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < i; ++c) x[static_cast<std::size_t>(i)] -= lu(i, c) * x[static_cast<std::size_t>(c)];
    for (int i = n - 1; i >= 0; --i) {
      for (int c = i + 1; c < n; ++c) x[static_cast<std::size_t>(i)] -= lu(i, c) * x[static_cast<std::size_t>(c)];
      x[static_cast<std::size_t>(i)] /= lu(i, i);
    }
    return x;
  };

  std::vector<double> pi = solve_with_lu(b);
  // two rounds of iterative refinement tighten the balance residual
  for (int round = 0; round < 2; ++round) {
    std::vector<double> r(b);
    for (int row = 0; row < n; ++row) {
      double acc = 0.0;
      for (int c = 0; c < n; ++c) acc += A[static_cast<std::size_t>(row) * n + c] * pi[static_cast<std::size_t>(c)];
      r[static_cast<std::size_t>(row)] -= acc;
    }
    const std::vector<double> d = solve_with_lu(r);
    for (int i = 0; i < n; ++i) pi[static_cast<std::size_t>(i)] += d[static_cast<std::size_t>(i)];
  }
  return pi;
}

/// Uniformized power iteration for chains too large for the dense solve.
inline std::vector<double> solve_stationary_power(const Ctmn& chain) {
  const int n = chain.n();
  std::vector<double> out_rate(static_cast<std::size_t>(n), 0.0);
  for (const auto& [from, to, rate] : chain.rate_entries)
    out_rate[static_cast<std::size_t>(from)] += rate;
  double lambda = 0.0;
  for (double r : out_rate) lambda = std::max(lambda, r);
  lambda *= 1.05;
  if (lambda == 0.0) {
    std::vector<double> pi(static_cast<std::size_t>(n), 0.0);
    pi[0] = 1.0;
    return pi;
  }
  std::vector<double> pi(static_cast<std::size_t>(n), 1.0 / n);
  std::vector<double> next(static_cast<std::size_t>(n));
  for (int iter = 0; iter < 500000; ++iter) {
    for (int i = 0; i < n; ++i)
      next[static_cast<std::size_t>(i)] =
          pi[static_cast<std::size_t>(i)] *
          (1.0 - out_rate[static_cast<std::size_t>(i)] / lambda);
    for (const auto& [from, to, rate] : chain.rate_entries)
      next[static_cast<std::size_t>(to)] += pi[static_cast<std::size_t>(from)] * rate / lambda;
    double delta = 0.0, sum = 0.0;
    for (int i = 0; i < n; ++i) {
      delta = std::max(delta, std::abs(next[static_cast<std::size_t>(i)] - pi[static_cast<std::size_t>(i)]));
      sum += next[static_cast<std::size_t>(i)];
    }
    for (double& v : next) v /= sum;
    pi.swap(next);
    if (delta < 1e-15) return pi;
  }
  raise(Errc::singular_system, "power iteration did not converge");
}

}  // namespace detail

inline constexpr int kDenseSolveLimit = 2000;

/// Stationary distribution of the bound chain: pi >= 0, sum(pi) = 1, and
/// pi stationary under the generator.
inline std::vector<double> solve_stationary(const Ctmn& chain) {
  if (!chain.rates_bound)
    raise(Errc::invalid_scenario, "bind_rates must run before solve_stationary");
  std::vector<double> pi = chain.n() <= kDenseSolveLimit
                               ? detail::solve_stationary_dense(chain)
                               : detail::solve_stationary_power(chain);
  double sum = 0.0;
  for (double& v : pi) {
    if (v < 0.0) {
      if (v < -1e-9) raise(Errc::singular_system, "stationary solve produced pi < 0");
      v = 0.0;
    }
    sum += v;
  }
  if (!(sum > 0.0)) raise(Errc::singular_system, "stationary solve produced a zero vector");
  for (double& v : pi) v /= sum;
  return pi;
}

/// Max-norm of the balance residual of pi under the bound generator.
inline double stationary_residual(const Ctmn& chain, const std::vector<double>& pi) {
  std::vector<double> r(static_cast<std::size_t>(chain.n()), 0.0);
  for (const auto& [from, to, rate] : chain.rate_entries) {
    r[static_cast<std::size_t>(to)] += rate * pi[static_cast<std::size_t>(from)];
    r[static_cast<std::size_t>(from)] -= rate * pi[static_cast<std::size_t>(from)];
  }
  double norm = 0.0;
  for (double v : r) norm = std::max(norm, std::abs(v));
  return norm;
}

/// Average throughput per WLAN: expected frame payload times the
/// probability-weighted departure rates of the states where the WLAN is
/// active and decodable, scaled by (1 - eta).
inline std::vector<double> throughput_bps(const Ctmn& chain, const std::vector<double>& pi,
                                          const Scenario& sc) {
  const double frame_bits =
      static_cast<double>(sc.timing.max_aggregation) * sc.timing.packet_bits;
  std::vector<double> gamma(static_cast<std::size_t>(sc.wlan_count()), 0.0);
  for (const CtmnDeparture& dep : chain.departures)
    if (dep.decodable)
      gamma[static_cast<std::size_t>(dep.wlan)] +=
          frame_bits * dep.mu_per_s * pi[static_cast<std::size_t>(dep.state)] *
          (1.0 - sc.error_probability);
  return gamma;
}

struct FixedPointOptions {
  double damping = 0.5;
  double tolerance = 1e-4;
  int max_iterations = 1000;
  BuildOptions build;
};

struct FixedPointResult {
  Ctmn chain;
  std::vector<WlanLoad> loads;
  std::vector<double> pi;
  std::vector<double> throughput;
  int iterations = 0;
  bool converged = false;
};

/// Unsaturated-traffic fixed point: starting from the saturated point, the
/// backlog probabilities are scaled toward offered/achieved throughput with
/// damping until they settle or the iteration cap is hit. WLANs pinned at
/// rho = 1 that still miss their load are flagged saturated.
inline FixedPointResult fixed_point_loads(const Scenario& sc,
                                          const FixedPointOptions& opts = {}) {
  FixedPointResult res;
  res.chain = build_state_space(sc, opts.build);
  res.loads.resize(static_cast<std::size_t>(sc.wlan_count()));
  for (int w = 0; w < sc.wlan_count(); ++w) {
    WlanLoad& l = res.loads[static_cast<std::size_t>(w)];
    l.offered_bps = sc.wlans[static_cast<std::size_t>(w)].traffic.load_bps;
    l.mean_backoff_slots = sc.timing.mean_backoff_slots();
    l.attempt_rate_per_s = sc.timing.attempt_rate_per_s();
    l.rho = l.offered_bps > 0.0 ? 1.0 : 0.0;
  }

  auto evaluate = [&] {
    bind_rates(res.chain, sc, res.loads);
    res.pi = solve_stationary(res.chain);
    res.throughput = throughput_bps(res.chain, res.pi, sc);
  };

  for (res.iterations = 1; res.iterations <= opts.max_iterations; ++res.iterations) {
    evaluate();
    double delta = 0.0;
    for (int w = 0; w < sc.wlan_count(); ++w) {
      WlanLoad& l = res.loads[static_cast<std::size_t>(w)];
      double next;
      if (l.offered_bps <= 0.0) {
        next = 0.0;
      } else {
        const double gamma = res.throughput[static_cast<std::size_t>(w)];
        const double target =
            gamma > 0.0 ? std::clamp(l.rho * l.offered_bps / gamma, 0.0, 1.0) : 1.0;
        next = opts.damping * target + (1.0 - opts.damping) * l.rho;
      }
      delta = std::max(delta, std::abs(next - l.rho) / std::max(next, 1e-3));
      l.rho = next;
    }
    if (delta < opts.tolerance) {
      res.converged = true;
      break;
    }
  }
  evaluate();
  for (int w = 0; w < sc.wlan_count(); ++w) {
    WlanLoad& l = res.loads[static_cast<std::size_t>(w)];
    l.saturated = l.rho >= 1.0 - 1e-9 &&
                  res.throughput[static_cast<std::size_t>(w)] <
                      l.offered_bps * (1.0 - 1e-9);
  }
  return res;
}

/// Plain-text chain export: states, then one edge per line
/// (source index, target index, rate, annotation).
inline void dump_chain(const Ctmn& chain, const Scenario& sc, std::ostream& out) {
  out << "# states " << chain.n() << "\n";
  for (int i = 0; i < chain.n(); ++i)
    out << "# state " << i << " " << state_label(chain.states[static_cast<std::size_t>(i)], sc)
        << "\n";
  for (const CtmnEdge& e : chain.forward) {
    double rate = 0.0;
    for (const auto& [from, to, r] : chain.rate_entries)
      if (from == e.from && to == e.to) rate = r;
    out << e.from << " " << e.to << " " << rate << " "
        << sc.wlans[static_cast<std::size_t>(e.wlan)].id << "+start alpha=" << e.alpha
        << "\n";
  }
  for (const CtmnDeparture& d : chain.departures)
    out << d.state << " " << d.back_to << " " << d.mu_per_s << " "
        << sc.wlans[static_cast<std::size_t>(d.wlan)].id << "-end mcs=" << d.mcs_index
        << "\n";
}

}  // namespace dcb
