// Command-line front end: scenario generation, the analytical engine, the
// event-driven engine, and grid sweeps over deployments x policies x loads.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dcb/dcb.hpp"

namespace {

std::string scenario_id_from_path(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

std::unique_ptr<std::ofstream> open_out(const std::string& path) {
  auto out = std::make_unique<std::ofstream>(path);
  if (!*out) dcb::raise(dcb::Errc::io_error, "cannot open '" + path + "' for writing");
  return out;
}

std::vector<dcb::Policy> parse_policies(const std::vector<std::string>& names) {
  std::vector<dcb::Policy> out;
  for (const std::string& n : names) out.push_back(dcb::parse_policy(n));
  return out;
}

int run_generate(const std::string& config, std::uint64_t seed, bool seed_set,
                 const std::string& out_path) {
  dcb::DeploymentSpec spec = dcb::load_deployment_spec(config);
  dcb::Scenario sc = seed_set ? dcb::generate(spec, seed) : dcb::generate(spec);
  dcb::save_config(sc, out_path);
  std::cout << "generated " << sc.wlan_count() << " WLANs -> " << out_path << "\n";
  return 0;
}

int run_analyze(const std::string& config, const std::string& out_path,
                dcb::OutputFormat format, const std::string& dump_chain_path) {
  dcb::Scenario sc = dcb::load_config(config);
  dcb::FixedPointResult res = dcb::fixed_point_loads(sc);
  std::ostream* out = &std::cout;
  std::unique_ptr<std::ofstream> file;
  if (!out_path.empty()) {
    file = open_out(out_path);
    out = file.get();
  }
  const std::string id = scenario_id_from_path(config);
  if (format == dcb::OutputFormat::csv) *out << dcb::table::kAnalyzeHeader << '\n';
  for (int w = 0; w < sc.wlan_count(); ++w)
    dcb::table::analyze_row(*out, format, id, sc, w, res);
  if (!dump_chain_path.empty()) {
    auto dump = open_out(dump_chain_path);
    dcb::dump_chain(res.chain, sc, *dump);
  }
  if (!res.converged) {
    std::cerr << "warning: fixed point hit the iteration cap; reporting last iterate\n";
  }
  return 0;
}

int run_simulate(const std::string& config, double duration, std::uint64_t seed,
                 const std::string& out_path, dcb::OutputFormat format,
                 const std::vector<double>& epsilons, const std::string& trace_path,
                 const std::string& raw_delays_path) {
  dcb::Scenario sc = dcb::load_config(config);
  dcb::SimOptions opt;
  opt.duration_s = duration;
  opt.seed = seed;
  opt.collect_packet_delays = !raw_delays_path.empty();
  std::unique_ptr<std::ofstream> trace;
  if (!trace_path.empty()) {
    trace = open_out(trace_path);
    opt.trace = trace.get();
  }
  dcb::SimSummary summary = dcb::run_simulation(sc, opt);
  if (!raw_delays_path.empty()) {
    auto raw = open_out(raw_delays_path);
    *raw << "wlan_id,delay_s\n";
    for (int w = 0; w < sc.wlan_count(); ++w)
      for (double d : summary.packet_delays_s[static_cast<std::size_t>(w)])
        *raw << sc.wlans[static_cast<std::size_t>(w)].id << ',' << d << '\n';
  }
  std::ostream* out = &std::cout;
  std::unique_ptr<std::ofstream> file;
  if (!out_path.empty()) {
    file = open_out(out_path);
    out = file.get();
  }
  const std::string id = scenario_id_from_path(config);
  if (format == dcb::OutputFormat::csv) *out << dcb::table::kSimulateHeader << '\n';
  for (int w = 0; w < sc.wlan_count(); ++w)
    dcb::table::simulate_row(*out, format, id, sc, w,
                             summary.wlans[static_cast<std::size_t>(w)]);
  std::vector<double> loads;
  for (const dcb::WlanConfig& w : sc.wlans) loads.push_back(w.traffic.load_bps);
  for (double eps : epsilons)
    std::cout << "starvation_ratio epsilon=" << eps << " value="
              << dcb::starvation_ratio(summary.wlans, loads, eps) << "\n";
  return 0;
}

int run_sweep(const std::string& config, const dcb::SweepAxes& axes,
              const std::string& out_dir, dcb::OutputFormat format) {
  dcb::DeploymentSpec spec = dcb::load_deployment_spec(config);
  dcb::SweepResult result = dcb::run_sweep(spec, axes);
  std::filesystem::create_directories(out_dir);
  const std::string ext = format == dcb::OutputFormat::csv ? ".csv" : ".jsonl";
  {
    auto out = open_out(out_dir + "/results" + ext);
    dcb::write_sweep_results(*out, format, result);
  }
  {
    auto out = open_out(out_dir + "/summary" + ext);
    dcb::write_sweep_summary(*out, format, result);
  }
  if (axes.policies.size() > 1) {
    auto out = open_out(out_dir + "/delay_share" + ext);
    dcb::write_delay_share(*out, format, result, spec.central.enabled);
  }
  if (axes.collect_raw_delays) {
    auto out = open_out(out_dir + "/raw_delays" + ext);
    dcb::write_raw_delays(*out, format, result);
  }
  int failed = 0;
  for (const dcb::SweepCell& c : result.cells)
    if (c.failed) ++failed;
  std::cout << "sweep: " << result.cells.size() - static_cast<std::size_t>(failed)
            << " cells ok, " << failed << " failed -> " << out_dir << "\n";
  return result.all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual-engine study tool for dynamic channel bonding in CSMA/CA WLANs"};
  app.require_subcommand(1);

  std::string config, out_path, trace_path, dump_chain_path, raw_delays_path;
  std::string format_name = "csv";
  std::uint64_t seed = 1;
  double duration = 0.0;
  std::vector<double> epsilons{0.25, 0.5, 0.75};
  double delay_margin = 1e-3;
  int workers = 1;

  CLI::App* generate = app.add_subcommand("generate", "draw a scenario from a deployment spec");
  generate->add_option("--config", config, "deployment spec file")->required();
  CLI::Option* gen_seed = generate->add_option("--seed", seed, "override the spec's seed");
  generate->add_option("--out", out_path, "output scenario file")->required();

  CLI::App* analyze = app.add_subcommand("analyze", "run the analytical engine on a scenario");
  analyze->add_option("--config", config, "scenario file")->required();
  analyze->add_option("--out", out_path, "result table path (default stdout)");
  analyze->add_option("--format", format_name, "csv|jsonl");
  analyze->add_option("--dump-chain", dump_chain_path, "write the state/rate graph to a file");

  CLI::App* simulate = app.add_subcommand("simulate", "run the event-driven engine on a scenario");
  simulate->add_option("--config", config, "scenario file")->required();
  simulate->add_option("--duration", duration, "simulated seconds")->required();
  simulate->add_option("--seed", seed, "random seed");
  simulate->add_option("--out", out_path, "result table path (default stdout)");
  simulate->add_option("--format", format_name, "csv|jsonl");
  simulate->add_option("--epsilon-list", epsilons, "starvation thresholds");
  simulate->add_option("--trace", trace_path, "write the event log to a file");
  simulate->add_option("--raw-delays", raw_delays_path, "dump per-packet delays to a file");

  dcb::SweepAxes axes;
  std::vector<std::string> policy_names;
  CLI::App* sweep = app.add_subcommand("sweep", "deployments x policies x loads grid");
  sweep->add_option("--config", config, "deployment spec file")->required();
  sweep->add_option("--policies", policy_names, "policy set (OP SCB AM PU)")->required();
  sweep->add_option("--loads", axes.loads_bps, "homogeneous load grid, bits/s")->required();
  sweep->add_option("--reps", axes.repetitions, "deployments per cell")->required();
  sweep->add_option("--duration", axes.duration_s, "simulated seconds per cell");
  sweep->add_option("--seed", axes.master_seed, "master seed");
  sweep->add_option("--workers", workers, "worker pool width");
  sweep->add_option("--epsilon-list", axes.epsilons, "starvation thresholds");
  sweep->add_option("--delay-margin", delay_margin, "delay draw margin, seconds");
  sweep->add_flag("--raw-delays", axes.collect_raw_delays, "also dump per-packet delays");
  sweep->add_option("--out", out_path, "output directory")->required();
  sweep->add_option("--format", format_name, "csv|jsonl");

  CLI11_PARSE(app, argc, argv);

  try {
    const dcb::OutputFormat format = dcb::parse_format(format_name);
    if (generate->parsed())
      return run_generate(config, seed, gen_seed->count() > 0, out_path);
    if (analyze->parsed()) return run_analyze(config, out_path, format, dump_chain_path);
    if (simulate->parsed()) {
      if (!(duration > 0.0))
        dcb::raise(dcb::Errc::usage_error, "--duration must be > 0");
      return run_simulate(config, duration, seed, out_path, format, epsilons, trace_path,
                          raw_delays_path);
    }
    if (sweep->parsed()) {
      if (axes.repetitions < 1)
        dcb::raise(dcb::Errc::usage_error, "--reps must be >= 1");
      axes.policies = parse_policies(policy_names);
      axes.workers = workers;
      axes.delay_margin_s = delay_margin;
      return run_sweep(config, axes, out_path, format);
    }
  } catch (const dcb::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == dcb::Errc::usage_error ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
