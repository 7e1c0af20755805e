// Command-line front end: single trajectories, parameter sweeps and Fock
// cutoff convergence checks, all driven by a JSON config file.
//
// Exit codes: 0 success, 2 bad config or usage, 3 propagation failure,
// 4 cutoff did not converge.

#include "stirap/stirap.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace stirap;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitPropagation = 3;
constexpr int kExitNoConvergence = 4;

struct Options {
  std::string config;
  std::string out = ".";
  int workers = 1;
  bool resume = false;
  std::uint64_t seed = 0;  // reserved; nothing is stochastic
};

LoadedConfig load_or_report(const std::string& path) {
  LoadedConfig loaded = load_config(path);
  for (const auto& w : loaded.warnings) std::cerr << "warning: " << w << '\n';
  return loaded;
}

fs::path prepare_out_dir(const std::string& out) {
  fs::path dir(out);
  fs::create_directories(dir);
  return dir;
}

int cmd_run(const Options& opt) {
  const RunConfig cfg = load_or_report(opt.config).config;
  const fs::path dir = prepare_out_dir(opt.out);

  Trajectory traj;
  try {
    const Hamiltonian h(Basis(cfg.n_max), cfg.system);
    const StateVector psi0 = make_state(h.basis(), cfg.initial_state);
    const auto times = uniform_times(cfg.pulses, cfg.output_points);
    traj = propagate(h, cfg.pulses, psi0, times, cfg.integrator);
  } catch (const std::exception& e) {
    std::cerr << "error: propagation failed: " << e.what() << '\n';
    return kExitPropagation;
  }

  const std::vector<Label> tracked(labels::kStirapSubspace.begin(), labels::kStirapSubspace.end());
  const PopulationSeries pops = populations(traj, tracked);
  const auto leak = leakage(traj, ExcitationLeakage{1});

  const fs::path csv_path = dir / cfg.trajectory_csv;
  std::ofstream out(csv_path);
  if (!out) {
    std::cerr << "error: cannot write " << csv_path << '\n';
    return kExitConfig;
  }
  out << "t,P_0gg,P_0ge,P_0eg,P_1gg,stirap_subspace,norm2,leakage_N_gt_1\n";
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const std::vector<std::string> row = {
        csv::format_double(traj.times[k]),         csv::format_double(pops.values[0][k]),
        csv::format_double(pops.values[1][k]),     csv::format_double(pops.values[2][k]),
        csv::format_double(pops.values[3][k]),     csv::format_double(pops.stirap_subspace[k]),
        csv::format_double(traj.norms[k]),         csv::format_double(leak[k])};
    out << csv::join(row) << '\n';
  }

  std::cout << "efficiency=" << csv::format_double(transfer_efficiency(traj))
            << " peak_leakage=" << csv::format_double(peak_leakage(traj, ExcitationLeakage{1}))
            << " final_norm2=" << csv::format_double(traj.norms.back())
            << " P_0gg_final=" << csv::format_double(pops.values[0].back())
            << " steps=" << traj.stats.accepted << " rejected=" << traj.stats.rejected
            << " csv=" << csv_path.string() << '\n';
  return kExitOk;
}

// Number of complete records at the head of an existing sweep file; the
// file is truncated to exactly those lines.
std::size_t recover_partial_sweep(const fs::path& path) {
  std::ifstream in(path);
  if (!in) return 0;
  std::string header;
  if (!std::getline(in, header) || header != sweep_csv::header())
    throw ConfigError({"--resume: " + path.string() + " is not a sweep file of this format"});

  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (in.eof()) break;  // no trailing newline: write was cut off
    if (csv::split(line).size() != sweep_csv::columns().size()) break;
    lines.push_back(line);
  }
  in.close();

  std::ofstream rewrite(path, std::ios::trunc);
  rewrite << header << '\n';
  for (const auto& l : lines) rewrite << l << '\n';
  return lines.size();
}

void write_meta(const fs::path& path, const RunConfig& cfg, const SweepMetadata* meta,
                std::size_t resumed_from, bool complete) {
  nlohmann::json j = {{"version", kVersion},
                      {"config", to_json(cfg)},
                      {"resumed_from", resumed_from},
                      {"complete", complete}};
  if (meta) {
    j["wall_seconds"] = meta->wall_seconds;
    j["workers"] = meta->workers;
  }
  std::ofstream(path) << j.dump(2) << '\n';
}

int cmd_sweep(const Options& opt) {
  const RunConfig cfg = load_or_report(opt.config).config;
  SweepSpec spec;
  try {
    spec = cfg.sweep_spec();
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError({std::string("sweep: ") + e.what()});
  }
  if (opt.workers < 1) throw ConfigError({"--workers: must be >= 1"});

  const fs::path dir = prepare_out_dir(opt.out);
  const fs::path csv_path = dir / cfg.sweep_csv;
  const fs::path meta_path = fs::path(csv_path.string() + ".meta.json");

  std::size_t done = 0;
  if (opt.resume && fs::exists(csv_path)) {
    std::ifstream meta_in(meta_path);
    if (!meta_in) throw ConfigError({"--resume: missing " + meta_path.string()});
    const auto meta = nlohmann::json::parse(meta_in);
    if (meta.value("config", nlohmann::json{}) != to_json(cfg))
      throw ConfigError({"--resume: config differs from the one that produced " +
                         csv_path.string()});
    done = recover_partial_sweep(csv_path);
  } else {
    std::ofstream(csv_path, std::ios::trunc) << sweep_csv::header() << '\n';
  }
  write_meta(meta_path, cfg, nullptr, done, false);

  std::ofstream out(csv_path, std::ios::app);
  std::size_t failures = 0;
  SweepOptions sweep_opt;
  sweep_opt.first_index = done;
  sweep_opt.on_record = [&](const SweepRecord& r) {
    if (r.status != "ok") ++failures;
    out << sweep_csv::format(r) << '\n' << std::flush;
  };
  const SweepResult result = run_sweep(spec, opt.workers, sweep_opt);
  out.close();
  write_meta(meta_path, cfg, &result.metadata, done, true);

  std::cout << "points=" << spec.size() << " computed=" << result.records.size()
            << " reused=" << done << " failed=" << failures
            << " wall_seconds=" << result.metadata.wall_seconds << " csv=" << csv_path.string()
            << '\n';
  return kExitOk;
}

int cmd_converge(const Options& opt) {
  const RunConfig cfg = load_or_report(opt.config).config;
  const fs::path dir = prepare_out_dir(opt.out);

  CutoffOptions copt;
  copt.start_nmax = cfg.converge.start_nmax;
  copt.rel_tol = cfg.converge.rel_tol;
  copt.ladder_step = cfg.converge.ladder_step;
  copt.max_nmax = cfg.converge.max_nmax;
  copt.integrator = cfg.integrator;
  TrajectoryObservable observable = [](const Trajectory& t) { return transfer_efficiency(t); };
  if (cfg.converge.observable == ConvergeObservable::peak_leakage) {
    copt.output_points = cfg.output_points;
    observable = [](const Trajectory& t) { return peak_leakage(t, ExcitationLeakage{1}); };
  }

  auto report = [&](const std::vector<CutoffLevel>& ladder) {
    std::ofstream file(dir / cfg.converge_csv);
    const std::string header = "n_max,value";
    std::cout << header << '\n';
    file << header << '\n';
    for (const auto& l : ladder) {
      const std::string row = std::to_string(l.n_max) + ',' + csv::format_double(l.value);
      std::cout << row << '\n';
      file << row << '\n';
    }
  };

  try {
    const CutoffResult res = converge_cutoff(cfg.system, cfg.pulses, cfg.initial_state,
                                             observable, copt);
    report(res.ladder);
    std::cout << "converged n_max=" << res.n_max << " value=" << csv::format_double(res.value)
              << '\n';
    return kExitOk;
  } catch (const CutoffNotConverged& e) {
    report(e.ladder());
    std::cerr << "error: " << e.what() << '\n';
    return kExitNoConvergence;
  } catch (const PropagationError& e) {
    std::cerr << "error: propagation failed: " << e.what() << '\n';
    return kExitPropagation;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"STIRAP state transfer between two qubits in a lossy ultrastrongly coupled cavity"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  Options opt;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "Run configuration (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "Output directory")->capture_default_str();
    sub->add_option("--seed", opt.seed, "Reserved; no stochastic paths");
  };

  auto* run = app.add_subcommand("run", "Propagate one trajectory and write populations");
  add_common(run);
  auto* sweep = app.add_subcommand("sweep", "Evaluate transfer efficiency on a 2D grid");
  add_common(sweep);
  sweep->add_option("--workers", opt.workers, "Worker threads")->capture_default_str();
  sweep->add_flag("--resume", opt.resume, "Continue a partially written sweep file");
  auto* converge = app.add_subcommand("converge", "Find a converged Fock cutoff");
  add_common(converge);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*run) return cmd_run(opt);
    if (*sweep) return cmd_sweep(opt);
    if (*converge) return cmd_converge(opt);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitPropagation;
  }
  return kExitConfig;
}
