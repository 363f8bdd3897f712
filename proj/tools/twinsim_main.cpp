// Command-line front end: named or file-based scenarios drive the pulse
// simulator, sweeps, the gain-curve fit, and the enumeration cross-check.
// Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 small-
// instance guard violation, 5 cross-check disagreement.

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "twinsim/scenario.hpp"
#include "twinsim/version.hpp"

namespace {

using twinsim::scenario::RunReport;
using twinsim::scenario::RunStatus;
using twinsim::scenario::Scenario;

struct CommonArgs {
  std::string scenario_name;
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> pulses;
  std::optional<int> threads;
};

void add_common(CLI::App* cmd, CommonArgs& args, const std::string& default_scenario) {
  args.scenario_name = default_scenario;
  cmd->add_option("--scenario", args.scenario_name, "Built-in scenario name")
      ->capture_default_str();
  cmd->add_option("--config", args.config_path, "Scenario JSON file (overrides --scenario)");
  cmd->add_option("--out", args.out_dir, "Output directory")->capture_default_str();
  cmd->add_option("--seed", args.seed, "Override the scenario seed");
  cmd->add_option("--pulses", args.pulses, "Override the pulse count");
  cmd->add_option("--threads", args.threads, "Worker threads (records are thread-invariant)");
}

int resolve_scenario(const CommonArgs& args, Scenario& out) {
  if (!args.config_path.empty()) {
    const auto parsed = twinsim::scenario::load_scenario_file(args.config_path);
    if (!parsed.ok) {
      for (const auto& e : parsed.errors) std::fprintf(stderr, "error: %s\n", e.c_str());
      return parsed.io_failure ? static_cast<int>(RunStatus::io_error)
                               : static_cast<int>(RunStatus::config_error);
    }
    out = parsed.scenario;
  } else {
    const auto builtin = twinsim::scenario::builtin_scenario(args.scenario_name);
    if (!builtin) {
      std::fprintf(stderr, "error: unknown scenario '%s'\n", args.scenario_name.c_str());
      std::fprintf(stderr, "available:");
      for (const auto& n : twinsim::scenario::builtin_names())
        std::fprintf(stderr, " %s", n.c_str());
      std::fprintf(stderr, "\n");
      return static_cast<int>(RunStatus::config_error);
    }
    out = *builtin;
  }
  if (args.seed) out.seed = *args.seed;
  if (args.pulses) out.pulses = *args.pulses;
  if (args.threads) out.threads = *args.threads;
  return 0;
}

int finish(const RunReport& rep) {
  for (const auto& f : rep.files_written) std::printf("wrote %s\n", f.c_str());
  for (const auto& m : rep.messages) {
    if (rep.status == RunStatus::ok)
      std::printf("%s\n", m.c_str());
    else
      std::fprintf(stderr, "error: %s\n", m.c_str());
  }
  return static_cast<int>(rep.status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Paired-beam pulse statistics toolkit"};
  app.set_version_flag("--version", std::string(twinsim::kVersion));
  app.require_subcommand(0, 1);

  bool list_scenarios = false;
  app.add_flag("--scenarios", list_scenarios, "List built-in scenarios and exit");

  CommonArgs sim_args, sweep_args, oracle_args;
  CLI::App* sim = app.add_subcommand("simulate", "Run one configuration and write records/stats");
  add_common(sim, sim_args, "fig2a");
  CLI::App* sweep = app.add_subcommand("sweep", "Run the scenario across its sweep values");
  add_common(sweep, sweep_args, "fig2a");
  CLI::App* oracle =
      app.add_subcommand("oracle-check", "Compare the sampler against exact enumeration");
  add_common(oracle, oracle_args, "oracle-small");

  std::string fit_data, fit_out = "out";
  CLI::App* fit = app.add_subcommand("fit-gain", "Fit the saturating gain model to a P,S table");
  fit->add_option("--data", fit_data, "CSV file with header P,S")->required();
  fit->add_option("--out", fit_out, "Output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(RunStatus::config_error);
  }

  if (list_scenarios) {
    for (const auto& n : twinsim::scenario::builtin_names()) std::printf("%s\n", n.c_str());
    return 0;
  }

  if (sim->parsed()) {
    Scenario sc;
    if (const int rc = resolve_scenario(sim_args, sc)) return rc;
    return finish(twinsim::scenario::cmd_simulate(sc, sim_args.out_dir));
  }
  if (sweep->parsed()) {
    Scenario sc;
    if (const int rc = resolve_scenario(sweep_args, sc)) return rc;
    return finish(twinsim::scenario::cmd_sweep(sc, sweep_args.out_dir));
  }
  if (oracle->parsed()) {
    Scenario sc;
    if (const int rc = resolve_scenario(oracle_args, sc)) return rc;
    return finish(twinsim::scenario::cmd_oracle_check(sc, oracle_args.out_dir));
  }
  if (fit->parsed()) return finish(twinsim::scenario::cmd_fit_gain(fit_data, fit_out));

  std::printf("%s", app.help().c_str());
  return 0;
}
