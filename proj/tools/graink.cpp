// graink: command-line driver for the truncated kinetic grain-growth model.
#include <CLI11.hpp>

#include "graink/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"truncated kinetic model of 2D grain growth"};
  app.require_subcommand(1);

  graink::CommandOptions opts;
  std::string out, snapshot;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("--config", opts.config, "run configuration (JSON)");
    if (config_required) c->required();
    sub->add_option("--out", out, "output directory (overrides the config)");
    sub->add_option("--seed", seed, "random seed (overrides the config)");
    sub->add_flag("--quiet", opts.quiet, "no progress messages");
  };
  for (const char* name : {"simulate", "ladder", "selfsim", "stability"})
    add_common(app.add_subcommand(name, std::string("run the ") + name + " driver"), true);
  auto* check = app.add_subcommand("check", "validate a config or a snapshot");
  add_common(check, false);
  check->add_option("--snapshot", snapshot, "snapshot CSV to check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : graink::exit_config;
  }

  CLI::App* sub = app.get_subcommands().front();
  if (!out.empty()) opts.out = out;
  if (!snapshot.empty()) opts.snapshot = snapshot;
  if (sub->count("--seed")) opts.seed = seed;
  if (sub->get_name() == "check" && opts.config.empty() && !opts.snapshot) {
    std::cerr << "check needs --config or --snapshot\n";
    return graink::exit_config;
  }
  return graink::run_command(sub->get_name(), opts);
}
