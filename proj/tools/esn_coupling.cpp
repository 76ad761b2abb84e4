// esn-coupling: train, predict, sweep, scale and hyperopt subcommands over a
// TOML experiment file. Exit codes: 0 ok, 2 config/validation, 3 numerical
// failure, 4 I/O.

#include "esn/errors.hpp"
#include "esn/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>

namespace {

struct Flags {
  std::string config;
  std::uint64_t seed = 0;
  std::string out, method, resume, model, params;
};

esn::CommandOptions to_options(const Flags& f, const CLI::App& sub) {
  esn::CommandOptions o;
  o.config = f.config;
  if (sub.count("--seed")) o.seed = f.seed;
  if (!f.out.empty()) o.out = f.out;
  if (!f.method.empty()) o.method = f.method;
  if (!f.resume.empty()) o.resume = f.resume;
  if (!f.model.empty()) o.model = f.model;
  if (!f.params.empty()) o.params = f.params;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Echo-state network learning of drive-response coupling"};
  app.require_subcommand(1);
  Flags flags;

  struct Command {
    const char* name;
    const char* help;
    int (*run)(const esn::CommandOptions&);
  };
  const Command commands[] = {
      {"train", "train a model on the configured training systems", esn::cmd_train},
      {"predict", "closed-loop prediction for the configured drive", esn::cmd_predict},
      {"sweep", "accuracy over many seeded realizations", esn::cmd_sweep},
      {"scale", "amplitude/frequency scaling grid", esn::cmd_scale},
      {"hyperopt", "hyperparameter search", esn::cmd_hyperopt},
  };

  std::vector<std::pair<CLI::App*, const Command*>> subs;
  for (const auto& cmd : commands) {
    CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
    sub->add_option("config", flags.config, "experiment TOML file")->required();
    sub->add_option("--seed", flags.seed, "override the top-level seed");
    sub->add_option("--out", flags.out, "output directory");
    sub->add_option("--model", flags.model, "model file (default <out>/model.json)");
    sub->add_option("--params", flags.params, "best_params.json applied over [esn]");
    if (std::string(cmd.name) == "hyperopt") {
      sub->add_option("--method", flags.method, "gp or random")->check(CLI::IsMember({"gp", "random"}));
      sub->add_option("--resume", flags.resume, "trace.csv of an earlier run");
    }
    subs.emplace_back(sub, &cmd);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  for (const auto& [sub, cmd] : subs) {
    if (!sub->parsed()) continue;
    try {
      return cmd->run(to_options(flags, *sub));
    } catch (const esn::Error& e) {
      std::cerr << "esn-coupling " << cmd->name << ": " << esn::to_string(e.kind()) << ": " << e.what() << '\n';
      return esn::exit_code(e.kind());
    } catch (const std::filesystem::filesystem_error& e) {
      std::cerr << "esn-coupling " << cmd->name << ": io: " << e.what() << '\n';
      return 4;
    } catch (const std::exception& e) {
      std::cerr << "esn-coupling " << cmd->name << ": " << e.what() << '\n';
      return 2;
    }
  }
  return 2;
}
