#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "anchorrank/kernels.hpp"
#include "commands.hpp"

int main(int argc, char** argv) {
  using namespace anchorrank::cli;
  CLI::App app{"Anchor-text data selection for neural ranking"};
  app.require_subcommand(1);

  std::string config_path;
  std::map<std::string, std::string> flags;
  std::map<std::string, CLI::Option*> options;
  for (const auto& name : command_names()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "flat 'key = value' file");
    for (const auto& key : config_keys()) {
      auto* opt = sub->add_option("--" + key.name, flags[key.name], key.help);
      options.emplace(name + "/" + key.name, opt);
    }
  }
  CLI11_PARSE(app, argc, argv);

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    Config cfg;
    if (!config_path.empty()) cfg.load_file(config_path);
    for (const auto& key : config_keys())
      if (options.at(command + "/" + key.name)->count() > 0) cfg.set(key.name, flags[key.name]);
    anchorrank::apply_thread_config();
    run_command(command, cfg, std::cout);
  } catch (const std::exception& e) {
    std::cerr << command << ": " << e.what() << "\n";
    return 1;
  }
  return 0;
}
