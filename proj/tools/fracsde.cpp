#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "fracsde/io/config.hpp"
#include "fracsde/io/run.hpp"

namespace io = fracsde::io;

int main(int argc, char** argv) {
  CLI::App app{"fracsde: SDEs driven by fractional Brownian motion with irregular drift"};
  app.require_subcommand(1);
  std::string config_path;
  std::vector<std::string> drift_params;
  app.add_option("--config", config_path, "flat key = value config file")->check(CLI::ExistingFile);

  // Every schema key is accepted as --<key> on every subcommand.
  std::map<std::string, std::string> flags;
  std::vector<std::pair<CLI::App*, std::string>> subs;
  for (const auto& name : io::experiments()) {
    auto* sub = app.add_subcommand(name);
    sub->fallthrough();
    for (const auto& key : io::config_keys()) {
      if (key == "schema_version" || key == "experiment") continue;
      if (key == "sweep" || key == "write_cache") {
        sub->add_flag_callback("--" + key, [&flags, key] { flags[key] = "true"; });
        continue;
      }
      sub->add_option_function<std::string>("--" + key, [&flags, key](const std::string& v) { flags[key] = v; });
    }
    sub->add_option("--drift-param", drift_params, "drift parameter name=value (repeatable)");
    subs.emplace_back(sub, name);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : io::exit_schema;
  }

  try {
    io::RunConfig cfg = config_path.empty() ? io::RunConfig{} : io::load_config(config_path);
    std::vector<std::pair<std::string, std::string>> overrides;
    for (const auto& [sub, name] : subs)
      if (sub->parsed()) overrides.emplace_back("experiment", name);
    for (const auto& [k, v] : flags) overrides.emplace_back(k, v);
    for (const auto& kv : drift_params) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw io::SchemaError("drift-param", "expected name=value, got '" + kv + "'");
      overrides.emplace_back("drift." + kv.substr(0, eq), kv.substr(eq + 1));
    }
    cfg = io::resolve(cfg, overrides);
    return io::run_guarded(cfg);
  } catch (const io::SchemaError& e) {
    std::cerr << "schema error: " << e.what() << '\n';
    return io::exit_schema;
  }
}
