#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "htmeta/commands.hpp"

// Exit codes: 0 ok, 2 config error, 3 numeric failure, 4 check failure.
int main(int argc, char **argv) {
  CLI::App app{"htmeta: heavy-tailed SGD metastability toolkit"};
  app.require_subcommand(1);

  std::string config_path, preset, out_dir = ".";
  int workers = 0;
  bool dry_run = false, check = false;

  for (const std::string name : {"simulate", "graph", "limit", "exit", "train"}) {
    auto *sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--preset", preset, "named built-in configuration");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--workers", workers, "worker threads (0 = all cores)");
    sub->add_flag("--dry-run", dry_run, "validate the config without computing");
    sub->add_flag("--check", check, "verify output invariants; exit 4 on failure");
    sub->add_option("--b", "override the clip threshold");
  }

  CLI11_PARSE(app, argc, argv);
  auto *sub = app.get_subcommands().front();

  try {
    htmeta::json cfg;
    if (!preset.empty())
      cfg = htmeta::preset_config(preset);
    else if (!config_path.empty())
      cfg = htmeta::load_config(config_path);
    else
      throw htmeta::ConfigError("either --config or --preset is required");
    if (sub->count("--b")) {
      const std::string bs = sub->get_option("--b")->as<std::string>();
      cfg["b"] = (bs == "inf") ? htmeta::json("inf") : htmeta::json(std::stod(bs));
      if (cfg.contains("run")) cfg["run"]["b"] = cfg["b"];
    }
    htmeta::CommandOptions opt;
    opt.out_dir = out_dir;
    opt.workers = workers;
    opt.dry_run = dry_run;
    opt.check = check;
    const int rc = htmeta::run_command(sub->get_name(), std::move(cfg), opt);
    if (rc == 4) std::cerr << "check failed\n";
    return rc;
  } catch (const htmeta::ConfigError &e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
