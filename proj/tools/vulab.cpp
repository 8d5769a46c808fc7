#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "vulab/campaign.hpp"
#include "vulab/errors.hpp"

namespace {

constexpr int kUsage = 3;

vulab::ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw vulab::InvalidConfig("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  vulab::Json j;
  try {
    j = vulab::Json::parse(ss.str());
  } catch (const nlohmann::json::exception& e) {
    throw vulab::InvalidConfig(std::string("config is not valid JSON: ") + e.what());
  }
  return vulab::config_from_json(j);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vulab: numerical VU-decomposition laboratory"};
  app.require_subcommand(1);
  std::string config_path;
  std::string problem;
  std::string out_dir;
  std::vector<CLI::App*> subs;
  for (const std::string& name : {std::string("decompose"), std::string("tilt-test"), std::string("lagrangian"),
                                  std::string("subjet"), std::string("manifold"), std::string("appendix"),
                                  std::string("all")}) {
    CLI::App* sub = app.add_subcommand(name, name == "all" ? "run every campaign" : "run the " + name + " campaign");
    sub->add_option("--config", config_path, "experiment config (JSON)");
    sub->add_option("--problem", problem, "builtin name or problem JSON path (when no config is given)");
    sub->add_option("--out", out_dir, "output directory (overrides the config)");
    subs.push_back(sub);
  }
  app.add_subcommand("schema", "print the report schema version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsage;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  if (cmd == "schema") {
    std::cout << vulab::report_schema_version() << "\n";
    return 0;
  }

  try {
    vulab::ExperimentConfig cfg;
    if (!config_path.empty()) {
      cfg = load_config(config_path);
    } else if (!problem.empty()) {
      cfg.problem = problem;
    } else {
      std::cerr << "error: one of --config or --problem is required\n";
      return kUsage;
    }
    if (!problem.empty()) cfg.problem = problem;
    if (cmd == "all") {
      cfg.campaign = vulab::campaign_names();
    } else {
      cfg.campaign = {cmd};
    }
    vulab::validate(cfg);
    const vulab::RunResult r = vulab::run(cfg, out_dir);
    for (const auto& c : r.manifest) {
      std::cout << fmt::format("{:<12} {:<24} {}", c.campaign, c.check, vulab::to_string(c.status));
      if (!c.reason.empty()) std::cout << " (" << c.reason << ")";
      std::cout << "\n";
    }
    return r.exit_code;
  } catch (const vulab::InvalidConfig& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const vulab::UnknownBuiltin& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const vulab::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const vulab::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
