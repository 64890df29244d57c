// Config-driven experiment runner for the reaction-diffusion estimate auditor.
// Exit codes: 0 all audits pass, 2 audit failure, 3 blow-up guard,
// 4 numerical failure, 5 invalid configuration.

#include <CLI11.hpp>
#include <iostream>
#include <sstream>

#include "rdaudit/experiment.hpp"

namespace {

std::vector<double> parse_levels(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stod(item));
  }
  return out;
}

std::pair<std::string, std::vector<std::string>> parse_set(const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos)
    throw rdaudit::config_error("sweep: --set expects key=v1,v2,...  got '" + kv + "'");
  std::vector<std::string> values;
  std::stringstream ss(kv.substr(eq + 1));
  std::string item;
  while (std::getline(ss, item, ',')) values.push_back(item);
  return {kv.substr(0, eq), values};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rdaudit: finite-volume reaction-diffusion runs with estimate audits"};
  app.require_subcommand(1);

  std::string config_path, out_dir, snapshot_path, levels_csv, mode = "n";
  std::vector<std::string> set_args;
  int jobs = 0;

  CLI::App* cmd_run = app.add_subcommand("run", "run an experiment and its audits");
  cmd_run->add_option("-c,--config", config_path, "config file (JSON)")->required();
  cmd_run->add_option("--out", out_dir, "output directory");

  CLI::App* cmd_audit = app.add_subcommand("audit", "re-audit an existing snapshot series");
  cmd_audit->add_option("-c,--config", config_path, "config file (JSON)")->required();
  cmd_audit->add_option("--snapshots", snapshot_path, "snapshot series file")->required();
  cmd_audit->add_option("--out", out_dir, "output directory");

  CLI::App* cmd_conv = app.add_subcommand("converge", "convergence study in n or h");
  cmd_conv->add_option("-c,--config", config_path, "config file (JSON)")->required();
  cmd_conv->add_option("--levels", levels_csv, "comma-separated levels")->required();
  cmd_conv->add_option("--mode", mode, "n (truncation) or h (grid)");

  CLI::App* cmd_sweep = app.add_subcommand("sweep", "cross-product of config overrides");
  cmd_sweep->add_option("-c,--config", config_path, "config file (JSON)")->required();
  cmd_sweep->add_option("--set", set_args, "key=v1,v2 override lists")->required();
  cmd_sweep->add_option("--out", out_dir, "output directory");
  cmd_sweep->add_option("--jobs", jobs, "parallel workers (default: hardware)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 5;
  }

  try {
    if (cmd_run->parsed()) {
      rdaudit::ExperimentConfig cfg = rdaudit::load_config_file(config_path);
      rdaudit::RunReport rep = rdaudit::run_experiment(cfg, out_dir);
      std::cout << rep.to_text();
      return rep.exit_code();
    }
    if (cmd_audit->parsed()) {
      rdaudit::ExperimentConfig cfg = rdaudit::load_config_file(config_path);
      rdaudit::RunReport rep = rdaudit::audit_snapshots(cfg, snapshot_path, out_dir);
      std::cout << rep.to_text();
      return rep.exit_code();
    }
    if (cmd_conv->parsed()) {
      if (mode != "n" && mode != "h")
        throw rdaudit::config_error("converge: --mode must be n or h");
      rdaudit::ExperimentConfig cfg = rdaudit::load_config_file(config_path);
      rdaudit::ConvergeReport rep =
          rdaudit::run_converge(cfg, parse_levels(levels_csv), mode[0]);
      std::cout << rep.to_text();
      return rep.pass ? 0 : 2;
    }
    if (cmd_sweep->parsed()) {
      std::vector<std::pair<std::string, std::vector<std::string>>> sets;
      for (const std::string& s : set_args) sets.push_back(parse_set(s));
      nlohmann::json base;
      {
        std::ifstream in(config_path);
        if (!in) throw rdaudit::config_error("config: cannot open '" + config_path + "'");
        in >> base;
      }
      rdaudit::SweepResult res = rdaudit::run_sweep(base, sets, out_dir, jobs);
      for (std::size_t i = 0; i < res.labels.size(); ++i)
        std::cout << "combo_" << i << "  [" << res.labels[i] << "]  exit="
                  << res.exit_codes[i] << "  " << res.messages[i] << "\n";
      return res.worst_exit();
    }
  } catch (const rdaudit::config_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 5;
  } catch (const rdaudit::blowup_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const rdaudit::numerical_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 5;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
