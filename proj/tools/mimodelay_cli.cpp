#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "mimodelay/experiment.hpp"

using namespace mimodelay;

namespace {

std::string flag_name(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return "--" + key;
}

template <typename Row>
bool all_infeasible(const std::vector<Row>& rows) {
  return !rows.empty() &&
         std::none_of(rows.begin(), rows.end(), [](const Row& r) { return r.bound.feasible(); });
}

int run(const std::string& command, const ExperimentConfig& config, std::ostream& os) {
  if (command == "capacity") {
    write_csv(os, cmd_capacity(config));
    return 0;
  }
  if (command == "delay-bound") {
    const auto rows = cmd_delay_bound(config);
    write_csv(os, rows);
    return all_infeasible(rows) ? 2 : 0;
  }
  if (command == "multihop") {
    const auto rows = cmd_multihop(config);
    write_csv(os, rows);
    return all_infeasible(rows) ? 2 : 0;
  }
  if (command == "validate") {
    const auto rows = cmd_validate(config);
    write_csv(os, rows);
    if (std::any_of(rows.begin(), rows.end(), [](const ValidationRow& r) { return !r.pass; })) {
      std::cerr << "validate: empirical violation frequency exceeds epsilon\n";
      return 1;
    }
    return all_infeasible(rows) ? 2 : 0;
  }
  const CalibrationResult cal = calibrate_snr(config);
  os << "snr_db,first_order_bits_per_hz,std_error_bits\n"
     << format_number(cal.snr_db) << ',' << format_number(cal.first_order_bits) << ','
     << format_number(cal.std_error_bits) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Delay bounds for MIMO links over Gilbert-Elliott paths"};
  app.require_subcommand(1);

  std::string config_path;
  std::map<std::string, std::string> settings;
  std::vector<CLI::App*> commands;
  for (const char* name : {"capacity", "delay-bound", "multihop", "validate", "calibrate"}) {
    commands.push_back(app.add_subcommand(name));
  }
  commands[0]->description("Per-class rates and first-order capacity");
  commands[1]->description("Delay bounds over the (N, epsilon, rate, SNR, p_bg) sweep");
  commands[2]->description("End-to-end delay bounds over tandem hops");
  commands[3]->description("Compare bounds with queue simulation");
  commands[4]->description("SNR giving the target first-order capacity at N = 2");
  for (auto* sub : commands) {
    sub->fallthrough();
  }

  app.add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
  for (const std::string& key : config_keys()) {
    if (key == "rng_seed") {
      app.add_option_function<std::string>(
          "--seed,--rng-seed", [&settings](const std::string& v) { settings["rng_seed"] = v; },
          "RNG seed");
      continue;
    }
    app.add_option_function<std::string>(
        flag_name(key), [&settings, key](const std::string& v) { settings[key] = v; }, key);
  }
  bool show_config = false;
  app.add_flag("--print-config", show_config, "Print the resolved config to stderr");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int status = app.exit(e);
    return status == 0 ? 0 : 1;
  }

  try {
    ExperimentConfig config;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      load_config(config, in);
    }
    for (const auto& [key, value] : settings) apply_setting(config, key, value);
    config.validate();

    std::cerr << "config hash " << config_hash(config) << '\n';
    if (show_config) std::cerr << canonical_config(config);

    const std::string command = app.get_subcommands().front()->get_name();
    if (config.out.empty()) return run(command, config, std::cout);
    std::ostringstream buffer;
    const int status = run(command, config, buffer);
    std::ofstream out(config.out);
    if (!out) throw std::runtime_error("cannot open " + config.out);
    out << buffer.str();
    return status;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
