// ehfl: run, sweep, or validate energy-harvesting FL simulations.
//
// Exit codes: 0 ok, 1 run failure (divergence or I/O), 2 configuration error.

#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ehfl/config.hpp"
#include "ehfl/experiment.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kRunFailure = 1;
constexpr int kConfigError = 2;

struct ConfigSource {
  std::string preset = "desk";
  std::string file;
  std::map<std::string, std::string> flags;  // key -> value, only those given
};

void add_config_options(CLI::App* cmd, ConfigSource& src) {
  cmd->add_option("--preset", src.preset, "Base preset: desk or paper")->capture_default_str();
  cmd->add_option("--config", src.file, "Key = value config file applied over the preset");
  for (const auto& key : ehfl::config_keys()) {
    cmd->add_option_function<std::string>(
        "--" + key, [&src, key](const std::string& v) { src.flags[key] = v; }, "Override '" + key + "'");
  }
}

ehfl::Config build_config(const ConfigSource& src) {
  ehfl::Config c = ehfl::preset(src.preset);
  if (!src.file.empty()) ehfl::apply_config_file(c, src.file);
  for (const auto& [k, v] : src.flags) ehfl::set_key(c, k, v);
  return c;
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

ehfl::SweepGrid parse_grid(const std::vector<std::string>& specs) {
  ehfl::SweepGrid grid;
  for (const auto& spec : specs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) throw ehfl::ConfigError("grid", "expected key=v1,v2,... got '" + spec + "'");
    std::vector<std::string> values;
    std::string rest = spec.substr(eq + 1);
    std::size_t pos = 0;
    while (!rest.empty() && pos <= rest.size()) {
      const auto comma = rest.find(',', pos);
      values.push_back(rest.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    for (const auto& v : values)
      if (v.empty()) throw ehfl::ConfigError(spec.substr(0, eq), "empty value in sweep axis");
    grid.emplace_back(spec.substr(0, eq), std::move(values));
  }
  return grid;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy-harvesting federated learning simulator with version-age client selection"};
  app.require_subcommand(1);

  ConfigSource run_src, sweep_src, validate_src;
  std::vector<std::string> grid_specs;

  auto* run = app.add_subcommand("run", "Run one simulation");
  add_config_options(run, run_src);
  auto* sweep = app.add_subcommand("sweep", "Run a Cartesian grid of simulations");
  add_config_options(sweep, sweep_src);
  sweep->add_option("--grid", grid_specs, "Axis as key=v1,v2,... (repeatable)")->required();
  auto* validate = app.add_subcommand("validate", "Check a configuration and print it");
  add_config_options(validate, validate_src);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    if (*validate) {
      const auto c = build_config(validate_src);
      print_warnings(c.validate());
      std::cout << c.to_text();
      return kOk;
    }
    if (*run) {
      const auto c = build_config(run_src);
      print_warnings(c.validate());
      const auto dir = ehfl::output_dir(c);
      const auto result = ehfl::run_single(c);
      ehfl::write_run_outputs(dir, c, result);
      if (!result.ok) {
        std::cerr << "run " << result.label.run_id << " failed: " << result.error << "\n";
        return kRunFailure;
      }
      const auto& last = result.artifacts.series.back();
      std::cout << result.label.run_id << ": macro_f1=" << last.macro_f1 << " mean_vaoi=" << last.mean_vaoi
                << " cum_energy=" << last.cum_energy << "\n";
      return kOk;
    }
    if (*sweep) {
      const auto base = build_config(sweep_src);
      const auto grid = parse_grid(grid_specs);
      print_warnings(base.validate());
      const auto outcome = ehfl::run_sweep(grid, base, ehfl::output_dir(base));
      for (const auto& r : outcome.runs) {
        if (r.ok) {
          std::cout << r.label.run_id << ": ok\n";
        } else {
          std::cerr << r.label.run_id << ": failed: " << r.error << "\n";
        }
      }
      return outcome.failures == 0 ? kOk : kRunFailure;
    }
  } catch (const ehfl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRunFailure;
  }
  return kOk;
}
