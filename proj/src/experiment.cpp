#include "ehfl/experiment.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace ehfl {

namespace {

std::string short_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

std::string make_run_id(const Config& c) {
  return std::string(to_string(c.policy)) + "_a" + short_real(c.alpha) + "_p" + short_real(c.p_bc) + "_s" +
         std::to_string(c.seed.value_or(0));
}

RunLabel make_label(const Config& c) {
  return RunLabel{make_run_id(c), std::string(to_string(c.policy)), c.seed.value_or(0), c.alpha, c.p_bc};
}

RunResult run_single(const Config& config) {
  RunResult r;
  r.label = make_label(config);
  Simulation sim(config);
  try {
    r.artifacts = sim.run_to_completion();
  } catch (const DivergenceError& e) {
    r.ok = false;
    r.error = std::string(e.what()) + " at slot " + std::to_string(sim.clock().slot);
    r.artifacts = RunArtifacts{sim.global_model(), sim.series()};
  }
  return r;
}

std::string render_csv(const RunResult& result, bool header) {
  std::ostringstream os;
  write_csv(os, result.label, result.artifacts.series, header);
  return os.str();
}

void write_run_outputs(const std::filesystem::path& dir, const Config& config, const RunResult& result) {
  std::filesystem::create_directories(dir);
  write_text(dir / (result.label.run_id + ".csv"), render_csv(result));

  nlohmann::ordered_json j;
  j["run_id"] = result.label.run_id;
  j["ok"] = result.ok;
  if (!result.ok) j["error"] = result.error;
  const auto& series = result.artifacts.series;
  j["epochs_completed"] = series.size();
  if (!series.empty()) {
    const auto& last = series.back();
    j["final"] = {{"macro_f1", last.macro_f1},
                  {"mean_vaoi", last.mean_vaoi},
                  {"cum_energy", last.cum_energy}};
    std::int64_t trainings = 0, transmissions = 0;
    for (const auto& m : series) {
      trainings += m.trainings_started;
      transmissions += m.transmissions;
    }
    j["totals"] = {{"trainings_started", trainings}, {"transmissions", transmissions}};
  }
  nlohmann::ordered_json cfg;
  std::istringstream is(config.to_text());
  for (std::string line; std::getline(is, line);) {
    const auto eq = line.find(" = ");
    cfg[line.substr(0, eq)] = line.substr(eq + 3);
  }
  j["config"] = cfg;
  write_text(dir / (result.label.run_id + ".json"), j.dump(2) + "\n");
}

std::vector<Config> expand_grid(const SweepGrid& grid, const Config& base) {
  for (const auto& [key, values] : grid)
    if (values.empty()) throw ConfigError(key, "sweep axis has no values");
  std::vector<Config> out{base};
  for (const auto& [key, values] : grid) {
    std::vector<Config> next;
    for (const auto& c : out) {
      for (const auto& v : values) {
        Config copy = c;
        set_key(copy, key, v);
        next.push_back(std::move(copy));
      }
    }
    out = std::move(next);
  }
  for (const auto& c : out) c.validate();
  return out;
}

SweepOutcome run_sweep(const SweepGrid& grid, const Config& base, const std::filesystem::path& dir) {
  const auto configs = expand_grid(grid, base);
  SweepOutcome outcome;
  std::string merged = std::string(kCsvHeader) + "\n";
  for (const auto& c : configs) {
    RunResult r = run_single(c);
    write_run_outputs(dir, c, r);
    merged += render_csv(r, false);
    if (!r.ok) ++outcome.failures;
    outcome.runs.push_back(std::move(r));
  }
  std::filesystem::create_directories(dir);
  write_text(dir / "merged.csv", merged);
  return outcome;
}

std::filesystem::path output_dir(const Config& config) {
  if (const char* env = std::getenv("EHFL_OUTPUT_DIR"); env && *env) return env;
  return config.output;
}

}  // namespace ehfl
