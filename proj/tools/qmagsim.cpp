// qmagsim command-line front end.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qmagsim/scenario.hpp"

namespace {

enum ExitCode { kOk = 0, kUnexpected = 1, kConfig = 2, kCalibration = 3, kIo = 4 };

int report_error(std::string_view kind, std::string_view message, int code) {
  nlohmann::json j{{"error", kind}, {"message", message}, {"exit_code", code}};
  std::cerr << j.dump() << '\n';
  return code;
}

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
};

qmagsim::ScenarioConfig load(qmagsim::ScenarioKind kind, const CommonOptions& o) {
  qmagsim::ConfigDocument doc;
  if (!o.config_path.empty()) doc = qmagsim::load_config_file(o.config_path);
  for (const auto& s : o.overrides) qmagsim::apply_override(doc, s);
  if (o.seed) doc["acquisition.seed"] = std::to_string(*o.seed);
  return qmagsim::make_config(kind, doc);
}

// Scenario named by the config file (for `calibrate`), fig5a otherwise.
qmagsim::ScenarioKind scenario_from(const CommonOptions& o) {
  qmagsim::ConfigDocument doc;
  if (!o.config_path.empty()) doc = qmagsim::load_config_file(o.config_path);
  for (const auto& s : o.overrides) qmagsim::apply_override(doc, s);
  if (auto it = doc.find("scenario.name"); it != doc.end()) {
    std::string name = it->second;
    if (name.size() >= 2 && name.front() == '"' && name.back() == '"') name = name.substr(1, name.size() - 2);
    return qmagsim::parse_scenario(name);
  }
  return qmagsim::ScenarioKind::fig5a;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Faraday magnetometer simulator with polarization-squeezed probing", "qmagsim"};
  app.set_version_flag("--version", std::string(qmagsim::kArtifactVersion));
  app.require_subcommand(1);

  CommonOptions run_opts;
  std::string scenario_name;
  int jobs = 1;
  std::string out_dir;
  auto* run = app.add_subcommand("run", "Run a scenario and write CSV/SVG outputs plus manifest.json");
  run->add_option("scenario", scenario_name, "Scenario name (see list-scenarios)")->required();
  run->add_option("--config", run_opts.config_path, "Config file (TOML-style key = value)");
  run->add_option("--seed", run_opts.seed, "Override acquisition.seed");
  run->add_option("--jobs", jobs, "Concurrent sweep points")->check(CLI::PositiveNumber);
  run->add_option("--out", out_dir, "Output directory (overrides output.dir)");
  run->add_option("--set", run_opts.overrides, "Override a setting, section.key=value")->allow_extra_args(false);

  CommonOptions cal_opts;
  auto* cal = app.add_subcommand("calibrate", "Fit noise_scale to the reference PCS sensitivity and print it as JSON");
  cal->add_option("--config", cal_opts.config_path, "Config file (TOML-style key = value)");
  cal->add_option("--seed", cal_opts.seed, "Override acquisition.seed");
  cal->add_option("--set", cal_opts.overrides, "Override a setting, section.key=value")->allow_extra_args(false);

  auto* list = app.add_subcommand("list-scenarios", "List available scenarios");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("usage_error", e.what(), kConfig);
  }

  try {
    if (list->parsed()) {
      for (auto k : qmagsim::kAllScenarios) std::cout << qmagsim::to_string(k) << '\t' << qmagsim::describe(k) << '\n';
      return kOk;
    }
    if (run->parsed()) {
      if (!out_dir.empty()) run_opts.overrides.push_back("output.dir=" + out_dir);
      const auto cfg = load(qmagsim::parse_scenario(scenario_name), run_opts);
      const auto manifest = qmagsim::run_scenario(cfg, {jobs});
      std::cout << "wrote " << manifest.outputs.size() + 1 << " files to " << cfg.output.dir << '\n';
      return kOk;
    }
    if (cal->parsed()) {
      const auto cfg = load(scenario_from(cal_opts), cal_opts);
      const auto r = qmagsim::calibrate_scenario(cfg);
      nlohmann::json j{{"noise_scale_mrad_per_rthz", r.noise_scale},
                       {"delta_b_pt_per_rthz", r.delta_b_pt},
                       {"iterations", r.iterations},
                       {"reference_slope_mrad_per_pt", cfg.calibration.reference.slope_mrad_per_pt},
                       {"reference_delta_b_pt", cfg.calibration.reference.delta_b_pt},
                       {"config_hash", qmagsim::sha256_hex(qmagsim::canonical_text(cfg))}};
      std::cout << j.dump(2) << '\n';
      return kOk;
    }
  } catch (const qmagsim::config_error& e) {
    return report_error("config_error", e.what(), kConfig);
  } catch (const qmagsim::calibration_error& e) {
    return report_error("calibration_error", e.what(), kCalibration);
  } catch (const qmagsim::io_error& e) {
    return report_error("io_error", e.what(), kIo);
  } catch (const std::out_of_range& e) {
    return report_error("config_error", e.what(), kConfig);
  } catch (const std::invalid_argument& e) {
    return report_error("config_error", e.what(), kConfig);
  } catch (const std::exception& e) {
    return report_error("internal_error", e.what(), kUnexpected);
  }
  return kUnexpected;
}
