/**
 * @file scenario.hpp
 * @brief Scenario runner: wires the models together and emits CSV/SVG plus a manifest.
 */

#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qmagsim/atom_model.hpp"
#include "qmagsim/calibration.hpp"
#include "qmagsim/config.hpp"
#include "qmagsim/faraday.hpp"
#include "qmagsim/polarimeter.hpp"
#include "qmagsim/report.hpp"

#ifndef QMAGSIM_VERSION
#define QMAGSIM_VERSION "1.0.0"
#endif

namespace qmagsim {

inline constexpr std::string_view kArtifactVersion = QMAGSIM_VERSION;

struct OutputFile {
  std::string file;  // relative to the output directory
  std::string sha256;
  std::size_t bytes = 0;
};

struct RunManifest {
  ScenarioKind scenario = ScenarioKind::fig5a;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string artifact_version{kArtifactVersion};
  std::optional<double> noise_scale;  // mrad/sqrt(Hz), when the scenario uses one
  std::optional<CalibrationResult> calibration;
  std::map<std::string, std::string> config;
  nlohmann::json results = nlohmann::json::object();
  std::vector<OutputFile> outputs;

  [[nodiscard]] nlohmann::json to_json() const {
    nlohmann::json j;
    j["artifact_version"] = artifact_version;
    j["scenario"] = std::string(to_string(scenario));
    j["seed"] = seed;
    j["config_hash"] = config_hash;
    j["config"] = config;
    j["noise_scale_mrad_per_rthz"] = noise_scale ? nlohmann::json(*noise_scale) : nlohmann::json(nullptr);
    if (calibration) {
      j["calibration"] = {{"noise_scale_mrad_per_rthz", calibration->noise_scale},
                          {"delta_b_pt_per_rthz", calibration->delta_b_pt},
                          {"iterations", calibration->iterations}};
    } else {
      j["calibration"] = nullptr;
    }
    j["results"] = results;
    auto files = nlohmann::json::array();
    for (const auto& f : outputs) files.push_back({{"file", f.file}, {"sha256", f.sha256}, {"bytes", f.bytes}});
    j["outputs"] = files;
    return j;
  }
};

struct RunOptions {
  int jobs = 1;
};

/// Run `task(i)` for i in [0, n) on up to `jobs` threads; rethrows the first failure.
inline void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& task) {
  const auto workers = static_cast<std::size_t>(std::clamp<long long>(jobs, 1, static_cast<long long>(std::max<std::size_t>(n, 1))));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          task(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

/// Near-zero rotation slope at the configured operating point, from the configured dataset.
[[nodiscard]] inline double operating_slope(const ScenarioConfig& cfg, const SlopeTable& table) {
  switch (cfg.dataset) {
    case Dataset::fig4a: return table.lookup(cfg.probe.transition);
    case Dataset::fig4b: return table.lookup(Dataset::fig4b, cfg.probe.detuning_from_reference_mhz());
    case Dataset::fig4c: return table.lookup(Dataset::fig4c, cfg.cell.temperature_k);
  }
  return 0.0;
}

/// S2 variance of the squeezed probe after the cell at a detuning from Fg=2 -> Fe=1.
[[nodiscard]] inline double squeezed_v2_after_cell(const ScenarioConfig& cfg, double detuning_ref_mhz) {
  const double level = cfg.budget.squeezing().pss_db();
  return squeezing_db_to_variance(
      squeezing_after_cell(level, detuning_ref_mhz, cfg.cell, cfg.budget.backaction_excess));
}

/// Fit noise_scale to the configured reference; seeds default to the acquisition seed.
[[nodiscard]] inline CalibrationResult calibrate_scenario(const ScenarioConfig& cfg) {
  CalibrationOptions opts;
  opts.tolerance = cfg.calibration.tolerance;
  opts.max_iterations = cfg.calibration.max_iterations;
  for (double s : cfg.calibration.seeds) opts.seeds.push_back(static_cast<std::uint64_t>(s));
  return calibrate(cfg.calibration.reference, cfg.drive, cfg.rotation_model(cfg.calibration.reference.slope_mrad_per_pt),
                   cfg.acquisition, opts);
}

namespace detail {

struct ScenarioOutput {
  std::vector<std::pair<std::string, std::string>> files;  // name, content
  nlohmann::json results = nlohmann::json::object();
  std::optional<double> noise_scale;
  std::optional<CalibrationResult> calibration;

  void add(std::string name, std::string content) { files.emplace_back(std::move(name), std::move(content)); }
};

inline std::vector<double> grid(double lo, double hi, double step) {
  std::vector<double> out;
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(lo + static_cast<double>(i) * step);
  return out;
}

inline std::string temperature_tag(double t) { return std::to_string(static_cast<long long>(std::llround(t))) + "K"; }

inline void resolve_noise_scale(const ScenarioConfig& cfg, ScenarioOutput& out) {
  if (cfg.budget.noise_scale > 0.0) {
    out.noise_scale = cfg.budget.noise_scale;
    return;
  }
  out.calibration = calibrate_scenario(cfg);
  out.noise_scale = out.calibration->noise_scale;
}

inline void run_fig3c(const ScenarioConfig& cfg, ScenarioOutput& out) {
  const auto detunings = grid(cfg.sweep.detuning_min_mhz, cfg.sweep.detuning_max_mhz, cfg.sweep.detuning_step_mhz);
  const double level = cfg.budget.squeezing().pss_db();
  std::vector<PlotSeries> plot;
  plot.push_back({"no cell", detunings, std::vector<double>(detunings.size(), level)});
  out.add("fig3c_no_cell.csv", xy_csv("detuning_mhz,squeezing_db", plot.back().x, plot.back().y));
  out.results["input_squeezing_db"] = level;
  for (double t : cfg.sweep.temperatures_k) {
    const CellCondition cell{t, cfg.cell.length_cm};
    std::vector<double> sq;
    for (double d : detunings) sq.push_back(squeezing_after_cell(level, d, cell, cfg.budget.backaction_excess));
    const std::string tag = temperature_tag(t);
    out.add("fig3c_" + tag + ".csv", xy_csv("detuning_mhz,squeezing_db", detunings, sq));
    out.results["squeezing_db_at_-400MHz"][tag] = squeezing_after_cell(level, -400.0, cell, cfg.budget.backaction_excess);
    out.results["squeezing_db_at_0MHz"][tag] = squeezing_after_cell(level, 0.0, cell, cfg.budget.backaction_excess);
    plot.push_back({tag, detunings, std::move(sq)});
  }
  if (cfg.output.svg) {
    out.add("fig3c.svg", svg_plot("Squeezing behind the vapor cell", "detuning from Fg2-Fe1 (MHz)", "squeezing (dB re SNL)", plot));
  }
}

inline void run_fig4(const ScenarioConfig& cfg, Dataset ds, ScenarioOutput& out) {
  const auto table = SlopeTable::from_environment();
  const std::string prefix(to_string(ds));
  std::vector<std::string> keys;
  std::vector<double> slopes;
  for (const auto& e : table.entries()) {
    if (e.dataset != ds) continue;
    keys.push_back(e.key);
    slopes.push_back(e.slope);
  }
  std::string csv = "key,slope_mrad_per_pT\n";
  for (std::size_t i = 0; i < keys.size(); ++i) csv += keys[i] + "," + format_value(slopes[i]) + "\n";
  out.add(prefix + "_slopes.csv", csv);

  const auto fields = grid(cfg.sweep.field_min_pt, cfg.sweep.field_max_pt, cfg.sweep.field_step_pt);
  std::vector<PlotSeries> plot;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const RotationModel model{slopes[i], cfg.rotation_width_pt, ds};
    std::vector<double> phi;
    for (double b : fields) phi.push_back(rotation_angle(b, model));
    out.add(prefix + "_" + keys[i] + ".csv", xy_csv("field_pt,phi_mrad", fields, phi));
    out.results["slopes_mrad_per_pt"][keys[i]] = slopes[i];
    plot.push_back({keys[i], fields, std::move(phi)});
  }
  if (cfg.output.svg) out.add(prefix + ".svg", svg_plot("Faraday rotation " + prefix, "B (pT)", "phi (mrad)", plot));
}

inline nlohmann::json sensitivity_json(const SensitivityResult& r, double v2) {
  return {{"v2_after_cell", v2},
          {"delta_b_applied_pt", r.delta_b_applied},
          {"snr_rthz", r.snr},
          {"signal_amplitude_mrad", r.estimate.signal_amplitude},
          {"noise_floor_mrad_per_rthz", r.estimate.noise_floor},
          {"sensitivity_pt_per_rthz", r.delta_b_sens}};
}

inline std::string summary_csv(const std::vector<std::pair<std::string, std::pair<double, SensitivityResult>>>& rows) {
  std::string csv = "probe,v2_after_cell,delta_b_applied_pt,snr_rthz,sensitivity_pt_per_rthz\n";
  for (const auto& [name, vr] : rows) {
    const auto& [v2, r] = vr;
    csv += name + "," + format_value(v2) + "," + format_value(r.delta_b_applied) + "," + format_value(r.snr) + "," +
           format_value(r.delta_b_sens) + "\n";
  }
  return csv;
}

// PCS and PSS at the configured operating point, identical noise seeds.
inline void run_operating_point(const ScenarioConfig& cfg, const std::string& prefix, int jobs, ScenarioOutput& out) {
  resolve_noise_scale(cfg, out);
  const auto table = SlopeTable::from_environment();
  const double slope = operating_slope(cfg, table);
  const auto rot = cfg.rotation_model(slope);
  const double v2 = squeezed_v2_after_cell(cfg, cfg.probe.detuning_from_reference_mhz());
  const std::array budgets{NoiseBudget::coherent(*out.noise_scale), NoiseBudget::squeezed(v2, *out.noise_scale)};
  std::array<SensitivityResult, 2> results;
  parallel_for(2, jobs, [&](std::size_t i) { results[i] = simulate_sensitivity(cfg.drive, rot, budgets[i], cfg.acquisition); });

  const double lo = cfg.drive.f0_hz - cfg.output.psd_span_hz / 2;
  const double hi = cfg.drive.f0_hz + cfg.output.psd_span_hz / 2;
  out.add(prefix + "_pcs_psd.csv", psd_csv(results[0].psd, lo, hi));
  out.add(prefix + "_pss_psd.csv", psd_csv(results[1].psd, lo, hi));
  out.add(prefix + "_summary.csv", summary_csv({{"PCS", {1.0, results[0]}}, {"PSS", {v2, results[1]}}}));
  out.results["slope_mrad_per_pt"] = slope;
  out.results["PCS"] = sensitivity_json(results[0], 1.0);
  out.results["PSS"] = sensitivity_json(results[1], v2);
  out.results["enhancement_db"] = 20.0 * std::log10(results[0].delta_b_sens / results[1].delta_b_sens);
  if (cfg.output.svg) {
    std::vector<PlotSeries> plot;
    for (std::size_t i = 0; i < 2; ++i) {
      PlotSeries s{i == 0 ? "PCS" : "PSS", {}, {}};
      for (std::size_t k = 0; k < results[i].psd.size(); ++k) {
        const double f = results[i].psd.frequency(k);
        if (f < lo || f > hi) continue;
        s.x.push_back(f);
        s.y.push_back(20.0 * std::log10(std::max(results[i].psd.asd[k], 1e-300)));
      }
      plot.push_back(std::move(s));
    }
    out.add(prefix + ".svg", svg_plot("Polarimeter spectrum", "frequency (Hz)", "ASD (dB re 1 mrad/rtHz)", plot));
  }
}

inline void run_fig5b(const ScenarioConfig& cfg, int jobs, ScenarioOutput& out) {
  resolve_noise_scale(cfg, out);
  const auto table = SlopeTable::from_environment();
  const auto& detunings = cfg.sweep.detunings_mhz;
  const std::size_t n = detunings.size();
  std::vector<double> pcs(n), pss(n), v2s(n), slopes(n);
  for (std::size_t i = 0; i < n; ++i) {
    slopes[i] = table.lookup(Dataset::fig4b, detunings[i]);
    v2s[i] = squeezed_v2_after_cell(cfg, detunings[i]);
  }
  parallel_for(2 * n, jobs, [&](std::size_t task) {
    const std::size_t i = task / 2;
    AcquisitionConfig acq = cfg.acquisition;
    acq.seed = derive_seed(cfg.acquisition.seed, i);
    const auto rot = cfg.rotation_model(slopes[i]);
    const auto budget = task % 2 == 0 ? NoiseBudget::coherent(*out.noise_scale) : NoiseBudget::squeezed(v2s[i], *out.noise_scale);
    (task % 2 == 0 ? pcs : pss)[i] = simulate_sensitivity(cfg.drive, rot, budget, acq).delta_b_sens;
  });
  out.add("fig5b_pcs.csv", xy_csv("detuning_mhz,sensitivity_pt_per_rthz", detunings, pcs));
  out.add("fig5b_pss.csv", xy_csv("detuning_mhz,sensitivity_pt_per_rthz", detunings, pss));
  for (std::size_t i = 0; i < n; ++i) {
    out.results["points"].push_back({{"detuning_mhz", detunings[i]},
                                     {"slope_mrad_per_pt", slopes[i]},
                                     {"v2_after_cell", v2s[i]},
                                     {"pcs_pt_per_rthz", pcs[i]},
                                     {"pss_pt_per_rthz", pss[i]}});
  }
  if (cfg.output.svg) {
    out.add("fig5b.svg", svg_plot("Sensitivity vs detuning", "detuning from Fg2-Fe1 (MHz)", "delta B (pT/rtHz)",
                                  {{"PCS", detunings, pcs}, {"PSS", detunings, pss}}));
  }
}

inline void run_custom(const ScenarioConfig& cfg, int jobs, ScenarioOutput& out) {
  run_operating_point(cfg, "custom", jobs, out);
  const double v2 = out.results["PSS"]["v2_after_cell"].get<double>();
  const auto squeezing = cfg.budget.squeezing();
  const double ns = *out.noise_scale;
  const auto& zs = cfg.zero_span;
  auto seeded = [&](std::uint64_t index) {
    AcquisitionConfig a = zs;
    a.seed = derive_seed(zs.seed, index);
    return a;
  };
  std::array<std::vector<double>, 4> series;
  parallel_for(4, jobs, [&](std::size_t i) {
    switch (i) {
      case 0: series[0] = synthesize_noise([](double) { return 1.0; }, ns, seeded(0)); break;
      case 1: series[1] = synthesize_noise([](double) { return 1.0; }, ns, seeded(1)); break;
      case 2: series[2] = synthesize_noise([v2](double) { return v2; }, ns, seeded(2)); break;
      default: {
        AcquisitionConfig scan = seeded(3);
        series[3] = synthesize_phase_scan(squeezing_db_to_variance(squeezing.svs_db),
                                          squeezing_db_to_variance(squeezing.anti_db), zs.duration_s / 4.0, ns, scan);
      }
    }
  });
  const auto pcs = zero_span_trace(series[1], series[0], cfg.drive.f0_hz, zs);
  const auto pss = zero_span_trace(series[2], series[0], cfg.drive.f0_hz, zs);
  AcquisitionConfig single = zs;
  single.averages = 1;
  const auto scan = zero_span_trace(series[3], series[0], cfg.drive.f0_hz, single);
  out.add("custom_zero_span_pcs.csv", zero_span_csv(pcs));
  out.add("custom_zero_span_pss.csv", zero_span_csv(pss));
  out.add("custom_zero_span_scan.csv", zero_span_csv(scan));
  out.results["zero_span_mean_db"] = {{"PCS", pcs.mean_db()}, {"PSS", pss.mean_db()}};
  if (cfg.output.svg) {
    out.add("custom_zero_span.svg", svg_plot("Zero-span noise at f0", "time (s)", "noise power (dB re SNL)",
                                             {{"scan", scan.time_s, scan.power_db},
                                              {"PSS", pss.time_s, pss.power_db},
                                              {"PCS", pcs.time_s, pcs.power_db}}));
  }
}

}  // namespace detail

/**
 * Run one scenario, write its files plus manifest.json into
 * cfg.output.dir, and return the manifest.
 */
inline RunManifest run_scenario(const ScenarioConfig& cfg, const RunOptions& opts = {}) {
  cfg.validate();
  detail::ScenarioOutput out;
  switch (cfg.scenario) {
    case ScenarioKind::fig3c: detail::run_fig3c(cfg, out); break;
    case ScenarioKind::fig4a: detail::run_fig4(cfg, Dataset::fig4a, out); break;
    case ScenarioKind::fig4b: detail::run_fig4(cfg, Dataset::fig4b, out); break;
    case ScenarioKind::fig4c: detail::run_fig4(cfg, Dataset::fig4c, out); break;
    case ScenarioKind::fig5a: detail::run_operating_point(cfg, "fig5a", opts.jobs, out); break;
    case ScenarioKind::fig5b: detail::run_fig5b(cfg, opts.jobs, out); break;
    case ScenarioKind::custom: detail::run_custom(cfg, opts.jobs, out); break;
  }

  RunManifest manifest;
  manifest.scenario = cfg.scenario;
  manifest.config = canonical_entries(cfg);
  manifest.config_hash = sha256_hex(canonical_text(cfg));
  manifest.seed = cfg.acquisition.seed;
  manifest.noise_scale = out.noise_scale;
  manifest.calibration = out.calibration;
  manifest.results = std::move(out.results);

  const std::filesystem::path dir(cfg.output.dir);
  for (const auto& [name, content] : out.files) {
    write_file_atomic(dir / name, content);
    manifest.outputs.push_back({name, sha256_hex(content), content.size()});
  }
  write_file_atomic(dir / "manifest.json", manifest.to_json().dump(2) + "\n");
  return manifest;
}

}  // namespace qmagsim
