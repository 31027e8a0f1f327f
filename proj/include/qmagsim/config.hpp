/**
 * @file config.hpp
 * @brief Scenario configuration: TOML-style key/value files and --set overrides.
 *
 * Accepted syntax is the flat subset of TOML the scenarios need:
 *
 *     # comment
 *     [section]
 *     key = 1.5
 *     key = "text"        (bare words are accepted too)
 *     key = [1, 2, 3]
 *
 * Keys are addressed as "section.key"; every key must be known.
 */

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "qmagsim/atom_model.hpp"
#include "qmagsim/calibration.hpp"
#include "qmagsim/errors.hpp"
#include "qmagsim/faraday.hpp"
#include "qmagsim/polarimeter.hpp"

namespace qmagsim {

enum class ScenarioKind { fig3c, fig4a, fig4b, fig4c, fig5a, fig5b, custom };

inline constexpr std::array kAllScenarios{ScenarioKind::fig3c, ScenarioKind::fig4a, ScenarioKind::fig4b,
                                          ScenarioKind::fig4c, ScenarioKind::fig5a, ScenarioKind::fig5b,
                                          ScenarioKind::custom};

[[nodiscard]] inline std::string_view to_string(ScenarioKind k) noexcept {
  switch (k) {
    case ScenarioKind::fig3c: return "fig3c";
    case ScenarioKind::fig4a: return "fig4a";
    case ScenarioKind::fig4b: return "fig4b";
    case ScenarioKind::fig4c: return "fig4c";
    case ScenarioKind::fig5a: return "fig5a";
    case ScenarioKind::fig5b: return "fig5b";
    case ScenarioKind::custom: return "custom";
  }
  return "?";
}

[[nodiscard]] inline std::string_view describe(ScenarioKind k) noexcept {
  switch (k) {
    case ScenarioKind::fig3c: return "squeezing behind the cell vs detuning, per cell temperature";
    case ScenarioKind::fig4a: return "rotation slopes and phi(B) per hyperfine transition";
    case ScenarioKind::fig4b: return "rotation slopes and phi(B) per detuning";
    case ScenarioKind::fig4c: return "rotation slopes and phi(B) per cell temperature";
    case ScenarioKind::fig5a: return "PSD traces and sensitivity, coherent vs squeezed probe";
    case ScenarioKind::fig5b: return "sensitivity vs detuning, coherent vs squeezed probe";
    case ScenarioKind::custom: return "single operating point: PSDs, sensitivity and zero-span traces";
  }
  return "";
}

[[nodiscard]] inline ScenarioKind parse_scenario(std::string_view s) {
  for (auto k : kAllScenarios) {
    if (s == to_string(k)) return k;
  }
  throw config_error("unknown scenario '" + std::string(s) + "'");
}

struct SweepConfig {
  std::vector<double> detunings_mhz{-100.0, -200.0, -300.0, -400.0};  // fig5b points
  double detuning_min_mhz = -400.0;                                     // fig3c grid
  double detuning_max_mhz = 400.0;
  double detuning_step_mhz = 10.0;
  std::vector<double> temperatures_k{313.15, 323.15, 333.15};
  double field_min_pt = -6000.0;  // fig4 phi(B) grid
  double field_max_pt = 6000.0;
  double field_step_pt = 100.0;
};

struct BudgetConfig {
  double svs_db = -4.0;
  double anti_db = 7.0;
  double pss_db = -3.7;          // lock jitter is solved to reach this ...
  double lock_phase_rms = -1.0;  // ... unless given explicitly (>= 0)
  double backaction_excess = 0.0;
  double noise_scale = 0.0;  // mrad/sqrt(Hz); 0 means calibrate

  [[nodiscard]] SqueezingBudget squeezing() const {
    if (lock_phase_rms >= 0.0) {
      SqueezingBudget b{svs_db, anti_db, lock_phase_rms};
      b.validate();
      return b;
    }
    return SqueezingBudget::matching(svs_db, anti_db, pss_db);
  }
};

struct CalibrationConfig {
  CalibrationReference reference;
  std::vector<double> seeds;  // empty: the acquisition seed
  double tolerance = 0.005;
  int max_iterations = 60;
};

struct OutputConfig {
  std::string dir = "qmagsim_out";
  double psd_span_hz = 50.0;  // PSD CSVs cover f0 +- span/2
  bool svg = true;
};

struct ScenarioConfig {
  ScenarioKind scenario = ScenarioKind::fig5a;
  ProbeConfig probe;
  CellCondition cell;
  FieldDrive drive;
  AcquisitionConfig acquisition = AcquisitionConfig::fft_analyzer();
  AcquisitionConfig zero_span;  // RF spectrum-analyzer defaults
  BudgetConfig budget;
  Dataset dataset = Dataset::fig4b;
  double rotation_width_pt = 3000.0;
  CalibrationConfig calibration;
  SweepConfig sweep;
  OutputConfig output;

  static ScenarioConfig defaults(ScenarioKind kind) {
    ScenarioConfig c;
    c.scenario = kind;
    if (kind == ScenarioKind::fig4a) c.dataset = Dataset::fig4a;
    if (kind == ScenarioKind::fig4c) c.dataset = Dataset::fig4c;
    return c;
  }

  void validate() const {
    probe.validate();
    cell.validate();
    acquisition.validate(drive);
    zero_span.validate(drive);
    budget.squeezing().validate();
    if (!(budget.backaction_excess >= 0.0)) throw config_error("budget.backaction_excess must be non-negative");
    if (!(budget.noise_scale >= 0.0)) throw config_error("budget.noise_scale must be non-negative");
    if (!(rotation_width_pt > 0.0)) throw config_error("rotation.width_pt must be positive");
    if (!(sweep.detuning_step_mhz > 0.0 && sweep.detuning_max_mhz >= sweep.detuning_min_mhz)) {
      throw config_error("sweep detuning grid is empty");
    }
    if (!(sweep.field_step_pt > 0.0 && sweep.field_max_pt >= sweep.field_min_pt)) {
      throw config_error("sweep field grid is empty");
    }
    if (sweep.detunings_mhz.empty()) throw config_error("sweep.detunings_mhz is empty");
    for (double t : sweep.temperatures_k) CellCondition{t, cell.length_cm}.validate();
    if (!(output.psd_span_hz > 0.0)) throw config_error("output.psd_span_hz must be positive");
    for (double s : calibration.seeds) {
      if (!(s >= 0.0 && s == std::floor(s))) throw config_error("calibration.seeds must be non-negative integers");
    }
  }

  [[nodiscard]] RotationModel rotation_model(double slope) const { return {slope, rotation_width_pt, dataset}; }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

inline std::string unquote(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

// Strip a trailing comment that is not inside quotes.
inline std::string strip_comment(std::string_view line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return std::string(line.substr(0, i));
  }
  return std::string(line);
}

inline double parse_double(const std::string& key, const std::string& raw) {
  const std::string v = unquote(raw);
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || !std::isfinite(d)) {
    throw config_error(key + ": expected a number, got '" + raw + "'");
  }
  return d;
}

inline std::int64_t parse_integer(const std::string& key, const std::string& raw) {
  const double d = parse_double(key, raw);
  if (d != std::floor(d) || std::abs(d) > 9.0e15) throw config_error(key + ": expected an integer, got '" + raw + "'");
  return static_cast<std::int64_t>(d);
}

inline bool parse_bool(const std::string& key, const std::string& raw) {
  const std::string v = unquote(raw);
  if (v == "true") return true;
  if (v == "false") return false;
  throw config_error(key + ": expected true or false, got '" + raw + "'");
}

inline std::vector<double> parse_list(const std::string& key, const std::string& raw) {
  std::string v = trim(raw);
  if (v.size() < 2 || v.front() != '[' || v.back() != ']') throw config_error(key + ": expected a list [a, b, ...]");
  v = v.substr(1, v.size() - 2);
  std::vector<double> out;
  if (trim(v).empty()) return out;
  std::istringstream ss(v);
  for (std::string item; std::getline(ss, item, ',');) out.push_back(parse_double(key, trim(item)));
  return out;
}

inline std::string format_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

inline std::string format_list(const std::vector<double>& xs) {
  std::string out = "[";
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? ", " : "") + format_double(xs[i]);
  return out + "]";
}

struct Field {
  std::function<void(ScenarioConfig&, const std::string& key, const std::string& raw)> set;
  std::function<std::string(const ScenarioConfig&)> get;
};

inline const std::map<std::string, Field>& field_table() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> t;
    auto num = [&t](const std::string& key, auto getter) {
      t[key] = {[getter](ScenarioConfig& c, const std::string& k, const std::string& raw) { getter(c) = parse_double(k, raw); },
                [getter](const ScenarioConfig& c) { return format_double(getter(c)); }};
    };
    auto list = [&t](const std::string& key, auto getter) {
      t[key] = {[getter](ScenarioConfig& c, const std::string& k, const std::string& raw) { getter(c) = parse_list(k, raw); },
                [getter](const ScenarioConfig& c) { return format_list(getter(c)); }};
    };
    t["scenario.name"] = {[](ScenarioConfig& c, const std::string&, const std::string& raw) {
                            c.scenario = parse_scenario(unquote(raw));
                          },
                          [](const ScenarioConfig& c) { return std::string(to_string(c.scenario)); }};
    t["probe.transition"] = {[](ScenarioConfig& c, const std::string& k, const std::string& raw) {
                               try {
                                 c.probe.transition = parse_transition(unquote(raw));
                               } catch (const invalid_argument& e) {
                                 throw config_error(k + ": " + e.what());
                               }
                             },
                             [](const ScenarioConfig& c) { return std::string(to_string(c.probe.transition)); }};
    num("probe.detuning_mhz", [](auto& c) -> auto& { return c.probe.detuning_mhz; });
    num("probe.power_mw", [](auto& c) -> auto& { return c.probe.power_mw; });
    num("probe.beam_diameter_mm", [](auto& c) -> auto& { return c.probe.beam_diameter_mm; });
    num("cell.temperature_k", [](auto& c) -> auto& { return c.cell.temperature_k; });
    num("cell.length_cm", [](auto& c) -> auto& { return c.cell.length_cm; });
    num("drive.b_dc_pt", [](auto& c) -> auto& { return c.drive.b_dc_pt; });
    num("drive.b_ac_pt", [](auto& c) -> auto& { return c.drive.b_ac_pt; });
    num("drive.f0_hz", [](auto& c) -> auto& { return c.drive.f0_hz; });
    for (const std::string section : {"acquisition", "zero_span"}) {
      auto acq = [section](auto& c) -> auto& {
        return section == "acquisition" ? c.acquisition : c.zero_span;
      };
      num(section + ".sample_rate_hz", [acq](auto& c) -> auto& { return acq(c).sample_rate_hz; });
      num(section + ".duration_s", [acq](auto& c) -> auto& { return acq(c).duration_s; });
      num(section + ".rbw_hz", [acq](auto& c) -> auto& { return acq(c).rbw_hz; });
      num(section + ".vbw_hz", [acq](auto& c) -> auto& { return acq(c).vbw_hz; });
      t[section + ".averages"] = {
          [acq](ScenarioConfig& c, const std::string& k, const std::string& raw) {
            const auto n = parse_integer(k, raw);
            if (n < 1 || n > 1000000) throw config_error(k + ": must be in [1, 1000000]");
            acq(c).averages = static_cast<int>(n);
          },
          [acq](const ScenarioConfig& c) { return std::to_string(acq(c).averages); }};
      t[section + ".seed"] = {[acq](ScenarioConfig& c, const std::string& k, const std::string& raw) {
                                const auto n = parse_integer(k, raw);
                                if (n < 0) throw config_error(k + ": must be non-negative");
                                acq(c).seed = static_cast<std::uint64_t>(n);
                              },
                              [acq](const ScenarioConfig& c) {
                                return std::to_string(acq(c).seed);
                              }};
    }
    num("budget.svs_db", [](auto& c) -> auto& { return c.budget.svs_db; });
    num("budget.anti_db", [](auto& c) -> auto& { return c.budget.anti_db; });
    num("budget.pss_db", [](auto& c) -> auto& { return c.budget.pss_db; });
    num("budget.lock_phase_rms", [](auto& c) -> auto& { return c.budget.lock_phase_rms; });
    num("budget.backaction_excess", [](auto& c) -> auto& { return c.budget.backaction_excess; });
    num("budget.noise_scale", [](auto& c) -> auto& { return c.budget.noise_scale; });
    t["rotation.dataset"] = {[](ScenarioConfig& c, const std::string& k, const std::string& raw) {
                               try {
                                 c.dataset = parse_dataset(unquote(raw));
                               } catch (const invalid_argument& e) {
                                 throw config_error(k + ": " + e.what());
                               }
                             },
                             [](const ScenarioConfig& c) { return std::string(to_string(c.dataset)); }};
    num("rotation.width_pt", [](auto& c) -> auto& { return c.rotation_width_pt; });
    num("calibration.reference_slope_mrad_per_pt",
        [](auto& c) -> auto& { return c.calibration.reference.slope_mrad_per_pt; });
    num("calibration.reference_delta_b_pt", [](auto& c) -> auto& { return c.calibration.reference.delta_b_pt; });
    num("calibration.tolerance", [](auto& c) -> auto& { return c.calibration.tolerance; });
    t["calibration.max_iterations"] = {[](ScenarioConfig& c, const std::string& k, const std::string& raw) {
                                         const auto n = parse_integer(k, raw);
                                         if (n < 1 || n > 10000) throw config_error(k + ": must be in [1, 10000]");
                                         c.calibration.max_iterations = static_cast<int>(n);
                                       },
                                       [](const ScenarioConfig& c) { return std::to_string(c.calibration.max_iterations); }};
    list("calibration.seeds", [](auto& c) -> auto& { return c.calibration.seeds; });
    list("sweep.detunings_mhz", [](auto& c) -> auto& { return c.sweep.detunings_mhz; });
    num("sweep.detuning_min_mhz", [](auto& c) -> auto& { return c.sweep.detuning_min_mhz; });
    num("sweep.detuning_max_mhz", [](auto& c) -> auto& { return c.sweep.detuning_max_mhz; });
    num("sweep.detuning_step_mhz", [](auto& c) -> auto& { return c.sweep.detuning_step_mhz; });
    list("sweep.temperatures_k", [](auto& c) -> auto& { return c.sweep.temperatures_k; });
    num("sweep.field_min_pt", [](auto& c) -> auto& { return c.sweep.field_min_pt; });
    num("sweep.field_max_pt", [](auto& c) -> auto& { return c.sweep.field_max_pt; });
    num("sweep.field_step_pt", [](auto& c) -> auto& { return c.sweep.field_step_pt; });
    t["output.dir"] = {[](ScenarioConfig& c, const std::string&, const std::string& raw) { c.output.dir = unquote(raw); },
                       [](const ScenarioConfig& c) { return c.output.dir; }};
    num("output.psd_span_hz", [](auto& c) -> auto& { return c.output.psd_span_hz; });
    t["output.svg"] = {[](ScenarioConfig& c, const std::string& k, const std::string& raw) { c.output.svg = parse_bool(k, raw); },
                       [](const ScenarioConfig& c) { return std::string(c.output.svg ? "true" : "false"); }};
    return t;
  }();
  return table;
}

}  // namespace detail

/// Raw "section.key" -> value text, in file order of last assignment.
using ConfigDocument = std::map<std::string, std::string>;

[[nodiscard]] inline ConfigDocument parse_config_text(std::string_view text) {
  ConfigDocument doc;
  std::istringstream in{std::string(text)};
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string body = detail::trim(detail::strip_comment(line));
    if (body.empty()) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (body.front() == '[') {
      if (body.back() != ']') throw config_error(where + "malformed section header");
      section = detail::trim(body.substr(1, body.size() - 2));
      if (section.empty()) throw config_error(where + "empty section name");
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw config_error(where + "expected key = value");
    const std::string key = detail::trim(body.substr(0, eq));
    const std::string value = detail::trim(body.substr(eq + 1));
    if (key.empty()) throw config_error(where + "empty key");
    const std::string full = section.empty() ? key : section + "." + key;
    if (!detail::field_table().contains(full)) throw config_error(where + "unknown key '" + full + "'");
    if (doc.contains(full)) throw config_error(where + "duplicate key '" + full + "'");
    doc[full] = value;
  }
  return doc;
}

[[nodiscard]] inline ConfigDocument load_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw config_error("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

/// Apply a "section.key=value" override.
inline void apply_override(ConfigDocument& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw config_error("--set expects key=value, got '" + std::string(assignment) + "'");
  const std::string key = detail::trim(assignment.substr(0, eq));
  if (!detail::field_table().contains(key)) throw config_error("unknown key '" + key + "'");
  doc[key] = detail::trim(assignment.substr(eq + 1));
}

/**
 * Build a validated config: scenario defaults, then document values.
 * `custom` has no defaults for its operating point, so it requires the
 * probe, cell and drive sections to be spelled out.
 */
[[nodiscard]] inline ScenarioConfig make_config(ScenarioKind kind, const ConfigDocument& doc) {
  if (auto it = doc.find("scenario.name"); it != doc.end() && parse_scenario(detail::unquote(it->second)) != kind) {
    throw config_error("config names scenario '" + detail::unquote(it->second) + "' but '" +
                       std::string(to_string(kind)) + "' was requested");
  }
  if (kind == ScenarioKind::custom) {
    for (const char* required : {"probe.detuning_mhz", "cell.temperature_k", "drive.b_ac_pt", "drive.f0_hz"}) {
      if (!doc.contains(required)) throw config_error(std::string("custom scenario requires '") + required + "'");
    }
  }
  ScenarioConfig cfg = ScenarioConfig::defaults(kind);
  for (const auto& [key, raw] : doc) {
    auto it = detail::field_table().find(key);
    if (it == detail::field_table().end()) throw config_error("unknown key '" + key + "'");
    it->second.set(cfg, key, raw);
  }
  try {
    cfg.validate();
  } catch (const config_error&) {
    throw;
  } catch (const std::exception& e) {
    throw config_error(e.what());
  }
  return cfg;
}

/// Every effective setting as "section.key" -> canonical text, sorted.
/// The output location is left out so relocated reruns hash the same.
[[nodiscard]] inline std::map<std::string, std::string> canonical_entries(const ScenarioConfig& cfg) {
  std::map<std::string, std::string> out;
  for (const auto& [key, field] : detail::field_table()) {
    if (key != "output.dir") out[key] = field.get(cfg);
  }
  return out;
}

[[nodiscard]] inline std::string canonical_text(const ScenarioConfig& cfg) {
  std::string out;
  for (const auto& [k, v] : canonical_entries(cfg)) out += k + " = " + v + "\n";
  return out;
}

}  // namespace qmagsim
