/**
 * @file faraday.hpp
 * @brief Empirical Faraday-rotation response phi(B).
 *
 * Near-zero slopes come from three independent calibration datasets:
 *   fig4a  per hyperfine transition (on resonance, 40 C)
 *   fig4b  per detuning from Fg=2 -> Fe=1 (40 C)
 *   fig4c  per cell temperature (on resonance)
 * The datasets disagree at their shared operating point, so they are
 * never merged; a caller always names one.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "qmagsim/atom_model.hpp"
#include "qmagsim/errors.hpp"

namespace qmagsim {

enum class Dataset { fig4a, fig4b, fig4c };

[[nodiscard]] inline std::string_view to_string(Dataset d) noexcept {
  switch (d) {
    case Dataset::fig4a: return "fig4a";
    case Dataset::fig4b: return "fig4b";
    case Dataset::fig4c: return "fig4c";
  }
  return "?";
}

[[nodiscard]] inline Dataset parse_dataset(std::string_view s) {
  if (s == "fig4a") return Dataset::fig4a;
  if (s == "fig4b") return Dataset::fig4b;
  if (s == "fig4c") return Dataset::fig4c;
  throw invalid_argument("unknown dataset '" + std::string(s) + "' (expected fig4a, fig4b or fig4c)");
}

inline constexpr std::string_view kBuiltinSlopeCsv =
    "# qmagsim slope table, format version 1\n"
    "dataset_id,key,slope_mrad_per_pT\n"
    "fig4a,Fg2-Fe1,-0.151\n"
    "fig4a,Fg2-Fe2,-0.062\n"
    "fig4a,Fg1-Fe2,0.005\n"
    "fig4a,Fg1-Fe1,0.028\n"
    "fig4b,-100,-0.110\n"
    "fig4b,-200,-0.070\n"
    "fig4b,-300,-0.057\n"
    "fig4b,-400,-0.038\n"
    "fig4c,303,-0.092\n"
    "fig4c,313,-0.205\n"
    "fig4c,323,-0.329\n"
    "fig4c,333,-0.398\n";

inline constexpr const char* kSlopeTableEnvVar = "QMAGSIM_DATA";

using SlopeKey = std::variant<Transition, double>;

class SlopeTable {
 public:
  static SlopeTable builtin() { return parse(kBuiltinSlopeCsv); }

  // Header line required; lines starting with '#' and blank lines are skipped.
  static SlopeTable parse(std::string_view csv) {
    SlopeTable table;
    std::istringstream in{std::string(csv)};
    std::string line;
    bool header_seen = false;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line.front() == '#') continue;
      if (!header_seen) {
        if (line != "dataset_id,key,slope_mrad_per_pT") {
          throw invalid_argument("slope table: expected header 'dataset_id,key,slope_mrad_per_pT'");
        }
        header_seen = true;
        continue;
      }
      std::vector<std::string> cols;
      std::istringstream ls(line);
      for (std::string cell; std::getline(ls, cell, ',');) cols.push_back(cell);
      if (cols.size() != 3) throw invalid_argument("slope table line " + std::to_string(line_no) + ": expected 3 columns");
      const Dataset ds = parse_dataset(cols[0]);
      const double slope = parse_number(cols[2], line_no);
      if (ds == Dataset::fig4a) {
        const Transition t = parse_transition(cols[1]);
        if (!table.by_transition_.emplace(t, slope).second) {
          throw invalid_argument("slope table line " + std::to_string(line_no) + ": duplicate key");
        }
      } else {
        auto& m = ds == Dataset::fig4b ? table.by_detuning_ : table.by_temperature_;
        if (!m.emplace(parse_number(cols[1], line_no), slope).second) {
          throw invalid_argument("slope table line " + std::to_string(line_no) + ": duplicate key");
        }
      }
    }
    if (!header_seen) throw invalid_argument("slope table: empty");
    return table;
  }

  static SlopeTable load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw io_error("cannot open slope table '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse(ss.str());
  }

  /// QMAGSIM_DATA if set, otherwise the compiled-in table.
  static SlopeTable from_environment() {
    if (const char* path = std::getenv(kSlopeTableEnvVar); path != nullptr && *path != '\0') return load(path);
    return builtin();
  }

  [[nodiscard]] double lookup(Transition t) const {
    auto it = by_transition_.find(t);
    if (it == by_transition_.end()) throw range_error("no fig4a slope for " + std::string(to_string(t)));
    return it->second;
  }

  /// fig4b (detuning, MHz) or fig4c (temperature, K); linear between keys, no extrapolation.
  [[nodiscard]] double lookup(Dataset ds, double key) const {
    if (ds == Dataset::fig4a) throw invalid_argument("fig4a is keyed by transition");
    return interpolate(ds == Dataset::fig4b ? by_detuning_ : by_temperature_, key, ds);
  }

  [[nodiscard]] double lookup(Dataset ds, const SlopeKey& key) const {
    if (ds == Dataset::fig4a) {
      if (const auto* t = std::get_if<Transition>(&key)) return lookup(*t);
      throw invalid_argument("fig4a is keyed by transition");
    }
    if (const auto* x = std::get_if<double>(&key)) return lookup(ds, *x);
    throw invalid_argument(std::string(to_string(ds)) + " is keyed by a number");
  }

  struct Entry {
    Dataset dataset;
    std::string key;
    double slope;
  };

  /// All entries in dataset order, fig4a in file order of the builtin table.
  [[nodiscard]] std::vector<Entry> entries() const {
    std::vector<Entry> out;
    for (auto t : {Transition::Fg2Fe1, Transition::Fg2Fe2, Transition::Fg1Fe2, Transition::Fg1Fe1}) {
      if (auto it = by_transition_.find(t); it != by_transition_.end()) {
        out.push_back({Dataset::fig4a, std::string(to_string(t)), it->second});
      }
    }
    for (auto it = by_detuning_.rbegin(); it != by_detuning_.rend(); ++it) {
      out.push_back({Dataset::fig4b, format_key(it->first), it->second});
    }
    for (const auto& [k, v] : by_temperature_) out.push_back({Dataset::fig4c, format_key(k), v});
    return out;
  }

  [[nodiscard]] std::vector<double> keys(Dataset ds) const {
    std::vector<double> out;
    if (ds == Dataset::fig4a) return out;
    for (const auto& [k, v] : ds == Dataset::fig4b ? by_detuning_ : by_temperature_) out.push_back(k);
    return out;
  }

  [[nodiscard]] std::size_t size() const noexcept {
    return by_transition_.size() + by_detuning_.size() + by_temperature_.size();
  }

 private:
  static double parse_number(const std::string& s, int line_no) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
      throw invalid_argument("slope table line " + std::to_string(line_no) + ": bad number '" + s + "'");
    }
    return v;
  }

  static std::string format_key(double k) {
    std::ostringstream ss;
    ss << k;
    return ss.str();
  }

  static double interpolate(const std::map<double, double>& m, double key, Dataset ds) {
    if (m.empty()) throw range_error("no entries for " + std::string(to_string(ds)));
    const double lo = m.begin()->first;
    const double hi = m.rbegin()->first;
    if (!(key >= lo && key <= hi)) {
      throw range_error(std::string(to_string(ds)) + " key " + format_key(key) + " outside [" + format_key(lo) + ", " +
                        format_key(hi) + "]");
    }
    auto upper = m.lower_bound(key);
    if (upper->first == key) return upper->second;
    auto lower = std::prev(upper);
    const double t = (key - lower->first) / (upper->first - lower->first);
    return lower->second + t * (upper->second - lower->second);
  }

  std::map<Transition, double> by_transition_;
  std::map<double, double> by_detuning_;
  std::map<double, double> by_temperature_;
};

/// Lookup against the table selected by QMAGSIM_DATA (or the builtin one).
[[nodiscard]] inline double slope_lookup(Dataset ds, const SlopeKey& key) {
  static const SlopeTable table = SlopeTable::from_environment();
  return table.lookup(ds, key);
}

/// phi(B) = slope * B / (1 + (B / width)^2): dispersion shape, slope exact at B = 0.
struct RotationModel {
  double slope_mrad_per_pt = -0.038;
  double width_pt = 3000.0;
  Dataset dataset = Dataset::fig4b;

  void validate() const {
    if (!std::isfinite(slope_mrad_per_pt)) throw invalid_argument("rotation slope must be finite");
    if (!(width_pt > 0.0)) throw invalid_argument("rotation width must be positive");
  }

  /// Local slope dphi/dB at field b (mrad/pT).
  [[nodiscard]] double slope_at(double b_pt) const noexcept {
    const double x2 = (b_pt / width_pt) * (b_pt / width_pt);
    return slope_mrad_per_pt * (1.0 - x2) / ((1.0 + x2) * (1.0 + x2));
  }
};

/// Rotation angle in mrad.
[[nodiscard]] inline double rotation_angle(double b_pt, const RotationModel& model) noexcept {
  const double x = b_pt / model.width_pt;
  return model.slope_mrad_per_pt * b_pt / (1.0 + x * x);
}

/// Rotation-angle variance (rad^2) from field fluctuations sigma_b around B ~ 0.
[[nodiscard]] inline double angle_variance_from_field_noise(double sigma_b_pt, const RotationModel& model) {
  if (!(sigma_b_pt >= 0.0)) throw domain_error("field noise must be non-negative");
  const double sigma_rad = model.slope_mrad_per_pt * sigma_b_pt * 1e-3;
  return sigma_rad * sigma_rad;
}

}  // namespace qmagsim
