/**
 * @file atom_model.hpp
 * @brief Rb-87 D1 vapor cell: density, absorption and how it eats squeezing.
 *
 * The absorption line is a single Gaussian per probe configuration. Its
 * peak depth at 40 C and its effective width are fixed by two measured
 * squeezing levels behind the cell (-1.2 dB on resonance, -3.2 dB at
 * +-400 MHz, both from a -3.7 dB input); temperature enters through the
 * fitted number density (depth) and sqrt(T) (width).
 */

#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <string_view>

#include "qmagsim/errors.hpp"
#include "qmagsim/stokes.hpp"

namespace qmagsim {

namespace rb87 {
inline constexpr double kBoltzmann = 1.380649e-23;        // J/K
inline constexpr double kSpeedOfLight = 299792458.0;      // m/s
inline constexpr double kAtomicMassUnit = 1.66053906660e-27;  // kg
inline constexpr double kMassAmu = 86.909180527;
inline constexpr double kD1FrequencyHz = 377.107463e12;
inline constexpr double kGroundSplittingMHz = 6834.682611;
inline constexpr double kExcitedSplittingMHz = 814.5;
}  // namespace rb87

inline constexpr double kCelsiusOffset = 273.15;
inline constexpr double kMinCellTemperatureK = 273.0;
inline constexpr double kMaxCellTemperatureK = 400.0;
inline constexpr double kMaxDetuningMHz = 5000.0;

enum class Transition { Fg1Fe1, Fg1Fe2, Fg2Fe1, Fg2Fe2 };

[[nodiscard]] inline std::string_view to_string(Transition t) noexcept {
  switch (t) {
    case Transition::Fg1Fe1: return "Fg1-Fe1";
    case Transition::Fg1Fe2: return "Fg1-Fe2";
    case Transition::Fg2Fe1: return "Fg2-Fe1";
    case Transition::Fg2Fe2: return "Fg2-Fe2";
  }
  return "?";
}

[[nodiscard]] inline Transition parse_transition(std::string_view s) {
  for (auto t : {Transition::Fg1Fe1, Transition::Fg1Fe2, Transition::Fg2Fe1, Transition::Fg2Fe2}) {
    if (s == to_string(t)) return t;
  }
  throw invalid_argument("unknown transition '" + std::string(s) + "' (expected Fg1-Fe1, Fg1-Fe2, Fg2-Fe1 or Fg2-Fe2)");
}

/// Frequency of a hyperfine transition relative to Fg=2 -> Fe=1, in MHz.
[[nodiscard]] constexpr double transition_offset_mhz(Transition t) noexcept {
  switch (t) {
    case Transition::Fg2Fe1: return 0.0;
    case Transition::Fg2Fe2: return rb87::kExcitedSplittingMHz;
    case Transition::Fg1Fe1: return rb87::kGroundSplittingMHz;
    case Transition::Fg1Fe2: return rb87::kGroundSplittingMHz + rb87::kExcitedSplittingMHz;
  }
  return 0.0;
}

struct ProbeConfig {
  Transition transition = Transition::Fg2Fe1;
  double detuning_mhz = -400.0;  // relative to `transition`
  double power_mw = 1.0;
  double beam_diameter_mm = 3.0;

  void validate() const {
    if (!(std::abs(detuning_mhz) <= kMaxDetuningMHz)) throw domain_error("probe detuning must be within +-5000 MHz");
    if (!(power_mw > 0.0)) throw domain_error("probe power must be positive");
    if (!(beam_diameter_mm > 0.0)) throw domain_error("beam diameter must be positive");
  }

  // Detuning from the Fg=2 -> Fe=1 line, which is where the absorption model lives.
  [[nodiscard]] double detuning_from_reference_mhz() const noexcept {
    return detuning_mhz + transition_offset_mhz(transition);
  }
};

namespace detail {

inline void check_temperature(double temperature_k) {
  if (!(temperature_k >= kMinCellTemperatureK && temperature_k <= kMaxCellTemperatureK)) {
    throw domain_error("cell temperature " + std::to_string(temperature_k) + " K outside [273, 400] K");
  }
}

// Measured number densities at 40, 50 and 60 C.
inline constexpr std::array<std::array<double, 2>, 3> kDensityAnchors{{
    {313.15, 5.8e10},
    {323.15, 1.5e11},
    {333.15, 3.4e11},
}};

/// log10(n) = a - b / T, least squares over the anchors in (1/T, log10 n).
struct DensityFit {
  double a = 0.0;
  double b = 0.0;
};

inline DensityFit fit_density() {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [t, n] : kDensityAnchors) {
    const double x = 1.0 / t;
    const double y = std::log10(n);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double m = static_cast<double>(kDensityAnchors.size());
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  const double intercept = (sy - slope * sx) / m;
  return {intercept, -slope};
}

}  // namespace detail

/// Coefficients of the density fit, computed once.
[[nodiscard]] inline const detail::DensityFit& density_fit() {
  static const detail::DensityFit fit = detail::fit_density();
  return fit;
}

/// Rb-87 number density in cm^-3.
[[nodiscard]] inline double vapor_density(double temperature_k) {
  detail::check_temperature(temperature_k);
  const auto& f = density_fit();
  return std::pow(10.0, f.a - f.b / temperature_k);
}

struct CellCondition {
  double temperature_k = 313.15;
  double length_cm = 7.5;

  static CellCondition at_celsius(double celsius, double length_cm = 7.5) {
    return {celsius + kCelsiusOffset, length_cm};
  }

  void validate() const {
    detail::check_temperature(temperature_k);
    if (!(length_cm > 0.0)) throw domain_error("cell length must be positive");
  }

  [[nodiscard]] double density() const { return vapor_density(temperature_k); }
};

/// Doppler FWHM of the D1 line in MHz.
[[nodiscard]] inline double doppler_fwhm(double temperature_k) {
  if (!(temperature_k > 0.0)) throw domain_error("temperature must be positive");
  const double mass = rb87::kMassAmu * rb87::kAtomicMassUnit;
  const double c2 = rb87::kSpeedOfLight * rb87::kSpeedOfLight;
  return rb87::kD1FrequencyHz * std::sqrt(8.0 * std::numbers::ln2 * rb87::kBoltzmann * temperature_k / (mass * c2)) * 1e-6;
}

/// eta such that eta * v_in + (1 - eta) = v_out.
[[nodiscard]] inline double transmission_from_squeezing(double v_in, double v_out) {
  if (!(v_in > 0.0 && v_in != 1.0)) throw domain_error("input variance must be positive and differ from 1");
  return (1.0 - v_out) / (1.0 - v_in);
}

/**
 * Calibration of the absorption profile.
 *
 * Reference point is 40 C with a 7.5 cm cell. Depth on resonance and at
 * 400 MHz come from inverting the loss channel at the measured squeezing
 * levels.
 */
struct AbsorptionCalibration {
  double reference_temperature_k = 313.15;
  double reference_length_cm = 7.5;
  double peak_od = 0.0;       // at reference temperature and length
  double width_factor = 0.0;  // effective FWHM / Doppler FWHM

  static AbsorptionCalibration from_squeezing_anchors(double input_db, double resonant_db, double offset_db,
                                                      double offset_mhz) {
    const double v_in = squeezing_db_to_variance(input_db);
    const double eta0 = transmission_from_squeezing(v_in, squeezing_db_to_variance(resonant_db));
    const double eta1 = transmission_from_squeezing(v_in, squeezing_db_to_variance(offset_db));
    AbsorptionCalibration cal;
    cal.peak_od = -std::log(eta0);
    const double ratio = std::log(eta1) / std::log(eta0);
    const double sigma = offset_mhz / std::sqrt(-2.0 * std::log(ratio));
    cal.width_factor = sigma * 2.0 * std::sqrt(2.0 * std::numbers::ln2) / doppler_fwhm(cal.reference_temperature_k);
    return cal;
  }
};

[[nodiscard]] inline const AbsorptionCalibration& absorption_calibration() {
  static const AbsorptionCalibration cal = AbsorptionCalibration::from_squeezing_anchors(-3.7, -1.2, -3.2, 400.0);
  return cal;
}

/// Effective Gaussian FWHM of the absorption line (MHz).
[[nodiscard]] inline double absorption_fwhm(double temperature_k) {
  return absorption_calibration().width_factor * doppler_fwhm(temperature_k);
}

/// Optical depth at a detuning (MHz, from Fg=2 -> Fe=1).
[[nodiscard]] inline double optical_depth(double detuning_mhz, const CellCondition& cond) {
  cond.validate();
  const auto& cal = absorption_calibration();
  const double sigma = absorption_fwhm(cond.temperature_k) / (2.0 * std::sqrt(2.0 * std::numbers::ln2));
  const double peak = cal.peak_od * (cond.density() / vapor_density(cal.reference_temperature_k)) *
                      (cond.length_cm / cal.reference_length_cm);
  return peak * std::exp(-detuning_mhz * detuning_mhz / (2.0 * sigma * sigma));
}

[[nodiscard]] inline double transmission(double detuning_mhz, const CellCondition& cond) {
  return std::exp(-optical_depth(detuning_mhz, cond));
}

/// Beam-splitter loss: eta * v + (1 - eta).
[[nodiscard]] inline double propagate_variance_through_loss(double v_in, double eta) {
  if (!(v_in > 0.0)) throw domain_error("input variance must be positive");
  if (!(eta > 0.0 && eta <= 1.0)) throw domain_error("transmission must lie in (0, 1]");
  return eta * v_in + (1.0 - eta);
}

/**
 * Squeezing seen through a Gaussian-jittered measurement phase.
 * V = v_sq <cos^2> + v_anti <sin^2>, with <cos 2 theta> = exp(-2 theta_rms^2).
 */
[[nodiscard]] inline double effective_variance_with_phase_noise(double v_sq, double v_anti, double theta_rms) {
  if (!(v_sq > 0.0 && v_sq <= 1.0 && 1.0 <= v_anti)) throw domain_error("expected 0 < v_sq <= 1 <= v_anti");
  if (!(theta_rms >= 0.0)) throw domain_error("phase jitter must be non-negative");
  const double mean_cos2 = std::exp(-2.0 * theta_rms * theta_rms);
  return 0.5 * (v_sq + v_anti) + 0.5 * (v_sq - v_anti) * mean_cos2;
}

/// Inverse of effective_variance_with_phase_noise in theta_rms.
[[nodiscard]] inline double solve_lock_phase_rms(double v_sq, double v_anti, double v_target) {
  if (!(v_sq > 0.0 && v_sq < v_anti && v_anti >= 1.0)) throw domain_error("expected 0 < v_sq < v_anti, v_anti >= 1");
  if (!(v_target >= v_sq && v_target < 0.5 * (v_sq + v_anti))) {
    throw domain_error("target variance unreachable by phase jitter");
  }
  const double mean_cos2 = (v_anti + v_sq - 2.0 * v_target) / (v_anti - v_sq);
  return std::sqrt(-0.5 * std::log(mean_cos2));
}

/**
 * Squeezed-vacuum levels, lock jitter, and the resulting polarization
 * squeezing that is sent into the cell.
 */
struct SqueezingBudget {
  double svs_db = -4.0;
  double anti_db = 7.0;
  double lock_phase_rms = 0.0;  // radians

  /// Budget whose jitter degrades (svs, anti) to exactly `pss_db`.
  static SqueezingBudget matching(double svs_db, double anti_db, double pss_db) {
    SqueezingBudget b{svs_db, anti_db, 0.0};
    b.validate();
    b.lock_phase_rms = solve_lock_phase_rms(squeezing_db_to_variance(svs_db), squeezing_db_to_variance(anti_db),
                                            squeezing_db_to_variance(pss_db));
    return b;
  }

  void validate() const {
    if (!(svs_db < 0.0 && anti_db > 0.0)) throw domain_error("squeezing budget needs svs < 0 dB < anti");
    if (!(squeezing_db_to_variance(svs_db) * squeezing_db_to_variance(anti_db) >= 1.0 - 1e-12)) {
      throw domain_error("squeezing pair violates the uncertainty bound");
    }
    if (!(lock_phase_rms >= 0.0)) throw domain_error("lock phase jitter must be non-negative");
  }

  [[nodiscard]] double pss_variance() const {
    return effective_variance_with_phase_noise(squeezing_db_to_variance(svs_db), squeezing_db_to_variance(anti_db),
                                               lock_phase_rms);
  }
  [[nodiscard]] double pss_db() const { return variance_to_db(pss_variance()); }
};

/**
 * Squeezing level (dB) behind the cell. `backaction_excess` is added to
 * the output variance in SNL units; it stands in for atomic spin-noise
 * back-action and defaults to zero.
 */
[[nodiscard]] inline double squeezing_after_cell(double level_in_db, double detuning_mhz, const CellCondition& cond,
                                                 double backaction_excess = 0.0) {
  if (!(level_in_db < 0.0)) throw domain_error("input must be squeezed (level < 0 dB)");
  if (!(backaction_excess >= 0.0)) throw domain_error("back-action excess must be non-negative");
  const double v = propagate_variance_through_loss(squeezing_db_to_variance(level_in_db), transmission(detuning_mhz, cond));
  return variance_to_db(v + backaction_excess);
}

}  // namespace qmagsim
