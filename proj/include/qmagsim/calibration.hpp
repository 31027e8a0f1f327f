/**
 * @file calibration.hpp
 * @brief Fit the polarimeter noise scale to a measured coherent-probe sensitivity.
 */

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "qmagsim/errors.hpp"
#include "qmagsim/polarimeter.hpp"

namespace qmagsim {

/// A measured coherent-probe operating point.
struct CalibrationReference {
  double slope_mrad_per_pt = -0.038;
  double delta_b_pt = 28.3;  // pT/sqrt(Hz)
};

struct CalibrationOptions {
  double tolerance = 0.005;  // relative, on delta_B
  int max_iterations = 60;
  std::vector<std::uint64_t> seeds;  // empty: acq.seed only
};

struct CalibrationResult {
  double noise_scale = 0.0;  // mrad/sqrt(Hz)
  double delta_b_pt = 0.0;   // simulated, seed-averaged
  int iterations = 0;
};

/**
 * Bisection on noise_scale until the seed-averaged simulated PCS
 * sensitivity matches the reference within `tolerance`.
 *
 * For fixed seeds each simulated spectrum is an exact quadratic in
 * noise_scale, so the records are synthesized once and every bisection
 * step only recombines spectra.
 */
[[nodiscard]] inline CalibrationResult calibrate(const CalibrationReference& ref, const FieldDrive& drive,
                                                 RotationModel rot, const AcquisitionConfig& acq,
                                                 const CalibrationOptions& opts = {}) {
  if (!(ref.slope_mrad_per_pt != 0.0) || !std::isfinite(ref.slope_mrad_per_pt)) {
    throw calibration_error("reference slope must be finite and non-zero");
  }
  if (!(ref.delta_b_pt > 0.0)) throw calibration_error("reference sensitivity must be positive");
  if (!(opts.tolerance > 0.0)) throw calibration_error("calibration tolerance must be positive");
  rot.slope_mrad_per_pt = ref.slope_mrad_per_pt;

  std::vector<std::uint64_t> seeds = opts.seeds;
  if (seeds.empty()) seeds.push_back(acq.seed);
  std::vector<WelchComponents> parts;
  parts.reserve(seeds.size());
  for (auto seed : seeds) {
    AcquisitionConfig a = acq;
    a.seed = seed;
    parts.push_back(simulate_components(drive, rot, 1.0, a));
  }

  const double applied = std::abs(drive.b_ac_pt);
  auto simulated = [&](double noise_scale) {
    double sum = 0.0;
    for (const auto& p : parts) {
      const auto est = extract_snr(p.combine(noise_scale), drive.f0_hz);
      if (!(est.snr > 0.0)) return std::numeric_limits<double>::infinity();
      sum += sensitivity(applied, est.snr);
    }
    return sum / static_cast<double>(parts.size());
  };

  // Noiseless-signal guess delta_B = noise_scale / |slope|, bracketed generously.
  const double guess = ref.delta_b_pt * std::abs(ref.slope_mrad_per_pt);
  double lo = guess / 16.0;
  double hi = guess * 16.0;
  if (!(simulated(lo) < ref.delta_b_pt && simulated(hi) > ref.delta_b_pt)) {
    throw calibration_error("reference sensitivity not bracketed by noise_scale in [" + std::to_string(lo) + ", " +
                            std::to_string(hi) + "]");
  }

  CalibrationResult result;
  for (int it = 1; it <= opts.max_iterations; ++it) {
    const double mid = std::sqrt(lo * hi);
    const double value = simulated(mid);
    result = {mid, value, it};
    if (std::abs(value - ref.delta_b_pt) / ref.delta_b_pt < opts.tolerance) return result;
    (value < ref.delta_b_pt ? lo : hi) = mid;
  }
  throw calibration_error("calibration did not converge in " + std::to_string(opts.max_iterations) + " iterations");
}

}  // namespace qmagsim
