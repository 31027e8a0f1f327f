/**
 * @file stokes.hpp
 * @brief Stokes vectors with Gaussian quantum-noise bookkeeping.
 *
 * Mean values are carried in photon-flux units (any consistent scale).
 * Noise variances are linear powers normalized to the shot-noise level,
 * so a coherent state has V1 = V2 = V3 = 1.
 *
 * Rotation angles are Poincare-sphere angles: a rotation by phi about S3
 * turns (S1, S2) by phi, which to first order gives
 * S2_out = S2_in + S1 * phi. A physical polarization-plane rotation by
 * alpha corresponds to phi = 2 * alpha on the sphere.
 */

#pragma once

#include <array>
#include <cmath>
#include <numbers>

#include "qmagsim/errors.hpp"

namespace qmagsim {

/**
 * Mean Stokes vector.
 * s0: total flux; s1: H - V; s2: +45 - -45; s3: circular.
 */
struct StokesVector {
  double s0 = 0.0;
  double s1 = 0.0;
  double s2 = 0.0;
  double s3 = 0.0;

  // Arm intensities of the two polarimeter bases.
  [[nodiscard]] constexpr double i_h() const noexcept { return 0.5 * (s0 + s1); }
  [[nodiscard]] constexpr double i_v() const noexcept { return 0.5 * (s0 - s1); }
  [[nodiscard]] constexpr double i_p45() const noexcept { return 0.5 * (s0 + s2); }
  [[nodiscard]] constexpr double i_m45() const noexcept { return 0.5 * (s0 - s2); }

  [[nodiscard]] double polarized_norm() const noexcept {
    return std::sqrt(s1 * s1 + s2 * s2 + s3 * s3);
  }

  // 0 for unpolarized light, 1 for fully polarized.
  [[nodiscard]] double degree_of_polarization() const noexcept {
    return s0 > 0.0 ? polarized_norm() / s0 : 0.0;
  }

  [[nodiscard]] bool is_physical(double rel_tol = 1e-9) const noexcept {
    if (!(s0 >= 0.0)) return false;
    const double p2 = s1 * s1 + s2 * s2 + s3 * s3;
    return p2 <= s0 * s0 * (1.0 + rel_tol);
  }

  static constexpr StokesVector horizontal(double flux) noexcept { return {flux, flux, 0.0, 0.0}; }
  static constexpr StokesVector diagonal(double flux) noexcept { return {flux, 0.0, flux, 0.0}; }
};

/// SNL-normalized variances of S1, S2, S3.
struct NoiseVariances {
  double v1 = 1.0;
  double v2 = 1.0;
  double v3 = 1.0;

  [[nodiscard]] bool is_valid() const noexcept { return v1 > 0.0 && v2 > 0.0 && v3 > 0.0; }

  static constexpr NoiseVariances coherent() noexcept { return {1.0, 1.0, 1.0}; }
};

struct PolarizationState {
  StokesVector mean;
  NoiseVariances noise;

  [[nodiscard]] bool is_valid() const noexcept { return mean.is_physical() && noise.is_valid(); }
};

/// V = 10^(dB/10). Negative levels are squeezed.
[[nodiscard]] inline double squeezing_db_to_variance(double level_db) {
  if (!std::isfinite(level_db)) throw invalid_argument("squeezing level must be finite");
  return std::pow(10.0, level_db / 10.0);
}

[[nodiscard]] inline double variance_to_db(double v) {
  if (!(v > 0.0)) throw domain_error("variance must be positive to express in dB");
  return 10.0 * std::log10(v);
}

/// Squeezed/anti-squeezed pair placed on S2/S3 of a bright S1-polarized beam.
[[nodiscard]] inline PolarizationState squeezed_state(double flux, double squeezed_db, double anti_db) {
  return {StokesVector::horizontal(flux),
          {1.0, squeezing_db_to_variance(squeezed_db), squeezing_db_to_variance(anti_db)}};
}

/// What a balanced polarimeter in the +-45 basis reads: I(+45) - I(-45).
[[nodiscard]] inline double polarimeter_s2(const PolarizationState& state) noexcept {
  return state.mean.i_p45() - state.mean.i_m45();
}

/**
 * Rotate about the S3 axis by phi (Poincare angle, radians).
 *
 * Means rotate exactly. The diagonal covariance (v1, v2) is rotated as a
 * covariance and its off-diagonal part dropped; v3 is untouched.
 */
[[nodiscard]] inline PolarizationState rotate_about_s3(const PolarizationState& state, double phi) {
  if (!(std::abs(phi) < std::numbers::pi / 2)) throw range_error("rotation angle must satisfy |phi| < pi/2");
  const double c = std::cos(phi);
  const double s = std::sin(phi);
  PolarizationState out = state;
  out.mean.s1 = state.mean.s1 * c - state.mean.s2 * s;
  out.mean.s2 = state.mean.s1 * s + state.mean.s2 * c;
  out.noise.v1 = state.noise.v1 * c * c + state.noise.v2 * s * s;
  out.noise.v2 = state.noise.v1 * s * s + state.noise.v2 * c * c;
  return out;
}

/**
 * Variance of S2 after rotation: var[S2_in] + var[S1 * phi].
 * The two contributions are independent. var_phi is the rotation-angle
 * variance expressed in the same normalization as v2_in.
 */
[[nodiscard]] inline double output_s2_variance(double v2_in, double s1, double var_phi) {
  if (!(v2_in > 0.0)) throw domain_error("input S2 variance must be positive");
  if (!(var_phi >= 0.0)) throw domain_error("rotation-angle variance must be non-negative");
  return v2_in + s1 * s1 * var_phi;
}

/// Semi-axes of the noise ellipsoid, sigma_i = sqrt(V_i).
[[nodiscard]] inline std::array<double, 3> noise_ellipsoid_sigma(const NoiseVariances& noise) {
  return {std::sqrt(noise.v1), std::sqrt(noise.v2), std::sqrt(noise.v3)};
}

}  // namespace qmagsim
