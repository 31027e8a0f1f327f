// Independent reference computations used only by the tests.

#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

namespace oracle {

// Physicists' Gauss-Hermite rule, nodes by Newton iteration on H_n.
struct GaussHermite {
  std::vector<double> x;
  std::vector<double> w;

  explicit GaussHermite(int n) : x(n), w(n) {
    // Orthonormal recurrence: p_k = sqrt(2/k) x p_{k-1} - sqrt((k-1)/k) p_{k-2}.
    auto eval = [n](double z) {
      double p0 = std::pow(std::numbers::pi, -0.25), p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = z * std::sqrt(2.0 / k) * p1 - std::sqrt((k - 1.0) / k) * p2;
      }
      return std::pair{p0, std::sqrt(2.0 * n) * p1};  // value, derivative
    };
    double z = 0.0;
    for (int i = 0; i < (n + 1) / 2; ++i) {
      if (i == 0) z = std::sqrt(2.0 * n + 1) - 1.85575 * std::pow(2.0 * n + 1, -1.0 / 6);
      else if (i == 1) z -= 1.14 * std::pow(n, 0.426) / z;
      else if (i == 2) z = 1.86 * z - 0.86 * x[0];
      else if (i == 3) z = 1.91 * z - 0.91 * x[1];
      else z = 2.0 * z - x[i - 2];
      for (int it = 0; it < 100; ++it) {
        const auto [p, dp] = eval(z);
        const double dz = p / dp;
        z -= dz;
        if (std::abs(dz) < 1e-15) break;
      }
      const double dp = eval(z).second;
      x[i] = z;
      x[n - 1 - i] = -z;
      w[i] = w[n - 1 - i] = 2.0 / (dp * dp);
    }
  }

  /// E[f(theta)] for theta ~ N(0, sigma^2).
  [[nodiscard]] double gaussian_mean(const std::function<double(double)>& f, double sigma) const {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * f(std::sqrt(2.0) * sigma * x[i]);
    return s / std::sqrt(std::numbers::pi);
  }
};

inline double central_difference(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

struct SampleStats {
  double mean = 0.0;
  double variance = 0.0;
  double variance_stderr = 0.0;
};

inline SampleStats stats(const std::vector<double>& xs) {
  SampleStats s;
  const double n = static_cast<double>(xs.size());
  for (double v : xs) s.mean += v;
  s.mean /= n;
  double m2 = 0.0, m4 = 0.0;
  for (double v : xs) {
    const double d = (v - s.mean) * (v - s.mean);
    m2 += d;
    m4 += d * d;
  }
  s.variance = m2 / (n - 1.0);
  s.variance_stderr = std::sqrt((m4 / n - (m2 / n) * (m2 / n)) / n);
  return s;
}

// S2 samples after rotating Gaussian (S1, S2) fluctuations by a fixed angle.
inline std::vector<double> monte_carlo_rotated_s2(double v1, double v2, double phi, std::size_t n,
                                                  std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> out(n);
  for (auto& o : out) {
    const double x1 = std::sqrt(v1) * g(rng);
    const double x2 = std::sqrt(v2) * g(rng);
    o = std::sin(phi) * x1 + std::cos(phi) * x2;
  }
  return out;
}

// S2 samples with an independent small rotation: d2 + s1 * dphi.
inline std::vector<double> monte_carlo_linear_s2(double v2, double s1, double var_phi, std::size_t n,
                                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> out(n);
  for (auto& o : out) o = std::sqrt(v2) * g(rng) + s1 * std::sqrt(var_phi) * g(rng);
  return out;
}

}  // namespace oracle
