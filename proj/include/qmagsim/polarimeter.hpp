/**
 * @file polarimeter.hpp
 * @brief Balanced-polarimeter signal chain: synthesis, spectra, SNR, sensitivity.
 *
 * The polarimeter output is expressed as an equivalent rotation angle in
 * mrad. Its white noise floor has amplitude spectral density
 * noise_scale * sqrt(V2), where V2 is the S2 variance (SNL = 1) reaching
 * the detector and noise_scale is the angle-equivalent ASD of the shot
 * noise floor, a calibration constant in mrad/sqrt(Hz).
 */

#pragma once

#include <fftw3.h>

#include <boost/random/normal_distribution.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <mutex>
#include <numbers>
#include <random>
#include <span>
#include <type_traits>
#include <string>
#include <vector>

#include "qmagsim/errors.hpp"
#include "qmagsim/faraday.hpp"

namespace qmagsim {

/// B(t) = b_dc + b_ac * sin(2 pi f0 t), fields in pT.
struct FieldDrive {
  double b_dc_pt = 110.0;
  double b_ac_pt = 40.5;
  double f0_hz = 10e3;

  void validate() const {
    if (!(f0_hz > 0.0)) throw config_error("drive frequency must be positive");
    if (!std::isfinite(b_dc_pt) || !std::isfinite(b_ac_pt)) throw config_error("drive amplitudes must be finite");
  }

  [[nodiscard]] double field_at(double t_s) const noexcept {
    return b_dc_pt + b_ac_pt * std::sin(2.0 * std::numbers::pi * f0_hz * t_s);
  }
};

/**
 * Sampling and analyzer settings. Defaults mirror the RF spectrum
 * analyzer used for noise traces; `fft_analyzer()` gives the
 * narrow-resolution settings used for field-sensitivity spectra.
 */
struct AcquisitionConfig {
  // `averages` counts analyzer sweeps: independent records for spectra,
  // consecutive sweeps for zero-span traces.
  double sample_rate_hz = 200e3;
  double duration_s = 2.0;
  double rbw_hz = 1000.0;
  double vbw_hz = 30.0;
  int averages = 60;
  std::uint64_t seed = 42;

  /// FFT signal-analyzer preset: 64 s records at 0.5 Hz resolution, 20 records averaged.
  static AcquisitionConfig fft_analyzer(std::uint64_t seed = 42) {
    return {25600.0, 64.0, 0.5, 0.5, 20, seed};
  }

  void validate() const {
    if (!(sample_rate_hz > 0.0)) throw config_error("sample rate must be positive");
    if (!(duration_s > 0.0)) throw config_error("duration must be positive");
    if (!(rbw_hz >= 4.0 / duration_s)) throw config_error("rbw must be at least 4 / duration");
    if (!(vbw_hz > 0.0 && vbw_hz <= rbw_hz)) throw config_error("vbw must lie in (0, rbw]");
    if (averages < 1) throw config_error("averages must be >= 1");
  }

  void validate(const FieldDrive& drive) const {
    validate();
    drive.validate();
    if (!(sample_rate_hz > 2.0 * drive.f0_hz)) throw config_error("sample rate must exceed twice the drive frequency");
  }

  [[nodiscard]] std::size_t sample_count() const noexcept {
    return static_cast<std::size_t>(std::llround(sample_rate_hz * duration_s));
  }
  /// Welch segment length implied by the resolution bandwidth.
  [[nodiscard]] std::size_t segment_length() const noexcept {
    return static_cast<std::size_t>(std::llround(2.0 * sample_rate_hz / rbw_hz));
  }
};

enum class ProbeKind { PCS, PSS };

[[nodiscard]] inline std::string_view to_string(ProbeKind k) noexcept { return k == ProbeKind::PCS ? "PCS" : "PSS"; }

struct NoiseBudget {
  ProbeKind probe_kind = ProbeKind::PCS;
  double v2_after_cell = 1.0;
  double noise_scale = 1.0;  // mrad/sqrt(Hz) at the SNL

  static NoiseBudget coherent(double noise_scale) { return {ProbeKind::PCS, 1.0, noise_scale}; }
  static NoiseBudget squeezed(double v2, double noise_scale) { return {ProbeKind::PSS, v2, noise_scale}; }

  void validate() const {
    if (!(noise_scale >= 0.0) || !std::isfinite(noise_scale)) throw config_error("noise_scale must be non-negative");
    if (!(v2_after_cell > 0.0)) throw config_error("S2 variance must be positive");
    if (probe_kind == ProbeKind::PCS && v2_after_cell != 1.0) throw config_error("a coherent probe has V2 = 1");
  }

  /// Noise ASD of the angle signal, mrad/sqrt(Hz).
  [[nodiscard]] double asd() const noexcept { return noise_scale * std::sqrt(v2_after_cell); }
};

/// Independent, reproducible stream seed for sweep point `index`.
[[nodiscard]] inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

/**
 * White Gaussian noise with a time-varying variance profile.
 * `variance(t)` is in SNL units; the sample standard deviation is
 * noise_scale * sqrt(variance(t)) * sqrt(fs / 2).
 */
template <typename VarianceProfile>
[[nodiscard]] std::vector<double> synthesize_noise(VarianceProfile&& variance, double noise_scale,
                                                   const AcquisitionConfig& acq, double t0_s = 0.0) {
  acq.validate();
  const std::size_t n = acq.sample_count();
  std::vector<double> out(n);
  std::mt19937_64 rng(acq.seed);
  boost::random::normal_distribution<double> gauss(0.0, 1.0);
  const double per_sample = noise_scale * std::sqrt(acq.sample_rate_hz / 2.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = t0_s + static_cast<double>(k) / acq.sample_rate_hz;
    out[k] = per_sample * std::sqrt(variance(t)) * gauss(rng);
  }
  return out;
}

/**
 * Noise seen while the local-oscillator phase is swept linearly through
 * pi every `scan_period_s`: V(t) = v_sq cos^2 + v_anti sin^2.
 */
[[nodiscard]] inline std::vector<double> synthesize_phase_scan(double v_sq, double v_anti, double scan_period_s,
                                                               double noise_scale, const AcquisitionConfig& acq) {
  if (!(scan_period_s > 0.0)) throw config_error("scan period must be positive");
  return synthesize_noise(
      [&](double t) {
        const double s = std::sin(std::numbers::pi * t / scan_period_s);
        return v_sq + (v_anti - v_sq) * s * s;
      },
      noise_scale, acq);
}

/// Noise-free rotation angle (mrad) under the drive, starting at t0.
[[nodiscard]] inline std::vector<double> synthesize_signal(const FieldDrive& drive, const RotationModel& rot,
                                                           const AcquisitionConfig& acq, double t0_s = 0.0) {
  acq.validate(drive);
  rot.validate();
  std::vector<double> out(acq.sample_count());
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = rotation_angle(drive.field_at(t0_s + static_cast<double>(k) / acq.sample_rate_hz), rot);
  }
  return out;
}

/**
 * Rotation angle (mrad) under the drive plus polarimeter noise, one
 * record of acq.duration_s seeded by acq.seed.
 */
[[nodiscard]] inline std::vector<double> synthesize_timeseries(const FieldDrive& drive, const RotationModel& rot,
                                                               const NoiseBudget& budget, const AcquisitionConfig& acq,
                                                               double t0_s = 0.0) {
  budget.validate();
  auto series = synthesize_signal(drive, rot, acq, t0_s);
  const auto noise = synthesize_noise([](double) { return 1.0; }, budget.asd(), acq, t0_s);
  for (std::size_t k = 0; k < series.size(); ++k) series[k] += noise[k];
  return series;
}

/// Seed of analyzer record `r` within one acquisition.
[[nodiscard]] inline AcquisitionConfig record_config(const AcquisitionConfig& acq, int record) {
  AcquisitionConfig rec = acq;
  rec.seed = derive_seed(acq.seed, static_cast<std::uint64_t>(record));
  return rec;
}

/// One-sided amplitude spectral density on a uniform frequency grid.
struct Spectrum {
  double bin_hz = 0.0;
  double enbw_hz = 0.0;  // equivalent noise bandwidth of one bin
  double rbw_hz = 0.0;
  std::size_t segments = 0;
  std::vector<double> asd;  // mrad/sqrt(Hz), index k at k * bin_hz

  [[nodiscard]] std::size_t size() const noexcept { return asd.size(); }
  [[nodiscard]] double frequency(std::size_t k) const noexcept { return static_cast<double>(k) * bin_hz; }
};

namespace detail {

// FFTW's planner is not re-entrant; execution on distinct arrays is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

class RealFft {
 public:
  explicit RealFft(std::size_t n)
      : n_(n),
        in_(static_cast<double*>(fftw_malloc(sizeof(double) * n))),
        out_(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1)))) {
    if (!in_ || !out_) throw std::bad_alloc();
    std::lock_guard lock(fftw_planner_mutex());
    plan_.reset(fftw_plan_dft_r2c_1d(static_cast<int>(n), in_.get(), out_.get(), FFTW_ESTIMATE));
  }

  [[nodiscard]] std::span<double> input() noexcept { return {in_.get(), n_}; }
  [[nodiscard]] std::span<const fftw_complex> execute() {
    fftw_execute(plan_.get());
    return {out_.get(), n_ / 2 + 1};
  }

 private:
  struct Free {
    void operator()(void* p) const noexcept { fftw_free(p); }
  };
  struct DestroyPlan {
    void operator()(fftw_plan p) const noexcept {
      std::lock_guard lock(fftw_planner_mutex());
      fftw_destroy_plan(p);
    }
  };
  std::size_t n_;
  std::unique_ptr<double, Free> in_;
  std::unique_ptr<fftw_complex, Free> out_;
  std::unique_ptr<std::remove_pointer_t<fftw_plan>, DestroyPlan> plan_;
};

}  // namespace detail

namespace detail {

struct HannWindow {
  std::vector<double> w;
  double sum = 0.0;
  double sum_sq = 0.0;

  explicit HannWindow(std::size_t len) : w(len) {
    for (std::size_t i = 0; i < len; ++i) {
      w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(len));
      sum += w[i];
      sum_sq += w[i] * w[i];
    }
  }
};

inline std::size_t checked_segment_length(std::span<const double> series, const AcquisitionConfig& acq) {
  acq.validate();
  const std::size_t len = acq.segment_length();
  if (len < 4) throw length_error("segment length too short; lower rbw or raise the sample rate");
  if (series.size() < len + len / 2) throw length_error("series shorter than two Welch segments");
  return len;
}

// Scale from accumulated |X_k|^2 to one-sided PSD.
inline std::vector<double> one_sided_scale(std::size_t len, double fs, double sum_sq, std::size_t segments) {
  const std::size_t bins = len / 2 + 1;
  std::vector<double> scale(bins, 2.0 / (fs * sum_sq * static_cast<double>(segments)));
  scale.front() *= 0.5;
  if (len % 2 == 0) scale.back() *= 0.5;
  return scale;
}

}  // namespace detail

/**
 * Welch power accumulator: periodic Hann segments of length 2 fs / rbw
 * with 50% overlap. Records added one after another are averaged
 * segment-for-segment, which is how an FFT analyzer averages sweeps.
 * Normalized so white noise of variance s^2 reads s * sqrt(2 / fs).
 */
class WelchAccumulator {
 public:
  explicit WelchAccumulator(const AcquisitionConfig& acq)
      : acq_(acq), len_(acq.segment_length()), window_(len_), fft_(len_), power_(len_ / 2 + 1, 0.0) {}

  void add(std::span<const double> series) {
    detail::checked_segment_length(series, acq_);
    for (std::size_t start = 0; start + len_ <= series.size(); start += len_ / 2, ++segments_) {
      auto in = fft_.input();
      for (std::size_t i = 0; i < len_; ++i) in[i] = series[start + i] * window_.w[i];
      auto out = fft_.execute();
      for (std::size_t k = 0; k < power_.size(); ++k) power_[k] += out[k][0] * out[k][0] + out[k][1] * out[k][1];
    }
  }

  [[nodiscard]] Spectrum spectrum() const {
    if (segments_ == 0) throw length_error("no segments accumulated");
    Spectrum out = grid();
    const auto scale = detail::one_sided_scale(len_, acq_.sample_rate_hz, window_.sum_sq, segments_);
    out.asd.resize(power_.size());
    for (std::size_t k = 0; k < power_.size(); ++k) out.asd[k] = std::sqrt(power_[k] * scale[k]);
    return out;
  }

 private:
  [[nodiscard]] Spectrum grid() const {
    Spectrum out;
    out.bin_hz = acq_.sample_rate_hz / static_cast<double>(len_);
    out.enbw_hz = acq_.sample_rate_hz * window_.sum_sq / (window_.sum * window_.sum);
    out.rbw_hz = acq_.rbw_hz;
    out.segments = segments_;
    return out;
  }

  AcquisitionConfig acq_;
  std::size_t len_;
  detail::HannWindow window_;
  detail::RealFft fft_;
  std::vector<double> power_;
  std::size_t segments_ = 0;
};

/// Welch ASD of a single record.
[[nodiscard]] inline Spectrum welch_psd(std::span<const double> series, const AcquisitionConfig& acq) {
  detail::checked_segment_length(series, acq);
  WelchAccumulator acc(acq);
  acc.add(series);
  return acc.spectrum();
}

/**
 * Welch power of (signal + a * noise) kept as its three quadratic
 * coefficients, so the spectrum for any noise amplitude `a` follows
 * exactly from one pass over the data:
 *   P_k(a) = |S_k|^2 + 2 a Re(S_k N_k*) + a^2 |N_k|^2.
 */
class WelchComponents {
 public:
  explicit WelchComponents(const AcquisitionConfig& acq)
      : acq_(acq),
        len_(acq.segment_length()),
        window_(len_),
        fft_signal_(len_),
        fft_noise_(len_),
        signal_(len_ / 2 + 1, 0.0),
        cross_(len_ / 2 + 1, 0.0),
        noise_(len_ / 2 + 1, 0.0) {}

  void add(std::span<const double> signal, std::span<const double> noise) {
    detail::checked_segment_length(signal, acq_);
    if (signal.size() != noise.size()) throw length_error("signal and noise records differ in length");
    for (std::size_t start = 0; start + len_ <= signal.size(); start += len_ / 2, ++segments_) {
      auto s_in = fft_signal_.input();
      auto n_in = fft_noise_.input();
      for (std::size_t i = 0; i < len_; ++i) {
        s_in[i] = signal[start + i] * window_.w[i];
        n_in[i] = noise[start + i] * window_.w[i];
      }
      auto s = fft_signal_.execute();
      auto n = fft_noise_.execute();
      for (std::size_t k = 0; k < signal_.size(); ++k) {
        signal_[k] += s[k][0] * s[k][0] + s[k][1] * s[k][1];
        cross_[k] += s[k][0] * n[k][0] + s[k][1] * n[k][1];
        noise_[k] += n[k][0] * n[k][0] + n[k][1] * n[k][1];
      }
    }
  }

  [[nodiscard]] Spectrum combine(double noise_amplitude) const {
    if (segments_ == 0) throw length_error("no segments accumulated");
    Spectrum out;
    out.bin_hz = acq_.sample_rate_hz / static_cast<double>(len_);
    out.enbw_hz = acq_.sample_rate_hz * window_.sum_sq / (window_.sum * window_.sum);
    out.rbw_hz = acq_.rbw_hz;
    out.segments = segments_;
    const auto scale = detail::one_sided_scale(len_, acq_.sample_rate_hz, window_.sum_sq, segments_);
    out.asd.resize(signal_.size());
    const double a = noise_amplitude;
    for (std::size_t k = 0; k < signal_.size(); ++k) {
      const double p = signal_[k] + 2.0 * a * cross_[k] + a * a * noise_[k];
      out.asd[k] = std::sqrt(std::max(p, 0.0) * scale[k]);
    }
    return out;
  }

 private:
  AcquisitionConfig acq_;
  std::size_t len_;
  detail::HannWindow window_;
  detail::RealFft fft_signal_;
  detail::RealFft fft_noise_;
  std::vector<double> signal_;
  std::vector<double> cross_;
  std::vector<double> noise_;
  std::size_t segments_ = 0;
};

struct SnrEstimate {
  double signal_amplitude = 0.0;  // sine amplitude, mrad
  double noise_floor = 0.0;       // ASD, mrad/sqrt(Hz)
  double snr = 0.0;               // sqrt(Hz)
};

/**
 * Signal-to-noise ratio of a tone at f0, per unit bandwidth.
 *
 * Floor: median ASD over bins with 2 rbw <= |f - f0| <= 10 rbw (DC
 * excluded). Signal: peak-bin power minus the floor's share, converted
 * to a sine amplitude through the window ENBW.
 */
[[nodiscard]] inline SnrEstimate extract_snr(const Spectrum& psd, double f0_hz) {
  if (psd.size() < 2 || !(psd.bin_hz > 0.0)) throw length_error("empty spectrum");
  const auto signal_bin = static_cast<std::size_t>(std::llround(f0_hz / psd.bin_hz));
  if (!(f0_hz > 0.0) || signal_bin == 0 || signal_bin >= psd.size() - 1) {
    throw range_error("signal frequency outside the spectrum");
  }
  std::vector<double> sideband;
  for (std::size_t k = 1; k < psd.size(); ++k) {
    const double df = std::abs(psd.frequency(k) - f0_hz);
    if (k != signal_bin && df >= 2.0 * psd.rbw_hz && df <= 10.0 * psd.rbw_hz) sideband.push_back(psd.asd[k]);
  }
  if (sideband.empty()) throw range_error("no sideband bins around the signal");
  const auto mid = sideband.begin() + static_cast<std::ptrdiff_t>(sideband.size() / 2);
  std::nth_element(sideband.begin(), mid, sideband.end());
  double floor = *mid;
  if (sideband.size() % 2 == 0) floor = 0.5 * (floor + *std::max_element(sideband.begin(), mid));
  if (!(floor > 0.0)) throw degenerate_input("noise floor is zero; SNR undefined");

  const double peak_psd = psd.asd[signal_bin] * psd.asd[signal_bin];
  const double signal_psd = std::max(peak_psd - floor * floor, 0.0);
  SnrEstimate est;
  est.signal_amplitude = std::sqrt(2.0 * signal_psd * psd.enbw_hz);
  est.noise_floor = floor;
  est.snr = est.signal_amplitude / floor;
  return est;
}

/// delta_B = Delta_B / SNR, pT/sqrt(Hz).
[[nodiscard]] inline double sensitivity(double delta_b_pt, double snr) {
  if (!(delta_b_pt > 0.0)) throw domain_error("applied field amplitude must be positive");
  if (!(snr > 0.0)) throw domain_error("SNR must be positive");
  return delta_b_pt / snr;
}

struct SensitivityResult {
  double delta_b_applied = 0.0;  // pT
  double snr = 0.0;              // sqrt(Hz)
  double delta_b_sens = 0.0;     // pT/sqrt(Hz)
  SnrEstimate estimate;
  Spectrum psd;
};

/// delta_B read off an already estimated spectrum.
[[nodiscard]] inline SensitivityResult sensitivity_from_spectrum(Spectrum psd, const FieldDrive& drive) {
  SensitivityResult r;
  r.psd = std::move(psd);
  r.estimate = extract_snr(r.psd, drive.f0_hz);
  r.delta_b_applied = std::abs(drive.b_ac_pt);
  r.snr = r.estimate.snr;
  if (!(r.snr > 0.0)) throw degenerate_input("no signal above the noise floor at the drive frequency");
  r.delta_b_sens = sensitivity(r.delta_b_applied, r.snr);
  return r;
}

/**
 * Full chain for one probe: synthesize acq.averages records (seeds
 * derived from acq.seed, drive phase continuous), average their Welch
 * spectra, read off delta_B.
 */
[[nodiscard]] inline SensitivityResult simulate_sensitivity(const FieldDrive& drive, const RotationModel& rot,
                                                            const NoiseBudget& budget, const AcquisitionConfig& acq) {
  acq.validate(drive);
  WelchAccumulator acc(acq);
  for (int r = 0; r < acq.averages; ++r) {
    acc.add(synthesize_timeseries(drive, rot, budget, record_config(acq, r), r * acq.duration_s));
  }
  return sensitivity_from_spectrum(acc.spectrum(), drive);
}

/// Same acquisition as simulate_sensitivity, kept quadratic in noise_scale.
[[nodiscard]] inline WelchComponents simulate_components(const FieldDrive& drive, const RotationModel& rot,
                                                         double v2_after_cell, const AcquisitionConfig& acq) {
  acq.validate(drive);
  WelchComponents comp(acq);
  for (int r = 0; r < acq.averages; ++r) {
    const auto rec = record_config(acq, r);
    const double t0 = r * acq.duration_s;
    comp.add(synthesize_signal(drive, rot, rec, t0),
             synthesize_noise([](double) { return 1.0; }, std::sqrt(v2_after_cell), rec, t0));
  }
  return comp;
}

/// Zero-span trace relative to the shot-noise reference.
struct ZeroSpanTrace {
  std::vector<double> time_s;
  std::vector<double> power_db;  // dB re SNL

  [[nodiscard]] double mean_db() const noexcept {
    double s = 0.0;
    for (double p : power_db) s += p;
    return power_db.empty() ? 0.0 : s / static_cast<double>(power_db.size());
  }
};

/**
 * Band power at f0 versus time, linear units (mrad^2).
 *
 * The series is mixed down at f0, boxcar-filtered to the resolution
 * bandwidth, detected, smoothed by a single-pole video filter of noise
 * bandwidth vbw, and finally averaged over `averages` consecutive sweeps.
 * Returns one point per video-decimation step within a sweep.
 */
[[nodiscard]] inline std::vector<double> zero_span_power(std::span<const double> series, double f0_hz,
                                                         const AcquisitionConfig& acq, double* step_s = nullptr) {
  acq.validate();
  const double fs = acq.sample_rate_hz;
  if (!(f0_hz > 0.0 && f0_hz < fs / 2.0)) throw config_error("zero-span frequency must lie in (0, fs/2)");
  const auto boxcar = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(fs / acq.rbw_hz)));
  const double corner_hz = 2.0 * acq.vbw_hz / std::numbers::pi;
  const double tau_s = 1.0 / (2.0 * std::numbers::pi * corner_hz);
  const double alpha = 1.0 - std::exp(-1.0 / (tau_s * fs));
  const std::size_t settle = boxcar + static_cast<std::size_t>(std::ceil(8.0 * tau_s * fs));
  const auto decimate = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(fs / (20.0 * acq.vbw_hz))));
  if (series.size() < settle + acq.segment_length()) throw length_error("series too short for zero-span settling");

  const std::size_t sweep_len = (series.size() - settle) / static_cast<std::size_t>(acq.averages);
  const std::size_t points = sweep_len / decimate;
  if (points == 0) throw length_error("series too short for the requested number of averages");

  const std::complex<double> step = std::polar(1.0, -2.0 * std::numbers::pi * f0_hz / fs);
  std::complex<double> lo{1.0, 0.0};
  std::vector<std::complex<double>> mixed(series.size());
  for (std::size_t k = 0; k < series.size(); ++k) {
    mixed[k] = series[k] * lo;
    lo *= step;
    if ((k & 1023) == 1023) lo /= std::abs(lo);
  }

  std::vector<double> video(series.size(), 0.0);
  std::complex<double> acc{0.0, 0.0};
  double smoothed = 0.0;
  for (std::size_t k = 0; k < series.size(); ++k) {
    acc += mixed[k];
    if (k >= boxcar) acc -= mixed[k - boxcar];
    if (k + 1 < boxcar) continue;
    const std::complex<double> y = acc / static_cast<double>(boxcar);
    const double detected = 2.0 * std::norm(y);
    smoothed = k + 1 == boxcar ? detected : smoothed + alpha * (detected - smoothed);
    video[k] = smoothed;
  }

  std::vector<double> trace(points, 0.0);
  for (int a = 0; a < acq.averages; ++a) {
    const std::size_t base = settle + static_cast<std::size_t>(a) * sweep_len;
    for (std::size_t j = 0; j < points; ++j) trace[j] += video[base + j * decimate];
  }
  for (double& p : trace) p /= static_cast<double>(acq.averages);
  if (step_s != nullptr) *step_s = static_cast<double>(decimate) / fs;
  return trace;
}

/// Zero-span trace of `series` in dB relative to the mean level of `snl_reference`.
[[nodiscard]] inline ZeroSpanTrace zero_span_trace(std::span<const double> series, std::span<const double> snl_reference,
                                                   double f0_hz, const AcquisitionConfig& acq) {
  const auto ref = zero_span_power(snl_reference, f0_hz, acq);
  double ref_level = 0.0;
  for (double p : ref) ref_level += p;
  ref_level /= static_cast<double>(ref.size());
  if (!(ref_level > 0.0)) throw degenerate_input("shot-noise reference has zero power");

  double step_s = 0.0;
  const auto power = zero_span_power(series, f0_hz, acq, &step_s);
  ZeroSpanTrace out;
  out.time_s.resize(power.size());
  out.power_db.resize(power.size());
  for (std::size_t j = 0; j < power.size(); ++j) {
    out.time_s[j] = static_cast<double>(j) * step_s;
    // Floor at -300 dB so an all-zero input stays finite.
    out.power_db[j] = 10.0 * std::log10(std::max(power[j] / ref_level, 1e-30));
  }
  return out;
}

}  // namespace qmagsim
