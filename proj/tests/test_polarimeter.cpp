#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "oracles.hpp"
#include "qmagsim/polarimeter.hpp"

using namespace qmagsim;

namespace {

AcquisitionConfig quick(std::uint64_t seed = 1, double duration = 16.0) {
  return {25600.0, duration, 0.5, 0.5, 1, seed};
}

auto unit = [](double) { return 1.0; };

double median(std::vector<double> v) {
  std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
  return v[v.size() / 2];
}

}  // namespace

TEST(Synthesis, SilentInputsGiveZeroSeries) {
  const auto s = synthesize_timeseries({0.0, 0.0, 10e3}, {-0.038, 3000.0, Dataset::fig4b}, NoiseBudget::coherent(0.0),
                                       quick());
  EXPECT_TRUE(std::all_of(s.begin(), s.end(), [](double x) { return x == 0.0; }));
}

TEST(Synthesis, NoiseVarianceMatchesParseval) {
  const double ns = 1.0754;
  const AcquisitionConfig acq{200e3, 2.0, 1000.0, 30.0, 1, 9};  // 4e5 samples
  const auto x = synthesize_noise(unit, ns, acq);
  ASSERT_EQ(x.size(), 400'000u);
  const auto st = oracle::stats(x);
  EXPECT_NEAR(st.variance / (ns * ns * acq.sample_rate_hz / 2), 1.0, 0.01);
}

TEST(Synthesis, DeterministicPerSeed) {
  const FieldDrive d;
  const RotationModel r;
  const auto budget = NoiseBudget::squeezed(0.4786, 1.0);
  const auto a = synthesize_timeseries(d, r, budget, quick(5, 8.0));
  const auto b = synthesize_timeseries(d, r, budget, quick(5, 8.0));
  const auto c = synthesize_timeseries(d, r, budget, quick(6, 8.0));
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(Synthesis, DerivedSeedsAreDistinctAndStable) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(derive_seed(42, i));
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_EQ(derive_seed(42, 3), derive_seed(42, 3));
  EXPECT_NE(derive_seed(42, 3), derive_seed(43, 3));
}

TEST(Welch, WhiteNoiseIsFlatAtExpectedLevel) {
  const double sigma = 2.0;
  const auto acq = quick(3, 32.0);
  auto x = synthesize_noise(unit, sigma / std::sqrt(acq.sample_rate_hz / 2), acq);
  const auto psd = welch_psd(x, acq);
  const double expected = sigma * std::sqrt(2.0 / acq.sample_rate_hz);
  std::vector<double> inner(psd.asd.begin() + 1, psd.asd.end() - 1);
  EXPECT_NEAR(median(inner) / expected, 1.0, 0.03);
  // Flatness: low and high halves of the band agree.
  const std::size_t h = inner.size() / 2;
  const double lo = median({inner.begin(), inner.begin() + h}), hi = median({inner.begin() + h, inner.end()});
  EXPECT_NEAR(lo / hi, 1.0, 0.03);
}

TEST(Welch, ParsevalTotalPower) {
  const auto acq = quick(4, 32.0);
  const auto x = synthesize_noise(unit, 0.7, acq);
  const auto psd = welch_psd(x, acq);
  double integrated = 0.0;
  for (double a : psd.asd) integrated += a * a * psd.bin_hz;
  EXPECT_NEAR(integrated / oracle::stats(x).variance, 1.0, 0.01);
}

TEST(Welch, SineAmplitudeRecovery) {
  // 40.5 pT at -0.038 mrad/pT: a 1.539 mrad sine at 10 kHz, bin-centred.
  const FieldDrive drive{0.0, 40.5, 10e3};
  const RotationModel rot{-0.038, 1e9, Dataset::fig4b};
  const auto acq = quick(1, 8.0);
  const auto s = synthesize_signal(drive, rot, acq);
  const auto psd = welch_psd(s, acq);
  const auto k = static_cast<std::size_t>(std::llround(drive.f0_hz / psd.bin_hz));
  EXPECT_NEAR(psd.frequency(k), 10e3, 1e-9);
  const double amplitude = std::sqrt(2.0 * psd.asd[k] * psd.asd[k] * psd.enbw_hz);
  EXPECT_NEAR(amplitude, 40.5 * 0.038, 0.01 * 1.539);
  EXPECT_NEAR(amplitude, 1.539, 0.01 * 1.539);
  // Hann ENBW is 1.5 bins.
  EXPECT_NEAR(psd.enbw_hz / psd.bin_hz, 1.5, 1e-9);
}

TEST(Welch, ZeroSeriesGivesZeroSpectrum) {
  const auto acq = quick(1, 8.0);
  const std::vector<double> z(acq.sample_count(), 0.0);
  const auto psd = welch_psd(z, acq);
  EXPECT_TRUE(std::all_of(psd.asd.begin(), psd.asd.end(), [](double a) { return a == 0.0; }));
  EXPECT_THROW((void)extract_snr(psd, 10e3), degenerate_input);
}

TEST(Welch, RejectsShortSeries) {
  const auto acq = quick(1, 8.0);
  const std::vector<double> x(acq.segment_length(), 1.0);
  EXPECT_THROW((void)welch_psd(x, acq), length_error);
}

TEST(Welch, ComponentsMatchDirectPath) {
  const FieldDrive drive;
  const RotationModel rot;
  AcquisitionConfig acq = quick(8, 8.0);
  acq.averages = 2;
  const double v2 = 0.4786, ns = 1.07;
  const auto direct = simulate_sensitivity(drive, rot, NoiseBudget::squeezed(v2, ns), acq);
  const auto comp = simulate_components(drive, rot, v2, acq).combine(ns);
  ASSERT_EQ(comp.size(), direct.psd.size());
  for (std::size_t k = 0; k < comp.size(); ++k) {
    EXPECT_NEAR(comp.asd[k], direct.psd.asd[k], 1e-9 * (direct.psd.asd[k] + 1e-12));
  }
  EXPECT_NEAR(sensitivity_from_spectrum(comp, drive).delta_b_sens, direct.delta_b_sens, 1e-9 * direct.delta_b_sens);
}

TEST(Snr, NoiseOnlyIsConsistentWithNoSignal) {
  int below = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto acq = quick(seed, 8.0);
    const auto x = synthesize_noise(unit, 1.0, acq);
    const auto est = extract_snr(welch_psd(x, acq), 10e3);
    below += est.snr < 3.0;
  }
  EXPECT_GE(below, 95);
}

TEST(Snr, RangeErrors) {
  const auto acq = quick(1, 8.0);
  const auto psd = welch_psd(synthesize_noise(unit, 1.0, acq), acq);
  EXPECT_THROW((void)extract_snr(psd, 0.0), range_error);
  EXPECT_THROW((void)extract_snr(psd, 13000.0), range_error);
}

TEST(Sensitivity, Examples) {
  EXPECT_NEAR(sensitivity(40.5, 1.431), 28.3, 0.01);
  EXPECT_NEAR(sensitivity(40.5, 2.077), 19.5, 0.01);
  for (double x : {0.1, 1.0, 28.3, 1e4}) EXPECT_DOUBLE_EQ(sensitivity(x, 1.0), x);
  EXPECT_THROW((void)sensitivity(40.5, 0.0), domain_error);
  EXPECT_THROW((void)sensitivity(0.0, 1.0), domain_error);
}

TEST(Sensitivity, NoiselessLimitOracle) {
  // Weak noise: delta_B approaches noise_scale / |slope|.
  const FieldDrive drive{0.0, 4000.0, 10e3};
  const RotationModel rot{-0.038, 1e9, Dataset::fig4b};
  AcquisitionConfig acq = quick(2, 16.0);
  acq.averages = 4;
  const double ns = 1.0754;
  const auto r = simulate_sensitivity(drive, rot, NoiseBudget::coherent(ns), acq);
  EXPECT_NEAR(r.delta_b_sens / (ns / 0.038), 1.0, 0.02);
}

TEST(Acquisition, Validation) {
  EXPECT_THROW((AcquisitionConfig{25600, 1.0, 0.5, 0.5, 1, 1}).validate(), config_error);   // rbw < 4/T
  EXPECT_THROW((AcquisitionConfig{25600, 64.0, 0.5, 1.0, 1, 1}).validate(), config_error);  // vbw > rbw
  EXPECT_THROW((AcquisitionConfig{25600, 64.0, 0.5, 0.5, 0, 1}).validate(), config_error);
  EXPECT_THROW((AcquisitionConfig{15000, 64.0, 0.5, 0.5, 1, 1}).validate(FieldDrive{}), config_error);
  EXPECT_NO_THROW(AcquisitionConfig::fft_analyzer().validate(FieldDrive{}));
  EXPECT_THROW(NoiseBudget::coherent(-1.0).validate(), config_error);
  EXPECT_THROW((NoiseBudget{ProbeKind::PCS, 0.5, 1.0}).validate(), config_error);
}

TEST(ZeroSpan, ZeroSeriesGivesZeroPower) {
  const AcquisitionConfig acq;
  const std::vector<double> z(acq.sample_count(), 0.0);
  const auto p = zero_span_power(z, 10e3, acq);
  ASSERT_FALSE(p.empty());
  EXPECT_TRUE(std::all_of(p.begin(), p.end(), [](double v) { return v == 0.0; }));
  EXPECT_THROW((void)zero_span_trace(z, z, 10e3, acq), degenerate_input);
}

TEST(ZeroSpan, CoherentAndSqueezedLevels) {
  AcquisitionConfig acq;  // RF analyzer defaults
  auto with_seed = [&](std::uint64_t s) {
    AcquisitionConfig a = acq;
    a.seed = s;
    return a;
  };
  const auto ref = synthesize_noise(unit, 1.0, with_seed(1));
  const auto pcs = synthesize_noise(unit, 1.0, with_seed(2));
  const double v = squeezing_db_to_variance(-3.7);
  const auto pss = synthesize_noise([v](double) { return v; }, 1.0, with_seed(3));
  EXPECT_NEAR(zero_span_trace(pcs, ref, 10e3, acq).mean_db(), 0.0, 0.3);
  EXPECT_NEAR(zero_span_trace(pss, ref, 10e3, acq).mean_db(), -3.7, 0.3);
}

TEST(ZeroSpan, PhaseScanSpansSqueezedToAntiSqueezed) {
  const AcquisitionConfig acq{25600.0, 40.0, 1000.0, 30.0, 1, 21};
  const double period = 1.0;
  const double vs = squeezing_db_to_variance(-4.0), va = squeezing_db_to_variance(7.0);
  AcquisitionConfig ref_acq = acq;
  ref_acq.seed = 22;
  const auto ref = synthesize_noise(unit, 1.0, ref_acq);
  const auto scan = synthesize_phase_scan(vs, va, period, 1.0, acq);
  const auto trace = zero_span_trace(scan, ref, 10e3, acq);

  // Fold onto one scan period and average in linear power.
  const std::size_t bins = 50;
  std::vector<double> sum(bins, 0.0);
  std::vector<int> count(bins, 0);
  for (std::size_t j = 0; j < trace.time_s.size(); ++j) {
    const double phase = std::fmod(trace.time_s[j], period) / period;
    const auto b = std::min(bins - 1, static_cast<std::size_t>(phase * bins));
    sum[b] += std::pow(10.0, trace.power_db[j] / 10.0);
    ++count[b];
  }
  std::vector<double> folded_db;
  for (std::size_t b = 0; b < bins; ++b) folded_db.push_back(10.0 * std::log10(sum[b] / count[b]));
  EXPECT_NEAR(*std::max_element(folded_db.begin(), folded_db.end()), 7.0, 0.3);
  EXPECT_NEAR(*std::min_element(folded_db.begin(), folded_db.end()), -4.0, 0.3);
}
