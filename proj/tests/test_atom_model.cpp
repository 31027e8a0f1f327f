#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "qmagsim/atom_model.hpp"

using namespace qmagsim;

namespace {

// Loss inferred from a squeezing level before and after the cell.
double eta_from_anchor(double in_db, double out_db) {
  return (1.0 - std::pow(10.0, out_db / 10.0)) / (1.0 - std::pow(10.0, in_db / 10.0));
}

double doppler_oracle_mhz(double t) {
  const double k = 1.380649e-23, c = 299792458.0, m = 86.909180527 * 1.66053906660e-27;
  return 377.107463e12 / c * std::sqrt(8.0 * k * t * std::log(2.0) / m) / 1e6;
}

const CellCondition k40C = CellCondition::at_celsius(40.0);

}  // namespace

TEST(VaporDensity, PaperAnchors) {
  EXPECT_NEAR(vapor_density(313.15) / 5.8e10, 1.0, 0.15);
  EXPECT_NEAR(vapor_density(323.15) / 1.5e11, 1.0, 0.15);
  EXPECT_NEAR(vapor_density(333.15) / 3.4e11, 1.0, 0.15);
}

TEST(VaporDensity, MonotoneAndBounded) {
  double prev = 0.0;
  for (double t = 273.0; t <= 400.0; t += 0.5) {
    const double n = vapor_density(t);
    EXPECT_GT(n, prev);
    prev = n;
  }
  EXPECT_THROW((void)vapor_density(272.0), domain_error);
  EXPECT_THROW((void)vapor_density(401.0), domain_error);
  EXPECT_THROW((void)vapor_density(NAN), domain_error);
}

TEST(DopplerWidth, MatchesCodataOracle) {
  EXPECT_NEAR(doppler_fwhm(313.0), doppler_oracle_mhz(313.0), 1e-9);
  EXPECT_NEAR(doppler_fwhm(313.0), 512.0, 1.0);
  EXPECT_NEAR(doppler_fwhm(323.0), doppler_oracle_mhz(323.0), 1e-9);
  EXPECT_NEAR(doppler_fwhm(323.0), 520.0, 1.0);
  EXPECT_NEAR(doppler_fwhm(4 * 313.0) / doppler_fwhm(313.0), 2.0, 1e-12);
  EXPECT_THROW((void)doppler_fwhm(0.0), domain_error);
}

TEST(OpticalDepth, AnchorInversions) {
  const double od0 = -std::log(eta_from_anchor(-3.7, -1.2));
  EXPECT_NEAR(od0, 0.8651, 1e-4);
  EXPECT_NEAR(optical_depth(0.0, k40C), od0, 1e-9);
  const double od400 = -std::log(eta_from_anchor(-3.7, -3.2));
  EXPECT_NEAR(optical_depth(-400.0, k40C), od400, 1e-9);
  EXPECT_NEAR(optical_depth(-400.0, k40C), 0.0954, 0.3 * 0.0954);
  EXPECT_NEAR(optical_depth(400.0, k40C), optical_depth(-400.0, k40C), 1e-15);
  for (double t : {300.0, 313.15, 333.15, 380.0}) {
    EXPECT_LT(optical_depth(5000.0, {t, 7.5}), 1e-10);
    EXPECT_LT(optical_depth(-5000.0, {t, 7.5}), 1e-10);
  }
}

TEST(OpticalDepth, ScalesWithDensityAndLength) {
  const CellCondition hot{333.15, 7.5};
  EXPECT_NEAR(optical_depth(0.0, hot) / optical_depth(0.0, k40C), vapor_density(333.15) / vapor_density(313.15),
              1e-12);
  EXPECT_NEAR(optical_depth(-200.0, {313.15, 15.0}) / optical_depth(-200.0, k40C), 2.0, 1e-12);
  EXPECT_THROW((void)optical_depth(0.0, {313.15, 0.0}), domain_error);
}

TEST(Transmission, Examples) {
  EXPECT_NEAR(transmission(-5000.0, k40C), 1.0, 1e-10);
  EXPECT_NEAR(transmission(0.0, k40C), eta_from_anchor(-3.7, -1.2), 1e-9);
  EXPECT_NEAR(transmission(0.0, k40C), 0.420, 1.5e-3);
  EXPECT_NEAR(transmission(-400.0, k40C), 0.909, 1e-3);
}

TEST(LossChannel, Examples) {
  for (double eta : {0.01, 0.3, 0.909, 1.0}) EXPECT_DOUBLE_EQ(propagate_variance_through_loss(1.0, eta), 1.0);
  EXPECT_NEAR(propagate_variance_through_loss(0.1, 0.909), 0.1818, 1e-4);
  EXPECT_NEAR(variance_to_db(propagate_variance_through_loss(0.1, 0.909)), -7.40, 0.05);
  EXPECT_NEAR(propagate_variance_through_loss(0.4266, 0.909), 0.4786, 3e-4);  // example is rounded
  EXPECT_DOUBLE_EQ(propagate_variance_through_loss(0.4266, 0.909), 0.909 * 0.4266 + (1 - 0.909));
  EXPECT_NEAR(variance_to_db(propagate_variance_through_loss(squeezing_db_to_variance(-3.7), 0.909)), -3.20, 0.05);
  EXPECT_THROW((void)propagate_variance_through_loss(0.5, 1.1), domain_error);
  EXPECT_THROW((void)propagate_variance_through_loss(0.5, -0.1), domain_error);
}

TEST(LossChannel, MonotoneTowardVacuumProperty) {
  for (double v : {0.1, 0.4, 2.0, 5.0}) {
    double prev = v;
    for (double eta = 0.99; eta > 0.005; eta -= 0.01) {
      const double out = propagate_variance_through_loss(v, eta);
      EXPECT_LE(std::abs(out - 1.0), std::abs(prev - 1.0) + 1e-15);
      prev = out;
    }
  }
}

TEST(PhaseNoise, ClosedFormMatchesQuadrature) {
  const oracle::GaussHermite gh(41);
  const double vs = squeezing_db_to_variance(-4.0), va = squeezing_db_to_variance(7.0);
  for (double theta : {0.0, 0.01, 0.0788, 0.2, 0.5}) {
    const double quad = gh.gaussian_mean(
        [&](double th) { return vs * std::cos(th) * std::cos(th) + va * std::sin(th) * std::sin(th); }, theta);
    EXPECT_NEAR(effective_variance_with_phase_noise(vs, va, theta), quad, 1e-8) << theta;
  }
}

TEST(PhaseNoise, Examples) {
  EXPECT_NEAR(effective_variance_with_phase_noise(0.398, 5.012, 0.0), 0.398, 1e-12);
  EXPECT_NEAR(effective_variance_with_phase_noise(0.398, 5.012, 0.0787), 0.4266, 5e-4);
  EXPECT_NEAR(effective_variance_with_phase_noise(0.398, 5.012, 50.0), (0.398 + 5.012) / 2, 1e-12);
}

TEST(PhaseNoise, SolvedLockJitter) {
  const double vs = squeezing_db_to_variance(-4.0), va = squeezing_db_to_variance(7.0);
  const double theta = solve_lock_phase_rms(vs, va, squeezing_db_to_variance(-3.7));
  EXPECT_NEAR(theta, 0.079, 1e-3);
  EXPECT_NEAR(variance_to_db(effective_variance_with_phase_noise(vs, va, theta)), -3.7, 1e-9);
  const auto budget = SqueezingBudget::matching(-4.0, 7.0, -3.7);
  EXPECT_NEAR(budget.pss_db(), -3.7, 1e-9);
  EXPECT_THROW((void)solve_lock_phase_rms(vs, va, 0.2), domain_error);
}

TEST(SqueezingAfterCell, PaperAnchors) {
  EXPECT_NEAR(squeezing_after_cell(-3.7, -400.0, k40C), -3.2, 0.3);
  EXPECT_NEAR(squeezing_after_cell(-3.7, 400.0, k40C), -3.2, 0.3);
  EXPECT_NEAR(squeezing_after_cell(-3.7, 0.0, k40C), -1.2, 0.3);
  for (double t : {303.15, 313.15, 353.15}) EXPECT_NEAR(squeezing_after_cell(-3.7, 5000.0, {t, 7.5}), -3.7, 1e-9);
}

TEST(SqueezingAfterCell, HotterCellKeepsLessSqueezingProperty) {
  for (double d = -400.0; d <= 400.0; d += 10.0) {
    const double a = squeezing_after_cell(-3.7, d, {313.15, 7.5});
    const double b = squeezing_after_cell(-3.7, d, {323.15, 7.5});
    const double c = squeezing_after_cell(-3.7, d, {333.15, 7.5});
    EXPECT_LT(a, b) << d;
    EXPECT_LT(b, c) << d;
  }
}

TEST(SqueezingAfterCell, BackactionExcessOnlyAdds) {
  EXPECT_GT(squeezing_after_cell(-3.7, -400.0, k40C, 0.05), squeezing_after_cell(-3.7, -400.0, k40C));
  EXPECT_THROW((void)squeezing_after_cell(-3.7, -400.0, k40C, -0.1), domain_error);
}

TEST(ProbeConfig, DetuningReference) {
  ProbeConfig p;
  EXPECT_DOUBLE_EQ(p.detuning_from_reference_mhz(), -400.0);
  EXPECT_EQ(parse_transition("Fg2-Fe1"), Transition::Fg2Fe1);
  EXPECT_EQ(to_string(Transition::Fg1Fe2), "Fg1-Fe2");
  EXPECT_THROW((void)parse_transition("Fg3-Fe1"), std::exception);
}
