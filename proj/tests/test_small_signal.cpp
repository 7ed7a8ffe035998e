#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "pbuf/small_signal.hpp"
#include "pbuf/steady_state.hpp"

using namespace pbuf;

namespace {

const RCParams kRcHigh{0.216, 0.072, 1.39};  // 1000 A column
const RCParams kRcLow{0.461, 0.288, 6.94};   // 153 A column
constexpr double kE = 864.0;
constexpr double kCdc = 0.01;

ParamTable table1() {
  return ParamTable({{153.0, kRcLow}, {1000.0, kRcHigh}});
}

SteadyOperatingPoint op_at(double e, const RCParams& rc, double delta_p) {
  const double v = solve_vdc(e, rc.total_resistance(), delta_p);
  return {v, vcp_ss(e, v, rc), delta_p};
}

TEST(Linearize, TableValues) {
  const LinearModel m = linearize(op_at(kE, kRcHigh, 36e3), kE, kRcHigh, kCdc);
  EXPECT_NEAR(m.alpha, 13.3227, 1e-3);
  EXPECT_NEAR(m.gamma, 1541.98, 0.05);
  EXPECT_LT(m.beta, 0.0);
}

TEST(Linearize, BetaNegativeAboveHalfEmf) {
  // v_dc above e/2 with a non-negative divider voltage forces beta < 0
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> udist(0.001, 0.999);
  for (int i = 0; i < 200; ++i) {
    const double dp = udist(rng) * max_mismatch(kE, kRcHigh.total_resistance());
    const LinearModel m = linearize(op_at(kE, kRcHigh, dp), kE, kRcHigh, kCdc);
    EXPECT_LT(m.beta, 0.0);
  }
}

TEST(Linearize, AlphaScaleInvariance) {
  const double k = 3.7;
  const RCParams scaled{k * kRcHigh.r_s, k * kRcHigh.r_p, kRcHigh.c_p / k};
  const SteadyOperatingPoint op = op_at(kE, kRcHigh, 36e3);
  const LinearModel a = linearize(op, kE, kRcHigh, kCdc);
  const LinearModel b = linearize(op, kE, scaled, kCdc);
  EXPECT_NEAR(a.alpha, b.alpha, 1e-9 * a.alpha);
}

TEST(Linearize, SingularAtZeroLinkVoltage) {
  EXPECT_THROW(linearize({0.0, 0.0, 0.0}, kE, kRcHigh, kCdc), domain_error);
}

TEST(IsStable, OperatingBranchAlwaysStable) {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> udist(0.001, 0.999);
  for (const RCParams& rc : {kRcHigh, kRcLow}) {
    for (int i = 0; i < 500; ++i) {
      const double dp = udist(rng) * max_mismatch(kE, rc.total_resistance());
      EXPECT_TRUE(is_stable(linearize(op_at(kE, rc, dp), kE, rc, kCdc)));
    }
  }
}

TEST(IsStable, BoundaryViolationsDetected) {
  LinearModel m;
  m.alpha = 10.0;
  m.beta = 10.0;  // first condition violated at the boundary
  m.gamma = 1.0;
  EXPECT_FALSE(is_stable(m));
  m.beta = -0.1;
  m.gamma = -m.alpha * m.beta;  // second condition at the boundary
  EXPECT_FALSE(is_stable(m));
}

TEST(Damping, TableValues) {
  EXPECT_NEAR(zeta_approx(kRcHigh, kCdc), 3.501, 1e-3);
  EXPECT_NEAR(zeta_approx(kRcLow, kCdc), 10.45, 1e-2);
}

TEST(Damping, ReportCombinesExactAndApproximate) {
  const LinearModel m = linearize(op_at(kE, kRcHigh, 36e3), kE, kRcHigh, kCdc);
  const DampingReport rep = damping(m, kRcHigh);
  EXPECT_NEAR(rep.zeta_approx, 3.501, 1e-3);
  EXPECT_GT(rep.zeta_exact, 1.0);
  // the battery-only expression holds when the link sits close to the EMF
  EXPECT_LT(std::abs(kE - m.v_dc_ss) / kE, 0.02);
  EXPECT_NEAR(rep.zeta_exact, rep.zeta_approx, 0.05 * rep.zeta_approx);
}

TEST(Damping, AlwaysOverdampedOnTheOperatingBranch) {
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> udist(0.001, 0.999);
  std::uniform_real_distribution<double> scale(0.1, 10.0);
  for (int i = 0; i < 2000; ++i) {
    const RCParams rc{kRcHigh.r_s * scale(rng), kRcHigh.r_p * scale(rng),
                      kRcHigh.c_p * scale(rng)};
    const double c = kCdc * scale(rng);
    const double dp = udist(rng) * max_mismatch(kE, rc.total_resistance());
    const LinearModel m = linearize(op_at(kE, rc, dp), kE, rc, c);
    const DampingReport rep = damping(m, rc);
    EXPECT_GT(rep.zeta_exact, 1.0);
    EXPECT_GT(rep.zeta_approx, 1.0);
  }
}

TEST(Damping, UnstableModelRejected) {
  LinearModel m;
  m.alpha = 1.0;
  m.beta = 2.0;
  m.gamma = 1.0;
  EXPECT_THROW(damping(m, kRcHigh), domain_error);
}

TEST(Poles, VietaIdentities) {
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> udist(0.001, 0.999);
  for (const RCParams& rc : {kRcHigh, kRcLow}) {
    for (int i = 0; i < 300; ++i) {
      const double dp = udist(rng) * max_mismatch(kE, rc.total_resistance());
      const LinearModel m = linearize(op_at(kE, rc, dp), kE, rc, kCdc);
      const PolePair p = poles(m);
      const double sum = -(m.alpha - m.beta);
      const double prod = -m.gamma - m.alpha * m.beta;
      EXPECT_NEAR(p.s_slow + p.s_fast, sum, 1e-10 * std::abs(sum));
      EXPECT_NEAR(p.s_slow * p.s_fast, prod, 1e-10 * std::abs(prod));
      EXPECT_LT(p.s_slow, 0.0);
      EXPECT_LT(p.s_fast, 0.0);
      EXPECT_LE(std::abs(p.s_slow), std::abs(p.s_fast));
    }
  }
}

TEST(Poles, WideSeparationAtTableOperatingPoint) {
  const LinearModel m = linearize(op_at(kE, kRcHigh, 36e3), kE, kRcHigh, kCdc);
  const PolePair p = poles(m);
  EXPECT_GT(std::abs(p.s_fast / p.s_slow), 5.0);
}

TEST(Poles, DiscriminantPositiveSoNeverComplex) {
  std::mt19937 rng(37);
  std::uniform_real_distribution<double> scale(0.1, 10.0);
  std::uniform_real_distribution<double> udist(0.001, 0.999);
  for (int i = 0; i < 1000; ++i) {
    const RCParams rc{kRcHigh.r_s * scale(rng), kRcHigh.r_p * scale(rng),
                      kRcHigh.c_p * scale(rng)};
    const double dp = udist(rng) * max_mismatch(kE, rc.total_resistance());
    const LinearModel m = linearize(op_at(kE, rc, dp), kE, rc, kCdc);
    const double sum = m.alpha + m.beta;
    EXPECT_GT(sum * sum + 4.0 * m.gamma, 0.0);
  }
}

double fd_zeta(const RCParams& rc, double c_dc, int which) {
  const double h = 1e-6;
  RCParams lo = rc, hi = rc;
  double x = 0.0;
  switch (which) {
    case 0: x = rc.r_s; lo.r_s *= 1.0 - h; hi.r_s *= 1.0 + h; break;
    case 1: x = rc.r_p; lo.r_p *= 1.0 - h; hi.r_p *= 1.0 + h; break;
    default: x = rc.c_p; lo.c_p *= 1.0 - h; hi.c_p *= 1.0 + h; break;
  }
  return (zeta_approx(hi, c_dc) - zeta_approx(lo, c_dc)) / (2.0 * h * x);
}

TEST(Sensitivities, TableValueForContactResistance) {
  const SensitivityReport rep = sensitivities(kRcHigh, kCdc);
  EXPECT_NEAR(rep.dzeta_dRp, 23.295, 1e-3);
}

TEST(Sensitivities, SignsAtTableParameters) {
  const SensitivityReport rep = sensitivities(kRcHigh, kCdc);
  EXPECT_LT(rep.dzeta_dRs, 0.0);
  EXPECT_GT(rep.dzeta_dRp, 0.0);
  EXPECT_GT(rep.dzeta_dCp, 0.0);
}

TEST(Sensitivities, MatchFiniteDifferences) {
  std::mt19937 rng(41);
  std::uniform_real_distribution<double> lscale(std::log(0.01), std::log(10.0));
  for (int i = 0; i < 100; ++i) {
    const RCParams rc{kRcHigh.r_s * std::exp(lscale(rng)),
                      kRcHigh.r_p * std::exp(lscale(rng)),
                      kRcHigh.c_p * std::exp(lscale(rng))};
    const double c = kCdc * std::exp(lscale(rng));
    const SensitivityReport rep = sensitivities(rc, c);
    const double fd[3] = {fd_zeta(rc, c, 0), fd_zeta(rc, c, 1), fd_zeta(rc, c, 2)};
    const double an[3] = {rep.dzeta_dRs, rep.dzeta_dRp, rep.dzeta_dCp};
    for (int k = 0; k < 3; ++k) {
      const double scale = std::max(std::abs(fd[k]), 1e-12);
      EXPECT_NEAR(an[k], fd[k], 1e-4 * scale);
    }
  }
}

TEST(WorstCase, TableEndpointComparison) {
  const WorstCase wc = worst_case_current(table1(), kCdc);
  EXPECT_NEAR(wc.i_star, 153.0, 0.2);
  EXPECT_NEAR(wc.zeta_star, 10.45, 1e-2);
  EXPECT_GT(zeta_approx(kRcLow, kCdc), zeta_approx(kRcHigh, kCdc));
}

TEST(WorstCase, SingleEntryTable) {
  const ParamTable t({{500.0, {0.3, 0.1, 2.0}}});
  const WorstCase wc = worst_case_current(t, kCdc);
  EXPECT_DOUBLE_EQ(wc.i_star, 500.0);
}

TEST(WorstCase, BeatsAnExhaustiveScan) {
  const ParamTable t = table1();
  const WorstCase wc = worst_case_current(t, kCdc, 153.0, 1000.0);
  for (int i = 0; i <= 100; ++i) {
    const double cur = 153.0 + (1000.0 - 153.0) * i / 100.0;
    const double z = zeta_approx(params_at_current(t, cur), kCdc);
    EXPECT_LE(z, wc.zeta_star + 1e-3);
  }
}

}  // namespace
