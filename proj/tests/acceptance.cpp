// Acceptance suite: one test per release criterion, each printing a single
// PASS/FAIL line with the pinned tolerance.

#include <chrono>
#include <cmath>
#include <iostream>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "pbuf/dynamics.hpp"
#include "pbuf/scenario.hpp"
#include "pbuf/small_signal.hpp"
#include "pbuf/steady_state.hpp"

using namespace pbuf;

namespace {

const RCParams kRcHigh{0.216, 0.072, 1.39};  // 1000 A column
const RCParams kRcLow{0.461, 0.288, 6.94};   // 153 A column
constexpr double kE0 = 864.0;
constexpr double kCdc = 0.01;

std::string shipped_path() {
  return std::string(PBUF_SCENARIO_DIR) + "/table1.json";
}

void report(int id, const std::string& name) {
  std::cout << "[CRITERION " << id << "] "
            << (::testing::Test::HasFailure() ? "FAIL" : "PASS") << " - "
            << name << std::endl;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

SteadyOperatingPoint op_at(double e, const RCParams& rc, double delta_p) {
  const double v = solve_vdc(e, rc.total_resistance(), delta_p);
  return {v, vcp_ss(e, v, rc), delta_p};
}

TEST(Acceptance, Criterion1_SteadyStateQuadratic) {
  const auto t0 = std::chrono::steady_clock::now();

  BatteryCalibration cal;
  cal.e0 = kE0;
  cal.k = 0.0;
  cal.r0 = 0.288;
  cal.k_r = 0.0;
  cal.capacity = 100.0;
  EXPECT_NEAR(vdc_ss(cal, 0.0, 36e3), 851.83, 0.01);

  std::mt19937 rng(20240515);
  std::uniform_real_distribution<double> edist(100.0, 1200.0);
  std::uniform_real_distribution<double> rdist(0.01, 2.0);
  std::uniform_real_distribution<double> udist(1e-3, 0.999);
  for (int i = 0; i < 1000; ++i) {
    const double e = edist(rng);
    const double r = rdist(rng);
    const double dp = udist(rng) * max_mismatch(e, r);
    const double v = solve_vdc(e, r, dp);
    EXPECT_NEAR(mismatch_from_vdc(v, e, r), dp, 1e-9 * dp);
  }

  EXPECT_LT(seconds_since(t0), 1.0);
  report(1, "steady-state quadratic: 851.83 V +-0.01, round trip 1e-9, < 1 s");
}

TEST(Acceptance, Criterion2_DampingRatios) {
  EXPECT_NEAR(zeta_approx(kRcHigh, kCdc), 3.501, 0.001);
  EXPECT_NEAR(zeta_approx(kRcLow, kCdc), 10.45, 0.01);
  EXPECT_GT(zeta_approx(kRcLow, kCdc), zeta_approx(kRcHigh, kCdc));
  const ParamTable table({{153.0, kRcLow}, {1000.0, kRcHigh}});
  const WorstCase wc = worst_case_current(table, kCdc);
  EXPECT_NEAR(wc.i_star, 153.0, 0.5);
  report(2, "damping ratios 3.501 / 10.45, worst case at 153 A");
}

TEST(Acceptance, Criterion3_AlwaysStableOverdamped) {
  std::mt19937 rng(77);
  std::uniform_real_distribution<double> lscale(std::log(0.1), std::log(10.0));
  std::uniform_real_distribution<double> udist(1e-3, 0.999);
  int checked = 0;
  for (int i = 0; i < 10000; ++i) {
    const RCParams rc{kRcHigh.r_s * std::exp(lscale(rng)),
                      kRcHigh.r_p * std::exp(lscale(rng)),
                      kRcHigh.c_p * std::exp(lscale(rng))};
    const double c = kCdc * std::exp(lscale(rng));
    const double e = kE0 * std::exp(lscale(rng));
    const double dp = udist(rng) * max_mismatch(e, rc.total_resistance());
    const LinearModel m = linearize(op_at(e, rc, dp), e, rc, c);
    const bool stable = is_stable(m);
    EXPECT_TRUE(stable);
    if (!stable) continue;
    const PolePair p = poles(m);
    EXPECT_LT(p.s_slow, 0.0);
    EXPECT_LT(p.s_fast, 0.0);
    const DampingReport damp = damping(m, rc);
    EXPECT_GT(damp.zeta_exact, 1.0);
    ++checked;
  }
  EXPECT_EQ(checked, 10000);
  report(3, "10000 random operating points: stable, real negative poles, "
            "zeta_exact > 1");
}

TEST(Acceptance, Criterion4_SensitivityOracle) {
  // central finite differences of the damping-ratio expression
  auto fd = [](const RCParams& rc, double c_dc, int which) {
    const double h = 1e-6;
    RCParams lo = rc, hi = rc;
    double x = 0.0;
    switch (which) {
      case 0: x = rc.r_s; lo.r_s *= 1.0 - h; hi.r_s *= 1.0 + h; break;
      case 1: x = rc.r_p; lo.r_p *= 1.0 - h; hi.r_p *= 1.0 + h; break;
      default: x = rc.c_p; lo.c_p *= 1.0 - h; hi.c_p *= 1.0 + h; break;
    }
    return (zeta_approx(hi, c_dc) - zeta_approx(lo, c_dc)) / (2.0 * h * x);
  };

  std::mt19937 rng(99);
  std::uniform_real_distribution<double> lscale(std::log(0.01), std::log(10.0));
  for (int i = 0; i < 100; ++i) {
    const RCParams rc{kRcHigh.r_s * std::exp(lscale(rng)),
                      kRcHigh.r_p * std::exp(lscale(rng)),
                      kRcHigh.c_p * std::exp(lscale(rng))};
    const double c = kCdc * std::exp(lscale(rng));
    const SensitivityReport rep = sensitivities(rc, c);
    const double an[3] = {rep.dzeta_dRs, rep.dzeta_dRp, rep.dzeta_dCp};
    for (int k = 0; k < 3; ++k) {
      const double num = fd(rc, c, k);
      EXPECT_NEAR(an[k], num, 1e-4 * std::max(std::abs(num), 1e-12));
    }
  }
  const SensitivityReport at_table = sensitivities(kRcHigh, kCdc);
  EXPECT_LT(at_table.dzeta_dRs, 0.0);
  EXPECT_GT(at_table.dzeta_dRp, 0.0);
  EXPECT_GT(at_table.dzeta_dCp, 0.0);
  report(4, "analytic sensitivities vs finite differences within 1e-4, "
            "table-point signs (-, +, +)");
}

TEST(Acceptance, Criterion5_LinearizationCrossCheck) {
  const double dp = 36e3;
  const SteadyOperatingPoint op = op_at(kE0, kRcHigh, dp);
  const LinearModel m = linearize(op, kE0, kRcHigh, kCdc);
  const PolePair p = poles(m);

  // state matrix of the linearized pair (dv_dc, dv_cp)
  const double a11 = m.beta;
  const double a12 = -1.0 / (kRcHigh.r_s * kCdc);
  const double a21 = -1.0 / (kRcHigh.r_s * kRcHigh.c_p);

  auto right_vec = [&](double lambda) {
    return std::pair<double, double>{1.0, (a11 - lambda) / (-a12)};
  };
  auto measure_rate = [&](double lambda, double t1, double t2, double dt) {
    const auto [v1, v2] = right_vec(lambda);
    const double eps = 0.01;
    BufferState init;
    init.v_dc = op.v_dc_ss + eps * v1;
    init.v_cp = op.v_cp_ss + eps * v2;
    const auto traj = integrate_fixed_mismatch(init, dp, kE0, kRcHigh, kCdc,
                                               dt, t2 * 1.01);
    // left-eigenvector projection isolates the mode
    auto project = [&](double t) {
      const auto idx = static_cast<std::size_t>(std::lround(t / dt));
      const BufferState& s = traj.at(idx);
      return a21 * (s.v_dc - op.v_dc_ss) + (lambda - a11) * (s.v_cp - op.v_cp_ss);
    };
    return std::log(std::abs(project(t2) / project(t1))) / (t2 - t1);
  };

  const double slow_rate = measure_rate(p.s_slow, 0.05, 0.30, 50e-6);
  const double fast_rate = measure_rate(p.s_fast, 0.0005, 0.006, 5e-6);
  EXPECT_NEAR(slow_rate, p.s_slow, 0.02 * std::abs(p.s_slow));
  EXPECT_NEAR(fast_rate, p.s_fast, 0.02 * std::abs(p.s_fast));
  report(5, "simulated decay rates match both poles within 2%");
}

TEST(Acceptance, Criterion6_SagReproduction) {
  const auto t0 = std::chrono::steady_clock::now();
  const Scenario scn = load_scenario(shipped_path());
  const InputImpedance zin = scn.input_impedance();
  SimOptions opt;
  opt.q_load = scn.q_load;
  opt.f_initial = scn.sod_initial;

  const SimResult run = simulate(scn.events, scn.sim, scn.cal, scn.table,
                                 scn.p_load, zin.r_in, scn.v_base, opt);
  ASSERT_TRUE(run.switch_in_time.has_value());
  const SagEvent& ev = scn.events.front();

  // plateau: the last quarter of the sag interval
  double p_in = 0.0, p_batt = 0.0, n = 0.0;
  for (const Sample& s : run.series.samples) {
    if (s.t < ev.t_end() - 0.25 * ev.duration || s.t >= ev.t_end()) continue;
    p_in += s.p_in;
    p_batt += s.p_batt;
    EXPECT_NEAR(s.i_in_pu, 0.80, 0.01);
    n += 1.0;
  }
  ASSERT_GT(n, 0.0);
  EXPECT_NEAR(p_in / n, 64e3, 0.02 * 64e3);
  EXPECT_NEAR(p_batt / n, 36e3, 0.02 * 36e3);
  EXPECT_NEAR((p_in + p_batt) / n, 100e3, 0.01 * 100e3);
  for (const Sample& s : run.series.samples) {
    EXPECT_GT(s.v_dc, (1.0 - scn.sim.dc_band) * scn.nominal_v_dc);
    EXPECT_LT(s.v_dc, (1.0 + scn.sim.dc_band) * scn.nominal_v_dc);
  }
  EXPECT_FALSE(run.collapsed);

  // the same sag without the battery collapses
  SimConfig no_batt = scn.sim;
  no_batt.battery_enabled = false;
  const SimResult bare = simulate(scn.events, no_batt, scn.cal, scn.table,
                                  scn.p_load, zin.r_in, scn.v_base, opt);
  EXPECT_TRUE(bare.collapsed);
  EXPECT_EQ(bare.series.samples.back().v_dc, kDefaultVdcFloor);

  // settling-time ordering between the two tabulated discharge currents,
  // on a dip long enough for both transients to die out
  SimConfig long_cfg = scn.sim;
  long_cfg.dt = 2e-4;
  long_cfg.t_end = 20.5;
  const std::vector<SagEvent> long_sag{{0.04, 20.0, ev.pos_pu, ev.neg_pu}};
  const DischargeComparison cmp = compare_discharge_profiles(
      long_sag, long_cfg, scn.cal, scn.table, scn.p_load, zin.r_in,
      scn.v_base, opt);
  EXPECT_GT(cmp.settle_low, cmp.settle_high);

  EXPECT_LT(seconds_since(t0), 10.0);
  report(6, "sag plateau 64/36/100 kW, 0.80 pu current, band kept, "
            "no-battery collapse, 153 A settles slower, < 10 s");
}

TEST(Acceptance, Criterion7_EnvelopeProperties) {
  const Scenario scn = load_scenario(shipped_path());
  const InputImpedance zin = scn.input_impedance();

  // monotone surface: decreasing in SOD, increasing in PCC voltage
  std::vector<double> f_grid, vg_grid;
  for (int i = 0; i <= 16; ++i) f_grid.push_back(i / 20.0);
  for (int i = 12; i <= 28; ++i) vg_grid.push_back(i / 20.0);
  const Envelope env = build_envelope(scn.cal, f_grid, vg_grid, scn.p_load,
                                      zin.r_in, scn.nominal_v_dc, scn.v_base);
  for (std::size_t fi = 0; fi < f_grid.size(); ++fi)
    for (std::size_t vi = 0; vi + 1 < vg_grid.size(); ++vi)
      if (env.feasible(fi, vi) && env.feasible(fi, vi + 1)) {
        EXPECT_LT(env.v_dc_surface[fi][vi], env.v_dc_surface[fi][vi + 1]);
      }
  for (std::size_t vi = 0; vi < vg_grid.size(); ++vi)
    for (std::size_t fi = 0; fi + 1 < f_grid.size(); ++fi)
      if (env.feasible(fi, vi) && env.feasible(fi + 1, vi)) {
        EXPECT_GT(env.v_dc_surface[fi][vi], env.v_dc_surface[fi + 1][vi]);
      }

  // calibration regression: depends on the shipped battery constants, not an
  // independent check
  const RideThroughLimits lim = ride_through_limits(
      scn.cal, 0.4, scn.p_load, zin.r_in, scn.nominal_v_dc, scn.v_base);
  EXPECT_NEAR(lim.vg_min, 0.82, 0.01);
  report(7, "envelope monotone in (f, v_g); calibration-dependent sag limit "
            "0.82 pu at f = 0.4");
}

TEST(Acceptance, Criterion8_IntegratorOrder) {
  const Scenario scn = load_scenario(shipped_path());
  const InputImpedance zin = scn.input_impedance();
  SimOptions opt;
  opt.f_initial = scn.sod_initial;

  // reference run truncated inside the sag so every event lands on both grids
  SimConfig coarse = scn.sim;
  coarse.t_end = 0.2;
  SimConfig fine = coarse;
  fine.dt = coarse.dt / 2.0;
  const SimResult rc = simulate(scn.events, coarse, scn.cal, scn.table,
                                scn.p_load, zin.r_in, scn.v_base, opt);
  const SimResult rf = simulate(scn.events, fine, scn.cal, scn.table,
                                scn.p_load, zin.r_in, scn.v_base, opt);
  const double vc = rc.series.samples.back().v_dc;
  const double vf = rf.series.samples.back().v_dc;
  EXPECT_LT(std::abs(vc - vf) / vf, 1e-6);

  // fixed-point start stays fixed for a second
  const SteadyOperatingPoint op = op_at(kE0, kRcHigh, 36e3);
  BufferState init;
  init.v_dc = op.v_dc_ss;
  init.v_cp = op.v_cp_ss;
  const auto traj =
      integrate_fixed_mismatch(init, 36e3, kE0, kRcHigh, kCdc, 50e-6, 1.0);
  double max_dev = 0.0;
  for (const BufferState& s : traj)
    max_dev = std::max(max_dev, std::abs(s.v_dc - op.v_dc_ss));
  EXPECT_LT(max_dev / op.v_dc_ss, 1e-6);
  report(8, "step halving shifts the final link voltage < 1e-6 relative; "
            "fixed point holds 1 s within 1e-6");
}

}  // namespace
