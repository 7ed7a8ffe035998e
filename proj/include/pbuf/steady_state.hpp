#ifndef PBUF_STEADY_STATE_HPP
#define PBUF_STEADY_STATE_HPP

#include <cmath>
#include <limits>
#include <vector>

#include "pbuf/battery.hpp"
#include "pbuf/errors.hpp"
#include "pbuf/network.hpp"

namespace pbuf {

// Steady operating point of the buffer-battery system for a constant
// mismatch power delta_p drawn from the dc link.
struct SteadyOperatingPoint {
  double v_dc_ss = 0.0;   // volts
  double v_cp_ss = 0.0;   // volts
  double delta_p = 0.0;   // watts
};

// Steady plate-capacitor voltage: the battery divider r_p/(r_s+r_p) applied
// to the EMF-to-link drop.
inline double vcp_ss(double e, double v_dc_ss, const RCParams& rc) {
  rc.validate();
  return rc.r_p * (e - v_dc_ss) / (rc.r_s + rc.r_p);
}

// Mismatch power a given steady link voltage implies: v_dc (e - v_dc) / r.
// Positive exactly when 0 < v_dc_ss < e.
inline double mismatch_from_vdc(double v_dc_ss, double e, double r_total) {
  if (!(r_total > 0.0)) throw domain_error("mismatch_from_vdc: r_total must be positive");
  return v_dc_ss * (e - v_dc_ss) / r_total;
}

// Largest mismatch power the branch can deliver, at v_dc = e/2.
inline double max_mismatch(double e, double r_total) {
  if (!(r_total > 0.0)) throw domain_error("max_mismatch: r_total must be positive");
  return e * e / (4.0 * r_total);
}

// Steady link voltage for a given EMF, total branch resistance and mismatch
// power: the larger root of the power-balance quadratic,
//   v = 0.5 (e + sqrt(e^2 - 4 r delta_p)).
// The smaller root sits below e/2 where the operating branch is unstable.
inline double solve_vdc(double e, double r_total, double delta_p) {
  if (!(e > 0.0)) throw domain_error("solve_vdc: e must be positive");
  if (!(r_total > 0.0)) throw domain_error("solve_vdc: r_total must be positive");
  double disc = e * e - 4.0 * r_total * delta_p;
  // rounding guard so the double-root boundary itself stays feasible
  if (disc < 0.0 && disc > -4e-12 * e * e) disc = 0.0;
  if (disc < 0.0)
    throw infeasible_error("solve_vdc: demand exceeds what the battery can supply");
  return 0.5 * (e + std::sqrt(disc));
}

inline double vdc_ss(const BatteryCalibration& cal, double f, double delta_p) {
  const EmfResistance er = emf_and_resistance(cal, f);
  return solve_vdc(er.e, er.r_b, delta_p);
}

// Steady link voltage under a sag: the mismatch is the load demand minus the
// power the constant-impedance combination draws at the sagged PCC voltage.
inline double vdc_ss_from_sag(const BatteryCalibration& cal, double f,
                              double p_l, double v_g_pu, double r_in,
                              double v_base) {
  if (!(p_l > 0.0)) throw domain_error("vdc_ss_from_sag: p_l must be positive");
  if (!(v_base > 0.0)) throw domain_error("vdc_ss_from_sag: v_base must be positive");
  if (v_g_pu < 0.0) throw domain_error("vdc_ss_from_sag: v_g_pu must be >= 0");
  const double delta_p = p_l - max_power(v_g_pu * v_base, r_in);
  return vdc_ss(cal, f, delta_p);
}

// PCC voltage range (per-unit) the buffer-battery rides through while the
// steady link voltage stays inside the regulation band. vg_min = 0 means a
// complete outage is tolerated; vg_max = +inf means no swell inside the scan
// range pushes the link above the band. A vg_min of +inf means no voltage in
// the scan range keeps the link inside the band.
struct RideThroughLimits {
  double vg_min = 0.0;
  double vg_max = std::numeric_limits<double>::infinity();
};

namespace detail {

constexpr double kRideThroughScanMax = 2.0;   // per-unit
constexpr double kRideThroughTol = 1e-9;      // per-unit

// Steady link voltage as a monotone function of v_g; infeasible points map to
// -inf so they sort below any target.
inline double vdc_or_neg_inf(const BatteryCalibration& cal, double f,
                             double p_l, double v_g_pu, double r_in,
                             double v_base) {
  try {
    return vdc_ss_from_sag(cal, f, p_l, v_g_pu, r_in, v_base);
  } catch (const infeasible_error&) {
    return -std::numeric_limits<double>::infinity();
  }
}

// Bisect for the v_g where the steady link voltage crosses `target`.
// Requires value(lo) < target <= value(hi); the value is increasing in v_g.
inline double bisect_vg(const BatteryCalibration& cal, double f, double p_l,
                        double r_in, double v_base, double target, double lo,
                        double hi) {
  while (hi - lo > kRideThroughTol) {
    const double mid = 0.5 * (lo + hi);
    if (vdc_or_neg_inf(cal, f, p_l, mid, r_in, v_base) >= target)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

}  // namespace detail

inline RideThroughLimits ride_through_limits(const BatteryCalibration& cal,
                                             double f, double p_l, double r_in,
                                             double nominal_v_dc,
                                             double v_base) {
  if (!(nominal_v_dc > 0.0))
    throw domain_error("ride_through_limits: nominal_v_dc must be positive");
  const double lower = 0.9 * nominal_v_dc;
  const double upper = 1.1 * nominal_v_dc;
  const double scan_hi = detail::kRideThroughScanMax;
  const double inf = std::numeric_limits<double>::infinity();

  const double at_zero = detail::vdc_or_neg_inf(cal, f, p_l, 0.0, r_in, v_base);
  const double at_max = detail::vdc_or_neg_inf(cal, f, p_l, scan_hi, r_in, v_base);

  RideThroughLimits out;
  if (at_zero >= lower)
    out.vg_min = 0.0;
  else if (at_max < lower)
    out.vg_min = inf;  // nothing in range keeps the link above the band
  else
    out.vg_min = detail::bisect_vg(cal, f, p_l, r_in, v_base, lower, 0.0, scan_hi);

  if (at_max <= upper)
    out.vg_max = inf;  // band never exceeded inside the scan range
  else if (at_zero > upper)
    out.vg_max = 0.0;  // even a dead bus overshoots the band: no swell margin
  else
    out.vg_max = detail::bisect_vg(cal, f, p_l, r_in, v_base, upper, 0.0, scan_hi);

  return out;
}

// Steady link-voltage surface over a (SOD, sag level) grid. Infeasible cells
// hold NaN. The limit curves bound the acceptable regulation band.
struct Envelope {
  std::vector<double> f_grid;
  std::vector<double> vg_grid;
  std::vector<std::vector<double>> v_dc_surface;  // [f index][vg index]
  double lower_limit = 0.0;
  double upper_limit = 0.0;
  double nominal_v_dc = 0.0;

  bool feasible(std::size_t fi, std::size_t vi) const {
    return !std::isnan(v_dc_surface[fi][vi]);
  }
};

inline Envelope build_envelope(const BatteryCalibration& cal,
                               const std::vector<double>& f_grid,
                               const std::vector<double>& vg_grid, double p_l,
                               double r_in, double nominal_v_dc,
                               double v_base) {
  if (f_grid.empty() || vg_grid.empty())
    throw config_error("build_envelope: grids must be non-empty");
  Envelope env;
  env.f_grid = f_grid;
  env.vg_grid = vg_grid;
  env.nominal_v_dc = nominal_v_dc;
  env.lower_limit = 0.9 * nominal_v_dc;
  env.upper_limit = 1.1 * nominal_v_dc;
  env.v_dc_surface.resize(f_grid.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t fi = 0; fi < f_grid.size(); ++fi) {
    env.v_dc_surface[fi].resize(vg_grid.size());
    for (std::size_t vi = 0; vi < vg_grid.size(); ++vi) {
      try {
        env.v_dc_surface[fi][vi] =
            vdc_ss_from_sag(cal, f_grid[fi], p_l, vg_grid[vi], r_in, v_base);
      } catch (const infeasible_error&) {
        env.v_dc_surface[fi][vi] = nan;
      }
    }
  }
  return env;
}

}  // namespace pbuf

#endif  // PBUF_STEADY_STATE_HPP
