#ifndef PBUF_DYNAMICS_HPP
#define PBUF_DYNAMICS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "pbuf/battery.hpp"
#include "pbuf/errors.hpp"
#include "pbuf/network.hpp"
#include "pbuf/small_signal.hpp"
#include "pbuf/steady_state.hpp"

namespace pbuf {

enum class Mode { constant_power = 0, constant_impedance = 1 };

// Timed PCC voltage dip: positive/negative sequence magnitudes held for
// `duration` starting at `t_start`; 1.0 / 0.0 outside all events.
struct SagEvent {
  double t_start = 0.0;   // seconds
  double duration = 0.0;  // seconds
  double pos_pu = 1.0;
  double neg_pu = 0.0;

  double t_end() const { return t_start + duration; }

  void validate() const {
    if (!(t_start >= 0.0)) throw config_error("SagEvent: t_start must be >= 0");
    if (!(duration > 0.0)) throw config_error("SagEvent: duration must be positive");
    if (pos_pu < 0.0 || neg_pu < 0.0)
      throw config_error("SagEvent: sequence magnitudes must be >= 0");
  }
};

struct SimConfig {
  double dt = 50e-6;              // seconds
  double t_end = 0.34;            // seconds
  double detect_threshold = 0.95; // per-unit PCC voltage
  double confirm_delay = 2e-3;    // seconds
  double nominal_v_dc = 859.0;    // volts
  double dc_band = 0.10;          // +-fraction around nominal
  bool battery_enabled = true;
  double c_dc = 0.01;             // farads

  void validate() const {
    if (!(dt > 0.0)) throw config_error("SimConfig: dt must be positive");
    if (!(t_end > 0.0)) throw config_error("SimConfig: t_end must be positive");
    if (!(detect_threshold > 0.0 && detect_threshold < 1.0))
      throw config_error("SimConfig: detect_threshold must lie in (0, 1)");
    if (confirm_delay < 0.0) throw config_error("SimConfig: confirm_delay must be >= 0");
    if (!(nominal_v_dc > 0.0)) throw config_error("SimConfig: nominal_v_dc must be positive");
    if (!(dc_band > 0.0)) throw config_error("SimConfig: dc_band must be positive");
    if (!(c_dc > 0.0)) throw config_error("SimConfig: c_dc must be positive");
  }
};

struct BufferState {
  double t = 0.0;
  double v_dc = 0.0;
  double v_cp = 0.0;
  Mode mode = Mode::constant_power;
  bool battery_connected = false;
  double f = 0.0;  // state of discharge
};

// One record per integration step; the CSV layout picks a fixed subset.
struct Sample {
  double t = 0.0;
  double v_g_pos = 1.0;
  double v_g_neg = 0.0;
  double v_dc = 0.0;
  double v_cp = 0.0;
  double i_btr = 0.0;
  double i_cap = 0.0;
  double i_cp = 0.0;
  double p_in = 0.0;
  double q_in = 0.0;
  double p_batt = 0.0;
  double p_load = 0.0;
  double i_in_pu = 0.0;
  Mode mode = Mode::constant_power;
};

struct TimeSeries {
  std::vector<Sample> samples;
  double dt = 0.0;
};

// Mismatch between the load demand and the power the constant-impedance
// combination pulls from the PCC at the sagged positive-sequence voltage.
inline double mismatch_power(double p_l, double v_g_pos, double r_in,
                             double v_base) {
  if (!(p_l > 0.0)) throw domain_error("mismatch_power: p_l must be positive");
  if (!(v_base > 0.0)) throw domain_error("mismatch_power: v_base must be positive");
  if (v_g_pos < 0.0) throw domain_error("mismatch_power: v_g_pos must be >= 0");
  return p_l - max_power(v_g_pos * v_base, r_in);
}

constexpr double kDefaultVdcFloor = 1.0;  // volts

struct Derivatives {
  double dv_dc = 0.0;
  double dv_cp = 0.0;
};

namespace detail {

inline Derivatives battery_rhs(double v_dc, double v_cp, double delta_p,
                               double e, const RCParams& rc, double c_dc,
                               double v_floor) {
  if (v_dc <= v_floor)
    throw collapse_error("dc link fell below the guard floor");
  const double i_btr = (e - v_dc - v_cp) / rc.r_s;
  return {(i_btr - delta_p / v_dc) / c_dc,
          (i_btr - v_cp / rc.r_p) / rc.c_p};
}

}  // namespace detail

// Battery-connected link dynamics: the dc-link power balance (divided through
// by v_dc) and the plate-capacitor branch.
inline Derivatives derivatives(const BufferState& state, double delta_p,
                               double e, const RCParams& rc, double c_dc,
                               double v_floor = kDefaultVdcFloor) {
  rc.validate();
  if (!(c_dc > 0.0)) throw domain_error("derivatives: c_dc must be positive");
  if (!state.battery_connected)
    throw domain_error("derivatives: battery must be connected");
  return detail::battery_rhs(state.v_dc, state.v_cp, delta_p, e, rc, c_dc, v_floor);
}

struct StepInputs {
  double delta_p = 0.0;
  double e = 0.0;
  RCParams rc;
  double c_dc = 0.0;
  double v_floor = kDefaultVdcFloor;
};

// One classical fourth-order step of the battery-connected dynamics.
inline BufferState step(const BufferState& state, const StepInputs& in,
                        double dt) {
  if (!(dt > 0.0)) throw domain_error("step: dt must be positive");
  auto rhs = [&](double v, double w) {
    return detail::battery_rhs(v, w, in.delta_p, in.e, in.rc, in.c_dc, in.v_floor);
  };
  const Derivatives k1 = rhs(state.v_dc, state.v_cp);
  const Derivatives k2 = rhs(state.v_dc + 0.5 * dt * k1.dv_dc,
                             state.v_cp + 0.5 * dt * k1.dv_cp);
  const Derivatives k3 = rhs(state.v_dc + 0.5 * dt * k2.dv_dc,
                             state.v_cp + 0.5 * dt * k2.dv_cp);
  const Derivatives k4 = rhs(state.v_dc + dt * k3.dv_dc,
                             state.v_cp + dt * k3.dv_cp);
  BufferState out = state;
  out.t = state.t + dt;
  out.v_dc = state.v_dc + dt / 6.0 * (k1.dv_dc + 2.0 * k2.dv_dc + 2.0 * k3.dv_dc + k4.dv_dc);
  out.v_cp = state.v_cp + dt / 6.0 * (k1.dv_cp + 2.0 * k2.dv_cp + 2.0 * k3.dv_cp + k4.dv_cp);
  if (out.v_dc <= in.v_floor)
    throw collapse_error("dc link fell below the guard floor");
  return out;
}

// Fixed-mismatch integration of the battery-connected dynamics; used for
// fixed-point and decay-rate checks where the event machine would get in the
// way. Returns the state trajectory including the initial state.
inline std::vector<BufferState> integrate_fixed_mismatch(
    const BufferState& init, double delta_p, double e, const RCParams& rc,
    double c_dc, double dt, double duration,
    double v_floor = kDefaultVdcFloor) {
  rc.validate();
  if (!(duration > 0.0)) throw domain_error("integrate_fixed_mismatch: duration must be positive");
  const StepInputs in{delta_p, e, rc, c_dc, v_floor};
  const long n = std::lround(duration / dt);
  std::vector<BufferState> traj;
  traj.reserve(static_cast<std::size_t>(n) + 1);
  BufferState s = init;
  s.battery_connected = true;
  traj.push_back(s);
  for (long i = 0; i < n; ++i) {
    s = step(s, in, dt);
    traj.push_back(s);
  }
  return traj;
}

struct SimOptions {
  std::optional<RCParams> rc_override;  // bypass the switch-in table lookup
  double q_load = 0.0;                  // vars, served at the set-point
  double v_floor = kDefaultVdcFloor;
  double f_initial = 0.0;
};

struct SimResult {
  TimeSeries series;
  bool collapsed = false;
  double collapse_time = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> switch_in_time;  // first battery connection
  RCParams rc_used;                      // valid once switch_in_time is set
  double e_used = 0.0;
  double delta_p_plateau = std::numeric_limits<double>::quiet_NaN();
  double v_dc_ss_target = std::numeric_limits<double>::quiet_NaN();
  double peak_i_btr = 0.0;
  double final_f = 0.0;
};

namespace detail {

struct SeqPoint {
  double pos = 1.0;
  double neg = 0.0;
};

inline SeqPoint sag_at(const std::vector<SagEvent>& events, double t) {
  for (const SagEvent& ev : events)
    if (t >= ev.t_start && t < ev.t_end()) return {ev.pos_pu, ev.neg_pu};
  return {1.0, 0.0};
}

inline void validate_events(const std::vector<SagEvent>& events) {
  double prev_end = -1.0;
  for (const SagEvent& ev : events) {
    ev.validate();
    if (ev.t_start < prev_end)
      throw config_error("sag events must be sorted and non-overlapping");
    prev_end = ev.t_end();
  }
}

// Integrator step-size check against the stiffest pole each sag event will
// excite. Events the battery cannot sustain are skipped; those runs collapse
// instead of settling.
inline void check_step_size(const std::vector<SagEvent>& events,
                            const SimConfig& cfg, const BatteryCalibration& cal,
                            const ParamTable& table, double p_load, double r_in,
                            double v_base, const SimOptions& opt) {
  if (!cfg.battery_enabled) return;
  for (const SagEvent& ev : events) {
    if (ev.pos_pu >= cfg.detect_threshold) continue;
    const double dp = mismatch_power(p_load, ev.pos_pu, r_in, v_base);
    const double i_est = dp > 0.0 ? dp / cfg.nominal_v_dc : table.min_current();
    const RCParams rc = opt.rc_override ? *opt.rc_override
                                        : params_at_current(table, i_est);
    const double e = emf_and_resistance(cal, opt.f_initial).e;
    try {
      const double v = solve_vdc(e, rc.total_resistance(), dp);
      const SteadyOperatingPoint op{v, vcp_ss(e, v, rc), dp};
      const PolePair p = poles(linearize(op, e, rc, cfg.c_dc));
      if (cfg.dt * std::abs(p.s_fast) >= 0.1)
        throw config_error("SimConfig: dt too large for the fastest pole of the sag transient");
    } catch (const infeasible_error&) {
      // no steady point: the run is expected to collapse, nothing to bound
    }
  }
}

}  // namespace detail

// Event-driven simulation. The run starts regulated at nominal in constant
// power mode. A dip of the positive-sequence PCC voltage below the detection
// threshold opens the confirmation window, during which the converter stays
// in constant power mode but current-limited at the pre-sag magnitude. On
// confirmation the buffer-load combination switches to constant impedance
// and the battery (when enabled) connects with an uncharged plate capacitor.
// On recovery the mode reverts; the battery keeps recharging the link and
// disconnects once the voltage is back within 0.5% of nominal.
inline SimResult simulate(const std::vector<SagEvent>& events,
                          const SimConfig& cfg, const BatteryCalibration& cal,
                          const ParamTable& table, double p_load, double r_in,
                          double v_base, const SimOptions& opt = {}) {
  cfg.validate();
  cal.validate();
  detail::validate_events(events);
  if (!(p_load > 0.0)) throw domain_error("simulate: p_load must be positive");
  if (!(r_in > 0.0)) throw domain_error("simulate: r_in must be positive");
  if (!(v_base > 0.0)) throw domain_error("simulate: v_base must be positive");
  if (opt.rc_override) opt.rc_override->validate();
  detail::check_step_size(events, cfg, cal, table, p_load, r_in, v_base, opt);

  const double dt = cfg.dt;
  const long n_steps = std::lround(cfg.t_end / dt);

  enum class Phase { normal, delay };
  Phase phase = Phase::normal;
  double t_confirm = 0.0;

  BufferState st;
  st.v_dc = cfg.nominal_v_dc;
  st.f = opt.f_initial;

  SimResult result;
  result.series.dt = dt;
  result.series.samples.reserve(static_cast<std::size_t>(n_steps) + 1);

  RCParams rc_run;       // valid once a battery switch-in happened
  bool rc_valid = false;
  double e_run = 0.0;

  bool collapsed = false;

  for (long i = 0; i <= n_steps; ++i) {
    const double t = static_cast<double>(i) * dt;
    const detail::SeqPoint vg = detail::sag_at(events, t);

    // -- event decisions at the sample time --
    if (!collapsed) {
      if (phase == Phase::normal && st.mode == Mode::constant_power &&
          vg.pos < cfg.detect_threshold) {
        phase = Phase::delay;
        t_confirm = t + cfg.confirm_delay;
      }
      if (phase == Phase::delay) {
        if (vg.pos >= cfg.detect_threshold) {
          phase = Phase::normal;  // dip vanished before confirmation
        } else if (t >= t_confirm - 0.5 * dt) {
          st.mode = Mode::constant_impedance;
          phase = Phase::normal;
          if (cfg.battery_enabled && !st.battery_connected) {
            const double dp_est = mismatch_power(p_load, vg.pos, r_in, v_base);
            const double i_est =
                dp_est > 0.0 ? dp_est / cfg.nominal_v_dc : table.min_current();
            rc_run = opt.rc_override ? *opt.rc_override
                                     : params_at_current(table, i_est);
            rc_valid = true;
            e_run = emf_and_resistance(cal, st.f).e;
            st.battery_connected = true;
            st.v_cp = 0.0;
            if (!result.switch_in_time) {
              result.switch_in_time = t;
              result.rc_used = rc_run;
              result.e_used = e_run;
              result.delta_p_plateau = dp_est;
              try {
                result.v_dc_ss_target =
                    solve_vdc(e_run, rc_run.total_resistance(), dp_est);
              } catch (const infeasible_error&) {
                // collapse expected; leave the target NaN
              }
            }
          }
        }
      }
      if (st.mode == Mode::constant_impedance && vg.pos >= cfg.detect_threshold)
        st.mode = Mode::constant_power;  // recovery
      if (st.mode == Mode::constant_power && st.battery_connected &&
          phase == Phase::normal &&
          std::abs(st.v_dc - cfg.nominal_v_dc) < 0.005 * cfg.nominal_v_dc)
        st.battery_connected = false;
    }

    // -- instantaneous electrical quantities for the record --
    Sample s;
    s.t = t;
    s.v_g_pos = vg.pos;
    s.v_g_neg = vg.neg;
    s.v_dc = st.v_dc;
    s.v_cp = st.v_cp;
    s.mode = st.mode;
    if (collapsed) {
      s.p_load = 0.0;
    } else {
      if (st.mode == Mode::constant_impedance) {
        s.p_in = max_power(vg.pos * v_base, r_in);
        s.q_in = opt.q_load * vg.pos * vg.pos;
        s.i_in_pu = vg.pos;
      } else if (phase == Phase::delay) {
        s.p_in = p_load * std::min(1.0, vg.pos);
        s.q_in = opt.q_load;
        s.i_in_pu = std::min(vg.pos > 0.0 ? 1.0 / vg.pos
                                          : std::numeric_limits<double>::infinity(),
                             1.0);
      } else {
        s.p_in = p_load;
        s.q_in = opt.q_load;
        s.i_in_pu = vg.pos > 0.0 ? 1.0 / vg.pos : 0.0;
      }
      s.p_load = p_load;
      if (st.battery_connected) {
        s.i_btr = (e_run - st.v_dc - st.v_cp) / rc_run.r_s;
        s.i_cp = s.i_btr - st.v_cp / rc_run.r_p;
        s.p_batt = st.v_dc * s.i_btr;
        s.i_cap = s.i_btr - (p_load - s.p_in) / st.v_dc;
      } else {
        s.i_cp = rc_valid ? -st.v_cp / rc_run.r_p : 0.0;
        s.i_cap = (s.p_in - p_load) / st.v_dc;
      }
      result.peak_i_btr = std::max(result.peak_i_btr, s.i_btr);
    }
    result.series.samples.push_back(s);

    if (i == n_steps) break;

    // -- advance one step --
    if (collapsed) continue;
    if (st.battery_connected) {
      const StepInputs in{p_load - s.p_in, e_run, rc_run, cfg.c_dc, opt.v_floor};
      try {
        const BufferState next = step(st, in, dt);
        const double i_btr_end = (e_run - next.v_dc - next.v_cp) / rc_run.r_s;
        const BatteryState b = update_sod({st.f, st.v_cp, s.i_btr},
                                          0.5 * (s.i_btr + i_btr_end), dt, cal);
        st = next;
        st.f = b.f;
      } catch (const collapse_error&) {
        collapsed = true;
        result.collapsed = true;
        result.collapse_time = t + dt;
        st.t = t + dt;
        st.v_dc = opt.v_floor;
      }
    } else {
      // Link alone: the squared voltage ramps linearly under a constant
      // power deficit, so the step integrates exactly.
      const double deficit = s.p_in - p_load;  // watts into the link
      const double u = st.v_dc * st.v_dc + 2.0 * deficit * dt / cfg.c_dc;
      if (u <= opt.v_floor * opt.v_floor) {
        collapsed = true;
        result.collapsed = true;
        result.collapse_time =
            t + (st.v_dc * st.v_dc - opt.v_floor * opt.v_floor) * cfg.c_dc /
                    (-2.0 * deficit);
        st.v_dc = opt.v_floor;
      } else {
        st.v_dc = std::sqrt(u);
      }
      if (rc_valid && st.v_cp != 0.0)
        st.v_cp *= std::exp(-dt / (rc_run.r_p * rc_run.c_p));
      st.t = t + dt;
    }
  }

  result.final_f = st.f;
  return result;
}

// Time (from t_from) after which v_dc stays within `band` volts of `target`
// through t_to; +inf when it never does.
inline double settling_time(const TimeSeries& ts, double t_from, double t_to,
                            double target, double band) {
  const double inf = std::numeric_limits<double>::infinity();
  double settle = inf;
  bool inside = false;
  for (const Sample& s : ts.samples) {
    if (s.t < t_from || s.t > t_to) continue;
    if (std::abs(s.v_dc - target) > band) {
      inside = false;
      settle = inf;
    } else if (!inside) {
      inside = true;
      settle = s.t - t_from;
    }
  }
  return settle;
}

struct DischargeComparison {
  SimResult low_current;   // table front entry
  SimResult high_current;  // table back entry
  double i_low = 0.0;
  double i_high = 0.0;
  double settle_low = 0.0;   // seconds, 2%-of-step band
  double settle_high = 0.0;
};

namespace detail {

inline double settle_of(const SimResult& r, const std::vector<SagEvent>& events,
                        double dt) {
  if (!r.switch_in_time || std::isnan(r.v_dc_ss_target))
    return std::numeric_limits<double>::infinity();
  const double t0 = *r.switch_in_time;
  const double t1 = events.front().t_end();
  const auto idx = static_cast<std::size_t>(std::lround(t0 / dt));
  const double v0 = r.series.samples.at(idx).v_dc;
  const double band = 0.02 * std::abs(v0 - r.v_dc_ss_target);
  return settling_time(r.series, t0, t1, r.v_dc_ss_target, band);
}

}  // namespace detail

// Paired runs differing only in the battery RC parameters: the table's first
// (low-current) and last (high-current) entries. The low-current battery is
// more heavily damped and recovers the link more slowly.
inline DischargeComparison compare_discharge_profiles(
    const std::vector<SagEvent>& events, const SimConfig& cfg,
    const BatteryCalibration& cal, const ParamTable& table, double p_load,
    double r_in, double v_base, const SimOptions& base_opt = {}) {
  if (events.empty())
    throw config_error("compare_discharge_profiles: at least one sag event required");
  DischargeComparison cmp;
  cmp.i_low = table.min_current();
  cmp.i_high = table.max_current();
  SimOptions lo = base_opt, hi = base_opt;
  lo.rc_override = table.entries().front().rc;
  hi.rc_override = table.entries().back().rc;
  cmp.low_current = simulate(events, cfg, cal, table, p_load, r_in, v_base, lo);
  cmp.high_current = simulate(events, cfg, cal, table, p_load, r_in, v_base, hi);
  cmp.settle_low = detail::settle_of(cmp.low_current, events, cfg.dt);
  cmp.settle_high = detail::settle_of(cmp.high_current, events, cfg.dt);
  return cmp;
}

}  // namespace pbuf

#endif  // PBUF_DYNAMICS_HPP
