// Command-line front end: scenario ingestion, the four analysis commands and
// CSV/report emission. Exit codes: 0 ok, 2 bad scenario/arguments, 3 dc-link
// collapse in a battery-enabled run, 4 infeasible operating point.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pbuf/csv.hpp"
#include "pbuf/dynamics.hpp"
#include "pbuf/scenario.hpp"
#include "pbuf/small_signal.hpp"
#include "pbuf/steady_state.hpp"

namespace fs = std::filesystem;
using namespace pbuf;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitCollapse = 3;
constexpr int kExitInfeasible = 4;

struct CommonArgs {
  std::string scenario_path;
  std::string out_dir = "out";
  double dt_override = 0.0;
  bool dump_resolved = false;
  bool gnuplot = false;
  unsigned seed = 0;
};

void add_common(CLI::App* cmd, CommonArgs& c) {
  cmd->add_option("--scenario", c.scenario_path, "Scenario file (JSON)")->required();
  cmd->add_option("--out", c.out_dir, "Output directory (created if missing)");
  cmd->add_option("--dt", c.dt_override, "Override the integration step [s]");
  cmd->add_flag("--dump-resolved-config", c.dump_resolved,
                "Write the fully resolved scenario next to the outputs");
  cmd->add_flag("--gnuplot-script", c.gnuplot,
                "Emit a gnuplot script for the command's CSV output");
  cmd->add_option("--seed", c.seed,
                  "Seed for external randomized drivers (echoed only)");
}

Scenario load_common(const CommonArgs& c) {
  Scenario s = load_scenario(c.scenario_path);
  if (c.dt_override > 0.0) s.sim.dt = c.dt_override;
  fs::create_directories(c.out_dir);
  return s;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw config_error("cannot open output file '" + path.string() + "'");
  out << content;
}

void maybe_dump_resolved(const CommonArgs& c, const Scenario& s,
                         std::vector<std::string>& outputs) {
  if (!c.dump_resolved) return;
  const fs::path p = fs::path(c.out_dir) / "resolved_config.json";
  write_file(p, dump_scenario(s));
  outputs.push_back(p.string());
}

// Collects the report, prints it and persists it next to the CSVs.
class Report {
 public:
  explicit Report(std::string title) { os_ << title << '\n'; }

  template <class T>
  void line(const std::string& key, const T& value) {
    os_ << "  " << key << ": " << value << '\n';
  }
  void num(const std::string& key, double value) { line(key, csv_num(value)); }
  void raw(const std::string& text) { os_ << text << '\n'; }

  void finish(const fs::path& out_dir, const std::vector<std::string>& outputs,
              int exit_code) {
    for (const auto& o : outputs) os_ << "  output: " << o << '\n';
    os_ << "  exit: " << exit_code << '\n';
    const std::string text = os_.str();
    std::cout << text;
    std::ofstream f(out_dir / "report.txt", std::ios::binary);
    if (f) f << text;
  }

 private:
  std::ostringstream os_;
};

struct PlateauStats {
  double p_in = 0.0;
  double p_batt = 0.0;
  double i_in_pu = 0.0;
  double v_dc_min = 0.0;
  double v_dc_max = 0.0;
  bool valid = false;
};

// Averages over the last quarter of the first sag interval.
PlateauStats plateau_stats(const TimeSeries& ts, const SagEvent& ev) {
  PlateauStats st;
  const double t0 = ev.t_end() - 0.25 * ev.duration;
  const double t1 = ev.t_end();
  double n = 0;
  double vmin = std::numeric_limits<double>::infinity(), vmax = -vmin;
  for (const Sample& s : ts.samples) {
    if (s.t < t0 || s.t >= t1) continue;
    st.p_in += s.p_in;
    st.p_batt += s.p_batt;
    st.i_in_pu += s.i_in_pu;
    vmin = std::min(vmin, s.v_dc);
    vmax = std::max(vmax, s.v_dc);
    n += 1.0;
  }
  if (n > 0) {
    st.p_in /= n;
    st.p_batt /= n;
    st.i_in_pu /= n;
    st.v_dc_min = vmin;
    st.v_dc_max = vmax;
    st.valid = true;
  }
  return st;
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v;
  if (n <= 1) {
    v.push_back(lo);
    return v;
  }
  v.reserve(n);
  for (int i = 0; i < n; ++i)
    v.push_back(lo + (hi - lo) * static_cast<double>(i) / (n - 1));
  return v;
}

std::vector<double> logspace(double lo, double hi, int n) {
  std::vector<double> v;
  if (n <= 1 || lo == hi) {
    v.push_back(lo);
    return v;
  }
  v.reserve(n);
  const double llo = std::log(lo), lhi = std::log(hi);
  for (int i = 0; i < n; ++i)
    v.push_back(std::exp(llo + (lhi - llo) * static_cast<double>(i) / (n - 1)));
  return v;
}

int cmd_simulate(const CommonArgs& c, bool no_battery_comparison,
                 bool waveforms) {
  const Scenario scn = load_common(c);
  const fs::path out_dir(c.out_dir);
  std::vector<std::string> outputs;
  maybe_dump_resolved(c, scn, outputs);

  const InputImpedance zin = scn.input_impedance();
  SimOptions opt;
  opt.q_load = scn.q_load;
  opt.f_initial = scn.sod_initial;

  const SimResult main_run = simulate(scn.events, scn.sim, scn.cal, scn.table,
                                      scn.p_load, zin.r_in, scn.v_base, opt);
  {
    std::ostringstream os;
    write_timeseries_csv(os, main_run.series);
    const fs::path p = out_dir / "timeseries.csv";
    write_file(p, os.str());
    outputs.push_back(p.string());
  }
  if (waveforms) {
    std::ostringstream os;
    write_waveforms_csv(os, main_run.series, scn.filter.mains_freq, scn.v_base);
    const fs::path p = out_dir / "waveforms.csv";
    write_file(p, os.str());
    outputs.push_back(p.string());
  }

  SimResult no_batt_run;
  if (no_battery_comparison) {
    SimConfig cfg = scn.sim;
    cfg.battery_enabled = false;
    no_batt_run = simulate(scn.events, cfg, scn.cal, scn.table, scn.p_load,
                           zin.r_in, scn.v_base, opt);
    std::ostringstream os;
    write_timeseries_csv(os, no_batt_run.series);
    const fs::path p = out_dir / "timeseries_no_battery.csv";
    write_file(p, os.str());
    outputs.push_back(p.string());
  }

  if (c.gnuplot) {
    std::ostringstream os;
    os << "set datafile separator ','\n"
          "set key autotitle columnhead\n"
          "set multiplot layout 3,1\n"
          "plot 'timeseries.csv' using 1:4 with lines title 'v_dc [V]'";
    if (no_battery_comparison)
      os << ", 'timeseries_no_battery.csv' using 1:4 with lines title 'v_dc no battery'";
    os << "\nplot 'timeseries.csv' using 1:7 with lines title 'p_in [W]', "
          "'' using 1:9 with lines title 'p_batt [W]'\n"
          "plot 'timeseries.csv' using 1:10 with lines title 'i_in [pu]'\n"
          "unset multiplot\n";
    const fs::path p = out_dir / "plot_timeseries.gp";
    write_file(p, os.str());
    outputs.push_back(p.string());
  }

  Report rep("pbuf simulate");
  rep.line("scenario", c.scenario_path);
  if (c.seed) rep.line("seed", c.seed);
  rep.num("r_in_ohms", zin.r_in);
  rep.num("b_in_siemens", zin.b_in);
  if (!scn.events.empty()) {
    const SagEvent& ev = scn.events.front();
    rep.num("first_sag_pos_pu", ev.pos_pu);
    rep.num("first_sag_delta_p_watts",
            mismatch_power(scn.p_load, ev.pos_pu, zin.r_in, scn.v_base));
  }
  if (main_run.switch_in_time) {
    rep.num("switch_in_time_s", *main_run.switch_in_time);
    rep.num("rc_r_s_ohms", main_run.rc_used.r_s);
    rep.num("rc_r_p_ohms", main_run.rc_used.r_p);
    rep.num("rc_c_p_farads", main_run.rc_used.c_p);
    rep.num("battery_emf_volts", main_run.e_used);
    rep.num("v_dc_ss_target_volts", main_run.v_dc_ss_target);
    rep.num("peak_i_btr_amps", main_run.peak_i_btr);
  }
  if (!scn.events.empty()) {
    const PlateauStats st = plateau_stats(main_run.series, scn.events.front());
    if (st.valid) {
      rep.num("plateau_p_in_watts", st.p_in);
      rep.num("plateau_p_batt_watts", st.p_batt);
      rep.num("plateau_p_total_watts", st.p_in + st.p_batt);
      rep.num("plateau_i_in_pu", st.i_in_pu);
      rep.num("plateau_v_dc_min_volts", st.v_dc_min);
      rep.num("plateau_v_dc_max_volts", st.v_dc_max);
    }
  }
  rep.num("final_sod", main_run.final_f);
  rep.line("collapsed", main_run.collapsed ? "yes" : "no");
  if (main_run.collapsed) rep.num("collapse_time_s", main_run.collapse_time);
  if (no_battery_comparison) {
    rep.line("no_battery_collapsed", no_batt_run.collapsed ? "yes" : "no");
    if (no_batt_run.collapsed)
      rep.num("no_battery_collapse_time_s", no_batt_run.collapse_time);
  }

  const int code = (main_run.collapsed && scn.sim.battery_enabled)
                       ? kExitCollapse
                       : kExitOk;
  rep.finish(out_dir, outputs, code);
  return code;
}

int cmd_envelope(const CommonArgs& c, double f_min, double f_max, int f_steps,
                 double vg_min, double vg_max, int vg_steps) {
  const Scenario scn = load_common(c);
  const fs::path out_dir(c.out_dir);
  std::vector<std::string> outputs;
  maybe_dump_resolved(c, scn, outputs);

  if (f_steps < 1 || vg_steps < 1)
    throw config_error("envelope: grid steps must be >= 1");
  const std::vector<double> f_grid = linspace(f_min, f_max, f_steps);
  const std::vector<double> vg_grid = linspace(vg_min, vg_max, vg_steps);
  const InputImpedance zin = scn.input_impedance();

  const Envelope env = build_envelope(scn.cal, f_grid, vg_grid, scn.p_load,
                                      zin.r_in, scn.nominal_v_dc, scn.v_base);
  {
    std::ostringstream os;
    write_envelope_csv(os, env);
    const fs::path p = out_dir / "envelope.csv";
    write_file(p, os.str());
    outputs.push_back(p.string());
  }

  std::vector<RideThroughLimits> limits;
  limits.reserve(f_grid.size());
  for (double f : f_grid)
    limits.push_back(ride_through_limits(scn.cal, f, scn.p_load, zin.r_in,
                                         scn.nominal_v_dc, scn.v_base));
  {
    std::ostringstream os;
    write_limits_csv(os, f_grid, limits);
    const fs::path p = out_dir / "limits.csv";
    write_file(p, os.str());
    outputs.push_back(p.string());
  }

  if (c.gnuplot) {
    std::ostringstream os;
    os << "set datafile separator ','\n"
          "set key autotitle columnhead\n"
          "set xlabel 'f'\nset ylabel 'v_g [pu]'\n"
          "set view map\nsplot 'envelope.csv' using 1:2:3 with points "
          "palette title 'v_dc_ss [V]'\n";
    const fs::path p = out_dir / "plot_envelope.gp";
    write_file(p, os.str());
    outputs.push_back(p.string());
  }

  Report rep("pbuf envelope");
  rep.line("scenario", c.scenario_path);
  rep.num("lower_limit_volts", env.lower_limit);
  rep.num("upper_limit_volts", env.upper_limit);
  rep.num("f_first", f_grid.front());
  rep.num("vg_min_at_f_first", limits.front().vg_min);
  rep.num("vg_max_at_f_first", limits.front().vg_max);
  rep.finish(out_dir, outputs, kExitOk);
  return kExitOk;
}

int cmd_stability(const CommonArgs& c, double current) {
  const Scenario scn = load_common(c);
  const fs::path out_dir(c.out_dir);
  std::vector<std::string> outputs;
  maybe_dump_resolved(c, scn, outputs);

  const InputImpedance zin = scn.input_impedance();
  double delta_p = 0.0;
  if (!scn.events.empty())
    delta_p = mismatch_power(scn.p_load, scn.events.front().pos_pu, zin.r_in,
                             scn.v_base);
  if (current <= 0.0) {
    current = delta_p > 0.0 ? delta_p / scn.nominal_v_dc
                            : scn.table.min_current();
  }

  const RCParams rc = params_at_current(scn.table, current);
  const double e = emf_and_resistance(scn.cal, scn.sod_initial).e;
  const double v = solve_vdc(e, rc.total_resistance(), delta_p);
  const SteadyOperatingPoint op{v, vcp_ss(e, v, rc), delta_p};
  const LinearModel m = linearize(op, e, rc, scn.c_dc);
  const DampingReport damp = damping(m, rc);
  const PolePair pp = poles(m);
  const SensitivityReport sens = sensitivities(rc, scn.c_dc);

  {
    std::ostringstream os;
    os << "i_amps,delta_p,v_dc_ss,v_cp_ss,alpha,beta,gamma,zeta_exact,"
          "zeta_approx,s_slow,s_fast,dzeta_dRs,dzeta_dRp,dzeta_dCp\n";
    os << csv_num(current) << ',' << csv_num(delta_p) << ',' << csv_num(v)
       << ',' << csv_num(op.v_cp_ss) << ',' << csv_num(m.alpha) << ','
       << csv_num(m.beta) << ',' << csv_num(m.gamma) << ','
       << csv_num(damp.zeta_exact) << ',' << csv_num(damp.zeta_approx) << ','
       << csv_num(pp.s_slow) << ',' << csv_num(pp.s_fast) << ','
       << csv_num(sens.dzeta_dRs) << ',' << csv_num(sens.dzeta_dRp) << ','
       << csv_num(sens.dzeta_dCp) << '\n';
    const fs::path p = out_dir / "stability.csv";
    write_file(p, os.str());
    outputs.push_back(p.string());
  }

  Report rep("pbuf stability");
  rep.line("scenario", c.scenario_path);
  rep.num("discharge_current_amps", current);
  rep.num("delta_p_watts", delta_p);
  rep.num("v_dc_ss_volts", v);
  rep.num("v_cp_ss_volts", op.v_cp_ss);
  rep.num("alpha_per_s", m.alpha);
  rep.num("beta_per_s", m.beta);
  rep.num("gamma_per_s2", m.gamma);
  rep.line("stable", is_stable(m) ? "yes" : "no");
  rep.num("zeta_exact", damp.zeta_exact);
  rep.num("zeta_approx", damp.zeta_approx);
  rep.num("s_slow_per_s", pp.s_slow);
  rep.num("s_fast_per_s", pp.s_fast);
  rep.num("dzeta_dRs_per_ohm", sens.dzeta_dRs);
  rep.num("dzeta_dRp_per_ohm", sens.dzeta_dRp);
  rep.num("dzeta_dCp_per_farad", sens.dzeta_dCp);
  rep.finish(out_dir, outputs, kExitOk);
  return kExitOk;
}

int cmd_worst_current(const CommonArgs& c, double scan_lo, double scan_hi,
                      int points) {
  const Scenario scn = load_common(c);
  const fs::path out_dir(c.out_dir);
  std::vector<std::string> outputs;
  maybe_dump_resolved(c, scn, outputs);

  if (scan_lo <= 0.0) scan_lo = scn.table.min_current();
  if (scan_hi <= 0.0) scan_hi = scn.table.max_current();
  const WorstCase wc = worst_case_current(scn.table, scn.c_dc, scan_lo, scan_hi);

  const InputImpedance zin = scn.input_impedance();
  double delta_p = 0.0;
  if (!scn.events.empty())
    delta_p = mismatch_power(scn.p_load, scn.events.front().pos_pu, zin.r_in,
                             scn.v_base);
  const double e = emf_and_resistance(scn.cal, scn.sod_initial).e;

  std::vector<ZetaSweepRow> rows;
  for (double i : logspace(scan_lo, scan_hi, points)) {
    ZetaSweepRow row;
    row.current = i;
    const RCParams rc = params_at_current(scn.table, i);
    row.zeta = zeta_approx(rc, scn.c_dc);
    try {
      const double v = solve_vdc(e, rc.total_resistance(), delta_p);
      const SteadyOperatingPoint op{v, vcp_ss(e, v, rc), delta_p};
      row.s_slow = poles(linearize(op, e, rc, scn.c_dc)).s_slow;
    } catch (const infeasible_error&) {
      row.s_slow = std::numeric_limits<double>::quiet_NaN();
    }
    rows.push_back(row);
  }
  {
    std::ostringstream os;
    write_zeta_sweep_csv(os, rows);
    const fs::path p = out_dir / "zeta_sweep.csv";
    write_file(p, os.str());
    outputs.push_back(p.string());
  }

  if (c.gnuplot) {
    std::ostringstream os;
    os << "set datafile separator ','\n"
          "set key autotitle columnhead\n"
          "set logscale x\nset xlabel 'discharge current [A]'\n"
          "plot 'zeta_sweep.csv' using 1:2 with lines title 'zeta', "
          "'' using 1:(abs($3)) with lines title '|s_slow| [1/s]'\n";
    const fs::path p = out_dir / "plot_zeta.gp";
    write_file(p, os.str());
    outputs.push_back(p.string());
  }

  Report rep("pbuf worst-current");
  rep.line("scenario", c.scenario_path);
  rep.num("scan_lo_amps", scan_lo);
  rep.num("scan_hi_amps", scan_hi);
  rep.num("i_star_amps", wc.i_star);
  rep.num("zeta_star", wc.zeta_star);
  rep.finish(out_dir, outputs, kExitOk);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Power buffer ride-through simulator and analysis tool"};
  app.require_subcommand(1);

  CommonArgs sim_args;
  bool no_battery = false, waveforms = false;
  CLI::App* sim = app.add_subcommand(
      "simulate", "Time-domain sag response with battery back-up");
  add_common(sim, sim_args);
  sim->add_flag("--no-battery", no_battery,
                "Also run and export the no-battery comparison");
  sim->add_flag("--waveforms", waveforms,
                "Also export instantaneous PCC phase voltages");

  CommonArgs env_args;
  double f_min = 0.0, f_max = 0.8, vg_min = 0.0, vg_max = 2.0;
  int f_steps = 41, vg_steps = 81;
  CLI::App* env = app.add_subcommand(
      "envelope", "Steady-state ride-through envelope over (SOD, sag) grid");
  add_common(env, env_args);
  env->add_option("--f-min", f_min, "Lowest state of discharge");
  env->add_option("--f-max", f_max, "Highest state of discharge");
  env->add_option("--f-steps", f_steps, "Grid points along SOD");
  env->add_option("--vg-min", vg_min, "Lowest PCC voltage [pu]");
  env->add_option("--vg-max", vg_max, "Highest PCC voltage [pu]");
  env->add_option("--vg-steps", vg_steps, "Grid points along voltage");

  CommonArgs stab_args;
  double current = 0.0;
  CLI::App* stab = app.add_subcommand(
      "stability", "Small-signal report at one discharge current");
  add_common(stab, stab_args);
  stab->add_option("--current", current,
                   "Battery discharge current [A]; default estimates it from "
                   "the first sag event");

  CommonArgs worst_args;
  double scan_lo = 0.0, scan_hi = 0.0;
  int points = 200;
  CLI::App* worst = app.add_subcommand(
      "worst-current", "Damping-ratio sweep and worst discharge current");
  add_common(worst, worst_args);
  worst->add_option("--scan-lo", scan_lo, "Scan range low end [A]; default table span");
  worst->add_option("--scan-hi", scan_hi, "Scan range high end [A]; default table span");
  worst->add_option("--points", points, "Sweep CSV resolution");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(sim_args, no_battery, waveforms);
    if (env->parsed())
      return cmd_envelope(env_args, f_min, f_max, f_steps, vg_min, vg_max,
                          vg_steps);
    if (stab->parsed()) return cmd_stability(stab_args, current);
    if (worst->parsed())
      return cmd_worst_current(worst_args, scan_lo, scan_hi, points);
  } catch (const config_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const infeasible_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const domain_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitOk;
}
