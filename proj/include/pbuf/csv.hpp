#ifndef PBUF_CSV_HPP
#define PBUF_CSV_HPP

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "pbuf/dynamics.hpp"
#include "pbuf/phasor.hpp"
#include "pbuf/steady_state.hpp"

namespace pbuf {

// Deterministic number rendering so identical runs emit byte-identical files.
inline std::string csv_num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline void write_timeseries_csv(std::ostream& os, const TimeSeries& ts) {
  os << "t,v_g_pos,v_g_neg,v_dc,v_cp,i_btr,p_in,q_in,p_batt,i_in_pu,mode\n";
  for (const Sample& s : ts.samples) {
    os << csv_num(s.t) << ',' << csv_num(s.v_g_pos) << ',' << csv_num(s.v_g_neg)
       << ',' << csv_num(s.v_dc) << ',' << csv_num(s.v_cp) << ','
       << csv_num(s.i_btr) << ',' << csv_num(s.p_in) << ',' << csv_num(s.q_in)
       << ',' << csv_num(s.p_batt) << ',' << csv_num(s.i_in_pu) << ','
       << static_cast<int>(s.mode) << '\n';
  }
}

// Instantaneous PCC phase voltages reconstructed from the recorded sequence
// magnitudes (sequence angles taken as zero).
inline void write_waveforms_csv(std::ostream& os, const TimeSeries& ts,
                                double omega, double v_base) {
  os << "t,v_a,v_b,v_c\n";
  for (const Sample& s : ts.samples) {
    SequenceVoltage seq;
    seq.pos_mag = s.v_g_pos;
    seq.neg_mag = s.v_g_neg;
    seq.base_voltage = v_base;
    const auto v = synth_waveforms(seq, omega, s.t);
    os << csv_num(s.t) << ',' << csv_num(v[0]) << ',' << csv_num(v[1]) << ','
       << csv_num(v[2]) << '\n';
  }
}

inline void write_envelope_csv(std::ostream& os, const Envelope& env) {
  os << "f,v_g_pu,v_dc_ss,feasible\n";
  for (std::size_t fi = 0; fi < env.f_grid.size(); ++fi) {
    for (std::size_t vi = 0; vi < env.vg_grid.size(); ++vi) {
      const double v = env.v_dc_surface[fi][vi];
      os << csv_num(env.f_grid[fi]) << ',' << csv_num(env.vg_grid[vi]) << ','
         << csv_num(v) << ',' << (env.feasible(fi, vi) ? 1 : 0) << '\n';
    }
  }
}

inline void write_limits_csv(std::ostream& os,
                             const std::vector<double>& f_grid,
                             const std::vector<RideThroughLimits>& limits) {
  os << "f,vg_min,vg_max\n";
  for (std::size_t i = 0; i < f_grid.size(); ++i)
    os << csv_num(f_grid[i]) << ',' << csv_num(limits[i].vg_min) << ','
       << csv_num(limits[i].vg_max) << '\n';
}

struct ZetaSweepRow {
  double current = 0.0;
  double zeta = 0.0;
  double s_slow = 0.0;
};

inline void write_zeta_sweep_csv(std::ostream& os,
                                 const std::vector<ZetaSweepRow>& rows) {
  os << "i_amps,zeta,s_slow\n";
  for (const auto& r : rows)
    os << csv_num(r.current) << ',' << csv_num(r.zeta) << ','
       << csv_num(r.s_slow) << '\n';
}

}  // namespace pbuf

#endif  // PBUF_CSV_HPP
