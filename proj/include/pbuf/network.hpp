#ifndef PBUF_NETWORK_HPP
#define PBUF_NETWORK_HPP

#include <cmath>

#include "pbuf/errors.hpp"

namespace pbuf {

// Buffer-load combination seen from the PCC, parallel form. The reactive
// branch is stored as susceptance b_in = 1/X_in so the unity-power-factor
// case (X_in infinite) is the exact finite value b_in = 0.
struct InputImpedance {
  double r_in = 0.0;  // ohms
  double b_in = 0.0;  // siemens
};

// Same impedance in series form, filter reactance already folded in.
struct SeriesImpedance {
  double r1 = 0.0;  // ohms
  double x1 = 0.0;  // ohms
};

// Series RL input filter. The resistance is carried for reporting but the
// impedance conversions neglect it; it is small against the reactance at
// mains frequency.
struct FilterParams {
  double resistance = 0.0;  // ohms
  double inductance = 0.0;  // henries
  double mains_freq = 0.0;  // rad/s

  double reactance() const { return mains_freq * inductance; }
};

// Equivalent input impedance of the buffer-load combination from the pre-sag
// operating point: r_in = v_g0^2 / p_l, b_in = q_l / v_g0^2.
inline InputImpedance compute_input_impedance(double v_g0, double p_l,
                                              double q_l) {
  if (!(v_g0 > 0.0)) throw domain_error("compute_input_impedance: v_g0 must be positive");
  if (!(p_l > 0.0)) throw domain_error("compute_input_impedance: p_l must be positive");
  if (q_l < 0.0) throw domain_error("compute_input_impedance: q_l must be >= 0");
  const double v2 = v_g0 * v_g0;
  return {v2 / p_l, q_l / v2};
}

// Parallel-to-series conversion including the filter reactance X:
//   r1 = R_in X_in^2 / (R_in^2 + X_in^2),  x1 = R_in^2 X_in / (R_in^2 + X_in^2) - X.
// Written in terms of u = R_in * b_in so b_in = 0 is the analytic limit
// X_in -> infinity (r1 = R_in, x1 = -X).
inline SeriesImpedance parallel_to_series(const InputImpedance& z,
                                          const FilterParams& filter) {
  if (!(z.r_in > 0.0)) throw domain_error("parallel_to_series: r_in must be positive");
  if (z.b_in < 0.0) throw domain_error("parallel_to_series: b_in must be >= 0");
  const double u = z.r_in * z.b_in;
  const double denom = 1.0 + u * u;
  const double r1 = z.r_in / denom;
  const double x1 = z.r_in * u / denom - filter.reactance();
  return {r1, x1};
}

// d/q components of the buffer terminal voltage with the PCC voltage as the
// reference phasor: the voltage divider (r1 + j x1) / (r1 + j (x + x1))
// expanded into real and imaginary parts.
struct DqVoltage {
  double v_wd = 0.0;
  double v_wq = 0.0;
};

inline DqVoltage buffer_voltage_dq(double v_g, const SeriesImpedance& s,
                                   double x_filter) {
  const double xt = x_filter + s.x1;
  const double denom = s.r1 * s.r1 + xt * xt;
  if (!(denom > 0.0))
    throw domain_error("buffer_voltage_dq: degenerate circuit (zero divider)");
  const double v_wd = v_g * (s.r1 * s.r1 + s.x1 * xt) / denom;
  const double v_wq = -v_g * s.r1 * x_filter / denom;
  return {v_wd, v_wq};
}

// Maximum real power the source can push into the constant-impedance
// buffer-load combination, reached at unity power factor: v_g^2 / r_in.
inline double max_power(double v_g, double r_in) {
  if (!(r_in > 0.0)) throw domain_error("max_power: r_in must be positive");
  return v_g * v_g / r_in;
}

}  // namespace pbuf

#endif  // PBUF_NETWORK_HPP
