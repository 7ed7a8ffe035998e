#ifndef PBUF_SMALL_SIGNAL_HPP
#define PBUF_SMALL_SIGNAL_HPP

#include <cmath>

#include "pbuf/battery.hpp"
#include "pbuf/errors.hpp"
#include "pbuf/golden_section.hpp"
#include "pbuf/steady_state.hpp"

namespace pbuf {

// Small-signal model of the buffer-battery pair around a steady operating
// point. The characteristic polynomial is s^2 + (alpha - beta) s - gamma -
// alpha*beta with
//   alpha = (r_s + r_p) / (r_s r_p c_p)
//   beta  = (e - 2 v_dc_ss - v_cp_ss) / (r_s c_dc v_dc_ss)
//   gamma = 1 / (r_s^2 c_dc c_p)
struct LinearModel {
  double alpha = 0.0;  // 1/s
  double beta = 0.0;   // 1/s
  double gamma = 0.0;  // 1/s^2
  double c_dc = 0.0;   // farads
  double v_dc_ss = 0.0;
  double v_cp_ss = 0.0;
  double e = 0.0;
};

inline LinearModel linearize(const SteadyOperatingPoint& op, double e,
                             const RCParams& rc, double c_dc) {
  rc.validate();
  if (!(c_dc > 0.0)) throw domain_error("linearize: c_dc must be positive");
  if (!(e > 0.0)) throw domain_error("linearize: e must be positive");
  if (op.v_dc_ss == 0.0)
    throw domain_error("linearize: singular at v_dc_ss = 0");
  LinearModel m;
  m.alpha = (rc.r_s + rc.r_p) / (rc.r_s * rc.r_p * rc.c_p);
  m.beta = (e - 2.0 * op.v_dc_ss - op.v_cp_ss) / (rc.r_s * c_dc * op.v_dc_ss);
  m.gamma = 1.0 / (rc.r_s * rc.r_s * c_dc * rc.c_p);
  m.c_dc = c_dc;
  m.v_dc_ss = op.v_dc_ss;
  m.v_cp_ss = op.v_cp_ss;
  m.e = e;
  return m;
}

// Routh-Hurwitz conditions for the second-order characteristic polynomial,
// evaluated numerically.
inline bool is_stable(const LinearModel& m) {
  return (m.alpha - m.beta > 0.0) && (-m.alpha * m.beta - m.gamma > 0.0);
}

// Damping ratio in battery parameters alone, valid when the EMF sits close
// to the steady link voltage:
//   zeta = 0.5 (r_s c + r_p c + r_p c_p) / sqrt(r_s r_p c c_p).
inline double zeta_approx(const RCParams& rc, double c_dc) {
  rc.validate();
  if (!(c_dc > 0.0)) throw domain_error("zeta_approx: c_dc must be positive");
  const double num = rc.r_s * c_dc + rc.r_p * c_dc + rc.r_p * rc.c_p;
  return 0.5 * num / std::sqrt(rc.r_s * rc.r_p * c_dc * rc.c_p);
}

struct DampingReport {
  double zeta_exact = 0.0;
  double zeta_approx = 0.0;
};

inline DampingReport damping(const LinearModel& m, const RCParams& rc) {
  if (!is_stable(m)) throw domain_error("damping: model is not stable");
  DampingReport rep;
  rep.zeta_exact = 0.5 * (m.alpha - m.beta) / std::sqrt(-m.alpha * m.beta - m.gamma);
  rep.zeta_approx = pbuf::zeta_approx(rc, m.c_dc);
  return rep;
}

// Both characteristic roots, real and negative on the stable branch:
//   s = 0.5 [-(alpha - beta) +- sqrt((alpha + beta)^2 + 4 gamma)].
// s_slow is the smaller-magnitude (dominant) root.
struct PolePair {
  double s_slow = 0.0;  // 1/s
  double s_fast = 0.0;  // 1/s
};

inline PolePair poles(const LinearModel& m) {
  if (!is_stable(m)) throw domain_error("poles: model is not stable");
  const double sum = m.alpha + m.beta;
  const double root = std::sqrt(sum * sum + 4.0 * m.gamma);
  PolePair p;
  p.s_slow = 0.5 * (-(m.alpha - m.beta) + root);
  p.s_fast = 0.5 * (-(m.alpha - m.beta) - root);
  return p;
}

// Partial derivatives of the battery-parameter damping ratio.
struct SensitivityReport {
  double dzeta_dRs = 0.0;  // 1/ohm
  double dzeta_dRp = 0.0;  // 1/ohm
  double dzeta_dCp = 0.0;  // 1/farad
};

inline SensitivityReport sensitivities(const RCParams& rc, double c_dc) {
  rc.validate();
  if (!(c_dc > 0.0)) throw domain_error("sensitivities: c_dc must be positive");
  const double d = std::sqrt(rc.r_s * rc.r_p * c_dc * rc.c_p);
  SensitivityReport rep;
  rep.dzeta_dRs = (rc.r_s * c_dc - rc.r_p * c_dc - rc.r_p * rc.c_p) / (4.0 * rc.r_s * d);
  rep.dzeta_dRp = (rc.r_p * c_dc + rc.r_p * rc.c_p - rc.r_s * c_dc) / (4.0 * rc.r_p * d);
  rep.dzeta_dCp = (rc.r_p * rc.c_p - rc.r_s * c_dc - rc.r_p * c_dc) / (4.0 * rc.c_p * d);
  return rep;
}

// Discharge current that maximizes the damping ratio over the scan range:
// the worst ride-through condition, since higher damping means the slowest
// link recovery. Golden-section search with a 0.1 A tolerance.
struct WorstCase {
  double i_star = 0.0;      // amps
  double zeta_star = 0.0;
};

inline WorstCase worst_case_current(const ParamTable& table, double c_dc,
                                    double scan_lo, double scan_hi) {
  if (table.empty()) throw config_error("worst_case_current: empty table");
  if (!(scan_lo > 0.0) || scan_hi < scan_lo)
    throw domain_error("worst_case_current: bad scan range");
  auto zeta_at = [&](double i) {
    return zeta_approx(params_at_current(table, i), c_dc);
  };
  const auto [i_star, zeta_star] = golden_section_max(zeta_at, scan_lo, scan_hi, 0.1);
  return {i_star, zeta_star};
}

inline WorstCase worst_case_current(const ParamTable& table, double c_dc) {
  return worst_case_current(table, c_dc, table.min_current(), table.max_current());
}

}  // namespace pbuf

#endif  // PBUF_SMALL_SIGNAL_HPP
