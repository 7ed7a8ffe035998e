#ifndef PBUF_BATTERY_HPP
#define PBUF_BATTERY_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "pbuf/errors.hpp"

namespace pbuf {

// Thevenin branch of the lead-acid bank: series resistance r_s in front of
// the plate contact resistance r_p parallel with the plate capacitance c_p.
struct RCParams {
  double r_s = 0.0;  // ohms
  double r_p = 0.0;  // ohms
  double c_p = 0.0;  // farads

  double total_resistance() const { return r_s + r_p; }

  void validate() const {
    if (!(r_s > 0.0 && r_p > 0.0 && c_p > 0.0))
      throw domain_error("RCParams: r_s, r_p, c_p must all be positive");
  }
};

// Universal lead-acid model constants: EMF and total resistance affine in the
// state of discharge f, e = e0 - k*f and r_b = r0 - k_r*f. k_r is normally
// negative (resistance grows as the bank discharges).
struct BatteryCalibration {
  double e0 = 0.0;        // volts at f = 0
  double k = 0.0;         // volts per unit SOD
  double r0 = 0.0;        // ohms at f = 0
  double k_r = 0.0;       // ohms per unit SOD
  double capacity = 0.0;  // ampere-hours
  double f_min = 0.0;
  double f_max = 0.8;

  void validate() const {
    if (!(e0 > 0.0)) throw domain_error("BatteryCalibration: e0 must be positive");
    if (!(r0 > 0.0)) throw domain_error("BatteryCalibration: r0 must be positive");
    if (!(capacity > 0.0)) throw domain_error("BatteryCalibration: capacity must be positive");
    if (!(f_min < f_max)) throw domain_error("BatteryCalibration: empty SOD range");
    for (double f : {f_min, f_max}) {
      if (!(e0 - k * f > 0.0 && r0 - k_r * f > 0.0))
        throw domain_error("BatteryCalibration: EMF or resistance non-positive inside SOD range");
    }
  }
};

struct EmfResistance {
  double e = 0.0;    // volts
  double r_b = 0.0;  // ohms, total internal resistance
};

inline EmfResistance emf_and_resistance(const BatteryCalibration& cal, double f) {
  if (!(f >= cal.f_min && f <= cal.f_max))
    throw domain_error("emf_and_resistance: SOD outside calibrated range");
  const EmfResistance out{cal.e0 - cal.k * f, cal.r0 - cal.k_r * f};
  if (!(out.e > 0.0 && out.r_b > 0.0))
    throw domain_error("emf_and_resistance: calibration gives non-positive EMF or resistance");
  return out;
}

// RC parameters tabulated against discharge current, strictly increasing in
// current. Lookups interpolate linearly in log(current) and clamp to the end
// entries outside the tabulated span.
class ParamTable {
 public:
  struct Entry {
    double current = 0.0;  // amps
    RCParams rc;
  };

  ParamTable() = default;
  ParamTable(std::initializer_list<Entry> entries)
      : ParamTable(std::vector<Entry>(entries)) {}
  explicit ParamTable(std::vector<Entry> entries) : entries_(std::move(entries)) {
    if (entries_.empty()) throw config_error("ParamTable: at least one entry required");
    double prev = 0.0;
    for (const Entry& e : entries_) {
      if (!(e.current > prev))
        throw config_error("ParamTable: currents must be positive and strictly increasing");
      e.rc.validate();
      prev = e.current;
    }
  }

  const std::vector<Entry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  double min_current() const { return entries_.front().current; }
  double max_current() const { return entries_.back().current; }

 private:
  std::vector<Entry> entries_;
};

inline RCParams params_at_current(const ParamTable& table, double i_discharge) {
  if (table.empty()) throw config_error("params_at_current: empty table");
  if (!(i_discharge > 0.0))
    throw domain_error("params_at_current: discharge current must be positive");
  const auto& e = table.entries();
  if (i_discharge <= e.front().current) return e.front().rc;
  if (i_discharge >= e.back().current) return e.back().rc;
  auto hi = std::upper_bound(e.begin(), e.end(), i_discharge,
                             [](double i, const ParamTable::Entry& ent) { return i < ent.current; });
  auto lo = hi - 1;
  const double w = (std::log(i_discharge) - std::log(lo->current)) /
                   (std::log(hi->current) - std::log(lo->current));
  auto lerp = [w](double a, double b) { return a + w * (b - a); };
  return {lerp(lo->rc.r_s, hi->rc.r_s), lerp(lo->rc.r_p, hi->rc.r_p),
          lerp(lo->rc.c_p, hi->rc.c_p)};
}

// Apportions a total internal resistance r_b into the series/contact split of
// the Thevenin branch, using the r_s : r_p ratio the table exhibits at the
// given discharge current. c_p comes straight from the table.
inline RCParams split_resistance(double r_b, const ParamTable& table,
                                 double i_discharge) {
  if (!(r_b > 0.0)) throw domain_error("split_resistance: r_b must be positive");
  if (table.empty()) throw config_error("split_resistance: empty table");
  const RCParams at = params_at_current(table, i_discharge);
  const double ratio = at.r_s / (at.r_s + at.r_p);
  return {ratio * r_b, (1.0 - ratio) * r_b, at.c_p};
}

// Dynamic battery quantities carried between steps. i_btr is the last branch
// current, diagnostic only.
struct BatteryState {
  double f = 0.0;     // state of discharge, 0 = full
  double v_cp = 0.0;  // volts across c_p
  double i_btr = 0.0; // amps
};

// Coulomb counting: positive branch current discharges the bank.
inline BatteryState update_sod(const BatteryState& state, double i_btr,
                               double dt, const BatteryCalibration& cal) {
  if (!(dt > 0.0)) throw domain_error("update_sod: dt must be positive");
  BatteryState out = state;
  out.f = state.f + i_btr * dt / (3600.0 * cal.capacity);
  out.i_btr = i_btr;
  if (out.f < cal.f_min || out.f > cal.f_max)
    throw infeasible_error("update_sod: battery depleted (SOD left calibrated range)");
  return out;
}

}  // namespace pbuf

#endif  // PBUF_BATTERY_HPP
