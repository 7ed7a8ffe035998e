#ifndef PBUF_SCENARIO_HPP
#define PBUF_SCENARIO_HPP

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pbuf/battery.hpp"
#include "pbuf/dynamics.hpp"
#include "pbuf/errors.hpp"
#include "pbuf/network.hpp"

namespace pbuf {

// Fully resolved simulation scenario. Keys in the file carry explicit SI
// units; unknown keys are rejected so a typo cannot silently fall back to a
// default.
struct Scenario {
  double v_base = 0.0;        // volts
  double p_load = 0.0;        // watts
  double q_load = 0.0;        // vars
  double nominal_v_dc = 0.0;  // volts
  FilterParams filter;
  double c_dc = 0.0;          // farads
  BatteryCalibration cal;
  double sod_initial = 0.0;
  ParamTable table;
  std::vector<SagEvent> events;
  SimConfig sim;

  InputImpedance input_impedance() const {
    return compute_input_impedance(v_base, p_load, q_load);
  }
};

namespace detail {

using json = nlohmann::ordered_json;

inline void reject_unknown_keys(const json& obj, const std::string& section,
                                std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (const char* k : allowed)
      if (item.key() == k) { ok = true; break; }
    if (!ok)
      throw config_error("scenario: unknown key '" + item.key() +
                         "' in section '" + section + "'");
  }
}

inline const json& require_section(const json& root, const char* name) {
  if (!root.contains(name))
    throw config_error(std::string("scenario: missing section '") + name + "'");
  return root.at(name);
}

inline double get_num(const json& obj, const std::string& section,
                      const char* key) {
  if (!obj.contains(key))
    throw config_error("scenario: missing key '" + std::string(key) +
                       "' in section '" + section + "'");
  if (!obj.at(key).is_number())
    throw config_error("scenario: key '" + std::string(key) + "' in section '" +
                       section + "' must be a number");
  return obj.at(key).get<double>();
}

inline double get_num_or(const json& obj, const std::string& section,
                         const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  return get_num(obj, section, key);
}

inline bool get_bool_or(const json& obj, const std::string& section,
                        const char* key, bool fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_boolean())
    throw config_error("scenario: key '" + std::string(key) + "' in section '" +
                       section + "' must be a boolean");
  return obj.at(key).get<bool>();
}

inline std::pair<int, int> line_column(const std::string& text,
                                       std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') { ++line; col = 1; }
    else ++col;
  }
  return {line, col};
}

}  // namespace detail

inline Scenario parse_scenario(const std::string& text,
                               const std::string& origin = "<string>") {
  using detail::json;
  json root;
  try {
    root = json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto [line, col] = detail::line_column(text, e.byte);
    std::ostringstream os;
    os << origin << ": parse error at line " << line << ", column " << col
       << ": " << e.what();
    throw config_error(os.str());
  }
  if (!root.is_object())
    throw config_error(origin + ": scenario root must be an object");
  detail::reject_unknown_keys(root, "<root>",
                              {"base", "filter", "dc_link", "battery",
                               "rc_table", "sag_events", "sim"});

  Scenario s;

  const json& base = detail::require_section(root, "base");
  detail::reject_unknown_keys(base, "base",
                              {"v_base_volts", "p_load_watts", "q_load_vars",
                               "nominal_v_dc_volts"});
  s.v_base = detail::get_num(base, "base", "v_base_volts");
  s.p_load = detail::get_num(base, "base", "p_load_watts");
  s.q_load = detail::get_num_or(base, "base", "q_load_vars", 0.0);
  s.nominal_v_dc = detail::get_num(base, "base", "nominal_v_dc_volts");

  const json& filter = detail::require_section(root, "filter");
  detail::reject_unknown_keys(filter, "filter",
                              {"resistance_ohms", "inductance_henries",
                               "mains_freq_rad_per_s"});
  s.filter.resistance = detail::get_num_or(filter, "filter", "resistance_ohms", 0.0);
  s.filter.inductance = detail::get_num(filter, "filter", "inductance_henries");
  s.filter.mains_freq = detail::get_num(filter, "filter", "mains_freq_rad_per_s");

  const json& dc = detail::require_section(root, "dc_link");
  detail::reject_unknown_keys(dc, "dc_link", {"c_dc_farads"});
  s.c_dc = detail::get_num(dc, "dc_link", "c_dc_farads");

  const json& bat = detail::require_section(root, "battery");
  detail::reject_unknown_keys(bat, "battery",
                              {"e0_volts", "k_volts", "r0_ohms", "k_r_ohms",
                               "capacity_amp_hours", "sod_initial", "sod_min",
                               "sod_max"});
  s.cal.e0 = detail::get_num(bat, "battery", "e0_volts");
  s.cal.k = detail::get_num(bat, "battery", "k_volts");
  s.cal.r0 = detail::get_num(bat, "battery", "r0_ohms");
  s.cal.k_r = detail::get_num(bat, "battery", "k_r_ohms");
  s.cal.capacity = detail::get_num(bat, "battery", "capacity_amp_hours");
  s.cal.f_min = detail::get_num_or(bat, "battery", "sod_min", 0.0);
  s.cal.f_max = detail::get_num_or(bat, "battery", "sod_max", 0.8);
  s.sod_initial = detail::get_num_or(bat, "battery", "sod_initial", 0.0);
  s.cal.validate();
  if (s.sod_initial < s.cal.f_min || s.sod_initial > s.cal.f_max)
    throw config_error("scenario: sod_initial outside [sod_min, sod_max]");

  const json& table = detail::require_section(root, "rc_table");
  if (!table.is_array() || table.empty())
    throw config_error("scenario: rc_table must be a non-empty array");
  std::vector<ParamTable::Entry> entries;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const json& row = table.at(i);
    const std::string section = "rc_table[" + std::to_string(i) + "]";
    detail::reject_unknown_keys(row, section,
                                {"discharge_current_amps", "r_s_ohms",
                                 "r_p_ohms", "c_p_farads"});
    ParamTable::Entry e;
    e.current = detail::get_num(row, section, "discharge_current_amps");
    e.rc.r_s = detail::get_num(row, section, "r_s_ohms");
    e.rc.r_p = detail::get_num(row, section, "r_p_ohms");
    e.rc.c_p = detail::get_num(row, section, "c_p_farads");
    entries.push_back(e);
  }
  s.table = ParamTable(std::move(entries));

  if (root.contains("sag_events")) {
    const json& events = root.at("sag_events");
    if (!events.is_array())
      throw config_error("scenario: sag_events must be an array");
    for (std::size_t i = 0; i < events.size(); ++i) {
      const json& row = events.at(i);
      const std::string section = "sag_events[" + std::to_string(i) + "]";
      detail::reject_unknown_keys(row, section,
                                  {"t_start_seconds", "duration_seconds",
                                   "pos_pu", "neg_pu"});
      SagEvent ev;
      ev.t_start = detail::get_num(row, section, "t_start_seconds");
      ev.duration = detail::get_num(row, section, "duration_seconds");
      ev.pos_pu = detail::get_num(row, section, "pos_pu");
      ev.neg_pu = detail::get_num_or(row, section, "neg_pu", 0.0);
      ev.validate();
      s.events.push_back(ev);
    }
  }

  const json& sim = detail::require_section(root, "sim");
  detail::reject_unknown_keys(sim, "sim",
                              {"dt_seconds", "t_end_seconds",
                               "detect_threshold_pu", "confirm_delay_seconds",
                               "dc_band_fraction", "battery_enabled"});
  s.sim.dt = detail::get_num_or(sim, "sim", "dt_seconds", 50e-6);
  s.sim.t_end = detail::get_num(sim, "sim", "t_end_seconds");
  s.sim.detect_threshold = detail::get_num_or(sim, "sim", "detect_threshold_pu", 0.95);
  s.sim.confirm_delay = detail::get_num_or(sim, "sim", "confirm_delay_seconds", 2e-3);
  s.sim.dc_band = detail::get_num_or(sim, "sim", "dc_band_fraction", 0.10);
  s.sim.battery_enabled = detail::get_bool_or(sim, "sim", "battery_enabled", true);
  s.sim.nominal_v_dc = s.nominal_v_dc;
  s.sim.c_dc = s.c_dc;
  s.sim.validate();

  return s;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("scenario: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path);
}

// Serializes the fully resolved configuration; parsing the output yields an
// identical scenario.
inline std::string dump_scenario(const Scenario& s) {
  using detail::json;
  json root;
  root["base"] = {{"v_base_volts", s.v_base},
                  {"p_load_watts", s.p_load},
                  {"q_load_vars", s.q_load},
                  {"nominal_v_dc_volts", s.nominal_v_dc}};
  root["filter"] = {{"resistance_ohms", s.filter.resistance},
                    {"inductance_henries", s.filter.inductance},
                    {"mains_freq_rad_per_s", s.filter.mains_freq}};
  root["dc_link"] = {{"c_dc_farads", s.c_dc}};
  root["battery"] = {{"e0_volts", s.cal.e0},
                     {"k_volts", s.cal.k},
                     {"r0_ohms", s.cal.r0},
                     {"k_r_ohms", s.cal.k_r},
                     {"capacity_amp_hours", s.cal.capacity},
                     {"sod_initial", s.sod_initial},
                     {"sod_min", s.cal.f_min},
                     {"sod_max", s.cal.f_max}};
  root["rc_table"] = json::array();
  for (const auto& e : s.table.entries())
    root["rc_table"].push_back({{"discharge_current_amps", e.current},
                                {"r_s_ohms", e.rc.r_s},
                                {"r_p_ohms", e.rc.r_p},
                                {"c_p_farads", e.rc.c_p}});
  root["sag_events"] = json::array();
  for (const auto& ev : s.events)
    root["sag_events"].push_back({{"t_start_seconds", ev.t_start},
                                  {"duration_seconds", ev.duration},
                                  {"pos_pu", ev.pos_pu},
                                  {"neg_pu", ev.neg_pu}});
  root["sim"] = {{"dt_seconds", s.sim.dt},
                 {"t_end_seconds", s.sim.t_end},
                 {"detect_threshold_pu", s.sim.detect_threshold},
                 {"confirm_delay_seconds", s.sim.confirm_delay},
                 {"dc_band_fraction", s.sim.dc_band},
                 {"battery_enabled", s.sim.battery_enabled}};
  return root.dump(2) + "\n";
}

}  // namespace pbuf

#endif  // PBUF_SCENARIO_HPP
