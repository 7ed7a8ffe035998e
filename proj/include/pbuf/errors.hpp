#ifndef PBUF_ERRORS_HPP
#define PBUF_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace pbuf {

struct error : std::runtime_error {
  explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

// Argument outside the operation's domain (non-positive voltage, SOD outside
// the calibrated range, degenerate circuit, unstable linear model, ...).
struct domain_error : error {
  explicit domain_error(const std::string& msg) : error(msg) {}
};

// Malformed configuration: scenario files, parameter tables, step sizes.
struct config_error : error {
  explicit config_error(const std::string& msg) : error(msg) {}
};

// Operating point the battery cannot sustain: power demand beyond the
// quadratic feasibility boundary, or a depleted state of discharge.
struct infeasible_error : error {
  explicit infeasible_error(const std::string& msg) : error(msg) {}
};

// DC link fell below the guard floor while integrating.
struct collapse_error : error {
  explicit collapse_error(const std::string& msg) : error(msg) {}
};

}  // namespace pbuf

#endif  // PBUF_ERRORS_HPP
