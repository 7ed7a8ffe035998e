#ifndef PBUF_PHASOR_HPP
#define PBUF_PHASOR_HPP

#include <array>
#include <cmath>
#include <complex>

#include "pbuf/errors.hpp"

namespace pbuf {

// RMS phasor, cosine convention: v(t) = sqrt(2) * |V| * cos(w*t + angle).
struct Phasor {
  double re = 0.0;
  double im = 0.0;

  static Phasor from_polar(double mag, double angle) {
    return {mag * std::cos(angle), mag * std::sin(angle)};
  }
  double mag() const { return std::hypot(re, im); }
  double angle() const { return std::atan2(im, re); }
  std::complex<double> c() const { return {re, im}; }

  bool finite() const { return std::isfinite(re) && std::isfinite(im); }
};

// Positive/negative sequence pair, magnitudes in per-unit of base_voltage.
struct SequenceVoltage {
  double pos_mag = 0.0;
  double pos_angle = 0.0;
  double neg_mag = 0.0;
  double neg_angle = 0.0;
  double base_voltage = 1.0;
};

namespace detail {
// Rotation operator a = 1 /_ 120deg.
inline std::complex<double> fortescue_a() {
  constexpr double two_thirds_pi = 2.0943951023931953;
  return {std::cos(two_thirds_pi), std::sin(two_thirds_pi)};
}
}  // namespace detail

// Fortescue transform of a three-phase phasor set. The zero-sequence set is
// discarded (three-wire system). Inputs and base must share the same unit.
inline SequenceVoltage sequence_decompose(const Phasor& phase_a,
                                          const Phasor& phase_b,
                                          const Phasor& phase_c,
                                          double base_voltage = 1.0) {
  if (!phase_a.finite() || !phase_b.finite() || !phase_c.finite())
    throw domain_error("sequence_decompose: non-finite phasor");
  if (!(base_voltage > 0.0))
    throw domain_error("sequence_decompose: base_voltage must be positive");

  const std::complex<double> a = detail::fortescue_a();
  const std::complex<double> a2 = a * a;
  const std::complex<double> va = phase_a.c(), vb = phase_b.c(), vc = phase_c.c();
  const std::complex<double> pos = (va + a * vb + a2 * vc) / 3.0;
  const std::complex<double> neg = (va + a2 * vb + a * vc) / 3.0;

  SequenceVoltage seq;
  seq.pos_mag = std::abs(pos) / base_voltage;
  seq.pos_angle = (seq.pos_mag > 0.0) ? std::arg(pos) : 0.0;
  seq.neg_mag = std::abs(neg) / base_voltage;
  seq.neg_angle = (seq.neg_mag > 0.0) ? std::arg(neg) : 0.0;
  seq.base_voltage = base_voltage;
  return seq;
}

// Instantaneous three-phase voltages of the two sequence sets at mains
// frequency omega [rad/s]. Phase order a-b-c for the positive set, reversed
// for the negative set.
inline std::array<double, 3> synth_waveforms(const SequenceVoltage& seq,
                                             double omega, double t) {
  if (!(t >= 0.0)) throw domain_error("synth_waveforms: t must be >= 0");
  if (!(omega > 0.0)) throw domain_error("synth_waveforms: omega must be positive");

  constexpr double sqrt2 = 1.4142135623730951;
  constexpr double two_thirds_pi = 2.0943951023931953;
  const double wt = omega * t;
  const double amp = sqrt2 * seq.base_voltage;

  std::array<double, 3> v{};
  for (int k = 0; k < 3; ++k) {
    const double shift = k * two_thirds_pi;
    v[k] = amp * (seq.pos_mag * std::cos(wt + seq.pos_angle - shift) +
                  seq.neg_mag * std::cos(wt + seq.neg_angle + shift));
  }
  return v;
}

}  // namespace pbuf

#endif  // PBUF_PHASOR_HPP
