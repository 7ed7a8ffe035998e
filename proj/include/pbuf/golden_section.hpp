#ifndef PBUF_GOLDEN_SECTION_HPP
#define PBUF_GOLDEN_SECTION_HPP

#include <cmath>
#include <utility>

namespace pbuf {

// Golden-section maximizer on [lo, hi]. Returns (argmax, max). Unimodality is
// the caller's business; for monotone functions the search walks to the
// better endpoint, which is also compared explicitly before returning.
template <class F>
std::pair<double, double> golden_section_max(F&& f, double lo, double hi,
                                             double tol) {
  if (hi < lo) std::swap(lo, hi);
  if (hi - lo <= tol) {
    const double mid = 0.5 * (lo + hi);
    return {mid, f(mid)};
  }
  const double inv_phi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  double best_x = 0.5 * (a + b);
  double best_f = f(best_x);
  for (double x : {lo, hi}) {
    const double fx = f(x);
    if (fx > best_f) {
      best_f = fx;
      best_x = x;
    }
  }
  return {best_x, best_f};
}

}  // namespace pbuf

#endif  // PBUF_GOLDEN_SECTION_HPP
