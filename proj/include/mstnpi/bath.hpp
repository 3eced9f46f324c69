#pragma once

#include "mstnpi/model.hpp"

namespace mstnpi {

/// Bath response function
///   C(t) = (1/pi) int_0^inf dw J(w) [coth(beta w / 2) cos(w t) - i sin(w t)],
/// by adaptive quadrature for the Ohmic form and as a finite sum for discrete
/// modes. Throws ParameterError for t < 0 and when the quadrature misses its
/// tolerance (the message carries the achieved error).
cplx bath_correlation(const BathModel& bath, double t);

/// A time window [center - width/2, center + width/2] attached to one point of
/// the discretized path.
struct TimeWindow {
  double center;
  double width;
};

/// int_{w1} dt' int_{w2} dt'' C(t' - t''), for windows with w1 entirely later
/// than w2.
cplx window_pair_integral(const BathModel& bath, const TimeWindow& later, const TimeWindow& earlier);

/// int_{w} dt' int_{w, t'' <= t'} dt'' C(t' - t'').
cplx window_self_integral(const BathModel& bath, const TimeWindow& window);

}  // namespace mstnpi
