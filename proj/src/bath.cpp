#include "mstnpi/bath.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace mstnpi {

namespace {

constexpr double kRelTol = 1e-10;
// e^{-60} ~ 1e-26: beyond this multiple of omega_c the Ohmic weight is gone.
constexpr double kCutoffMultiple = 60.0;

// w * coth(beta w / 2), continuous at w = 0.
double w_coth(double w, double beta) {
  const double x = beta * w / 2.0;
  if (std::abs(x) < 1e-6) return 2.0 / beta * (1.0 + x * x / 3.0);
  return w / std::tanh(x);
}

// sin(x)/x and (x - sin x)/x^3 with series near zero.
double sinc(double x) {
  if (std::abs(x) < 1e-4) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}
double x_minus_sin_over_cube(double x) {
  if (std::abs(x) < 1e-2) {
    const double x2 = x * x;
    return 1.0 / 6.0 - x2 / 120.0 + x2 * x2 / 5040.0 - x2 * x2 * x2 / 362880.0;
  }
  return (x - std::sin(x)) / (x * x * x);
}

struct Kernel {
  // Weights multiplying coth and -i in the frequency integral, as functions of w.
  std::function<double(double)> even;
  std::function<double(double)> odd;
};

// (1/pi) int J(w) [coth(beta w/2) even(w) - i odd(w)] dw for the given kernel.
cplx frequency_integral(const BathModel& bath, const Kernel& k, double oscillation_scale) {
  if (bath.spectral == SpectralKind::Discrete) {
    cplx sum = 0.0;
    for (const auto& m : bath.modes) {
      const double pref = m.coupling * m.coupling / (2.0 * m.frequency);
      sum += pref * cplx(w_coth(m.frequency, bath.beta) / m.frequency * k.even(m.frequency),
                         -k.odd(m.frequency));
    }
    return sum;
  }
  if (bath.xi == 0.0) return 0.0;
  using boost::math::quadrature::gauss_kronrod;
  // J(w)/w for the Ohmic form
  auto j_over_w = [&](double w) { return std::numbers::pi / 2.0 * bath.xi * std::exp(-w / bath.omega_c); };
  auto re_f = [&](double w) { return j_over_w(w) * w_coth(w, bath.beta) * k.even(w); };
  auto im_f = [&](double w) { return -j_over_w(w) * w * k.odd(w); };
  const double upper = kCutoffMultiple * bath.omega_c;
  // panels short enough that each holds at most a couple of oscillations
  double panel = bath.omega_c;
  if (oscillation_scale > 0.0) panel = std::min(panel, 4.0 / oscillation_scale);
  const auto panels = static_cast<std::size_t>(std::ceil(upper / panel));
  double re = 0.0, im = 0.0, re_err = 0.0, im_err = 0.0, re_abs = 0.0, im_abs = 0.0;
  for (std::size_t p = 0; p < panels; ++p) {
    const double a = upper * static_cast<double>(p) / static_cast<double>(panels);
    const double b = upper * static_cast<double>(p + 1) / static_cast<double>(panels);
    double e1 = 0.0, e2 = 0.0, l1 = 0.0, l2 = 0.0;
    re += gauss_kronrod<double, 31>::integrate(re_f, a, b, 12, kRelTol * 1e-2, &e1, &l1);
    im += gauss_kronrod<double, 31>::integrate(im_f, a, b, 12, kRelTol * 1e-2, &e2, &l2);
    re_err += e1;
    im_err += e2;
    re_abs += l1;
    im_abs += l2;
  }
  const double scale = std::max(re_abs + im_abs, 1e-300);
  const double achieved = (re_err + im_err) / scale;
  if (achieved > kRelTol) {
    std::ostringstream msg;
    msg << "bath quadrature did not converge (achieved relative error " << achieved << ", wanted "
        << kRelTol << ")";
    throw ParameterError(msg.str());
  }
  return cplx(re, im) / std::numbers::pi;
}

}  // namespace

cplx bath_correlation(const BathModel& bath, double t) {
  if (!(t >= 0.0)) throw ParameterError("bath_correlation: need t >= 0");
  bath.validate();
  Kernel k{[t](double w) { return std::cos(w * t); }, [t](double w) { return std::sin(w * t); }};
  return frequency_integral(bath, k, t);
}

cplx window_pair_integral(const BathModel& bath, const TimeWindow& later, const TimeWindow& earlier) {
  bath.validate();
  const double gap = later.center - earlier.center;
  if (gap < (later.width + earlier.width) / 2.0 - 1e-12)
    throw ParameterError("window_pair_integral: windows overlap or are out of order");
  const double h1 = later.width, h2 = earlier.width;
  // int int e^{i w (t' - t'')} = e^{i w gap} * h1 sinc(w h1/2) * h2 sinc(w h2/2)
  auto envelope = [h1, h2](double w) { return h1 * sinc(w * h1 / 2.0) * h2 * sinc(w * h2 / 2.0); };
  Kernel k{[=](double w) { return envelope(w) * std::cos(w * gap); },
           [=](double w) { return envelope(w) * std::sin(w * gap); }};
  return frequency_integral(bath, k, gap + (h1 + h2) / 2.0);
}

cplx window_self_integral(const BathModel& bath, const TimeWindow& window) {
  bath.validate();
  const double h = window.width;
  // real part 2 sin^2(w h/2)/w^2, imaginary part (w h - sin w h)/w^2
  Kernel k{[h](double w) {
             const double s = h * sinc(w * h / 2.0);
             return s * s / 2.0;
           },
           [h](double w) { return w * h * h * h * x_minus_sin_over_cube(w * h); }};
  return frequency_integral(bath, k, h);
}

}  // namespace mstnpi
