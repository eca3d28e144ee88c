#pragma once

#include <array>
#include <complex>
#include <string>
#include <string_view>
#include <vector>

namespace pgff {

/// Continuous-time section num(s)/den(s); coefficients in descending powers
/// {s^2, s^1, s^0}.
struct ContinuousSection {
  std::array<double, 3> num{};
  std::array<double, 3> den{};

  std::complex<double> response(std::complex<double> s) const;
};

/// Discrete section (b0 + b1 q^-1 + b2 q^-2) / (1 + a1 q^-1 + a2 q^-2).
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;

  std::complex<double> response(std::complex<double> z) const;
  bool operator==(const Biquad&) const = default;
};

/// Cascade of biquads in transposed direct form II.
class LtiFilter {
 public:
  LtiFilter() = default;
  explicit LtiFilter(std::vector<Biquad> sections);

  /// Feeds one input sample, returns one output sample.
  double step(double x);
  void reset();

  const std::vector<Biquad>& sections() const noexcept { return sections_; }

  /// H(e^{j omega Ts}).
  std::complex<double> frequency_response(double omega, double ts) const;

  /// Product of all sections as a single numerator/denominator in powers of
  /// q^-1. Leading denominator coefficient is 1.
  std::vector<double> numerator() const;
  std::vector<double> denominator() const;

  /// {"sections":[{"b":[b0,b1,b2],"a":[1,a1,a2]},...]}
  std::string to_json() const;

 private:
  std::vector<Biquad> sections_;
  std::vector<std::array<double, 2>> state_;
};

/// Bilinear (Tustin) map s = (2/Ts)(1 - q^-1)/(1 + q^-1) applied section by
/// section. First-order sections stay first order.
LtiFilter tustin(const std::vector<ContinuousSection>& sections, double ts);

enum class FeedbackForm {
  /// PI x unity-DC lead x unity-DC low-pass, in series.
  Series,
  /// PI + lead summed, then 1/(s + omega_lp), as typeset in the source design.
  AsPrinted,
};

std::string_view to_string(FeedbackForm f);
FeedbackForm feedback_form_from_string(std::string_view s);

/// Low-pass filtered PID position controller.
struct FeedbackDesign {
  FeedbackForm form = FeedbackForm::Series;
  double gain = 6600.0;
  double integrator_corner = 5.0 / 6.0 * 2.0 * 3.14159265358979323846;  // rad/s
  double lead_zero = 5.0 / 3.0 * 2.0 * 3.14159265358979323846;          // rad/s
  double lead_pole = 30.0 * 3.14159265358979323846;                     // rad/s
  double lowpass = 60.0 * 3.14159265358979323846;                       // rad/s

  std::vector<ContinuousSection> sections() const;
  /// C(j omega) of the continuous design.
  std::complex<double> response(double omega) const;
};

/// Discretized C_fb at sample time `ts`. Throws InvalidArgument for ts <= 0.
LtiFilter discretize_cfb(double ts, const FeedbackDesign& design = {});

/// One controller sample: force from position error.
inline double fb_step(LtiFilter& filter, double error) { return filter.step(error); }

}  // namespace pgff
