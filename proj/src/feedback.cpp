#include "pgff/feedback.hpp"

#include <cmath>
#include <sstream>

#include "pgff/error.hpp"
#include "text_format.hpp"

namespace pgff {

namespace {

using cd = std::complex<double>;

cd poly2(const std::array<double, 3>& c, cd s) { return (c[0] * s + c[1]) * s + c[2]; }

std::vector<double> poly_mul(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

}  // namespace

cd ContinuousSection::response(cd s) const { return poly2(num, s) / poly2(den, s); }

cd Biquad::response(cd z) const {
  const cd zi = 1.0 / z;
  return (b0 + (b1 + b2 * zi) * zi) / (1.0 + (a1 + a2 * zi) * zi);
}

LtiFilter::LtiFilter(std::vector<Biquad> sections)
    : sections_(std::move(sections)), state_(sections_.size(), {0.0, 0.0}) {}

double LtiFilter::step(double x) {
  for (std::size_t i = 0; i < sections_.size(); ++i) {
    const Biquad& s = sections_[i];
    auto& w = state_[i];
    const double y = s.b0 * x + w[0];
    w[0] = s.b1 * x - s.a1 * y + w[1];
    w[1] = s.b2 * x - s.a2 * y;
    x = y;
  }
  return x;
}

void LtiFilter::reset() {
  for (auto& w : state_) w = {0.0, 0.0};
}

cd LtiFilter::frequency_response(double omega, double ts) const {
  const cd z = std::polar(1.0, omega * ts);
  cd h = 1.0;
  for (const auto& s : sections_) h *= s.response(z);
  return h;
}

std::vector<double> LtiFilter::numerator() const {
  std::vector<double> p{1.0};
  for (const auto& s : sections_) p = poly_mul(p, {s.b0, s.b1, s.b2});
  return p;
}

std::vector<double> LtiFilter::denominator() const {
  std::vector<double> p{1.0};
  for (const auto& s : sections_) p = poly_mul(p, {1.0, s.a1, s.a2});
  return p;
}

std::string LtiFilter::to_json() const {
  std::ostringstream os;
  os << "{\"sections\":[";
  for (std::size_t i = 0; i < sections_.size(); ++i) {
    const auto& s = sections_[i];
    if (i) os << ',';
    os << "{\"b\":[" << detail::fmt17(s.b0) << ',' << detail::fmt17(s.b1) << ','
       << detail::fmt17(s.b2) << "],\"a\":[1," << detail::fmt17(s.a1) << ','
       << detail::fmt17(s.a2) << "]}";
  }
  os << "]}";
  return os.str();
}

LtiFilter tustin(const std::vector<ContinuousSection>& sections, double ts) {
  if (!(ts > 0.0) || !std::isfinite(ts)) throw InvalidArgument("tustin: ts must be > 0");
  const double k = 2.0 / ts;
  std::vector<Biquad> out;
  out.reserve(sections.size());
  for (const auto& cs : sections) {
    const bool second_order = cs.num[0] != 0.0 || cs.den[0] != 0.0;
    std::array<double, 3> n{}, d{};
    auto map = [&](const std::array<double, 3>& c, std::array<double, 3>& z) {
      if (second_order) {
        // Multiply through by (1 + q^-1)^2.
        z[0] = c[0] * k * k + c[1] * k + c[2];
        z[1] = -2.0 * c[0] * k * k + 2.0 * c[2];
        z[2] = c[0] * k * k - c[1] * k + c[2];
      } else {
        // Multiply through by (1 + q^-1).
        z[0] = c[1] * k + c[2];
        z[1] = -c[1] * k + c[2];
        z[2] = 0.0;
      }
    };
    map(cs.num, n);
    map(cs.den, d);
    if (d[0] == 0.0) throw InvalidArgument("tustin: improper section");
    out.push_back({n[0] / d[0], n[1] / d[0], n[2] / d[0], d[1] / d[0], d[2] / d[0]});
  }
  return LtiFilter(std::move(out));
}

std::string_view to_string(FeedbackForm f) {
  return f == FeedbackForm::Series ? "series" : "as_printed";
}

FeedbackForm feedback_form_from_string(std::string_view s) {
  if (s == "series") return FeedbackForm::Series;
  if (s == "as_printed") return FeedbackForm::AsPrinted;
  throw InvalidArgument("unknown feedback form '" + std::string(s) + "'");
}

std::vector<ContinuousSection> FeedbackDesign::sections() const {
  const double wi = integrator_corner, wz = lead_zero, wp = lead_pole, wl = lowpass;
  if (form == FeedbackForm::Series) {
    return {
        {{0.0, gain, gain * wi}, {0.0, 1.0, 0.0}},            // PI
        {{0.0, wp / wz, wp}, {0.0, 1.0, wp}},                 // lead, unity DC gain
        {{0.0, 0.0, wl}, {0.0, 1.0, wl}},                     // low-pass, unity DC gain
    };
  }
  // (s+wi)/s + (s+wz)/(s+wp) = (2 s^2 + (wi+wp+wz) s + wi wp) / (s (s + wp))
  return {
      {{2.0 * gain, gain * (wi + wp + wz), gain * wi * wp}, {1.0, wp, 0.0}},
      {{0.0, 0.0, 1.0}, {0.0, 1.0, wl}},
  };
}

cd FeedbackDesign::response(double omega) const {
  const cd s(0.0, omega);
  cd h = 1.0;
  for (const auto& sec : sections()) h *= sec.response(s);
  return h;
}

LtiFilter discretize_cfb(double ts, const FeedbackDesign& design) {
  return tustin(design.sections(), ts);
}

}  // namespace pgff
