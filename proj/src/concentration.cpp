#include "adc/concentration.hpp"

#include "adc/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace adc {

namespace {

// (1 - x^k) / (1 - x) for 0 <= x <= 1.
double geometric(double x, int k) {
    if (k <= 0) return 0.0;
    if (x == 1.0) return k;
    if (x == 0.0) return 1.0;
    return -std::expm1(k * std::log(x)) / (1.0 - x);
}

double checked(double v, const char* term) {
    if (!std::isfinite(v)) throw NumericalError(std::string("mprage_f: non-finite ") + term);
    return v;
}

} // namespace

void MprageParams::validate() const {
    if (!(theta > 0.0 && theta <= M_PI / 2 + 1e-12)) throw InputError("mprage: theta must lie in (0, pi/2]");
    if (!(t_a >= 0.0) || !(t_b > 0.0) || !(tr > 0.0)) throw InputError("mprage: need T_a >= 0, T_b > 0, TR > 0");
    if (m < 2 || m % 2 != 0) throw InputError("mprage: echo count m must be even and >= 2");
    if (!(r1 > 0.0)) throw InputError("mprage: relaxivity r1 must be > 0");
    if (!(t_w() >= 0.0)) throw InputError("mprage: TR too short, T_w = TR - T_a - T_b (m-1) < 0");
}

double mprage_f(double t1, const MprageParams& p) {
    if (!(t1 > 0.0)) throw InputError("mprage_f: T1 must be > 0");
    const double a = std::cos(p.theta);
    const double b = checked(std::exp(-p.t_b / t1), "beta");
    const double d = checked(std::exp(-p.t_a / t1), "delta");
    const double g = checked(std::exp(-p.t_w() / t1), "gamma");
    const double r = checked(std::exp(-p.tr / t1), "rho");
    const double ab = a * b;
    const int m = p.m, n = p.center_echo();
    const double am = checked(std::pow(a, m), "alpha^m");
    const double abm1 = checked(std::pow(ab, m - 1), "(alpha beta)^(m-1)");
    const double abn1 = checked(std::pow(ab, n - 1), "(alpha beta)^(n-1)");

    const double me = checked(-(1.0 - d + a * d * (1.0 - b) * geometric(ab, m - 1) + a * d * abm1 - am * r) /
                                  (1.0 + r * am),
                              "M_e");
    return checked((1.0 - b) * geometric(ab, n - 1) + abn1 * (1.0 - g) + g * abn1 * me, "M_n");
}

T1Lookup::T1Lookup(const MprageParams& p) {
    p.validate();
    const auto count = static_cast<std::size_t>(std::lround((kMax - kMin) / kStep)) + 1;
    t1_.resize(count);
    f_.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        t1_[i] = kMin + kStep * static_cast<double>(i);
        f_[i] = mprage_f(t1_[i], p);
    }
    const auto idx = [](double t) { return static_cast<std::size_t>(std::lround((t - kMin) / kStep)); };
    const std::size_t a = idx(800.0), b = idx(2000.0);
    const double s = f_[a + 1] - f_[a];
    if (s == 0.0) throw InputError("mprage: f is not monotone near typical tissue T1");
    decreasing_ = s < 0.0;
    auto monotone = [&](std::size_t i) { return decreasing_ ? f_[i + 1] < f_[i] : f_[i + 1] > f_[i]; };
    lo_ = a;
    while (lo_ > 0 && monotone(lo_ - 1)) --lo_;
    hi_ = a;
    while (hi_ + 1 < count && monotone(hi_)) ++hi_;
    if (hi_ < b) throw InputError("mprage: f is not monotone over 800-2000 ms; parameters unusable for inversion");
}

LookupValue T1Lookup::f_at(double t1) const {
    LookupValue out;
    if (t1 < kMin || t1 > kMax) {
        out.clamped = true;
        t1 = std::clamp(t1, kMin, kMax);
    }
    const double pos = (t1 - kMin) / kStep;
    const auto i = std::min(static_cast<std::size_t>(pos), size() - 2);
    const double w = pos - static_cast<double>(i);
    out.value = (1.0 - w) * f_[i] + w * f_[i + 1];
    return out;
}

LookupValue T1Lookup::invert(double target) const {
    LookupValue out;
    const double f_lo = f_[lo_], f_hi = f_[hi_];
    const double fmin = std::min(f_lo, f_hi), fmax = std::max(f_lo, f_hi);
    if (!(target >= fmin && target <= fmax)) {
        out.clamped = true;
        const bool low_end = decreasing_ ? target > fmax : target < fmin;
        out.value = low_end ? t1_[lo_] : t1_[hi_];
        return out;
    }
    // first index i in [lo, hi) with target between f_i and f_{i+1}
    std::size_t a = lo_, b = hi_;
    while (b - a > 1) {
        const std::size_t mid = (a + b) / 2;
        const bool before = decreasing_ ? f_[mid] >= target : f_[mid] <= target;
        (before ? a : b) = mid;
    }
    const double w = (target - f_[a]) / (f_[b] - f_[a]);
    out.value = t1_[a] + w * (t1_[b] - t1_[a]);
    return out;
}

double concentration_from_t1(double t1c_ms, double t10_ms, double r1) {
    if (!(t1c_ms > 0.0) || !(t10_ms > 0.0) || !(r1 > 0.0)) throw InputError("concentration: T1 and r1 must be > 0");
    return (1000.0 / t1c_ms - 1000.0 / t10_ms) / r1;
}

double t1_with_concentration(double c, double t10_ms, double r1) {
    if (!(t10_ms > 0.0) || !(r1 > 0.0)) throw InputError("concentration: T1 and r1 must be > 0");
    return 1000.0 / (1000.0 / t10_ms + r1 * c);
}

ConcentrationResult concentration_from_ratio(double ratio, double t10_ms, const MprageParams& p,
                                             const T1Lookup& lut) {
    if (!(ratio > 0.0)) throw InputError("concentration: signal ratio must be > 0");
    if (!(t10_ms >= T1Lookup::kMin && t10_ms <= T1Lookup::kMax))
        throw InputError("concentration: baseline T1 outside the lookup range");
    ConcentrationResult out;
    const double target = ratio * lut.f_at(t10_ms).value;
    const LookupValue t1c = lut.invert(target);
    out.saturated = t1c.clamped;
    out.value = concentration_from_t1(t1c.value, t10_ms, p.r1);
    if (out.value < 0.0) {
        out.negative = out.value < -1e-12;
        out.value = 0.0;
    }
    return out;
}

ConcentrationResult csf_concentration(double ratio, const MprageParams& p, const T1Lookup& lut) {
    return concentration_from_ratio(ratio, kCsfT1, p, lut);
}

double signal_change_percent(double s_t, double s_0) {
    if (!(s_0 > 0.0)) throw InputError("signal_change_percent: baseline signal must be > 0");
    return 100.0 * (s_t - s_0) / s_0;
}

} // namespace adc
