#pragma once

#include <cstddef>
#include <vector>

namespace adc {

/// Inversion-prepared gradient-echo (MPRAGE) sequence parameters. Times in ms.
struct MprageParams {
    double theta = 0.0;  ///< flip angle (rad)
    double t_a = 0.0;    ///< inversion time
    double t_b = 0.0;    ///< echo spacing
    double tr = 0.0;     ///< repetition time of the inversion cycle
    int m = 0;           ///< echoes per train
    double r1 = 0.0;     ///< relaxivity, 1/(mM s); required, no default
    double te = 0.0;     ///< echo time, unused (T2* decay neglected)
    double t2_star = 0.0;///< unused

    double t_w() const noexcept { return tr - t_a - t_b * (m - 1); }
    int center_echo() const noexcept { return m / 2; }
    void validate() const;
};

/// Normalized signal f(T1) = M_n / M_0 of the center echo in steady state.
double mprage_f(double t1_ms, const MprageParams& p);

struct LookupValue {
    double value = 0.0;
    bool clamped = false;
};

/// f tabulated on T1 = 200..4000 ms at 1 ms, restricted for inversion to the
/// largest strictly monotone run that covers 800..2000 ms.
class T1Lookup {
public:
    static constexpr double kMin = 200.0;
    static constexpr double kMax = 4000.0;
    static constexpr double kStep = 1.0;

    explicit T1Lookup(const MprageParams& p);

    std::size_t size() const noexcept { return t1_.size(); }
    const std::vector<double>& t1() const noexcept { return t1_; }
    const std::vector<double>& f() const noexcept { return f_; }
    std::size_t branch_begin() const noexcept { return lo_; }
    std::size_t branch_end() const noexcept { return hi_; }  ///< inclusive
    bool decreasing() const noexcept { return decreasing_; }

    /// Linear interpolation of f; T1 outside the grid is clamped and flagged.
    LookupValue f_at(double t1_ms) const;
    /// T1 on the working branch with f(T1) = target; out-of-range targets
    /// clamp to the nearer branch end and are flagged.
    LookupValue invert(double target) const;

private:
    std::vector<double> t1_, f_;
    std::size_t lo_ = 0, hi_ = 0;
    bool decreasing_ = true;
};

/// c = (1/T1_c - 1/T1_0) / r1 with times converted to seconds.
double concentration_from_t1(double t1c_ms, double t10_ms, double r1);
/// T1 after adding concentration c (mM), ms.
double t1_with_concentration(double c, double t10_ms, double r1);

struct ConcentrationResult {
    double value = 0.0;       ///< mM, >= 0
    bool saturated = false;   ///< target outside the branch range
    bool negative = false;    ///< raw estimate was negative and clamped to 0
};

ConcentrationResult concentration_from_ratio(double ratio, double t10_ms, const MprageParams& p,
                                             const T1Lookup& lut);

constexpr double kCsfT1 = 3000.0;

/// concentration_from_ratio with baseline T1 fixed at the CSF value.
ConcentrationResult csf_concentration(double ratio, const MprageParams& p, const T1Lookup& lut);

double signal_change_percent(double s_t, double s_0);

} // namespace adc
