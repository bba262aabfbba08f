#include "adc/dti.hpp"

#include "adc/error.hpp"

#include <algorithm>
#include <cmath>

namespace adc {

namespace {

void check(const DiffusionTensorSample& s) {
    for (double l : s.lambda)
        if (!(l >= 0.0) || !std::isfinite(l)) throw InputError("dti: eigenvalues must be finite and >= 0");
}

double median_of(std::vector<double> v) {
    const std::size_t n = v.size();
    std::nth_element(v.begin(), v.begin() + n / 2, v.end());
    const double hi = v[n / 2];
    if (n % 2) return hi;
    return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + n / 2));
}

} // namespace

double mean_diffusivity(const DiffusionTensorSample& s) {
    check(s);
    return (s.lambda[0] + s.lambda[1] + s.lambda[2]) / 3.0;
}

double fractional_anisotropy(const DiffusionTensorSample& s) {
    const double md = mean_diffusivity(s);
    double num = 0.0, den = 0.0;
    for (double l : s.lambda) {
        num += (l - md) * (l - md);
        den += l * l;
    }
    if (den == 0.0) throw InputError("dti: FA undefined for an all-zero tensor");
    return std::min(1.0, std::sqrt(1.5 * num / den));
}

Tortuosity tortuosity(double d_free, double d_adc) {
    if (!(d_free > 0.0) || !(d_adc > 0.0)) throw InputError("tortuosity: diffusivities must be > 0");
    Tortuosity t;
    t.value = std::sqrt(d_free / d_adc);
    t.below_one = t.value < 1.0;
    return t;
}

double gadobutrol_adc(double lambda, double free_coefficient) {
    if (!(lambda > 0.0)) throw InputError("gadobutrol_adc: tortuosity must be > 0");
    if (!(free_coefficient > 0.0)) throw InputError("gadobutrol_adc: free coefficient must be > 0");
    return free_coefficient / (lambda * lambda);
}

RegionStats region_stats(const std::vector<double>& values, const std::vector<unsigned char>& mask) {
    if (values.size() != mask.size()) throw InputError("region_stats: mask length mismatch");
    std::vector<double> sel;
    for (std::size_t i = 0; i < values.size(); ++i)
        if (mask[i]) sel.push_back(values[i]);
    if (sel.empty()) throw InputError("region_stats: empty region");
    RegionStats r;
    r.count = sel.size();
    r.median = median_of(sel);
    for (double& v : sel) v = std::abs(v - r.median);
    r.mad = median_of(std::move(sel));
    return r;
}

} // namespace adc
