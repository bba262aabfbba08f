#pragma once

#include <array>
#include <vector>

namespace adc {

/// Diffusion tensor eigenvalues (mm^2/s), any order, all >= 0.
struct DiffusionTensorSample {
    std::array<double, 3> lambda{};
};

double mean_diffusivity(const DiffusionTensorSample& s);
/// FA in [0, 1]; throws InputError for an all-zero tensor.
double fractional_anisotropy(const DiffusionTensorSample& s);

struct Tortuosity {
    double value = 0.0;
    bool below_one = false;  ///< D_adc > D_free
};

/// sqrt(D_free / D_adc).
Tortuosity tortuosity(double d_free, double d_adc);

constexpr double kGadobutrolFree = 3.8e-4;  ///< mm^2/s

/// Free coefficient divided by the squared tortuosity.
double gadobutrol_adc(double tortuosity, double free_coefficient = kGadobutrolFree);

struct RegionStats {
    double median = 0.0;
    double mad = 0.0;  ///< median absolute deviation from the median
    std::size_t count = 0;
};

/// Median and MAD over entries with mask != 0. Throws on an empty region.
RegionStats region_stats(const std::vector<double>& values, const std::vector<unsigned char>& mask);

} // namespace adc
