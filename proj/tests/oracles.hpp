#pragma once

// Independent reference implementations used by the unit and acceptance tests.

#include "adc/concentration.hpp"
#include "adc/voxel.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace oracle {

// Step-by-step longitudinal magnetization through repeated cycles
// (inversion, T_w, m pulses spaced T_b, T_a) until the echo value settles.
inline double bloch_center_echo(double t1, const adc::MprageParams& p) {
    const double a = std::cos(p.theta);
    const double tw = p.tr - p.t_a - p.t_b * (p.m - 1);
    auto relax = [&](double mz, double t) { return 1.0 - (1.0 - mz) * std::exp(-t / t1); };
    double mz = 1.0, echo = 0.0, last = 2.0;
    for (int cycle = 0; cycle < 100000; ++cycle) {
        mz = relax(-mz, tw);
        for (int k = 1; k <= p.m; ++k) {
            if (k == p.m / 2) echo = mz;
            mz *= a;
            if (k < p.m) mz = relax(mz, p.t_b);
        }
        mz = relax(mz, p.t_a);
        if (cycle > 3 && std::abs(echo - last) <= 1e-16 * std::abs(echo)) break;
        last = echo;
    }
    return echo;
}

// Direct (non-separable) convolution of a grid with the tensor-product
// Gaussian, reflect boundaries. sigma in voxels per axis.
inline std::vector<double> direct_gaussian(const adc::VoxelGrid& g, const double sigma[3]) {
    int r[3];
    std::vector<double> w[3];
    for (int a = 0; a < 3; ++a) {
        r[a] = static_cast<int>(std::ceil(4.0 * sigma[a]));
        double sum = 0.0;
        for (int t = -r[a]; t <= r[a]; ++t) {
            w[a].push_back(std::exp(-0.5 * t * t / (sigma[a] * sigma[a])));
            sum += w[a].back();
        }
        for (double& v : w[a]) v /= sum;
    }
    auto reflect = [](int i, int n) {
        while (i < 0 || i >= n) i = i < 0 ? -i - 1 : 2 * n - 1 - i;
        return i;
    };
    std::vector<double> out(g.size(), 0.0);
    for (int k = 0; k < g.dims[2]; ++k)
        for (int j = 0; j < g.dims[1]; ++j)
            for (int i = 0; i < g.dims[0]; ++i) {
                double acc = 0.0;
                for (int c = -r[2]; c <= r[2]; ++c)
                    for (int b = -r[1]; b <= r[1]; ++b)
                        for (int a = -r[0]; a <= r[0]; ++a)
                            acc += w[0][a + r[0]] * w[1][b + r[1]] * w[2][c + r[2]] *
                                   g.at(reflect(i + a, g.dims[0]), reflect(j + b, g.dims[1]),
                                        reflect(k + c, g.dims[2]));
                out[g.index(i, j, k)] = acc;
            }
    return out;
}

// Brute-force CSF window mean: scans the whole grid and keeps voxels within
// Chebyshev distance 3 of the center, in x-fastest order.
inline bool window_mean(const adc::VoxelGrid& s, const std::vector<unsigned char>& csf, int ci, int cj, int ck,
                        double& mean) {
    double sum = 0.0;
    int count = 0;
    for (int k = 0; k < s.dims[2]; ++k)
        for (int j = 0; j < s.dims[1]; ++j)
            for (int i = 0; i < s.dims[0]; ++i) {
                if (std::max({std::abs(i - ci), std::abs(j - cj), std::abs(k - ck)}) > 3) continue;
                if (!csf[s.index(i, j, k)]) continue;
                sum += s.at(i, j, k);
                ++count;
            }
    if (count == 0) return false;
    mean = sum / count;
    return true;
}

} // namespace oracle
