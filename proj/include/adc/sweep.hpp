#pragma once

#include "adc/synthetic.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace adc {

struct SweepGrid {
    std::vector<double> alpha{1e-6};
    std::vector<double> beta{1e-4};
    std::vector<double> gamma{0.0};
    std::vector<int> steps{10};
    std::vector<double> noise{0.0};

    std::size_t size() const noexcept {
        return alpha.size() * beta.size() * gamma.size() * steps.size() * noise.size();
    }
};

struct SweepSettings {
    std::vector<double> truth;      ///< empty = reference values
    int observations = 10;
    double end_time = 24.0;
    /// Generation step. nullopt = same grid as the inversion (dt = T/k).
    std::optional<double> dt_gen;
    std::uint64_t seed = 0;
    double ventricle_factor = 0.01;
    OptimizerOptions optimizer;
    ForwardOptions forward;
};

struct SweepRow {
    double alpha = 0.0, beta = 0.0, gamma = 0.0;
    int steps = 0;
    double noise = 0.0;
    int iterations = 0;
    bool converged = false;
    std::optional<double> d_rel[3];  ///< CSF, grey, white
    double g_rel = 0.0;
    double objective = 0.0;
    std::string error;               ///< non-empty when the cell failed
};

/// Cell order: alpha outermost, then beta, gamma, steps, noise.
std::vector<SweepRow> run_sweep(const AssembledSystem& system, const SweepGrid& grid, const SweepSettings& settings,
                                int workers = 1);

/// One cell of the sweep.
SweepRow run_cell(const AssembledSystem& system, const ObservationSeries& obs, double alpha, double beta,
                  double gamma, int steps, double noise, const SweepSettings& settings);

inline constexpr const char* kSweepHeader = "alpha,beta,gamma,k,noise_amp,iterations,converged,D1_rel,D2_rel,D3_rel,g_rel,J";

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

} // namespace adc
