#pragma once

#include "adc/inverse.hpp"

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

namespace adc {

/// Manufactured boundary concentration g(t) = 0.3 + 0.167 t - 0.007 t^2 (mM), t in [0, 24] h.
double manufactured_g(double t_hours);

/// Reference diffusion coefficients (mm^2/h) of the manufactured test: CSF 1000, grey 4, white 8.
double reference_diffusion(Subdomain s);
std::vector<double> reference_diffusion(const AssembledSystem& system);

/// Boundary data with manufactured_g(j dt) on every Dirichlet vertex, rows j = 0..k.
BoundaryMatrix manufactured_boundary(const AssembledSystem& system, double dt, int steps);

/// Uniform noise on (-amplitude, amplitude) added per vertex per observation.
struct NoiseSpec {
    double amplitude = 0.0;  ///< mM
    std::uint64_t seed = 0;

    /// Standard deviation of the uniform distribution, amplitude / sqrt(3).
    double sigma() const;
};

struct SyntheticSpec {
    std::vector<double> diffusion;  ///< true D aligned with system.subdomains; empty = reference values
    double dt = 0.24;               ///< generation time step (h)
    int observations = 10;
    double end_time = 24.0;         ///< h
    NoiseSpec noise;
};

/// Forward solve from u0 = 0 with manufactured boundary data, sampled at
/// tau_i = i T / n (i = 1..n, linear interpolation between steps) with
/// uniform noise added.
ObservationSeries make_synthetic_observations(const AssembledSystem& system, const SyntheticSpec& spec);

/// Adds the noise in place. The random stream of observation i is seeded from (seed, i).
void add_noise(ObservationSeries& obs, const NoiseSpec& noise);

/// Region-mean magnitude of the (noiseless) signal divided by the noise
/// standard deviation. Returns +inf when the noise amplitude is zero.
double snr(const Vector& signal, const std::vector<bool>& region, const NoiseSpec& noise);

/// Observation manifest: {mesh, dt_gen, times_hours[], noise_amp, seed, field_files[]}.
void write_observations(const Mesh& mesh, const ObservationSeries& obs, const SyntheticSpec& spec,
                        const std::filesystem::path& dir, const std::string& mesh_file);

struct LoadedObservations {
    Mesh mesh;
    ObservationSeries observations;
    double dt_gen = 0.0;
    double noise_amp = 0.0;
    std::uint64_t seed = 0;
};

LoadedObservations read_observations(const std::filesystem::path& manifest);

} // namespace adc
