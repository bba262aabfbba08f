#include "adc/synthetic.hpp"

#include "adc/error.hpp"

#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

namespace adc {

double manufactured_g(double t) {
    if (!(t >= 0.0 && t <= 24.0)) throw InputError("manufactured_g: t must lie in [0, 24] h");
    return 0.3 + 0.167 * t - 0.007 * t * t;
}

double reference_diffusion(Subdomain s) {
    switch (s) {
    case Subdomain::Csf: return 1000.0;
    case Subdomain::Grey: return 4.0;
    case Subdomain::White: return 8.0;
    }
    return 0.0;
}

std::vector<double> reference_diffusion(const AssembledSystem& system) {
    std::vector<double> d;
    for (auto s : system.subdomains) d.push_back(reference_diffusion(s));
    return d;
}

BoundaryMatrix manufactured_boundary(const AssembledSystem& system, double dt, int steps) {
    BoundaryMatrix g(steps + 1, static_cast<Eigen::Index>(system.num_dirichlet()));
    for (int j = 0; j <= steps; ++j) g.row(j).setConstant(manufactured_g(std::min(j * dt, 24.0)));
    return g;
}

double NoiseSpec::sigma() const { return amplitude / std::sqrt(3.0); }

void add_noise(ObservationSeries& obs, const NoiseSpec& noise) {
    if (!(noise.amplitude >= 0.0)) throw InputError("noise amplitude must be >= 0");
    if (noise.amplitude == 0.0) return;
    for (std::size_t i = 0; i < obs.fields.size(); ++i) {
        std::seed_seq seq{static_cast<std::uint32_t>(noise.seed), static_cast<std::uint32_t>(noise.seed >> 32),
                          static_cast<std::uint32_t>(i)};
        std::mt19937_64 rng(seq);
        std::uniform_real_distribution<double> dist(-noise.amplitude, noise.amplitude);
        for (Eigen::Index v = 0; v < obs.fields[i].size(); ++v) obs.fields[i][v] += dist(rng);
    }
}

ObservationSeries make_synthetic_observations(const AssembledSystem& system, const SyntheticSpec& spec) {
    if (spec.observations < 2) throw InputError("synthetic: need at least 2 observations");
    if (!(spec.dt > 0.0) || !(spec.end_time > 0.0) || spec.end_time > 24.0)
        throw InputError("synthetic: need dt > 0 and 0 < T <= 24 h");
    const int steps = static_cast<int>(std::lround(spec.end_time / spec.dt));
    if (std::abs(steps * spec.dt - spec.end_time) > 1e-9 * spec.end_time)
        throw InputError("synthetic: T must be a multiple of dt");

    ControlState truth;
    truth.diffusion = spec.diffusion.empty() ? reference_diffusion(system) : spec.diffusion;
    truth.boundary = manufactured_boundary(system, spec.dt, steps);
    const Vector u0 = Vector::Zero(static_cast<Eigen::Index>(system.num_vertices));
    const StateSeries states = forward_solve(system, truth, u0, spec.dt, steps);

    ObservationSeries obs;
    for (int i = 1; i <= spec.observations; ++i) {
        const double tau = spec.end_time * i / spec.observations;
        const double pos = tau / spec.dt;
        const int lo = std::min(static_cast<int>(std::floor(pos + 1e-9)), steps);
        const double frac = std::clamp(pos - lo, 0.0, 1.0);
        Vector f = states.states[lo];
        if (frac > 1e-9 && lo < steps) f = (1.0 - frac) * states.states[lo] + frac * states.states[lo + 1];
        obs.times.push_back(tau);
        obs.fields.push_back(std::move(f));
    }
    add_noise(obs, spec.noise);
    return obs;
}

double snr(const Vector& signal, const std::vector<bool>& region, const NoiseSpec& noise) {
    if (region.size() != static_cast<std::size_t>(signal.size())) throw InputError("snr: region mask length mismatch");
    if (noise.amplitude == 0.0) return std::numeric_limits<double>::infinity();
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t v = 0; v < region.size(); ++v)
        if (region[v]) {
            sum += std::abs(signal[static_cast<Eigen::Index>(v)]);
            ++count;
        }
    if (count == 0) throw InputError("snr: empty region");
    return (sum / count) / noise.sigma();
}

void write_observations(const Mesh& mesh, const ObservationSeries& obs, const SyntheticSpec& spec,
                        const std::filesystem::path& dir, const std::string& mesh_file) {
    std::filesystem::create_directories(dir / "fields");
    nlohmann::json m;
    m["mesh"] = mesh_file;
    m["dt_gen"] = spec.dt;
    m["times_hours"] = obs.times;
    m["noise_amp"] = spec.noise.amplitude;
    m["seed"] = spec.noise.seed;
    m["field_files"] = nlohmann::json::array();
    for (std::size_t i = 0; i < obs.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof(name), "fields/obs_%03zu.field", i);
        write_field(VertexField{mesh.id(), std::vector<double>(obs.fields[i].data(),
                                                               obs.fields[i].data() + obs.fields[i].size())},
                    dir / name);
        m["field_files"].push_back(name);
    }
    std::ofstream out(dir / "observations.json");
    if (!out) throw InputError("cannot write observation manifest in " + dir.string());
    out << m.dump(2) << "\n";
}

LoadedObservations read_observations(const std::filesystem::path& manifest) {
    std::ifstream in(manifest);
    if (!in) throw InputError("cannot open observation manifest " + manifest.string());
    nlohmann::json m;
    try {
        in >> m;
    } catch (const nlohmann::json::exception& e) {
        throw InputError("observation manifest " + manifest.string() + ": " + e.what());
    }
    const auto base = manifest.parent_path();
    auto resolve = [&](const std::string& p) {
        const std::filesystem::path path(p);
        return path.is_absolute() ? path : base / path;
    };
    try {
        LoadedObservations out{read_mesh(resolve(m.at("mesh").get<std::string>())), {}, 0.0, 0.0, 0};
        out.dt_gen = m.at("dt_gen").get<double>();
        out.noise_amp = m.at("noise_amp").get<double>();
        out.seed = m.at("seed").get<std::uint64_t>();
        out.observations.times = m.at("times_hours").get<std::vector<double>>();
        const auto files = m.at("field_files").get<std::vector<std::string>>();
        if (files.size() != out.observations.times.size())
            throw InputError("observation manifest: times_hours and field_files differ in length");
        for (const auto& f : files) {
            const auto field = read_field(out.mesh, resolve(f));
            out.observations.fields.push_back(Eigen::Map<const Vector>(field.values.data(),
                                                                       static_cast<Eigen::Index>(field.values.size())));
        }
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw InputError("observation manifest " + manifest.string() + ": " + e.what());
    }
}

} // namespace adc
