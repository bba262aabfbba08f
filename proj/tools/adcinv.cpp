// adcinv: command-line driver for mesh generation, forward and inverse runs,
// sweeps and the image-side preprocessing steps.
#include "config.hpp"

#include "adc/concentration.hpp"
#include "adc/dti.hpp"
#include "adc/sweep.hpp"
#include "adc/voxel.hpp"

#include "CLI11.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#ifndef ADCINV_VERSION
#define ADCINV_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using namespace adc;
using adcinv::Config;
using adcinv::json;

namespace {

struct Run {
    std::string command;
    json config;
    fs::path out;
    std::optional<std::uint64_t> seed_flag;
    std::optional<int> workers_flag;
    std::vector<std::string> outputs;

    std::uint64_t seed(Config& c) {
        const auto from_config = c.get_or<std::uint64_t>("seed", 0);
        return seed_flag ? *seed_flag : from_config;
    }
    fs::path file(const std::string& rel) {
        outputs.push_back(rel);
        const fs::path p = out / rel;
        fs::create_directories(p.parent_path());
        return p;
    }
};

std::string hex64(std::uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream f(p);
    if (!f) throw InputError("cannot write " + p.string());
    return f;
}

void write_manifest(const Run& run, std::uint64_t seed) {
    json m;
    m["command"] = run.command;
    m["version"] = ADCINV_VERSION;
    m["config_hash"] = hex64(fnv1a(run.config.dump()));
    m["seed"] = seed;
    m["config"] = run.config;
    m["outputs"] = run.outputs;
    auto f = open_out(run.out / "manifest.json");
    f << m.dump(2) << "\n";
}

fs::path resolve(const std::string& p, const fs::path& base) {
    const fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

BoundaryMarker parse_marker(const std::string& s) {
    if (s == "sas") return BoundaryMarker::Sas;
    if (s == "ventricle") return BoundaryMarker::Ventricle;
    if (s == "neumann" || s == "neumann_green") return BoundaryMarker::NeumannGreen;
    if (s == "neumann_yellow") return BoundaryMarker::NeumannYellow;
    throw InputError("unknown boundary marker '" + s + "'");
}

PhantomOptions phantom_options(Config c) {
    PhantomOptions o;
    o.resolution = c.get<int>("resolution");
    o.box_length = c.get_or<double>("box_length", o.box_length);
    o.variant = parse_variant(c.get_or<std::string>("variant", to_string(o.variant)));
    o.csf_fraction = c.get_or<double>("csf_fraction", o.csf_fraction);
    o.grey_fraction = c.get_or<double>("grey_fraction", o.grey_fraction);
    o.cavity_cells = c.get_or<int>("cavity_cells", o.cavity_cells);
    o.outer_marker = parse_marker(c.get_or<std::string>("outer_marker", "sas"));
    c.done();
    return o;
}

// Either "mesh": path or "phantom": {...}.
Mesh load_mesh(Config& c, const fs::path& base) {
    const bool file = c.has("mesh"), phantom = c.has("phantom");
    if (file == phantom) throw InputError("config: exactly one of 'mesh' or 'phantom' is required");
    if (file) return read_mesh(resolve(c.get<std::string>("mesh"), base));
    return generate_phantom(phantom_options(c.child("phantom")));
}

std::vector<double> diffusion_values(std::optional<Config> c, const AssembledSystem& sys) {
    std::vector<double> d = reference_diffusion(sys);
    if (!c) return d;
    const char* names[] = {"csf", "grey", "white"};
    for (std::size_t i = 0; i < sys.subdomains.size(); ++i) {
        const int label = static_cast<int>(sys.subdomains[i]);
        d[i] = c->get_or<double>(names[label - 1], d[i]);
    }
    c->done();
    return d;
}

ForwardOptions forward_options(Config& c) {
    ForwardOptions o;
    const auto s = c.get_or<std::string>("solver", "cholesky");
    if (s == "cholesky") o.solver = LinearSolver::Cholesky;
    else if (s == "cg") o.solver = LinearSolver::ConjugateGradient;
    else throw InputError("config: key '" + c.full("solver") + "' must be 'cholesky' or 'cg'");
    o.cg_tolerance = c.get_or<double>("cg_tolerance", o.cg_tolerance);
    return o;
}

OptimizerOptions optimizer_options(std::optional<Config> c) {
    OptimizerOptions o;
    if (!c) return o;
    o.memory = c->get_or<int>("memory", o.memory);
    o.max_iterations = c->get_or<int>("max_iterations", o.max_iterations);
    o.rtol = c->get_or<double>("rtol", o.rtol);
    o.max_halvings = c->get_or<int>("max_halvings", o.max_halvings);
    c->done();
    return o;
}

std::string label_name(Subdomain s) { return to_string(s); }

void export_mesh_vtk(Run& run, const Mesh& mesh, const std::map<std::string, VertexField>& fields,
                     const std::string& name) {
    export_vtk(mesh, fields, run.file("fields/" + name + ".vtk"));
}

VertexField to_field(const Mesh& mesh, const Vector& v) {
    return VertexField{mesh.id(), std::vector<double>(v.data(), v.data() + v.size())};
}

// ---------------------------------------------------------------------------

void cmd_mesh_gen(Run& run, Config c) {
    const auto seed = run.seed(c);
    const PhantomOptions o = phantom_options(c.child("phantom"));
    c.done();
    const Mesh mesh = generate_phantom(o);
    write_mesh(mesh, run.file("mesh.adcmesh"));
    export_mesh_vtk(run, mesh, {}, "mesh");
    auto csv = open_out(run.file("results.csv"));
    csv << "vertices,tets,boundary_facets,volume\n"
        << mesh.num_vertices() << ',' << mesh.num_tets() << ',' << mesh.boundary_facets().size() << ','
        << num(mesh.total_volume()) << '\n';
    write_manifest(run, seed);
}

void cmd_forward(Run& run, Config c, const fs::path& base) {
    const auto seed = run.seed(c);
    const Mesh mesh = load_mesh(c, base);
    AssemblyOptions ao;
    ao.lumped_mass = c.get_or<bool>("lumped_mass", false);
    const AssembledSystem sys = assemble(mesh, ao);
    const double dt = c.get<double>("dt");
    const int steps = c.get<int>("steps");
    if (!(dt > 0.0) || steps < 1) throw InputError("config: need dt > 0 and steps >= 1");
    ControlState control;
    control.diffusion = diffusion_values(c.child_opt("diffusion"), sys);
    Config b = c.child("boundary");
    const auto type = b.get<std::string>("type");
    if (type == "manufactured") {
        control.boundary = manufactured_boundary(sys, dt, steps);
    } else if (type == "constant") {
        control.boundary = BoundaryMatrix::Constant(steps + 1, static_cast<Eigen::Index>(sys.num_dirichlet()),
                                                    b.get<double>("value"));
    } else {
        throw InputError("config: key '" + b.full("type") + "' must be 'manufactured' or 'constant'");
    }
    b.done();
    const double u0v = c.get_or<double>("initial_value", 0.0);
    const ForwardOptions fo = forward_options(c);
    c.done();

    const Vector u0 = Vector::Constant(static_cast<Eigen::Index>(sys.num_vertices), u0v);
    const StateSeries series = forward_solve(sys, control, u0, dt, steps, fo);
    run.outputs.push_back("states/");
    write_state_series(mesh, series, run.out / "states");
    export_mesh_vtk(run, mesh, {{"u", to_field(mesh, series.states.back())}}, "final_state");
    auto csv = open_out(run.file("results.csv"));
    csv << "step,time,total_mass,min,max\n";
    const Vector ones = Vector::Ones(static_cast<Eigen::Index>(sys.num_vertices));
    for (int j = 0; j <= steps; ++j) {
        const Vector& u = series.states[j];
        csv << j << ',' << num(series.time(j)) << ',' << num(ones.dot(sys.mass * u)) << ',' << num(u.minCoeff())
            << ',' << num(u.maxCoeff()) << '\n';
    }
    write_manifest(run, seed);
}

void cmd_synth(Run& run, Config c, const fs::path& base) {
    const auto seed = run.seed(c);
    const Mesh mesh = load_mesh(c, base);
    const AssembledSystem sys = assemble(mesh);
    SyntheticSpec spec;
    spec.diffusion = diffusion_values(c.child_opt("diffusion"), sys);
    spec.dt = c.get_or<double>("dt_gen", spec.dt);
    spec.observations = c.get_or<int>("observations", spec.observations);
    spec.end_time = c.get_or<double>("end_time", spec.end_time);
    spec.noise = {c.get_or<double>("noise_amp", 0.0), seed};
    c.done();

    const ObservationSeries obs = make_synthetic_observations(sys, spec);
    write_mesh(mesh, run.file("mesh.adcmesh"));
    write_observations(mesh, obs, spec, run.out, "mesh.adcmesh");
    run.outputs.push_back("observations.json");
    std::map<std::string, VertexField> fields;
    for (std::size_t i = 0; i < obs.size(); ++i) fields["obs_" + std::to_string(i)] = to_field(mesh, obs.fields[i]);
    export_mesh_vtk(run, mesh, fields, "observations");

    auto csv = open_out(run.file("results.csv"));
    csv << "index,time_hours,mean,min,max,snr\n";
    const std::vector<bool> all(sys.num_vertices, true);
    for (std::size_t i = 0; i < obs.size(); ++i) {
        const Vector& f = obs.fields[i];
        csv << i << ',' << num(obs.times[i]) << ',' << num(f.mean()) << ',' << num(f.minCoeff()) << ','
            << num(f.maxCoeff()) << ',' << num(snr(f, all, spec.noise)) << '\n';
    }
    write_manifest(run, seed);
}

void cmd_invert(Run& run, Config c, const fs::path& base) {
    const auto seed = run.seed(c);
    const LoadedObservations data = read_observations(resolve(c.get<std::string>("observations"), base));
    AssemblyOptions ao;
    ao.lumped_mass = c.get_or<bool>("lumped_mass", false);
    const AssembledSystem sys = assemble(data.mesh, ao);
    const int steps = c.get<int>("steps");
    const double end_time = c.get_or<double>("end_time", 24.0);
    if (steps < 1 || !(end_time > 0.0)) throw InputError("config: need steps >= 1 and end_time > 0");
    const double dt = end_time / steps;
    Config r = c.child("reg");
    RegParams reg{r.get<double>("alpha"), r.get<double>("beta"), r.get<double>("gamma"),
                  r.get_or<double>("ventricle_factor", 0.01)};
    r.done();
    const OptimizerOptions oo = optimizer_options(c.child_opt("optimizer"));
    const ForwardOptions fo = forward_options(c);
    const auto initial = c.get_or<std::string>("initial_state", "zero");
    std::optional<Vector> u0;
    if (initial == "first_observation") {
        if (data.observations.times.empty() || data.observations.times.front() != 0.0)
            throw InputError("config: initial_state 'first_observation' needs an observation at t = 0");
        u0 = data.observations.fields.front();
    } else if (initial != "zero") {
        throw InputError("config: key '" + c.full("initial_state") + "' must be 'zero' or 'first_observation'");
    }
    std::optional<ControlState> truth;
    if (auto t = c.child_opt("truth")) {
        truth = ControlState{};
        truth->diffusion = diffusion_values(t->child_opt("diffusion"), sys);
        if (t->get_or<bool>("manufactured_boundary", true))
            truth->boundary = manufactured_boundary(sys, dt, steps);
        else
            throw InputError("config: truth without a manufactured boundary is not supported");
        t->done();
    }
    c.done();

    const InverseProblem problem(sys, data.observations, reg, dt, steps, u0, fo);
    const InverseResult res = optimize(problem, default_initial_control(sys, steps), oo, truth);

    SweepRow row;
    row.alpha = reg.alpha;
    row.beta = reg.beta;
    row.gamma = reg.gamma_tilde;
    row.steps = steps;
    row.noise = data.noise_amp;
    row.iterations = res.iterations;
    row.converged = res.converged;
    row.objective = res.objective_history.back();
    if (res.errors) {
        for (auto s : {Subdomain::Csf, Subdomain::Grey, Subdomain::White})
            row.d_rel[static_cast<int>(s) - 1] = res.errors->for_subdomain(s);
        row.g_rel = res.errors->boundary;
    } else {
        row.g_rel = std::nan("");
    }
    {
        auto csv = open_out(run.file("results.csv"));
        write_sweep_csv(csv, {row});
    }
    {
        auto csv = open_out(run.file("diffusion.csv"));
        csv << "subdomain,D_mm2_per_h,D_mm2_per_s\n";
        for (std::size_t i = 0; i < sys.subdomains.size(); ++i)
            csv << label_name(sys.subdomains[i]) << ',' << num(res.control.diffusion[i]) << ','
                << num(res.control.diffusion[i] / 3600.0) << '\n';
    }
    {
        auto csv = open_out(run.file("history.csv"));
        csv << "iteration,J,grad_inf\n";
        for (std::size_t i = 0; i < res.objective_history.size(); ++i)
            csv << i << ',' << num(res.objective_history[i]) << ',' << num(res.gradient_norm_history[i]) << '\n';
    }
    const Vector start = u0 ? *u0 : Vector::Zero(static_cast<Eigen::Index>(sys.num_vertices));
    const StateSeries states = forward_solve(sys, res.control, start, dt, steps, fo);
    std::map<std::string, VertexField> fields;
    const auto snap = problem.snap_index();
    for (std::size_t i = 0; i < snap.size(); ++i)
        fields["state_" + std::to_string(i)] = to_field(data.mesh, states.states[snap[i]]);
    export_mesh_vtk(run, data.mesh, fields, "reconstruction");
    if (!res.converged) std::cerr << "adcinv: optimizer did not converge: " << res.message << "\n";
    write_manifest(run, seed);
}

std::vector<double> number_list(Config& c, const std::string& key, std::vector<double> fallback) {
    return c.get_or<std::vector<double>>(key, std::move(fallback));
}

void cmd_sweep(Run& run, Config c, const fs::path& base) {
    const auto seed = run.seed(c);
    const Mesh mesh = load_mesh(c, base);
    const AssembledSystem sys = assemble(mesh);
    Config g = c.child("grid");
    SweepGrid grid;
    grid.alpha = number_list(g, "alpha", grid.alpha);
    grid.beta = number_list(g, "beta", grid.beta);
    grid.gamma = number_list(g, "gamma", grid.gamma);
    grid.steps = g.get_or<std::vector<int>>("k", grid.steps);
    grid.noise = number_list(g, "noise", grid.noise);
    g.done();
    SweepSettings s;
    s.truth = diffusion_values(c.child_opt("diffusion"), sys);
    s.observations = c.get_or<int>("observations", s.observations);
    s.end_time = c.get_or<double>("end_time", s.end_time);
    // null or absent: generate on the inversion grid
    if (const double g = c.get_or<double>("dt_gen", 0.0); g > 0.0) s.dt_gen = g;
    s.seed = seed;
    s.ventricle_factor = c.get_or<double>("ventricle_factor", s.ventricle_factor);
    s.optimizer = optimizer_options(c.child_opt("optimizer"));
    s.forward = forward_options(c);
    const int workers = run.workers_flag ? *run.workers_flag : c.get_or<int>("workers", 1);
    c.done();

    const auto rows = run_sweep(sys, grid, s, workers);
    {
        auto csv = open_out(run.file("results.csv"));
        write_sweep_csv(csv, rows);
    }
    write_manifest(run, seed);
    for (const auto& r : rows)
        if (!r.error.empty()) std::cerr << "adcinv: sweep cell failed: " << r.error << "\n";
}

MprageParams mprage_params(Config c) {
    MprageParams p;
    p.theta = c.get<double>("flip_angle_deg") * M_PI / 180.0;
    p.t_a = c.get<double>("t_a");
    p.t_b = c.get<double>("t_b");
    p.tr = c.get<double>("tr");
    p.m = c.get<int>("m");
    p.r1 = c.get<double>("r1");
    p.te = c.get_or<double>("te", 0.0);
    p.t2_star = c.get_or<double>("t2_star", 0.0);
    c.done();
    p.validate();
    return p;
}

void cmd_concentration(Run& run, Config c, const fs::path& base) {
    const auto seed = run.seed(c);
    const VoxelGrid s0 = read_voxel(resolve(c.get<std::string>("baseline"), base));
    const VoxelGrid st = read_voxel(resolve(c.get<std::string>("signal"), base));
    const VoxelGrid t1 = read_voxel(resolve(c.get<std::string>("t1_map"), base));
    std::optional<VoxelGrid> csf;
    if (const auto m = c.get_or<std::string>("csf_mask", ""); !m.empty()) csf = read_voxel(resolve(m, base));
    const MprageParams p = mprage_params(c.child("mprage"));
    c.done();
    for (const VoxelGrid* g : {&st, &t1})
        if (g->dims != s0.dims) throw InputError("concentration: grids differ in dimensions");
    if (csf && csf->dims != s0.dims) throw InputError("concentration: CSF mask differs in dimensions");

    const T1Lookup lut(p);
    VoxelGrid out = s0;
    out.mask.reset();
    std::size_t saturated = 0, negative = 0, skipped = 0, csf_count = 0;
    for (std::size_t v = 0; v < s0.size(); ++v) {
        const bool is_csf = csf && (csf->mask ? (*csf->mask)[v] != 0 : csf->values[v] != 0.0);
        const double t10 = is_csf ? kCsfT1 : t1.values[v];
        if (!(s0.values[v] > 0.0) || !(t10 >= T1Lookup::kMin && t10 <= T1Lookup::kMax) || !(st.values[v] > 0.0)) {
            out.values[v] = 0.0;
            ++skipped;
            continue;
        }
        csf_count += is_csf;
        const auto r = concentration_from_ratio(st.values[v] / s0.values[v], t10, p, lut);
        out.values[v] = r.value;
        saturated += r.saturated;
        negative += r.negative;
    }
    write_voxel(out, run.file("concentration.adcvox"));
    auto csv = open_out(run.file("results.csv"));
    csv << "voxels,csf_voxels,saturated,negative_clamped,skipped\n"
        << out.size() << ',' << csf_count << ',' << saturated << ',' << negative << ',' << skipped << '\n';
    write_manifest(run, seed);
}

void cmd_dti(Run& run, Config c, const fs::path& base) {
    const auto seed = run.seed(c);
    const auto paths = c.get<std::vector<std::string>>("eigenvalues");
    if (paths.size() != 3) throw InputError("config: key 'eigenvalues' must list three grids");
    std::vector<VoxelGrid> lam;
    for (const auto& p : paths) lam.push_back(read_voxel(resolve(p, base)));
    for (const auto& g : lam)
        if (g.dims != lam[0].dims) throw InputError("dti: eigenvalue grids differ in dimensions");
    const double d_free = c.get_or<double>("d_free", 3.0e-3);
    const double free_coeff = c.get_or<double>("free_coefficient", kGadobutrolFree);
    Config regions = c.child("regions");
    std::vector<std::pair<std::string, VoxelGrid>> masks;
    for (const auto& [name, _] : run.config.at("regions").items())
        masks.emplace_back(name, read_voxel(resolve(regions.get<std::string>(name), base)));
    regions.done();
    c.done();

    const std::size_t n = lam[0].size();
    std::vector<double> md(n, 0.0), fa(n, 0.0);
    std::vector<unsigned char> valid(n, 0);
    for (std::size_t v = 0; v < n; ++v) {
        const DiffusionTensorSample s{{lam[0].values[v], lam[1].values[v], lam[2].values[v]}};
        if (s.lambda[0] + s.lambda[1] + s.lambda[2] <= 0.0) continue;
        md[v] = mean_diffusivity(s);
        fa[v] = fractional_anisotropy(s);
        valid[v] = 1;
    }
    auto csv = open_out(run.file("results.csv"));
    csv << "region,count,md_median,md_mad,fa_median,fa_mad,tortuosity,tortuosity_below_one,gadobutrol_adc\n";
    for (const auto& [name, m] : masks) {
        if (m.dims != lam[0].dims) throw InputError("dti: region '" + name + "' differs in dimensions");
        std::vector<unsigned char> sel(n);
        for (std::size_t v = 0; v < n; ++v)
            sel[v] = valid[v] && (m.mask ? (*m.mask)[v] != 0 : m.values[v] != 0.0);
        const RegionStats smd = region_stats(md, sel), sfa = region_stats(fa, sel);
        const Tortuosity t = tortuosity(d_free, smd.median);
        csv << name << ',' << smd.count << ',' << num(smd.median) << ',' << num(smd.mad) << ',' << num(sfa.median)
            << ',' << num(sfa.mad) << ',' << num(t.value) << ',' << (t.below_one ? "true" : "false") << ','
            << num(gadobutrol_adc(t.value, free_coeff)) << '\n';
    }
    write_manifest(run, seed);
}

void cmd_preprocess(Run& run, Config c, const fs::path& base) {
    const auto seed = run.seed(c);
    const Mesh mesh = load_mesh(c, base);
    VoxelGrid signal = read_voxel(resolve(c.get<std::string>("signal"), base));
    const auto method = c.get<std::string>("method");
    const auto sample = c.get_or<std::string>("sample", "trilinear");
    const SampleMode mode = sample == "nearest" ? SampleMode::Nearest : SampleMode::Trilinear;
    if (sample != "nearest" && sample != "trilinear")
        throw InputError("config: key '" + c.full("sample") + "' must be 'trilinear' or 'nearest'");
    std::size_t fallback = 0;
    SampledField sampled;
    if (method == "raw") {
        sampled = sample_to_mesh(signal, mesh, mode);
    } else if (method == "gs") {
        const auto bm = c.get_or<std::string>("boundary_mode", "reflect");
        if (bm != "reflect" && bm != "nearest")
            throw InputError("config: key '" + c.full("boundary_mode") + "' must be 'reflect' or 'nearest'");
        signal = gaussian_smooth(signal, c.get_or<double>("sigma_mm", 1.5),
                                 bm == "reflect" ? BoundaryMode::Reflect : BoundaryMode::Nearest);
        sampled = sample_to_mesh(signal, mesh, mode);
    } else if (method == "cp") {
        const VoxelGrid mask = read_voxel(resolve(c.get<std::string>("csf_mask"), base));
        std::vector<BoundaryMarker> markers;
        for (const auto& m : c.get_or<std::vector<std::string>>("markers", {"sas", "ventricle"}))
            markers.push_back(parse_marker(m));
        sampled = sample_to_mesh(signal, mesh, mode);
        const CsfProjection proj = csf_project(signal, mask, mesh, markers);
        sampled.field = apply_projection(sampled.field, proj);
        fallback = proj.fallback_count;
    } else {
        throw InputError("config: key '" + c.full("method") + "' must be 'raw', 'cp' or 'gs'");
    }
    c.done();
    write_mesh(mesh, run.file("mesh.adcmesh"));
    write_field(sampled.field, run.file("fields/sampled.field"));
    export_mesh_vtk(run, mesh, {{"sampled", sampled.field}}, "sampled");
    auto csv = open_out(run.file("results.csv"));
    csv << "method,vertices,clamped,cp_fallback\n"
        << method << ',' << mesh.num_vertices() << ',' << sampled.clamped_count << ',' << fallback << '\n';
    write_manifest(run, seed);
}

json load_config(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw InputError("cannot open config " + p.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw InputError("config " + p.string() + ": " + e.what());
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Apparent diffusion coefficient inversion toolkit"};
    app.set_version_flag("--version", ADCINV_VERSION);
    app.require_subcommand(1);
    std::string config_path, out_dir = "out";
    std::uint64_t seed = 0;
    int workers = 1;
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"mesh-gen", "generate a box phantom mesh"},
        {"forward", "run the forward diffusion solver"},
        {"synth", "generate synthetic observations"},
        {"invert", "recover diffusion coefficients and boundary data"},
        {"sweep", "run a grid of inversions"},
        {"concentration", "convert MPRAGE signal ratios to concentration"},
        {"dti", "regional DTI statistics and tortuosity"},
        {"preprocess", "sample voxel data onto a mesh (raw, cp, gs)"},
    };
    std::vector<CLI::App*> subs;
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "output directory")->capture_default_str();
        sub->add_option("--seed", seed, "random seed (overrides the config)");
        sub->add_option("--workers", workers, "worker threads for sweep")->check(CLI::PositiveNumber);
        subs.push_back(sub);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    Run run;
    run.out = out_dir;
    try {
        for (auto* sub : subs) {
            if (!sub->parsed()) continue;
            run.command = sub->get_name();
            if (sub->get_option("--seed")->count()) run.seed_flag = seed;
            if (sub->get_option("--workers")->count()) run.workers_flag = workers;
        }
        const fs::path cfg_path(config_path);
        run.config = load_config(cfg_path);
        const fs::path base = cfg_path.parent_path();
        fs::create_directories(run.out);
        Config c(run.config, "");
        if (run.command == "mesh-gen") cmd_mesh_gen(run, c);
        else if (run.command == "forward") cmd_forward(run, c, base);
        else if (run.command == "synth") cmd_synth(run, c, base);
        else if (run.command == "invert") cmd_invert(run, c, base);
        else if (run.command == "sweep") cmd_sweep(run, c, base);
        else if (run.command == "concentration") cmd_concentration(run, c, base);
        else if (run.command == "dti") cmd_dti(run, c, base);
        else if (run.command == "preprocess") cmd_preprocess(run, c, base);
    } catch (const InputError& e) {
        std::cerr << "adcinv: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "adcinv: numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "adcinv: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
