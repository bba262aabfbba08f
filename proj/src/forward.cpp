#include "adc/forward.hpp"

#include "adc/error.hpp"

#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace adc {

TimeStepper::TimeStepper(const AssembledSystem& system, std::span<const double> diffusion, double dt,
                         const ForwardOptions& options)
    : system_(&system), dt_(dt), options_(options) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InputError("time step must be positive");
    if (diffusion.size() != system.num_subdomains())
        throw InputError("expected " + std::to_string(system.num_subdomains()) + " diffusion coefficients, got " +
                         std::to_string(diffusion.size()));
    for (double d : diffusion)
        if (!(d > 0.0) || !std::isfinite(d)) throw InputError("diffusion coefficients must be positive and finite");

    system_matrix_ = system.mass + dt * system.combined_stiffness(diffusion);

    std::vector<bool> fixed(system.num_vertices, false);
    for (auto v : system.dirichlet_index) fixed[v] = true;
    for (std::size_t v = 0; v < system.num_vertices; ++v)
        if (!fixed[v]) free_.push_back(static_cast<std::int32_t>(v));
    free_block_ = restrict_to(system_matrix_, free_);
    if (options_.solver == LinearSolver::Cholesky && !free_.empty()) factor_.emplace(free_block_);
}

Vector TimeStepper::solve_free(const Vector& rhs) const {
    Vector rhs_free(static_cast<Eigen::Index>(free_.size()));
    for (std::size_t i = 0; i < free_.size(); ++i) rhs_free[i] = rhs[free_[i]];
    Vector x_free;
    if (free_.empty())
        x_free = Vector();
    else if (factor_)
        x_free = factor_->solve(rhs_free);
    else
        x_free = solve_spd(free_block_, rhs_free, SolveOptions{options_.cg_tolerance, 0});
    Vector out = Vector::Zero(rhs.size());
    for (std::size_t i = 0; i < free_.size(); ++i) out[free_[i]] = x_free[i];
    return out;
}

Vector TimeStepper::step(const Vector& previous, const Eigen::Ref<const Vector>& dirichlet_values) const {
    const Vector g_full = extend_dirichlet(*system_, dirichlet_values);
    const Vector rhs = system_->mass * previous - system_matrix_ * g_full;
    Vector next = solve_free(rhs);
    next += g_full;
    return next;
}

Vector extend_dirichlet(const AssembledSystem& system, const Eigen::Ref<const Vector>& values) {
    Vector out = Vector::Zero(static_cast<Eigen::Index>(system.num_vertices));
    for (std::size_t i = 0; i < system.dirichlet_index.size(); ++i) out[system.dirichlet_index[i]] = values[i];
    return out;
}

void validate_control(const AssembledSystem& system, const ControlState& control, int steps) {
    if (control.diffusion.size() != system.num_subdomains())
        throw InputError("control: expected " + std::to_string(system.num_subdomains()) + " diffusion coefficients");
    for (double d : control.diffusion)
        if (!(d > 0.0) || !std::isfinite(d)) throw InputError("control: diffusion coefficients must be positive");
    if (control.boundary.rows() != steps + 1 ||
        control.boundary.cols() != static_cast<Eigen::Index>(system.num_dirichlet()))
        throw InputError("control: boundary data must have shape (k+1) x num_dirichlet");
    if (!control.boundary.allFinite()) throw InputError("control: non-finite boundary data");
}

StateSeries forward_solve(const AssembledSystem& system, const ControlState& control, const Vector& u0, double dt,
                          int steps, const ForwardOptions& options) {
    if (steps < 0) throw InputError("forward_solve: negative step count");
    validate_control(system, control, steps);
    if (u0.size() != static_cast<Eigen::Index>(system.num_vertices))
        throw InputError("forward_solve: initial field has wrong length");
    if (!u0.allFinite()) throw NumericalError("forward_solve: non-finite initial field");

    const TimeStepper stepper(system, control.diffusion, dt, options);
    StateSeries out;
    out.dt = dt;
    out.states.reserve(static_cast<std::size_t>(steps) + 1);

    Vector u = u0;
    for (std::size_t i = 0; i < system.dirichlet_index.size(); ++i)
        u[system.dirichlet_index[i]] = control.boundary(0, static_cast<Eigen::Index>(i));
    out.states.push_back(u);
    for (int j = 1; j <= steps; ++j) {
        u = stepper.step(u, control.boundary.row(j).transpose());
        if (!u.allFinite()) throw NumericalError("forward_solve: non-finite state at step " + std::to_string(j));
        out.states.push_back(u);
    }
    return out;
}

void write_state_series(const Mesh& mesh, const StateSeries& series, const std::filesystem::path& dir,
                        const std::string& stem) {
    std::filesystem::create_directories(dir);
    nlohmann::json manifest;
    manifest["dt"] = series.dt;
    manifest["k"] = series.steps();
    manifest["files"] = nlohmann::json::array();
    for (int j = 0; j <= series.steps(); ++j) {
        char name[64];
        std::snprintf(name, sizeof(name), "%s_%04d.field", stem.c_str(), j);
        VertexField f{mesh.id(), std::vector<double>(series.states[j].data(),
                                                     series.states[j].data() + series.states[j].size())};
        write_field(f, dir / name);
        manifest["files"].push_back(name);
    }
    std::ofstream out(dir / (stem + "_series.json"));
    out << manifest.dump(2) << "\n";
}

} // namespace adc
