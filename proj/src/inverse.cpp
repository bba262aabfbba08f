#include "adc/inverse.hpp"

#include "adc/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace adc {

void RegParams::validate() const {
    for (double w : {alpha, beta, gamma_tilde, ventricle_factor})
        if (!(w >= 0.0) || !std::isfinite(w)) throw InputError("regularization weights must be finite and >= 0");
}

std::vector<int> snap_observations(const std::vector<double>& times, double dt, int steps) {
    if (!(dt > 0.0)) throw InputError("time step must be positive");
    const double end = steps * dt;
    const double slack = 1e-9 * std::max(1.0, end);
    std::vector<int> out;
    out.reserve(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double t = times[i];
        if (!std::isfinite(t) || t < -slack || t > end + slack)
            throw InputError("observation time " + std::to_string(t) + " h outside [0, " + std::to_string(end) + "]");
        if (i > 0 && !(t > times[i - 1])) throw InputError("observation times must be strictly increasing");
        out.push_back(std::clamp(static_cast<int>(std::lround(t / dt)), 0, steps));
    }
    return out;
}

std::vector<double> trapezoid_weights(double dt, int steps) {
    std::vector<double> w(static_cast<std::size_t>(steps) + 1, dt);
    w.front() = 0.5 * dt;
    w.back() = steps == 0 ? 0.0 : 0.5 * dt;
    return w;
}

BoundaryOperators::BoundaryOperators(const AssembledSystem& system)
    : mass(restrict_to(system.boundary_mass_sas + system.boundary_mass_ventricle, system.dirichlet_index)),
      stiffness_sas(restrict_to(system.surface_stiffness_sas, system.dirichlet_index)),
      stiffness_ventricle(restrict_to(system.surface_stiffness_ventricle, system.dirichlet_index)) {}

double boundary_l2_norm(const BoundaryMatrix& g, const SparseMatrix& boundary_mass, double dt) {
    const auto w = trapezoid_weights(dt, static_cast<int>(g.rows()) - 1);
    double sum = 0.0;
    for (Eigen::Index j = 0; j < g.rows(); ++j) {
        const Vector gj = g.row(j).transpose();
        sum += w[j] * gj.dot(boundary_mass * gj);
    }
    return std::sqrt(std::max(sum, 0.0));
}

// ---------------------------------------------------------------------------

InverseProblem::InverseProblem(const AssembledSystem& system, ObservationSeries observations, RegParams reg,
                               double dt, int steps, std::optional<Vector> initial_state, ForwardOptions forward)
    : system_(&system), obs_(std::move(observations)), reg_(reg), dt_(dt), steps_(steps), forward_(forward),
      ops_(system) {
    reg_.validate();
    if (steps < 1) throw InputError("inverse problem needs at least one time step");
    if (obs_.times.size() != obs_.fields.size()) throw InputError("observation times and fields differ in count");
    for (const auto& f : obs_.fields) {
        if (f.size() != static_cast<Eigen::Index>(system.num_vertices))
            throw InputError("observation field length differs from mesh vertex count");
        if (!f.allFinite()) throw InputError("observation field contains non-finite values");
    }
    snap_ = snap_observations(obs_.times, dt, steps);
    weights_ = trapezoid_weights(dt, steps);
    u0_ = initial_state ? *initial_state : Vector::Zero(static_cast<Eigen::Index>(system.num_vertices));
    if (u0_.size() != static_cast<Eigen::Index>(system.num_vertices))
        throw InputError("initial state length differs from mesh vertex count");
}

double InverseProblem::regularization(const BoundaryMatrix& g, BoundaryMatrix* grad) const {
    const double a = reg_.alpha, b = reg_.beta, gr = reg_.gamma_sas(), gb = reg_.gamma_ventricle();
    if (grad) grad->setZero(g.rows(), g.cols());

    double value = 0.0;
    for (int j = 0; j <= steps_; ++j) {
        const Vector gj = g.row(j).transpose();
        Vector weighted = Vector::Zero(gj.size());
        if (a != 0.0) weighted += a * (ops_.mass * gj);
        if (gr != 0.0) weighted += gr * (ops_.stiffness_sas * gj);
        if (gb != 0.0) weighted += gb * (ops_.stiffness_ventricle * gj);
        value += 0.5 * weights_[j] * gj.dot(weighted);
        if (grad) grad->row(j) += weights_[j] * weighted.transpose();
    }
    if (b != 0.0) {
        for (int j = 1; j <= steps_; ++j) {
            const Vector diff = (g.row(j) - g.row(j - 1)).transpose();
            const Vector mdiff = ops_.mass * diff;
            value += 0.5 * b / dt_ * diff.dot(mdiff);
            if (grad) {
                grad->row(j) += (b / dt_) * mdiff.transpose();
                grad->row(j - 1) -= (b / dt_) * mdiff.transpose();
            }
        }
    }
    return value;
}

double InverseProblem::misfit(const StateSeries& states) const {
    double value = 0.0;
    for (std::size_t i = 0; i < obs_.size(); ++i) {
        const Vector e = states.states[snap_[i]] - obs_.fields[i];
        value += e.dot(system_->mass * e);
    }
    return value;
}

double InverseProblem::objective(const ControlState& control) const {
    const auto states = forward_solve(*system_, control, u0_, dt_, steps_, forward_);
    return misfit(states) + regularization(control.boundary);
}

ObjectiveGradient InverseProblem::gradient(const ControlState& control) const {
    const AssembledSystem& sys = *system_;
    const auto states = forward_solve(sys, control, u0_, dt_, steps_, forward_);
    const TimeStepper stepper(sys, control.diffusion, dt_, forward_);

    ObjectiveGradient out;
    out.misfit = misfit(states);
    out.regularization = regularization(control.boundary, &out.boundary);
    out.value = out.misfit + out.regularization;
    out.diffusion.assign(sys.num_subdomains(), 0.0);

    // dJ/du_j from the misfit.
    std::vector<Vector> source(static_cast<std::size_t>(steps_) + 1);
    for (std::size_t i = 0; i < obs_.size(); ++i) {
        const int j = snap_[i];
        const Vector r = 2.0 * (sys.mass * (states.states[j] - obs_.fields[i]));
        if (source[j].size() == 0)
            source[j] = r;
        else
            source[j] += r;
    }

    const auto& dir = sys.dirichlet_index;
    auto add_dirichlet = [&](int j, const Vector& full, double sign) {
        for (std::size_t d = 0; d < dir.size(); ++d) out.boundary(j, static_cast<Eigen::Index>(d)) += sign * full[dir[d]];
    };

    // Backward sweep: lambda_j = A_FF^{-1} (r_j + M lambda_{j+1})_F, zero on Dirichlet vertices.
    Vector m_lambda_next = Vector::Zero(static_cast<Eigen::Index>(sys.num_vertices));
    for (int j = steps_; j >= 1; --j) {
        Vector rhs = m_lambda_next;
        if (source[j].size()) rhs += source[j];
        const Vector lambda = stepper.solve_free(rhs);

        if (source[j].size()) add_dirichlet(j, source[j], 1.0);
        add_dirichlet(j, m_lambda_next, 1.0);
        add_dirichlet(j, stepper.matrix() * lambda, -1.0);

        for (std::size_t s = 0; s < sys.num_subdomains(); ++s)
            out.diffusion[s] -= dt_ * lambda.dot(sys.stiffness[s] * states.states[j]);

        m_lambda_next = sys.mass * lambda;
    }
    if (source[0].size()) add_dirichlet(0, source[0], 1.0);
    add_dirichlet(0, m_lambda_next, 1.0);
    return out;
}

double objective(const AssembledSystem& system, const ControlState& control, const ObservationSeries& obs,
                 const RegParams& reg, double dt, int steps) {
    return InverseProblem(system, obs, reg, dt, steps).objective(control);
}

ObjectiveGradient gradient(const AssembledSystem& system, const ControlState& control, const ObservationSeries& obs,
                           const RegParams& reg, double dt, int steps) {
    return InverseProblem(system, obs, reg, dt, steps).gradient(control);
}

// ---------------------------------------------------------------------------

std::optional<double> RelativeErrors::for_subdomain(Subdomain s) const {
    for (std::size_t i = 0; i < subdomains.size(); ++i)
        if (subdomains[i] == s) return diffusion[i];
    return std::nullopt;
}

RelativeErrors relative_errors(const AssembledSystem& system, const ControlState& recovered,
                               const ControlState& truth, double dt) {
    if (recovered.diffusion.size() != truth.diffusion.size() || recovered.boundary.rows() != truth.boundary.rows() ||
        recovered.boundary.cols() != truth.boundary.cols())
        throw InputError("relative_errors: recovered and true controls differ in shape");
    RelativeErrors out;
    out.subdomains = system.subdomains;
    for (std::size_t s = 0; s < truth.diffusion.size(); ++s)
        out.diffusion.push_back((recovered.diffusion[s] - truth.diffusion[s]) / truth.diffusion[s]);

    const BoundaryOperators ops(system);
    const double diff = boundary_l2_norm(recovered.boundary - truth.boundary, ops.mass, dt);
    const double ref = boundary_l2_norm(truth.boundary, ops.mass, dt);
    out.boundary = ref > 0.0 ? diff / ref : (diff > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    return out;
}

ControlState default_initial_control(const AssembledSystem& system, int steps) {
    ControlState c;
    for (auto s : system.subdomains) c.diffusion.push_back(s == Subdomain::Csf ? 100.0 : 1.0);
    c.boundary = BoundaryMatrix::Zero(steps + 1, static_cast<Eigen::Index>(system.num_dirichlet()));
    return c;
}

double surface_gradient_energy(const InverseProblem& problem, const BoundaryMatrix& g) {
    const auto& ops = problem.boundary_operators();
    const auto w = trapezoid_weights(problem.dt(), problem.steps());
    double sum = 0.0;
    for (Eigen::Index j = 0; j < g.rows(); ++j) {
        const Vector gj = g.row(j).transpose();
        sum += w[j] * gj.dot(ops.stiffness_sas * gj + problem.reg().ventricle_factor * (ops.stiffness_ventricle * gj));
    }
    return sum;
}

InverseResult optimize(const InverseProblem& problem, const ControlState& initial, const OptimizerOptions& options,
                       const std::optional<ControlState>& truth) {
    const AssembledSystem& sys = problem.system();
    validate_control(sys, initial, problem.steps());

    double scale = 0.0;
    for (const auto& f : problem.observations().fields) scale = std::max(scale, f.cwiseAbs().maxCoeff());
    if (problem.initial_state().size()) scale = std::max(scale, problem.initial_state().cwiseAbs().maxCoeff());
    if (!(scale > 0.0)) scale = 1.0;

    const auto ns = static_cast<Eigen::Index>(sys.num_subdomains());
    const Eigen::Index rows = initial.boundary.rows(), cols = initial.boundary.cols();
    const Eigen::Index ng = rows * cols;

    auto decode = [&](const Eigen::VectorXd& x) {
        ControlState c;
        c.diffusion.resize(static_cast<std::size_t>(ns));
        for (Eigen::Index s = 0; s < ns; ++s) c.diffusion[s] = std::exp(x[s]);
        c.boundary = scale * Eigen::Map<const BoundaryMatrix>(x.data() + ns, rows, cols);
        return c;
    };

    Eigen::VectorXd x0(ns + ng);
    for (Eigen::Index s = 0; s < ns; ++s) x0[s] = std::log(initial.diffusion[s]);
    Eigen::Map<BoundaryMatrix>(x0.data() + ns, rows, cols) = initial.boundary / scale;

    bool first = true;
    const Objective f = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) -> double {
        ControlState c;
        ObjectiveGradient gr;
        try {
            c = decode(x);
            gr = problem.gradient(c);
        } catch (const Error&) {
            if (first) throw;
            grad.setZero(x.size());
            return std::numeric_limits<double>::infinity();
        }
        first = false;
        grad.resize(x.size());
        for (Eigen::Index s = 0; s < ns; ++s) grad[s] = c.diffusion[s] * gr.diffusion[s] / (scale * scale);
        Eigen::Map<BoundaryMatrix>(grad.data() + ns, rows, cols) = gr.boundary / scale;
        return gr.value / (scale * scale);
    };

    LbfgsOptions lopt;
    lopt.memory = options.memory;
    lopt.max_iterations = options.max_iterations;
    lopt.rtol = options.rtol;
    lopt.max_halvings = options.max_halvings;
    const LbfgsReport rep = minimize_lbfgs(f, x0, lopt);

    InverseResult out;
    out.control = decode(rep.x);
    for (double v : rep.value_history) out.objective_history.push_back(v * scale * scale);
    out.gradient_norm_history = rep.gradient_norm_history;
    out.iterations = rep.iterations;
    out.evaluations = rep.evaluations;
    out.converged = rep.converged;
    out.message = rep.message;
    if (truth) out.errors = relative_errors(sys, out.control, *truth, problem.dt());
    return out;
}

} // namespace adc
