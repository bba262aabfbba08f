#pragma once

#include "adc/forward.hpp"
#include "adc/lbfgs.hpp"

#include <optional>
#include <vector>

namespace adc {

/// Boundary regularization weights. The gradient weight is gamma_tilde on the
/// SAS and ventricle_factor * gamma_tilde on the ventricle wall.
struct RegParams {
    double alpha = 0.0;
    double beta = 0.0;
    double gamma_tilde = 0.0;
    double ventricle_factor = 0.01;

    double gamma_sas() const noexcept { return gamma_tilde; }
    double gamma_ventricle() const noexcept { return ventricle_factor * gamma_tilde; }
    void validate() const;
};

/// Concentration fields observed at times tau_i (hours).
struct ObservationSeries {
    std::vector<double> times;
    std::vector<Vector> fields;

    std::size_t size() const noexcept { return times.size(); }
};

/// Nearest step index for every observation time. Throws InputError when a
/// time lies outside [0, k dt] or the times are not strictly increasing.
std::vector<int> snap_observations(const std::vector<double>& times, double dt, int steps);

/// Trapezoidal weights w_0 = w_k = dt/2, w_j = dt otherwise.
std::vector<double> trapezoid_weights(double dt, int steps);

/// Boundary matrices restricted to the Dirichlet vertices.
struct BoundaryOperators {
    SparseMatrix mass;          ///< M_Gr + M_Gb
    SparseMatrix stiffness_sas;
    SparseMatrix stiffness_ventricle;

    explicit BoundaryOperators(const AssembledSystem& system);
};

/// Discrete L2(Gamma x [0,T]) norm of boundary data: sqrt(sum_j w_j g_j' M_G g_j).
double boundary_l2_norm(const BoundaryMatrix& g, const SparseMatrix& boundary_mass, double dt);

/// Gradient of J with respect to (D, g).
struct ObjectiveGradient {
    double value = 0.0;
    double misfit = 0.0;
    double regularization = 0.0;
    std::vector<double> diffusion;  ///< dJ/dD_s
    BoundaryMatrix boundary;        ///< dJ/dg
};

/// Discrete objective
///   J = sum_i (u_j(i) - u_obs,i)' M (u_j(i) - u_obs,i)
///     + sum_j w_j [ a/2 g_j' M_G g_j + gr/2 g_j' K_Gr g_j + gb/2 g_j' K_Gb g_j ]
///     + b/(2 dt) sum_{j>=1} (g_j - g_{j-1})' M_G (g_j - g_{j-1})
/// constrained by the backward-Euler recursion, and its discrete adjoint gradient.
class InverseProblem {
public:
    InverseProblem(const AssembledSystem& system, ObservationSeries observations, RegParams reg, double dt,
                   int steps, std::optional<Vector> initial_state = std::nullopt, ForwardOptions forward = {});

    double objective(const ControlState& control) const;
    ObjectiveGradient gradient(const ControlState& control) const;

    /// Regularization-only part for boundary data g (value, and gradient when requested).
    double regularization(const BoundaryMatrix& g, BoundaryMatrix* grad = nullptr) const;

    const AssembledSystem& system() const noexcept { return *system_; }
    const ObservationSeries& observations() const noexcept { return obs_; }
    const std::vector<int>& snap_index() const noexcept { return snap_; }
    const RegParams& reg() const noexcept { return reg_; }
    const BoundaryOperators& boundary_operators() const noexcept { return ops_; }
    const Vector& initial_state() const noexcept { return u0_; }
    double dt() const noexcept { return dt_; }
    int steps() const noexcept { return steps_; }

private:
    double misfit(const StateSeries& states) const;

    const AssembledSystem* system_;
    ObservationSeries obs_;
    RegParams reg_;
    double dt_;
    int steps_;
    Vector u0_;
    ForwardOptions forward_;
    std::vector<int> snap_;
    std::vector<double> weights_;
    BoundaryOperators ops_;
};

double objective(const AssembledSystem& system, const ControlState& control, const ObservationSeries& obs,
                 const RegParams& reg, double dt, int steps);
ObjectiveGradient gradient(const AssembledSystem& system, const ControlState& control, const ObservationSeries& obs,
                           const RegParams& reg, double dt, int steps);

struct OptimizerOptions {
    int memory = 10;
    int max_iterations = 500;
    double rtol = 1e-6;
    int max_halvings = 50;
};

/// Signed per-subdomain relative errors and the relative boundary-data error.
struct RelativeErrors {
    std::vector<Subdomain> subdomains;
    std::vector<double> diffusion;  ///< (D_rec - D_true) / D_true
    double boundary = 0.0;          ///< ||g_rec - g_true|| / ||g_true|| in L2(Gamma x [0,T])

    /// Relative error for a label, or nullopt when absent.
    std::optional<double> for_subdomain(Subdomain s) const;
};

struct InverseResult {
    ControlState control;
    std::vector<double> objective_history;
    std::vector<double> gradient_norm_history;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
    std::string message;
    std::optional<RelativeErrors> errors;
};

/// L-BFGS on (log D, g / s), where s = max |u_obs| makes the unknowns and the
/// objective scale-free. Stops when the scaled gradient satisfies
/// ||grad||_inf <= rtol * max(1, ||grad_0||_inf) or at the iteration cap.
InverseResult optimize(const InverseProblem& problem, const ControlState& initial,
                       const OptimizerOptions& options = {}, const std::optional<ControlState>& truth = std::nullopt);

RelativeErrors relative_errors(const AssembledSystem& system, const ControlState& recovered,
                               const ControlState& truth, double dt);

/// Default starting point: D = 1 for tissue, 100 for CSF, g = 0.
ControlState default_initial_control(const AssembledSystem& system, int steps);

/// Weighted surface-gradient energy sum_j w_j g_j' (K_Gr + f K_Gb) g_j with f the ventricle factor.
double surface_gradient_energy(const InverseProblem& problem, const BoundaryMatrix& g);

} // namespace adc
