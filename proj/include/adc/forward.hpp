#pragma once

#include "adc/fem.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <optional>
#include <vector>

namespace adc {

/// Rows are time steps 0..k, columns follow AssembledSystem::dirichlet_index.
using BoundaryMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Optimization unknowns: one diffusion coefficient per present subdomain
/// (mm^2/h, aligned with AssembledSystem::subdomains) and the Dirichlet data.
struct ControlState {
    std::vector<double> diffusion;
    BoundaryMatrix boundary;

    int steps() const noexcept { return static_cast<int>(boundary.rows()) - 1; }
};

struct StateSeries {
    double dt = 0.0;
    std::vector<Vector> states;  ///< u_0 .. u_k

    int steps() const noexcept { return static_cast<int>(states.size()) - 1; }
    double time(int j) const noexcept { return j * dt; }
};

enum class LinearSolver { Cholesky, ConjugateGradient };

struct ForwardOptions {
    LinearSolver solver = LinearSolver::Cholesky;
    double cg_tolerance = 1e-12;
};

/// Backward-Euler operator for fixed coefficients and step size.
///
/// Solves (M + dt K(D)) u_j = M u_{j-1} on the free vertices with the Dirichlet
/// values moved to the right-hand side; the free-free block is factorized once.
class TimeStepper {
public:
    TimeStepper(const AssembledSystem& system, std::span<const double> diffusion, double dt,
                const ForwardOptions& options = {});

    const AssembledSystem& system() const noexcept { return *system_; }
    double dt() const noexcept { return dt_; }

    /// Full system matrix M + dt K(D).
    const SparseMatrix& matrix() const noexcept { return system_matrix_; }
    const std::vector<std::int32_t>& free_index() const noexcept { return free_; }

    /// One step: returns u_j given u_{j-1} and the Dirichlet values g_j.
    Vector step(const Vector& previous, const Eigen::Ref<const Vector>& dirichlet_values) const;

    /// Solve with the free-free block: x_F = A_FF^{-1} rhs_F (full-length
    /// input/output, Dirichlet entries of the result are zero).
    Vector solve_free(const Vector& rhs) const;

private:
    const AssembledSystem* system_;
    double dt_;
    ForwardOptions options_;
    SparseMatrix system_matrix_;
    SparseMatrix free_block_;
    std::vector<std::int32_t> free_;
    std::optional<SpdFactorization> factor_;
};

/// Scatter Dirichlet values into a full-length vector (zero elsewhere).
Vector extend_dirichlet(const AssembledSystem& system, const Eigen::Ref<const Vector>& values);

StateSeries forward_solve(const AssembledSystem& system, const ControlState& control, const Vector& u0, double dt,
                          int steps, const ForwardOptions& options = {});

void validate_control(const AssembledSystem& system, const ControlState& control, int steps);

/// Per-step field files plus a JSON manifest {dt, k, files[]}.
void write_state_series(const Mesh& mesh, const StateSeries& series, const std::filesystem::path& dir,
                        const std::string& stem = "u");

} // namespace adc
