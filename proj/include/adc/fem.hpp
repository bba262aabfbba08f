#pragma once

#include "adc/mesh.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <memory>
#include <span>
#include <vector>

namespace adc {

using Vector = Eigen::VectorXd;
/// Compressed sparse row storage.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct AssemblyOptions {
    /// Row-sum lumped volume mass matrix instead of the consistent one.
    bool lumped_mass = false;
};

/// All P1 matrices needed by the forward, adjoint and objective computations.
///
/// Volume and surface matrices are global (num_vertices x num_vertices); the
/// surface ones are supported only on vertices of facets carrying their marker.
struct AssembledSystem {
    std::uint64_t mesh_id = 0;
    std::size_t num_vertices = 0;

    SparseMatrix mass;
    /// Labels present in the mesh, ascending; `stiffness[i]` belongs to `subdomains[i]`.
    std::vector<Subdomain> subdomains;
    /// Unit-coefficient stiffness restricted to each subdomain.
    std::vector<SparseMatrix> stiffness;

    SparseMatrix boundary_mass_sas;
    SparseMatrix boundary_mass_ventricle;
    SparseMatrix surface_stiffness_sas;
    SparseMatrix surface_stiffness_ventricle;

    /// Dirichlet vertices (sorted) and the marker each one carries. A vertex
    /// touching both Dirichlet surfaces is attributed to the SAS.
    std::vector<std::int32_t> dirichlet_index;
    std::vector<BoundaryMarker> dirichlet_marker;

    double volume = 0.0;

    std::size_t num_dirichlet() const noexcept { return dirichlet_index.size(); }
    std::size_t num_subdomains() const noexcept { return subdomains.size(); }

    /// Position of a label in `subdomains`, or -1 when absent.
    int subdomain_slot(Subdomain s) const;

    /// K(D) = sum_s D_s K_s with `coefficients` aligned to `subdomains`.
    SparseMatrix combined_stiffness(std::span<const double> coefficients) const;
};

AssembledSystem assemble(const Mesh& mesh, const AssemblyOptions& options = {});

/// P1 element matrices, exposed for testing.
using Mat4 = Eigen::Matrix<double, 4, 4>;
using Mat3 = Eigen::Matrix<double, 3, 3>;
Mat4 tet_stiffness(const Point3& a, const Point3& b, const Point3& c, const Point3& d);
Mat4 tet_mass(double volume);
Mat3 triangle_stiffness(const Point3& a, const Point3& b, const Point3& c);
Mat3 triangle_mass(double area);
double triangle_area(const Point3& a, const Point3& b, const Point3& c);

/// Restrict a global matrix to rows/cols in `index` (sorted). Used for boundary
/// matrices acting on Dirichlet-vertex vectors.
SparseMatrix restrict_to(const SparseMatrix& a, std::span<const std::int32_t> index);

struct SolveOptions {
    double tolerance = 1e-10;  ///< relative residual ||Ax-b|| / ||b||
    int max_iterations = 0;    ///< 0 means 10 * dimension
};

/// Jacobi-preconditioned conjugate gradients for SPD systems. Throws
/// ConvergenceError carrying the achieved residual when the cap is hit.
Vector solve_spd(const SparseMatrix& a, const Vector& b, const SolveOptions& options = {});

/// Sparse Cholesky factorization, reusable across right-hand sides.
class SpdFactorization {
public:
    explicit SpdFactorization(const SparseMatrix& a);
    ~SpdFactorization();
    SpdFactorization(SpdFactorization&&) noexcept;
    SpdFactorization& operator=(SpdFactorization&&) noexcept;

    Vector solve(const Vector& b) const;
    Eigen::Index rows() const noexcept { return rows_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    Eigen::Index rows_ = 0;
};

} // namespace adc
