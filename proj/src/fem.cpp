#include "adc/fem.hpp"

#include "adc/error.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>

namespace adc {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

Eigen::Vector3d vec(const Point3& p) { return {p[0], p[1], p[2]}; }

SparseMatrix from_triplets(std::size_t n, const Triplets& t) {
    SparseMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    m.setFromTriplets(t.begin(), t.end());
    m.makeCompressed();
    return m;
}

} // namespace

Mat4 tet_stiffness(const Point3& a, const Point3& b, const Point3& c, const Point3& d) {
    Eigen::Matrix3d jac;
    jac.col(0) = vec(b) - vec(a);
    jac.col(1) = vec(c) - vec(a);
    jac.col(2) = vec(d) - vec(a);
    const double volume = jac.determinant() / 6.0;
    if (!(std::abs(volume) > 0.0)) throw NumericalError("degenerate tetrahedron (zero volume)");
    const Eigen::Matrix3d inv = jac.inverse();
    Eigen::Matrix<double, 4, 3> grad;
    grad.row(1) = inv.row(0);
    grad.row(2) = inv.row(1);
    grad.row(3) = inv.row(2);
    grad.row(0) = -(inv.row(0) + inv.row(1) + inv.row(2));
    return std::abs(volume) * grad * grad.transpose();
}

Mat4 tet_mass(double volume) {
    Mat4 m = Mat4::Constant(volume / 20.0);
    m.diagonal().array() = volume / 10.0;
    return m;
}

double triangle_area(const Point3& a, const Point3& b, const Point3& c) {
    return 0.5 * (vec(b) - vec(a)).cross(vec(c) - vec(a)).norm();
}

Mat3 triangle_stiffness(const Point3& a, const Point3& b, const Point3& c) {
    Eigen::Matrix<double, 3, 2> edges;
    edges.col(0) = vec(b) - vec(a);
    edges.col(1) = vec(c) - vec(a);
    const Eigen::Matrix2d metric = edges.transpose() * edges;
    const double area = 0.5 * std::sqrt(metric.determinant());
    if (!(area > 0.0)) throw NumericalError("degenerate boundary triangle (zero area)");
    Eigen::Matrix<double, 3, 2> ref_grad;
    ref_grad << -1, -1, 1, 0, 0, 1;
    return area * ref_grad * metric.inverse() * ref_grad.transpose();
}

Mat3 triangle_mass(double area) {
    Mat3 m = Mat3::Constant(area / 12.0);
    m.diagonal().array() = area / 6.0;
    return m;
}

int AssembledSystem::subdomain_slot(Subdomain s) const {
    const auto it = std::find(subdomains.begin(), subdomains.end(), s);
    return it == subdomains.end() ? -1 : static_cast<int>(it - subdomains.begin());
}

SparseMatrix AssembledSystem::combined_stiffness(std::span<const double> coefficients) const {
    if (coefficients.size() != stiffness.size())
        throw InputError("combined_stiffness: expected " + std::to_string(stiffness.size()) + " coefficients");
    SparseMatrix k(static_cast<Eigen::Index>(num_vertices), static_cast<Eigen::Index>(num_vertices));
    for (std::size_t s = 0; s < stiffness.size(); ++s) k += coefficients[s] * stiffness[s];
    return k;
}

AssembledSystem assemble(const Mesh& mesh, const AssemblyOptions& options) {
    const std::size_t n = mesh.num_vertices();
    const auto& pts = mesh.vertices();

    AssembledSystem sys;
    sys.mesh_id = mesh.id();
    sys.num_vertices = n;
    sys.subdomains = mesh.subdomains();

    Triplets mass;
    std::vector<Triplets> stiff(sys.subdomains.size());
    mass.reserve(mesh.num_tets() * 16);

    for (std::size_t t = 0; t < mesh.num_tets(); ++t) {
        const auto& tet = mesh.tets()[t];
        const auto& v = tet.v;
        const double volume = mesh.tet_volume(t);
        if (!(volume > 0.0)) throw NumericalError("assemble: degenerate tet " + std::to_string(t));
        sys.volume += volume;

        const Mat4 ke = tet_stiffness(pts[v[0]], pts[v[1]], pts[v[2]], pts[v[3]]);
        const Mat4 me = tet_mass(volume);
        auto& ks = stiff[sys.subdomain_slot(tet.label)];
        for (int i = 0; i < 4; ++i) {
            if (options.lumped_mass) mass.emplace_back(v[i], v[i], volume / 4.0);
            for (int j = 0; j < 4; ++j) {
                if (!options.lumped_mass) mass.emplace_back(v[i], v[j], me(i, j));
                ks.emplace_back(v[i], v[j], ke(i, j));
            }
        }
    }
    sys.mass = from_triplets(n, mass);
    for (const auto& ks : stiff) sys.stiffness.push_back(from_triplets(n, ks));

    Triplets bm_sas, bm_vent, bk_sas, bk_vent;
    for (const auto& f : mesh.boundary_facets()) {
        if (!is_dirichlet(f.marker)) continue;
        const auto& v = f.v;
        const double area = triangle_area(pts[v[0]], pts[v[1]], pts[v[2]]);
        const Mat3 me = triangle_mass(area);
        const Mat3 ke = triangle_stiffness(pts[v[0]], pts[v[1]], pts[v[2]]);
        const bool sas = f.marker == BoundaryMarker::Sas;
        auto& bm = sas ? bm_sas : bm_vent;
        auto& bk = sas ? bk_sas : bk_vent;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                bm.emplace_back(v[i], v[j], me(i, j));
                bk.emplace_back(v[i], v[j], ke(i, j));
            }
    }
    sys.boundary_mass_sas = from_triplets(n, bm_sas);
    sys.boundary_mass_ventricle = from_triplets(n, bm_vent);
    sys.surface_stiffness_sas = from_triplets(n, bk_sas);
    sys.surface_stiffness_ventricle = from_triplets(n, bk_vent);

    const auto sas_vertices = mesh.boundary_vertices({BoundaryMarker::Sas});
    sys.dirichlet_index = mesh.boundary_vertices({BoundaryMarker::Sas, BoundaryMarker::Ventricle});
    sys.dirichlet_marker.reserve(sys.dirichlet_index.size());
    for (auto v : sys.dirichlet_index)
        sys.dirichlet_marker.push_back(std::binary_search(sas_vertices.begin(), sas_vertices.end(), v)
                                           ? BoundaryMarker::Sas
                                           : BoundaryMarker::Ventricle);
    return sys;
}

SparseMatrix restrict_to(const SparseMatrix& a, std::span<const std::int32_t> index) {
    std::vector<std::int32_t> pos(static_cast<std::size_t>(a.cols()), -1);
    for (std::size_t i = 0; i < index.size(); ++i) pos[index[i]] = static_cast<std::int32_t>(i);
    Triplets t;
    for (std::size_t i = 0; i < index.size(); ++i)
        for (SparseMatrix::InnerIterator it(a, index[i]); it; ++it)
            if (pos[it.col()] >= 0) t.emplace_back(static_cast<int>(i), pos[it.col()], it.value());
    return from_triplets(index.size(), t);
}

Vector solve_spd(const SparseMatrix& a, const Vector& b, const SolveOptions& options) {
    const Eigen::Index n = a.rows();
    if (a.cols() != n || b.size() != n) throw InputError("solve_spd: dimension mismatch");
    if (!b.allFinite()) throw NumericalError("solve_spd: non-finite right-hand side");

    Vector x = Vector::Zero(n);
    const double bnorm = b.norm();
    if (bnorm == 0.0) return x;

    const Vector diag = a.diagonal();
    if ((diag.array() <= 0.0).any()) throw NumericalError("solve_spd: non-positive diagonal, matrix is not SPD");
    const Vector inv_diag = diag.cwiseInverse();

    const int cap = options.max_iterations > 0 ? options.max_iterations : static_cast<int>(10 * n);
    Vector r = b;
    Vector z = inv_diag.cwiseProduct(r);
    Vector p = z;
    double rz = r.dot(z);
    double rel = 1.0;
    for (int it = 0; it < cap; ++it) {
        const Vector ap = a * p;
        const double pap = p.dot(ap);
        if (!(pap > 0.0)) throw NumericalError("solve_spd: breakdown, matrix is not SPD");
        const double step = rz / pap;
        x += step * p;
        r -= step * ap;
        rel = r.norm() / bnorm;
        if (rel <= options.tolerance) {
            // The recursive residual drifts; confirm with the true one.
            rel = (b - a * x).norm() / bnorm;
            if (rel <= options.tolerance) return x;
            r = b - a * x;
        }
        z = inv_diag.cwiseProduct(r);
        const double rz_new = r.dot(z);
        p = z + (rz_new / rz) * p;
        rz = rz_new;
    }
    throw ConvergenceError("solve_spd: no convergence within " + std::to_string(cap) +
                               " iterations, relative residual " + std::to_string(rel),
                           rel, cap);
}

struct SpdFactorization::Impl {
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt;
};

SpdFactorization::SpdFactorization(const SparseMatrix& a) : impl_(std::make_unique<Impl>()), rows_(a.rows()) {
    const Eigen::SparseMatrix<double> col_major = a;
    impl_->llt.compute(col_major);
    if (impl_->llt.info() != Eigen::Success) throw NumericalError("sparse Cholesky failed: matrix is not SPD");
}

SpdFactorization::~SpdFactorization() = default;
SpdFactorization::SpdFactorization(SpdFactorization&&) noexcept = default;
SpdFactorization& SpdFactorization::operator=(SpdFactorization&&) noexcept = default;

Vector SpdFactorization::solve(const Vector& b) const {
    Vector x = impl_->llt.solve(b);
    if (!x.allFinite()) throw NumericalError("sparse Cholesky solve produced non-finite values");
    return x;
}

} // namespace adc
