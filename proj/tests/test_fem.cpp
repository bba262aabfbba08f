#include "adc/error.hpp"
#include "adc/fem.hpp"

#include "doctest.h"

#include <Eigen/Dense>

#include <random>

using namespace adc;

namespace {

Mesh phantom(int n, PhantomVariant v = PhantomVariant::ThreeDomain) {
    PhantomOptions o;
    o.resolution = n;
    o.variant = v;
    return generate_phantom(o);
}

Eigen::MatrixXd dense(const SparseMatrix& a) { return Eigen::MatrixXd(a); }

} // namespace

TEST_CASE("P1 stiffness and mass on the reference tet match the analytic matrices") {
    const Mat4 k = tet_stiffness({0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1});
    Mat4 ref;
    ref << 0.5, -1.0 / 6, -1.0 / 6, -1.0 / 6, -1.0 / 6, 1.0 / 6, 0, 0, -1.0 / 6, 0, 1.0 / 6, 0, -1.0 / 6, 0, 0,
        1.0 / 6;
    CHECK((k - ref).cwiseAbs().maxCoeff() < 1e-15);
    const Mat4 m = tet_mass(1.0 / 6);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) CHECK(m(i, j) == doctest::Approx(i == j ? 1.0 / 60 : 1.0 / 120).epsilon(1e-14));
}

TEST_CASE("P1 triangle matrices on the reference triangle") {
    const Mat3 k = triangle_stiffness({0, 0, 0}, {1, 0, 0}, {0, 1, 0});
    Mat3 ref;
    ref << 1.0, -0.5, -0.5, -0.5, 0.5, 0.0, -0.5, 0.0, 0.5;
    CHECK((k - ref).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(triangle_area({0, 0, 0}, {2, 0, 0}, {0, 0, 3}) == doctest::Approx(3.0));
    // rotated copy in 3-D gives the same matrix
    const double c = std::cos(0.3), s = std::sin(0.3);
    const Mat3 kr = triangle_stiffness({1, 1, 1}, {1 + c, 1, 1 + s}, {1, 2, 1});
    CHECK((kr - ref).cwiseAbs().maxCoeff() < 1e-14);
    const Mat3 m = triangle_mass(0.5);
    CHECK(m.sum() == doctest::Approx(0.5));
}

TEST_CASE("assembled matrices: symmetry, constants and totals") {
    const Mesh mesh = phantom(4);
    const AssembledSystem sys = assemble(mesh);
    const Eigen::Index n = static_cast<Eigen::Index>(sys.num_vertices);
    const Vector one = Vector::Ones(n);
    CHECK(one.dot(sys.mass * one) == doctest::Approx(64000.0).epsilon(1e-12));
    CHECK(sys.volume == doctest::Approx(64000.0).epsilon(1e-12));
    CHECK((dense(sys.mass) - dense(sys.mass).transpose()).cwiseAbs().maxCoeff() < 1e-12);
    REQUIRE(sys.stiffness.size() == 3);
    for (const auto& k : sys.stiffness) {
        CHECK((k * one).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((dense(k) - dense(k).transpose()).cwiseAbs().maxCoeff() < 1e-12);
    }
    CHECK(one.dot(sys.boundary_mass_sas * one) == doctest::Approx(6 * 1600.0).epsilon(1e-12));
    CHECK((sys.surface_stiffness_sas * one).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(sys.boundary_mass_ventricle.nonZeros() == 0);
    CHECK(sys.num_dirichlet() == 125 - 27);

    // x is harmonic: K(D) x = 0 on interior rows for constant D
    const std::vector<double> d(3, 2.0);
    const SparseMatrix k = sys.combined_stiffness(d);
    Vector x(n);
    for (Eigen::Index v = 0; v < n; ++v) x[v] = mesh.vertices()[static_cast<std::size_t>(v)][0];
    const Vector r = k * x;
    std::vector<bool> dir(sys.num_vertices, false);
    for (auto v : sys.dirichlet_index) dir[static_cast<std::size_t>(v)] = true;
    for (Eigen::Index v = 0; v < n; ++v)
        if (!dir[static_cast<std::size_t>(v)]) CHECK(std::abs(r[v]) < 1e-10);
}

TEST_CASE("two-domain assembly marks the ventricle wall") {
    const AssembledSystem sys = assemble(phantom(8, PhantomVariant::TwoDomain));
    const Vector one = Vector::Ones(static_cast<Eigen::Index>(sys.num_vertices));
    CHECK(one.dot(sys.boundary_mass_ventricle * one) == doctest::Approx(6 * 100.0).epsilon(1e-12));
    CHECK(sys.subdomains.size() == 2);
    CHECK(sys.subdomain_slot(Subdomain::Csf) < 0);
    std::size_t vent = 0;
    for (auto m : sys.dirichlet_marker) vent += m == BoundaryMarker::Ventricle;
    CHECK(vent == 26);
}

TEST_CASE("lumped mass is diagonal with the same total") {
    const Mesh mesh = phantom(4);
    AssemblyOptions o;
    o.lumped_mass = true;
    const AssembledSystem sys = assemble(mesh, o);
    const Eigen::MatrixXd m = dense(sys.mass);
    CHECK((m - Eigen::MatrixXd(m.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0);
    CHECK(m.sum() == doctest::Approx(64000.0).epsilon(1e-12));
}

TEST_CASE("Jacobi PCG matches a dense Cholesky oracle") {
    const AssembledSystem sys = assemble(phantom(5));
    const std::vector<double> d{1000.0, 4.0, 8.0};
    const SparseMatrix a = SparseMatrix(sys.mass + 0.24 * sys.combined_stiffness(d));
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g;
    Vector b(a.rows());
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = g(rng);
    const Vector ref = dense(a).llt().solve(b);
    const Vector x = solve_spd(a, b, {1e-12, 0});
    CHECK((x - ref).norm() / ref.norm() < 1e-9);
    const SpdFactorization f(a);
    CHECK((f.solve(b) - ref).norm() / ref.norm() < 1e-12);
    CHECK(solve_spd(a, Vector::Zero(b.size())).norm() == 0.0);
}

TEST_CASE("PCG iteration cap raises ConvergenceError with the residual") {
    const AssembledSystem sys = assemble(phantom(5));
    const std::vector<double> d{1000.0, 4.0, 8.0};
    const SparseMatrix a = SparseMatrix(sys.mass + 10.0 * sys.combined_stiffness(d));
    const Vector b = Vector::LinSpaced(a.rows(), -1.0, 1.0);
    try {
        solve_spd(a, b, {1e-14, 2});
        FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
        CHECK(e.iterations() == 2);
        CHECK(e.residual() > 1e-14);
    }
}

TEST_CASE("restrict_to picks rows and columns") {
    Eigen::MatrixXd d(3, 3);
    d << 1, 2, 3, 4, 5, 6, 7, 8, 9;
    const SparseMatrix a = d.sparseView();
    const std::vector<std::int32_t> idx{0, 2};
    const Eigen::MatrixXd r = dense(restrict_to(a, idx));
    Eigen::MatrixXd ref(2, 2);
    ref << 1, 3, 7, 9;
    CHECK(r == ref);
}
