#include "adc/error.hpp"
#include "adc/forward.hpp"
#include "adc/synthetic.hpp"

#include "doctest.h"

#include "json.hpp"

#include <filesystem>
#include <fstream>

using namespace adc;

namespace {

Mesh phantom(int n, PhantomVariant v = PhantomVariant::ThreeDomain, BoundaryMarker outer = BoundaryMarker::Sas) {
    PhantomOptions o;
    o.resolution = n;
    o.variant = v;
    o.outer_marker = outer;
    return generate_phantom(o);
}

ControlState constant_control(const AssembledSystem& sys, int steps, double g) {
    ControlState c;
    c.diffusion = reference_diffusion(sys);
    c.boundary = BoundaryMatrix::Constant(steps + 1, static_cast<Eigen::Index>(sys.num_dirichlet()), g);
    return c;
}

} // namespace

TEST_CASE("zero data gives the zero solution") {
    const AssembledSystem sys = assemble(phantom(4));
    const auto s = forward_solve(sys, constant_control(sys, 5, 0.0), Vector::Zero(static_cast<Eigen::Index>(sys.num_vertices)), 0.5, 5);
    REQUIRE(s.states.size() == 6);
    for (const auto& u : s.states) CHECK(u.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("constants are steady states for both solvers") {
    const AssembledSystem sys = assemble(phantom(4, PhantomVariant::TwoDomain));
    const Vector u0 = Vector::Constant(static_cast<Eigen::Index>(sys.num_vertices), 0.7);
    for (auto solver : {LinearSolver::Cholesky, LinearSolver::ConjugateGradient}) {
        ForwardOptions o;
        o.solver = solver;
        const auto s = forward_solve(sys, constant_control(sys, 10, 0.7), u0, 1.0, 10, o);
        for (const auto& u : s.states) CHECK((u.array() - 0.7).abs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("Cholesky and CG paths agree") {
    const AssembledSystem sys = assemble(phantom(5));
    ControlState c;
    c.diffusion = reference_diffusion(sys);
    c.boundary = manufactured_boundary(sys, 0.24, 20);
    const Vector u0 = Vector::Zero(static_cast<Eigen::Index>(sys.num_vertices));
    ForwardOptions cg;
    cg.solver = LinearSolver::ConjugateGradient;
    const auto a = forward_solve(sys, c, u0, 0.24, 20);
    const auto b = forward_solve(sys, c, u0, 0.24, 20, cg);
    CHECK((a.states.back() - b.states.back()).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("discrete maximum principle with lumped mass") {
    AssemblyOptions ao;
    ao.lumped_mass = true;
    const AssembledSystem sys = assemble(phantom(6), ao);
    ControlState c;
    c.diffusion = reference_diffusion(sys);
    c.boundary = manufactured_boundary(sys, 0.24, 100);
    const auto s = forward_solve(sys, c, Vector::Zero(static_cast<Eigen::Index>(sys.num_vertices)), 0.24, 100);
    for (const auto& u : s.states) {
        CHECK(u.minCoeff() >= -1e-12);
        CHECK(u.maxCoeff() <= 1.296 + 1e-12);
    }
}

TEST_CASE("pure Neumann solve conserves total mass") {
    const AssembledSystem sys = assemble(phantom(5, PhantomVariant::ThreeDomain, BoundaryMarker::NeumannGreen));
    REQUIRE(sys.num_dirichlet() == 0);
    Vector u0(static_cast<Eigen::Index>(sys.num_vertices));
    for (Eigen::Index i = 0; i < u0.size(); ++i) u0[i] = std::sin(0.37 * i) + 1.0;
    const auto s = forward_solve(sys, constant_control(sys, 100, 0.0), u0, 0.5, 100);
    const Vector one = Vector::Ones(u0.size());
    const double m0 = one.dot(sys.mass * u0);
    for (const auto& u : s.states) CHECK(std::abs(one.dot(sys.mass * u) - m0) <= 1e-10 * std::abs(m0));
}

TEST_CASE("initial Dirichlet values are overwritten by g_0") {
    const AssembledSystem sys = assemble(phantom(4));
    const auto s = forward_solve(sys, constant_control(sys, 1, 2.0),
                                 Vector::Zero(static_cast<Eigen::Index>(sys.num_vertices)), 1.0, 1);
    for (auto v : sys.dirichlet_index) CHECK(s.states[0][v] == 2.0);
    const Vector e = extend_dirichlet(sys, Vector::Constant(static_cast<Eigen::Index>(sys.num_dirichlet()), 3.0));
    CHECK(e.sum() == doctest::Approx(3.0 * sys.num_dirichlet()));
}

TEST_CASE("control validation") {
    const AssembledSystem sys = assemble(phantom(4));
    const Vector u0 = Vector::Zero(static_cast<Eigen::Index>(sys.num_vertices));
    ControlState c = constant_control(sys, 3, 0.0);
    CHECK_THROWS_AS(forward_solve(sys, c, u0, 1.0, 4), InputError);
    c.diffusion[1] = -1.0;
    CHECK_THROWS_AS(forward_solve(sys, c, u0, 1.0, 3), InputError);
    c = constant_control(sys, 3, 0.0);
    c.boundary(1, 2) = std::nan("");
    CHECK_THROWS_AS(forward_solve(sys, c, u0, 1.0, 3), InputError);
    c = constant_control(sys, 3, 0.0);
    CHECK_THROWS_AS(forward_solve(sys, c, u0, 0.0, 3), InputError);
}

TEST_CASE("state series export") {
    const Mesh mesh = phantom(4);
    const AssembledSystem sys = assemble(mesh);
    const auto s = forward_solve(sys, constant_control(sys, 3, 1.0),
                                 Vector::Zero(static_cast<Eigen::Index>(sys.num_vertices)), 1.0, 3);
    const auto dir = std::filesystem::temp_directory_path() / "adc_test_states";
    std::filesystem::remove_all(dir);
    write_state_series(mesh, s, dir);
    std::ifstream in(dir / "u_series.json");
    REQUIRE(in);
    const auto j = nlohmann::json::parse(in);
    CHECK(j.at("k").get<int>() == 3);
    CHECK(j.at("dt").get<double>() == 1.0);
    REQUIRE(j.at("files").size() == 4);
    const VertexField f = read_field(mesh, dir / j.at("files")[3].get<std::string>());
    CHECK(f.values[10] == s.states[3][10]);
}
