#include "adc/concentration.hpp"
#include "adc/error.hpp"

#include "doctest.h"
#include "oracles.hpp"

#include <cmath>
#include <random>

using namespace adc;

namespace {

MprageParams generic(double r1 = 2.0) {
    MprageParams p;
    p.theta = 8.0 * M_PI / 180.0;
    p.t_a = 900.0;
    p.t_b = 5.1;
    p.tr = 2000.0;
    p.m = 200;
    p.r1 = r1;
    return p;
}

} // namespace

TEST_CASE("closed form matches the Bloch recursion for the generic parameters") {
    const MprageParams p = generic();
    for (double t1 : {200.0, 800.0, 1200.0, 2000.0, 3000.0}) {
        const double ref = oracle::bloch_center_echo(t1, p);
        CHECK(std::abs(mprage_f(t1, p) - ref) <= 1e-10 * std::abs(ref));
    }
}

TEST_CASE("closed form matches the recursion on random parameters") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int draw = 0; draw < 100; ++draw) {
        MprageParams p;
        p.theta = (2.0 + 28.0 * u(rng)) * M_PI / 180.0;
        p.m = 2 * (1 + static_cast<int>(127 * u(rng)));
        p.t_b = 3.0 + 7.0 * u(rng);
        p.t_a = 100.0 + 1400.0 * u(rng);
        p.tr = p.t_a + p.t_b * (p.m - 1) + 1500.0 * u(rng);
        p.r1 = 1.0;
        const double t1 = 200.0 + 3800.0 * u(rng);
        const double ref = oracle::bloch_center_echo(t1, p);
        CHECK(std::abs(mprage_f(t1, p) - ref) <= 1e-8 * std::max(std::abs(ref), 1e-4));
    }
}

TEST_CASE("limits of the signal model") {
    const MprageParams p = generic();
    CHECK(mprage_f(1e-6, p) == doctest::Approx(1.0).epsilon(1e-14));
    MprageParams q = p;
    q.theta = M_PI / 2;
    const double t1 = 1000.0;
    CHECK(mprage_f(t1, q) == doctest::Approx(1.0 - std::exp(-q.t_b / t1)).epsilon(1e-12));
    CHECK_THROWS_AS(mprage_f(0.0, p), InputError);
    q = p;
    q.tr = 500.0;
    CHECK_THROWS_AS(q.validate(), InputError);
    q = p;
    q.m = 3;
    CHECK_THROWS_AS(q.validate(), InputError);
    q = p;
    q.r1 = 0.0;
    CHECK_THROWS_AS(T1Lookup{q}, InputError);
}

TEST_CASE("lookup table layout and clamping") {
    const T1Lookup lut(generic());
    CHECK(lut.size() == 3801);
    CHECK(lut.t1().front() == 200.0);
    CHECK(lut.t1().back() == 4000.0);
    CHECK(lut.branch_begin() <= 600);
    CHECK(lut.branch_end() >= 1800);
    for (std::size_t i = lut.branch_begin(); i < lut.branch_end(); ++i) REQUIRE(lut.f()[i + 1] < lut.f()[i]);
    CHECK(lut.f_at(150.0).clamped);
    CHECK(lut.f_at(150.0).value == lut.f().front());
    CHECK(lut.f_at(5000.0).clamped);
    CHECK_FALSE(lut.f_at(1200.5).clamped);
    CHECK(lut.f_at(1200.5).value == doctest::Approx(mprage_f(1200.5, generic())).epsilon(1e-6));
}

TEST_CASE("concentration from ratio") {
    const MprageParams p = generic(5.0);
    const T1Lookup lut(p);
    const auto zero = concentration_from_ratio(1.0, 1200.0, p, lut);
    CHECK(zero.value == 0.0);
    CHECK_FALSE(zero.saturated);
    CHECK_FALSE(zero.negative);

    const double t1c = t1_with_concentration(0.5, 1200.0, 5.0);
    const double ratio = mprage_f(t1c, p) / mprage_f(1200.0, p);
    CHECK(std::abs(concentration_from_ratio(ratio, 1200.0, p, lut).value - 0.5) < 1e-3);

    CHECK(concentration_from_t1(1000.0, 2000.0, 5.0) == doctest::Approx(0.1).epsilon(1e-15));

    const auto neg = concentration_from_ratio(0.8, 1200.0, p, lut);
    CHECK(neg.negative);
    CHECK(neg.value == 0.0);
    const auto sat = concentration_from_ratio(50.0, 1200.0, p, lut);
    CHECK(sat.saturated);
    CHECK(sat.value == doctest::Approx(concentration_from_t1(200.0, 1200.0, 5.0)));
    CHECK_THROWS_AS(concentration_from_ratio(0.0, 1200.0, p, lut), InputError);
    CHECK_THROWS_AS(concentration_from_ratio(1.0, 100.0, p, lut), InputError);
}

TEST_CASE("round trip c -> ratio -> c over 0..2 mM is monotone and accurate") {
    const MprageParams p = generic(2.0);
    const T1Lookup lut(p);
    for (double t10 : {1200.0, kCsfT1}) {
        double previous = -1.0;
        for (int i = 0; i <= 200; ++i) {
            const double c = 0.01 * i;
            const double ratio = mprage_f(t1_with_concentration(c, t10, p.r1), p) / mprage_f(t10, p);
            const auto r = concentration_from_ratio(ratio, t10, p, lut);
            CHECK_FALSE(r.saturated);
            CHECK(std::abs(r.value - c) < 1e-3);
            CHECK(r.value >= previous);
            previous = r.value;
        }
    }
    CHECK(csf_concentration(1.0, p, lut).value == 0.0);
    CHECK(csf_concentration(1e6, p, lut).saturated);
}

TEST_CASE("signal change percent") {
    CHECK(signal_change_percent(1.5, 1.0) == 50.0);
    CHECK(signal_change_percent(1.0, 1.0) == 0.0);
    CHECK_THROWS_AS(signal_change_percent(1.0, 0.0), InputError);
}
