#include <doctest.h>

#include <cmath>
#include <random>

#include "delaycert/signal.hpp"
#include "oracles.hpp"

using namespace delaycert;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("harmonic evaluation and derivatives match closed forms") {
    const PeriodicSignal o = PeriodicSignal::harmonic(1.0, 1, 0.0, 1.0);  // sin(2 pi t)
    CHECK(o.eval(0.0, 0) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(o.eval(0.25, 0) == doctest::Approx(1.0));
    CHECK(o.eval(0.0, 1) == doctest::Approx(2.0 * kPi));
    CHECK(o.eval(0.25, 2) == doctest::Approx(-4.0 * kPi * kPi));

    const PeriodicSignal c = PeriodicSignal::constant(1.0, 3.7);
    CHECK(c.eval(0.31, 0) == doctest::Approx(3.7));
    CHECK(c.eval(0.9, 1) == 0.0);
}

TEST_CASE("evaluation wraps modulo the period") {
    const PeriodicSignal o = PeriodicSignal::harmonic(2.0, 3, 0.4, -0.7, 0.1);
    for (double t : {0.13, 0.77, 1.99}) {
        CHECK(o.eval(t) == doctest::Approx(o.eval(t + 2.0)).epsilon(1e-13));
        CHECK(o.eval(t, 2) == doctest::Approx(o.eval(t - 6.0, 2)).epsilon(1e-13));
    }
}

TEST_CASE("periodic closure holds for random signals up to order four") {
    std::mt19937_64 gen(11);
    for (int trial = 0; trial < 8; ++trial) {
        const PeriodicSignal o = oracles::random_trig(gen, 1.5, 6, 1.0);
        for (int k = 0; k <= 4; ++k) CHECK(o.periodicity_residual(k) < 1e-12);
    }
}

TEST_CASE("analytic derivatives agree with central differences at order two") {
    std::mt19937_64 gen(7);
    const PeriodicSignal o = oracles::random_trig(gen, 1.0, 5, 1.0);
    for (int k = 0; k <= 2; ++k) {
        double worst = 3.0;
        for (double t : {0.12, 0.35, 0.58, 0.81}) {
            const double order = oracles::derivative_order(
                [&](double x) { return o.eval(x, k); }, [&](double x) { return o.eval(x, k + 1); },
                t);
            worst = std::min(worst, order);
        }
        CHECK(worst > 1.9);
    }
}

TEST_CASE("norms of reference signals") {
    const PeriodicSignal o = PeriodicSignal::harmonic(1.0, 1, 0.0, 1.0);
    CHECK(norm_r(o, 0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(norm_r(o, 1) == doctest::Approx(2.0 * kPi).epsilon(1e-9));
    CHECK(norm_r(PeriodicSignal::zero(2.0), 3) == 0.0);
}

TEST_CASE("distance is zero on identical signals and picks up constant offsets") {
    const PeriodicSignal o = PeriodicSignal::harmonic(1.0, 2, 0.3, 0.5);
    CHECK(distance_r(o, o, 2).value == 0.0);
    const PeriodicSignal shifted_up = o + PeriodicSignal::constant(1.0, 0.5);
    CHECK(distance_r(o, shifted_up, 0).value == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("distance across different periods matches the dense-grid reference") {
    // Same shape in scaled time, so only the period term contributes.
    const PeriodicSignal a = PeriodicSignal::harmonic(1.0, 1, 0.0, 1.0);
    const PeriodicSignal b = PeriodicSignal::harmonic(1.1, 1, 0.0, 1.0);
    double sup = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double s = static_cast<double>(i) / 100000;
        sup = std::max(sup, std::abs(a.eval(s * 1.0) - b.eval(s * 1.1)));
    }
    const double reference = sup + 0.1;
    CHECK(distance_r(a, b, 0).value == doctest::Approx(reference).epsilon(1e-9));
}

TEST_CASE("distance is symmetric and satisfies the triangle inequality") {
    std::mt19937_64 gen(23);
    for (int trial = 0; trial < 6; ++trial) {
        const PeriodicSignal a = oracles::random_trig(gen, 1.0, 4, 1.0);
        const PeriodicSignal b = oracles::random_trig(gen, 1.0, 4, 1.0);
        const PeriodicSignal c = oracles::random_trig(gen, 1.0, 4, 1.0);
        const double ab = distance_r(a, b, 1).value;
        const double ba = distance_r(b, a, 1).value;
        const double ac = distance_r(a, c, 1).value;
        const double cb = distance_r(c, b, 1).value;
        CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
        CHECK(ab <= ac + cb + 1e-9);
    }
}

TEST_CASE("norm equals distance to the zero signal of the same period") {
    std::mt19937_64 gen(31);
    for (int trial = 0; trial < 5; ++trial) {
        const PeriodicSignal o = oracles::random_trig(gen, 0.8, 5, 2.0);
        const double n2 = norm_r(o, 2);
        const double d2 = distance_r(o, PeriodicSignal::zero(0.8), 2).value;
        CHECK(n2 == doctest::Approx(d2).epsilon(1e-12));
    }
}

TEST_CASE("trig fit recovers a pure sine from 64 samples") {
    std::vector<double> samples(64);
    for (int i = 0; i < 64; ++i) samples[static_cast<std::size_t>(i)] = std::sin(2.0 * kPi * i / 64.0);
    const PeriodicSignal o = from_samples(1.0, samples, 5);
    CHECK(o.sin_amps()[1] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(std::abs(o.cos_amps()[0]) < 1e-12);
    CHECK(std::abs(o.cos_amps()[1]) < 1e-10);
    for (int k = 2; k <= 5; ++k) {
        CHECK(std::abs(o.cos_amps()[k]) < 1e-10);
        CHECK(std::abs(o.sin_amps()[k]) < 1e-10);
    }
}

TEST_CASE("trig fit of constant samples leaves every oscillating mode empty") {
    const std::vector<double> samples(32, 2.0);
    const PeriodicSignal o = from_samples(1.0, samples, 4);
    CHECK(o.cos_amps()[0] == doctest::Approx(2.0).epsilon(1e-13));
    for (int k = 1; k <= 4; ++k) {
        CHECK(std::abs(o.cos_amps()[k]) < 1e-12);
        CHECK(std::abs(o.sin_amps()[k]) < 1e-12);
    }
}

TEST_CASE("trig fit rejects content above the requested band") {
    std::vector<double> samples(64);
    for (int i = 0; i < 64; ++i) samples[static_cast<std::size_t>(i)] = std::sin(4.0 * kPi * i / 64.0);
    CHECK_THROWS_AS(from_samples(1.0, samples, 1), std::runtime_error);
}

TEST_CASE("trig fit rejects non-finite samples and short sample sets") {
    std::vector<double> bad(64, 0.0);
    bad[7] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(from_samples(1.0, bad, 4), std::invalid_argument);
    const std::vector<double> few(8, 0.0);
    CHECK_THROWS_AS(from_samples(1.0, few, 4), std::invalid_argument);
}

TEST_CASE("round trip through samples reproduces a random signal") {
    std::mt19937_64 gen(47);
    const PeriodicSignal o = oracles::random_trig(gen, 1.3, 7, 1.0);
    std::vector<double> samples(64);
    for (int i = 0; i < 64; ++i) samples[static_cast<std::size_t>(i)] = o.eval(1.3 * i / 64.0);
    const PeriodicSignal back = from_samples(1.3, samples, 7);
    CHECK(distance_r(o, back, 2).value < 1e-9);
}

TEST_CASE("shift and scale behave pointwise") {
    std::mt19937_64 gen(53);
    const PeriodicSignal o = oracles::random_trig(gen, 1.0, 4, 1.0);
    const PeriodicSignal s = o.shifted(0.3);
    const PeriodicSignal m = o.scaled(-2.5);
    for (double t : {0.0, 0.21, 0.77}) {
        CHECK(s.eval(t) == doctest::Approx(o.eval(t + 0.3)).epsilon(1e-13));
        CHECK(m.eval(t, 1) == doctest::Approx(-2.5 * o.eval(t, 1)).epsilon(1e-13));
    }
    // Norms are shift invariant.
    CHECK(norm_r(s, 2) == doctest::Approx(norm_r(o, 2)).epsilon(1e-9));
}

TEST_CASE("sum and difference operators act pointwise on derivatives") {
    std::mt19937_64 gen(61);
    const PeriodicSignal a = oracles::random_trig(gen, 1.0, 3, 1.0);
    const PeriodicSignal b = oracles::random_trig(gen, 1.0, 5, 1.0);
    const PeriodicSignal sum = a + b;
    const PeriodicSignal diff = a - b;
    for (double t : {0.1, 0.5, 0.9}) {
        for (int k = 0; k <= 2; ++k) {
            CHECK(sum.eval(t, k) == doctest::Approx(a.eval(t, k) + b.eval(t, k)).epsilon(1e-12));
            CHECK(diff.eval(t, k) == doctest::Approx(a.eval(t, k) - b.eval(t, k)).epsilon(1e-12));
        }
    }
}
