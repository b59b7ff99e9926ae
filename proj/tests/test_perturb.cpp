#include <doctest.h>

#include <array>
#include <cmath>
#include <random>
#include <stdexcept>

#include "delaycert/delay.hpp"
#include "delaycert/perturb.hpp"
#include "oracles.hpp"

using namespace delaycert;

namespace {
constexpr double kPi = 3.14159265358979323846;

PeriodicSignal tangency_fixture() {
    // o' = cos(4 pi t) - cos(2 pi t), with a second-order zero at t = 0.
    Eigen::ArrayXd ca = Eigen::ArrayXd::Zero(3);
    Eigen::ArrayXd sa = Eigen::ArrayXd::Zero(3);
    sa[1] = -1.0 / (2.0 * kPi);
    sa[2] = 1.0 / (4.0 * kPi);
    return PeriodicSignal(1.0, ca, sa);
}
}  // namespace

TEST_CASE("bump plateaus and supports are exact") {
    const BumpFunction standard{BumpProfile::standard};
    CHECK(standard.eval(0.0) == 1.0);
    CHECK(standard.eval(0.5) == 1.0);
    CHECK(standard.eval(-0.49) == 1.0);
    CHECK(standard.eval(1.0) == 0.0);
    CHECK(standard.eval(2.0) == 0.0);
    CHECK(standard.eval(2.0, 3) == 0.0);
    CHECK(standard.eval(0.25, 1) == 0.0);  // flat on the plateau
    const double mid = standard.eval(0.75);
    CHECK(mid > 0.0);
    CHECK(mid < 1.0);

    const BumpFunction surgery{BumpProfile::surgery};
    CHECK(surgery.eval(0.5) == 1.0);
    CHECK(surgery.eval(0.75) == 0.0);
    CHECK(surgery.eval(0.6) > 0.0);

    const BumpFunction slope{BumpProfile::slope};
    CHECK(slope.eval(0.25) == 1.0);
    CHECK(slope.eval(0.75) == 1.0);
    CHECK(slope.eval(0.0) == 0.0);
    CHECK(slope.eval(1.0) == 0.0);
}

TEST_CASE("bump range stays inside the unit interval") {
    for (BumpProfile p : {BumpProfile::standard, BumpProfile::surgery, BumpProfile::slope}) {
        const BumpFunction b{p};
        for (int i = 0; i <= 1000; ++i) {
            const double x = -1.5 + 3.0 * i / 1000.0;
            const double v = b.eval(x);
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("the slope-profile integral matches adaptive quadrature and sits in (1/2, 1)") {
    const BumpFunction slope{BumpProfile::slope};
    const double c = slope.integral01();
    const double ref = oracles::adaptive_simpson([&](double x) { return slope.eval(x); }, 0.0, 1.0);
    CHECK(c == doctest::Approx(ref).epsilon(1e-12));
    CHECK(c > 0.5);
    CHECK(c < 1.0);
    // Prefix integrals agree with quadrature away from the panels' seams.
    for (double x : {0.13, 0.4, 0.77, 0.93}) {
        const double p = oracles::adaptive_simpson([&](double u) { return slope.eval(u); }, 0.0, x);
        CHECK(slope.primitive01(x) == doctest::Approx(p).epsilon(1e-11));
    }
}

TEST_CASE("bump derivatives agree with central differences through order six") {
    const BumpFunction b{BumpProfile::standard};
    for (int k = 0; k <= 6; ++k) {
        for (double x : {0.55, 0.7, 0.85, 0.95}) {  // inside the transition shoulder
            const double order = oracles::derivative_order(
                [&](double u) { return b.eval(u, k); }, [&](double u) { return b.eval(u, k + 1); },
                x, 1e-3);
            CHECK(order > 1.9);
        }
    }
}

TEST_CASE("constructed slope signal is periodic with the declared exterior derivative") {
    const double eps = 0.01;
    const PeriodicSignal o = slope_perturbation(1.0, 0.25, 0.75, eps);
    for (int k = 0; k <= 2; ++k) CHECK(o.periodicity_residual(k) < 1e-10);
    CHECK(std::abs(o.eval(0.0)) < 1e-12);  // normalized to start at zero

    // Outside (alpha, beta) the derivative is exactly epsilon.
    for (double t : {0.0, 0.1, 0.2, 0.8, 0.9, 0.99}) {
        CHECK(o.eval(t, 1) == doctest::Approx(eps).epsilon(1e-12));
    }

    // The closure constant comes straight from the slope-bump quadrature.
    REQUIRE(o.terms().size() == 1);
    const auto* term = std::get_if<SlopeTerm>(&o.terms()[0]);
    REQUIRE(term != nullptr);
    const double c = BumpFunction{BumpProfile::slope}.integral01();
    CHECK(term->amp == doctest::Approx(eps * 1.0 / (0.5 * c)).epsilon(1e-13));
}

TEST_CASE("slope signal vanishes at zero strength and scales linearly") {
    CHECK(norm_r(slope_perturbation(1.0, 0.25, 0.75, 0.0), 2) == 0.0);

    const double n1 = norm_r(slope_perturbation(1.0, 0.2, 0.7, 1e-2), 1);
    const double n2 = norm_r(slope_perturbation(1.0, 0.2, 0.7, 5e-3), 1);
    CHECK(n1 / n2 == doctest::Approx(2.0).epsilon(1e-6));

    // Decade steps, as the construction contract promises.
    const double a = norm_r(slope_perturbation(1.0, 0.3, 0.8, 1e-2), 1);
    const double b = norm_r(slope_perturbation(1.0, 0.3, 0.8, 1e-3), 1);
    const double c = norm_r(slope_perturbation(1.0, 0.3, 0.8, 1e-4), 1);
    CHECK(a / b == doctest::Approx(10.0).epsilon(1e-3));
    CHECK(b / c == doctest::Approx(10.0).epsilon(1e-3));
}

TEST_CASE("slope signal supports wrapped arcs") {
    const PeriodicSignal o = slope_perturbation(1.0, 0.8, 0.3, 0.005);  // arc wraps the seam
    for (int k = 0; k <= 2; ++k) CHECK(o.periodicity_residual(k) < 1e-10);
    for (double t : {0.4, 0.5, 0.6, 0.7}) {
        CHECK(o.eval(t, 1) == doctest::Approx(0.005).epsilon(1e-12));
    }
}

TEST_CASE("slope construction refuses strengths that break the interior bound") {
    CHECK_THROWS_AS(slope_perturbation(1.0, 0.45, 0.55, 0.5, 0.1), std::invalid_argument);
    try {
        slope_perturbation(1.0, 0.45, 0.55, 0.5, 0.1);
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("epsilon") != std::string::npos);
    }
}

TEST_CASE("regularize passes an already-regular signal through") {
    const PeriodicSignal o = PeriodicSignal::harmonic(1.0, 1, 0.0, 1.0);
    const RegularizeResult res = regularize(o);
    CHECK_FALSE(res.changed);
    CHECK(res.distance == 0.0);
    CHECK(distance_r(o, res.signal, 2).value == 0.0);
}

TEST_CASE("regularize replaces a constant by a small regular oscillation") {
    const double T = 2.0 * kPi;
    RegularizeOptions opts;
    opts.budget = 1e-3;
    const RegularizeResult res = regularize(PeriodicSignal::constant(T, 0.0), opts);
    CHECK(res.changed);
    const auto prof = critical_points(res.signal);
    CHECK(prof.regular);
    CHECK(res.distance <= opts.budget);
    // At this period the seed amplitude lands exactly on budget/10.
    CHECK(res.signal.sin_amps()[1] == doctest::Approx(1e-4).epsilon(1e-12));
}

TEST_CASE("regularize removes a tangential critical point within budget") {
    const PeriodicSignal o = tangency_fixture();
    REQUIRE_FALSE(critical_points(o).regular);
    RegularizeOptions opts;
    opts.budget = 1e-2;
    const RegularizeResult res = regularize(o, opts);
    CHECK(res.changed);
    CHECK(critical_points(res.signal).regular);
    CHECK(res.distance <= opts.budget);
    CHECK(distance_r(o, res.signal, 2).value <= opts.budget);
}

TEST_CASE("pulse family covers the circle with unit plateaus") {
    const PulseFamily fam(1.0, 0.06);
    CHECK(fam.h == doctest::Approx(0.03).epsilon(1e-15));
    CHECK(fam.count == 34);  // floor(T/h) + 1

    std::mt19937_64 gen(13);
    for (int i = 0; i < 200; ++i) {
        const double t = detail::unit_double(gen);
        const int j = fam.plateau_index(t);
        CHECK(fam.pulse(j, t) == 1.0);
    }
    // Support is one half-width on each side.  Near the outer edge the
    // transition ratio psi(1-s)/psi(s) drops below double epsilon, so the
    // tail rounds to exact zero slightly before |x| = 1; probe the interior.
    CHECK(fam.pulse(3, fam.center(3) + fam.h) == 0.0);
    CHECK(fam.pulse(3, fam.center(3) + 0.9 * fam.h) > 0.0);
}

TEST_CASE("the six delay coordinates of a separated witness pair map to distinct pulses") {
    const double tau = 0.06;
    const PulseFamily fam(1.0, tau);
    const std::array<double, 6> pts = {0.0, -tau, -2.0 * tau, 0.5, 0.5 - tau, 0.5 - 2.0 * tau};
    std::vector<int> idx;
    for (double p : pts) idx.push_back(fam.plateau_index(p));
    for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = i + 1; j < idx.size(); ++j) CHECK(idx[i] != idx[j]);
    // Each selected pulse is at full height on its own coordinate.
    for (std::size_t i = 0; i < idx.size(); ++i) CHECK(fam.pulse(idx[i], pts[i]) == 1.0);
}

TEST_CASE("delay windows of a far pair are disjoint") {
    std::mt19937_64 gen(37);
    for (int trial = 0; trial < 200; ++trial) {
        const double tau = 0.01 + 0.05 * detail::unit_double(gen);
        const double t1 = detail::unit_double(gen);
        double sep;
        do {
            sep = detail::unit_double(gen);
            sep = std::min(sep, 1.0 - sep);
        } while (sep <= 3.0 * tau);
        const double t2 = t1 + sep;
        // [t1 - 2 tau, t1] and [t2 - 2 tau, t2] never meet on the circle.
        for (int a = 0; a <= 8; ++a) {
            const double u = t1 - 2.0 * tau * a / 8.0;
            for (int b = 0; b <= 8; ++b) {
                const double v = t2 - 2.0 * tau * b / 8.0;
                CHECK(oracles::circular_gap(u, v, 1.0) > tau - 1e-12);
            }
        }
    }
}

TEST_CASE("applied pulse trains shift plateau values exactly and scale linearly") {
    const PeriodicSignal base = PeriodicSignal::harmonic(1.0, 1, 0.0, 1.0);
    const PulseFamily fam(1.0, 0.08);
    Eigen::ArrayXd coeffs = Eigen::ArrayXd::Zero(fam.count);

    const PeriodicSignal same = fam.applied(base, coeffs);
    CHECK(distance_r(base, same, 2).value == 0.0);

    coeffs[5] = 0.02;
    const PeriodicSignal moved = fam.applied(base, coeffs);
    const double t0 = fam.center(5);
    CHECK(moved.eval(t0) == doctest::Approx(base.eval(t0) + 0.02).epsilon(1e-13));

    const PeriodicSignal half = fam.applied(base, (coeffs / 2.0).eval());
    const double d_full = distance_r(base, moved, 2).value;
    const double d_half = distance_r(base, half, 2).value;
    CHECK(d_full / d_half == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("pulse train distances respect the coefficient cap bound") {
    const PeriodicSignal base = PeriodicSignal::harmonic(1.0, 1, 0.0, 1.0);
    const double budget = 0.05;
    const PulseFamily fam(1.0, 0.04);
    const double cap = budget / (2.0 * fam.cr_factor(2));
    std::mt19937_64 gen(71);
    Eigen::ArrayXd coeffs(fam.count);
    for (int j = 0; j < fam.count; ++j) coeffs[j] = detail::symmetric_double(gen, cap);
    CHECK(distance_r(base, fam.applied(base, coeffs), 2).value <= budget * (1.0 + 1e-9));
}

TEST_CASE("repair leaves a certified signal untouched") {
    const PeriodicSignal o = PeriodicSignal::harmonic(1.0, 1, 0.0, 1.0);
    const RepairResult res = repair(o, DelayParameters{1.0 / 48.0});
    CHECK(res.success);
    CHECK(res.iterations == 0);
    CHECK(res.distance == 0.0);
}

TEST_CASE("repair turns the half-period collision into a certified embedding") {
    const PeriodicSignal o = PeriodicSignal::harmonic(1.0, 2, 0.0, 1.0);  // sin(4 pi t)
    RepairOptions opts;
    opts.budget = 0.05;
    opts.max_iters = 200;
    opts.seed = 0;
    const RepairResult res = repair(o, DelayParameters{0.02}, opts);
    CHECK(res.success);
    CHECK(res.iterations <= 200);
    CHECK(res.certificate.verdict == Verdict::certified);
    CHECK(res.certificate.injectivity_margin > 0.0);
    CHECK(res.certificate.immersion_margin > 0.0);
    CHECK(res.distance <= opts.budget * (1.0 + 1e-9));
}

TEST_CASE("repair rejects delays outside the safe range and irregular signals") {
    const PeriodicSignal o = PeriodicSignal::harmonic(1.0, 1, 0.0, 1.0);  // mu = 1/2
    CHECK_THROWS_AS(repair(o, DelayParameters{0.2}), std::invalid_argument);
    CHECK_THROWS_AS(repair(tangency_fixture(), DelayParameters{0.01}), std::invalid_argument);
}

TEST_CASE("repair is reproducible for a fixed seed") {
    const PeriodicSignal o = PeriodicSignal::harmonic(1.0, 2, 0.0, 1.0);
    RepairOptions opts;
    opts.budget = 0.05;
    opts.seed = 7;
    const RepairResult a = repair(o, DelayParameters{0.02}, opts);
    const RepairResult b = repair(o, DelayParameters{0.02}, opts);
    CHECK(a.success == b.success);
    CHECK(a.iterations == b.iterations);
    CHECK(a.distance == b.distance);
    CHECK(distance_r(a.signal, b.signal, 2).value == 0.0);
}
