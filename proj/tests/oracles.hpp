#pragma once

// Reference computations for the test suite. Everything here is deliberately
// brute force (dense grids, recursive quadrature, difference quotients) and
// shares no code with the library paths it checks.

#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include "delaycert/detail/rng.hpp"
#include "delaycert/signal.hpp"

namespace oracles {

inline double grid_min(const std::function<double(double)>& f, double a, double b, int n) {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) best = std::min(best, f(a + (b - a) * i / n));
    return best;
}

inline double grid_max(const std::function<double(double)>& f, double a, double b, int n) {
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) best = std::max(best, f(a + (b - a) * i / n));
    return best;
}

namespace detail {
inline double simpson(double a, double b, double fa, double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive(const std::function<double(double)>& f, double a, double b, double fa,
                       double fm, double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = simpson(a, m, fa, flm, fm);
    const double right = simpson(m, b, fm, frm, fb);
    if (depth <= 0) return left + right;
    if (std::abs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adaptive(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
           adaptive(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}
}  // namespace detail

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol = 1e-13) {
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = detail::simpson(a, b, fa, fm, fb);
    return detail::adaptive(f, a, b, fa, fm, fb, whole, tol, 48);
}

inline double central_diff(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Observed order of the central-difference error when h halves; ~2 when the
// analytic derivative is correct.
inline double derivative_order(const std::function<double(double)>& f,
                               const std::function<double(double)>& df, double x,
                               double h = 1e-3) {
    const double e1 = std::abs(central_diff(f, x, h) - df(x));
    const double e2 = std::abs(central_diff(f, x, h / 2.0) - df(x));
    if (e2 == 0.0) return 2.0;
    return std::log2(e1 / e2);
}

// Random trig signal with modes 1..max_modes, coefficients in [-amp, amp].
inline delaycert::PeriodicSignal random_trig(std::mt19937_64& gen, double period, int max_modes,
                                             double amp) {
    Eigen::ArrayXd ca = Eigen::ArrayXd::Zero(max_modes + 1);
    Eigen::ArrayXd sa = Eigen::ArrayXd::Zero(max_modes + 1);
    for (int k = 1; k <= max_modes; ++k) {
        ca[k] = delaycert::detail::symmetric_double(gen, amp);
        sa[k] = delaycert::detail::symmetric_double(gen, amp);
    }
    return delaycert::PeriodicSignal(period, ca, sa);
}

// Circular gap between two times on [0, period).
inline double circular_gap(double t1, double t2, double period) {
    double d = std::fmod(std::abs(t1 - t2), period);
    return std::min(d, period - d);
}

}  // namespace oracles
