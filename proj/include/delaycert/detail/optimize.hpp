#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

// Small deterministic optimization helpers: dense scans with golden-section
// refinement for sups/infs over the circle, a safeguarded root finder, and a
// fixed-policy Nelder-Mead for the two-dimensional searches. Nothing here is
// randomized, so every caller is reproducible run to run.

namespace delaycert::detail {

inline constexpr double kInvPhi = 0.6180339887498949;

template <class F>
std::pair<double, double> golden_min(F&& f, double a, double b, int iters = 80) {
    double x1 = b - kInvPhi * (b - a), x2 = a + kInvPhi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int i = 0; i < iters; ++i) {
        if (b - a < 1e-17 * (1.0 + std::fabs(a) + std::fabs(b))) break;
        if (f1 <= f2) {
            b = x2; x2 = x1; f2 = f1;
            x1 = b - kInvPhi * (b - a); f1 = f(x1);
        } else {
            a = x1; x1 = x2; f1 = f2;
            x2 = a + kInvPhi * (b - a); f2 = f(x2);
        }
    }
    return (f1 <= f2) ? std::pair<double, double>{x1, f1} : std::pair<double, double>{x2, f2};
}

template <class F>
std::pair<double, double> golden_max(F&& f, double a, double b, int iters = 80) {
    auto [x, v] = golden_min([&](double t) { return -f(t); }, a, b, iters);
    return {x, -v};
}

// Scan n equispaced points on [0, period), then golden-refine around the best
// local minima. Ties resolve toward the smaller abscissa.
template <class F>
std::pair<double, double> circle_inf(F&& f, double period, int n, int refine_top = 6) {
    if (n < 8) n = 8;
    std::vector<double> val(static_cast<std::size_t>(n));
    const double h = period / n;
    for (int i = 0; i < n; ++i) val[static_cast<std::size_t>(i)] = f(i * h);
    std::vector<int> locals;
    for (int i = 0; i < n; ++i) {
        const double prev = val[static_cast<std::size_t>((i + n - 1) % n)];
        const double next = val[static_cast<std::size_t>((i + 1) % n)];
        if (val[static_cast<std::size_t>(i)] <= prev && val[static_cast<std::size_t>(i)] <= next)
            locals.push_back(i);
    }
    std::sort(locals.begin(), locals.end(), [&](int a, int b) {
        if (val[static_cast<std::size_t>(a)] != val[static_cast<std::size_t>(b)])
            return val[static_cast<std::size_t>(a)] < val[static_cast<std::size_t>(b)];
        return a < b;
    });
    if (static_cast<int>(locals.size()) > refine_top) locals.resize(static_cast<std::size_t>(refine_top));
    double best_x = 0.0, best_v = std::numeric_limits<double>::infinity();
    for (int i : locals) {
        auto [x, v] = golden_min(f, (i - 1) * h, (i + 1) * h);
        if (v < best_v || (v == best_v && x < best_x)) { best_v = v; best_x = x; }
    }
    if (locals.empty()) {  // constant scan; any point will do
        best_x = 0.0;
        best_v = val[0];
    }
    return {best_x, best_v};
}

template <class F>
std::pair<double, double> circle_sup(F&& f, double period, int n, int refine_top = 6) {
    auto [x, v] = circle_inf([&](double t) { return -f(t); }, period, n, refine_top);
    return {x, -v};
}

// Newton within a sign-change bracket, bisection whenever the step escapes.
template <class F, class DF>
double bracketed_root(F&& f, DF&& df, double a, double b, double xtol, int iters = 120) {
    double fa = f(a), fb = f(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if ((fa > 0.0) == (fb > 0.0))
        throw std::invalid_argument("bracketed_root: endpoints do not bracket a sign change");
    double x = 0.5 * (a + b);
    for (int i = 0; i < iters && (b - a) > xtol; ++i) {
        double fx = f(x);
        if (fx == 0.0) return x;
        if ((fx > 0.0) == (fa > 0.0)) { a = x; fa = fx; } else { b = x; fb = fx; }
        const double d = df(x);
        double xn = (d != 0.0) ? x - fx / d : 0.5 * (a + b);
        if (!(xn > a && xn < b)) xn = 0.5 * (a + b);
        x = xn;
    }
    return x;
}

// Nelder-Mead with standard coefficients and a fixed iteration budget.
// Vertex ordering breaks ties lexicographically, keeping runs identical.
template <class F>
std::pair<Eigen::Vector2d, double> nelder_mead2(F&& f, const Eigen::Vector2d& start, double step,
                                                int iters = 220) {
    struct V { Eigen::Vector2d x; double v; };
    std::array<V, 3> s;
    s[0] = {start, f(start)};
    s[1] = {start + Eigen::Vector2d(step, 0.0), 0.0};
    s[2] = {start + Eigen::Vector2d(0.0, step), 0.0};
    s[1].v = f(s[1].x);
    s[2].v = f(s[2].x);
    auto order = [&] {
        std::sort(s.begin(), s.end(), [](const V& a, const V& b) {
            if (a.v != b.v) return a.v < b.v;
            if (a.x[0] != b.x[0]) return a.x[0] < b.x[0];
            return a.x[1] < b.x[1];
        });
    };
    order();
    for (int it = 0; it < iters; ++it) {
        const Eigen::Vector2d centroid = 0.5 * (s[0].x + s[1].x);
        if ((s[2].x - s[0].x).norm() < 1e-14 * (1.0 + centroid.norm())) break;
        const Eigen::Vector2d xr = centroid + (centroid - s[2].x);
        const double vr = f(xr);
        if (vr < s[0].v) {
            const Eigen::Vector2d xe = centroid + 2.0 * (centroid - s[2].x);
            const double ve = f(xe);
            s[2] = (ve < vr) ? V{xe, ve} : V{xr, vr};
        } else if (vr < s[1].v) {
            s[2] = {xr, vr};
        } else {
            const Eigen::Vector2d xc = centroid + 0.5 * (s[2].x - centroid);
            const double vc = f(xc);
            if (vc < s[2].v) {
                s[2] = {xc, vc};
            } else {
                s[1].x = s[0].x + 0.5 * (s[1].x - s[0].x);
                s[2].x = s[0].x + 0.5 * (s[2].x - s[0].x);
                s[1].v = f(s[1].x);
                s[2].v = f(s[2].x);
            }
        }
        order();
    }
    return {s[0].x, s[0].v};
}

}  // namespace delaycert::detail
