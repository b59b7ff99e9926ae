#include "delaycert/orbit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "delaycert/circle.hpp"
#include "delaycert/detail/optimize.hpp"

namespace delaycert {

PeriodicOrbit::PeriodicOrbit(std::vector<PeriodicSignal> components)
    : components_(std::move(components)) {
    if (components_.size() < 2)
        throw std::invalid_argument("PeriodicOrbit: dimension must be at least 2");
    period_ = components_.front().period();
    for (const auto& c : components_) {
        if (std::fabs(c.period() - period_) > 1e-12 * period_)
            throw std::invalid_argument("PeriodicOrbit: components must share one period");
    }
    // Nonvanishing speed is what makes this an orbit rather than a path;
    // a coarse sample check catches outright violations early, while the
    // tube computation enforces the quantitative version.
    for (int i = 0; i < 512; ++i) {
        if (!(velocity(period_ * i / 512.0).norm() > 0.0))
            throw std::invalid_argument("PeriodicOrbit: velocity vanishes at a sample point");
    }
}

const PeriodicSignal& PeriodicOrbit::component(int i) const {
    if (i < 0 || i >= dimension())
        throw std::out_of_range("PeriodicOrbit: component index out of range");
    return components_[static_cast<std::size_t>(i)];
}

Eigen::VectorXd PeriodicOrbit::derivative(double t, int k) const {
    Eigen::VectorXd v(dimension());
    for (int i = 0; i < dimension(); ++i) v[i] = components_[static_cast<std::size_t>(i)].eval(t, k);
    return v;
}

Eigen::VectorXd PeriodicOrbit::unit_tangent(double t) const {
    const Eigen::VectorXd v = velocity(t);
    const double n = v.norm();
    if (!(n > 0.0)) throw std::domain_error("PeriodicOrbit: velocity vanishes");
    return v / n;
}

Eigen::VectorXd PeriodicOrbit::tangent_rate(double t) const {
    const Eigen::VectorXd v = velocity(t);
    const Eigen::VectorXd a = acceleration(t);
    const double vv = v.squaredNorm();
    if (!(vv > 0.0)) throw std::domain_error("PeriodicOrbit: velocity vanishes");
    return a / std::sqrt(vv) - v * (a.dot(v)) / (vv * std::sqrt(vv));
}

PeriodicOrbit PeriodicOrbit::shifted(double dt) const {
    std::vector<PeriodicSignal> comps;
    comps.reserve(components_.size());
    for (const auto& c : components_) comps.push_back(c.shifted(dt));
    return PeriodicOrbit(std::move(comps));
}

PeriodicOrbit PeriodicOrbit::scaled(double factor) const {
    std::vector<PeriodicSignal> comps;
    comps.reserve(components_.size());
    for (const auto& c : components_) comps.push_back(c.scaled(factor));
    return PeriodicOrbit(std::move(comps));
}

SignalDistance orbit_distance_r(const PeriodicOrbit& a, const PeriodicOrbit& b, int r,
                                int grid) {
    if (a.dimension() != b.dimension())
        throw std::invalid_argument("orbit_distance_r: dimension mismatch");
    const double Ta = a.period(), Tb = b.period();
    double value = 0.0;
    for (int k = 0; k <= r; ++k) {
        auto f = [&](double s) {
            return (a.derivative(s * Ta, k) - b.derivative(s * Tb, k)).norm();
        };
        value = std::max(value, detail::circle_sup(f, 1.0, grid).second);
    }
    return SignalDistance{r, value + std::fabs(Ta - Tb), grid};
}

namespace {

struct Extremes {
    double v_min = 0.0;    // min ||p'||
    double v_max = 0.0;    // max ||p'||
    double a_max = 0.0;    // max ||p''||
    double a_inf = 0.0;    // max ||p''||_inf
    double s_inf = 0.0;    // max ||s'||_inf
};

Extremes orbit_extremes(const PeriodicOrbit& p, int grid) {
    const double T = p.period();
    Extremes e;
    auto speed = [&](double t) { return p.velocity(t).norm(); };
    auto accel = [&](double t) { return p.acceleration(t).norm(); };
    e.v_min = detail::circle_inf(speed, T, grid).second;
    e.v_max = detail::circle_sup(speed, T, grid).second;
    e.a_max = detail::circle_sup(accel, T, grid).second;
    for (int i = 0; i < p.dimension(); ++i) {
        auto ai = [&](double t) { return std::fabs(p.acceleration(t)[i]); };
        auto si = [&](double t) { return std::fabs(p.tangent_rate(t)[i]); };
        e.a_inf = std::max(e.a_inf, detail::circle_sup(ai, T, grid).second);
        e.s_inf = std::max(e.s_inf, detail::circle_sup(si, T, grid).second);
    }
    return e;
}

// Minimum chord over circular gaps >= gap_min: dense pair grid, then
// Nelder-Mead refinement of the best cells. Also returns the Lipschitz
// lower bound grid_min - v_max * h, h the grid spacing.
std::pair<double, double> min_chord(const PeriodicOrbit& p, double gap_min, int n,
                                    double v_max) {
    const double T = p.period();
    const double h = T / n;
    std::vector<Eigen::VectorXd> pts(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) pts[static_cast<std::size_t>(i)] = p.point(i * h);

    std::vector<std::tuple<double, int, int>> cells;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double gap = circ_dist(i * h, j * h, T);
            if (gap < gap_min) continue;
            const double c = (pts[static_cast<std::size_t>(i)] - pts[static_cast<std::size_t>(j)]).norm();
            cells.emplace_back(c, i, j);
        }
    }
    if (cells.empty()) throw std::domain_error("min_chord: gap range is empty");
    const std::size_t keep = std::min<std::size_t>(16, cells.size());
    std::partial_sort(cells.begin(), cells.begin() + static_cast<std::ptrdiff_t>(keep), cells.end());
    const double grid_min = std::get<0>(cells.front());

    auto chord = [&](const Eigen::Vector2d& x) {
        if (circ_dist(x[0], x[1], T) < gap_min) return std::numeric_limits<double>::infinity();
        return (p.point(x[0]) - p.point(x[1])).norm();
    };
    double best = grid_min;
    for (std::size_t c = 0; c < keep; ++c) {
        const int i = std::get<1>(cells[c]);
        const int j = std::get<2>(cells[c]);
        const double v = detail::nelder_mead2(chord, Eigen::Vector2d(i * h, j * h), 0.5 * h).second;
        if (v < best) best = v;
    }
    return {best, grid_min - v_max * h};
}

double delta_bound(double m, double m_star, double M_star, double Delta) {
    return std::min({4.0 * m * m / (1.0 + m_star), m / (2.0 * M_star), 0.5 * Delta});
}

}  // namespace

TubeGeometry tube_constants(const PeriodicOrbit& p, const TubeOptions& opts) {
    const double d = p.dimension();
    const Extremes e = orbit_extremes(p, opts.grid);
    if (!(e.v_min > 1e-9 * std::max(1.0, e.v_max)))
        throw std::invalid_argument("tube_constants: orbit speed vanishes (not an immersed curve)");

    TubeGeometry tube;
    tube.grid = opts.grid;
    tube.m = 0.5 * e.v_min;
    tube.m_star = e.a_max;
    tube.M = std::sqrt(d) * e.a_inf;
    tube.r_frak = tube.m / tube.M;
    tube.M_star = std::sqrt(d) * e.s_inf;
    auto [Delta, Delta_lower] = min_chord(p, tube.r_frak, opts.chord_grid, e.v_max);
    if (!(Delta > 0.0)) throw std::invalid_argument("tube_constants: orbit self-intersects");
    tube.Delta = Delta;
    tube.Delta_lower_bound = Delta_lower;
    tube.delta = opts.safety * delta_bound(tube.m, tube.m_star, tube.M_star, tube.Delta);

    // delta < 4m^2/(1+m_star) already implies ||p'||^2 - delta ||p''|| > delta
    // pointwise; spot-check the implication on the grid.
    for (int i = 0; i < 256; ++i) {
        const double t = p.period() * i / 256.0;
        if (!(p.velocity(t).squaredNorm() - tube.delta * p.acceleration(t).norm() > tube.delta))
            throw std::runtime_error("tube_constants: pointwise tube inequality failed");
    }
    return tube;
}

TubeGeometry uniform_tube(const PeriodicOrbit& p, double epsilon_tol, const TubeOptions& opts) {
    const double d = p.dimension();
    const double sd = std::sqrt(d);
    const Extremes e = orbit_extremes(p, opts.grid);
    if (!(e.v_min > 1e-9 * std::max(1.0, e.v_max)))
        throw std::invalid_argument("uniform_tube: orbit speed vanishes (not an immersed curve)");

    const double m = 0.5 * e.v_min;
    const double m_star = e.a_max;
    const double M = sd * e.a_inf;
    const double M_star = sd * e.s_inf;
    const double r_frak = m / M;

    // A perturbed orbit's own gap threshold can shrink to a quarter of r, so
    // the chord minimum must be taken over that wider range before halving.
    auto [Delta_wide, Delta_wide_lower] = min_chord(p, 0.25 * r_frak, opts.chord_grid, e.v_max);

    // Sufficient conditions for every orbit q with d_r(p, q) <= eps (r >= 2):
    // per-component derivative sups move by at most eps, so Euclidean
    // quantities move by at most eps*sqrt(d) =: s. The degraded constants
    // dominate q's when all of the following hold.
    auto covers = [&](double eps) {
        const double s = eps * sd;
        if (!(s < 2.0 * m)) return false;
        if (!(2.0 * m - s >= m)) return false;               // min speed >= 2*(m/2)
        if (!(m_star + s <= 2.0 * m_star)) return false;     // max ||q''|| <= 2 m_star
        if (!(eps <= e.a_inf)) return false;                 // max ||q''||_inf <= 2 ||p''||_inf
        // Unit-tangent rate: Lipschitz bound of s' = P(u) w / ||u|| in
        // (u, w) = (p', p''), with ||dG/dw|| <= 1/||u|| and
        // ||dG/du|| <= 6 ||w|| / ||u||^2 along the segment.
        const double v_lo = 2.0 * m - s;
        const double w_hi = m_star + s;
        const double drift = s / v_lo + 6.0 * w_hi * s / (v_lo * v_lo);
        if (!(e.s_inf + drift <= 2.0 * e.s_inf)) return false;
        if (!(2.0 * s <= 0.5 * Delta_wide)) return false;    // chords keep half their length
        return true;
    };

    double lo = 0.0, hi = std::max({m, m_star, Delta_wide, 1.0});
    if (!covers(epsilon_tol * 1e-6)) {
        std::ostringstream msg;
        msg << "uniform_tube: no positive ball radius satisfies the degraded-constant conditions";
        throw std::runtime_error(msg.str());
    }
    if (covers(hi)) {
        lo = hi;
    } else {
        lo = epsilon_tol * 1e-6;
        for (int i = 0; i < 200 && hi - lo > epsilon_tol * lo; ++i) {
            const double mid = 0.5 * (lo + hi);
            (covers(mid) ? lo : hi) = mid;
        }
    }

    TubeGeometry tube;
    tube.grid = opts.grid;
    tube.m = 0.5 * m;
    tube.m_star = 2.0 * m_star;
    tube.M = 2.0 * M;
    tube.r_frak = tube.m / tube.M;  // = r_frak / 4, matching the chord range above
    tube.M_star = 2.0 * M_star;
    tube.Delta = 0.5 * Delta_wide;
    tube.Delta_lower_bound = 0.5 * Delta_wide_lower;
    tube.delta = opts.safety * delta_bound(tube.m, tube.m_star, tube.M_star, tube.Delta);
    tube.uniform_epsilon = 0.9 * lo;
    return tube;
}

namespace detail {

ClosestPointResult closest_point_lenient(const PeriodicOrbit& p, const Eigen::VectorXd& x0,
                                         int coarse_grid) {
    const double T = p.period();
    const int n = coarse_grid;
    const double h = T / n;
    double best_d2 = std::numeric_limits<double>::infinity();
    int best_i = 0;
    for (int i = 0; i < n; ++i) {
        const double d2 = (x0 - p.point(i * h)).squaredNorm();
        if (d2 < best_d2) { best_d2 = d2; best_i = i; }
    }

    auto fval = [&](double t) { return (x0 - p.point(t)).dot(p.velocity(t)); };
    auto fslope = [&](double t) {
        return (x0 - p.point(t)).dot(p.acceleration(t)) - p.velocity(t).squaredNorm();
    };

    ClosestPointResult res;
    double t = best_i * h;
    bool converged = false;
    for (int it = 0; it < 80; ++it) {
        const double g = fval(t);
        const double dg = fslope(t);
        if (!(std::fabs(dg) > 0.0)) break;
        const double step = -g / dg;
        t += step;
        ++res.newton_iters;
        if (std::fabs(step) < 1e-12 * std::max(1.0, T)) { converged = true; break; }
        if (std::fabs(t - best_i * h) > 2.0 * h + std::fabs(step)) break;  // left the basin
    }
    if (!converged) {
        // Only reachable outside the guaranteed tube; fall back to direct
        // minimization of the distance over the coarse bracket.
        auto dist = [&](double u) { return (x0 - p.point(u)).norm(); };
        t = golden_min(dist, (best_i - 1) * h, (best_i + 1) * h).first;
    }
    res.t0 = wrap(t, T);
    res.w0 = x0 - p.point(res.t0);
    res.distance = res.w0.norm();
    res.f_slope = fslope(res.t0);
    return res;
}

}  // namespace detail

ClosestPointResult closest_point(const PeriodicOrbit& p, const TubeGeometry& tube,
                                 const Eigen::VectorXd& x0, int coarse_grid) {
    if (x0.size() != p.dimension())
        throw std::invalid_argument("closest_point: dimension mismatch");
    ClosestPointResult res = detail::closest_point_lenient(p, x0, coarse_grid);
    if (res.distance > tube.delta) {
        std::ostringstream msg;
        msg << "closest_point: point lies at distance " << res.distance
            << " from the orbit, outside the tube radius " << tube.delta;
        throw std::domain_error(msg.str());
    }
    if (!(res.f_slope < 0.0)) {
        std::ostringstream msg;
        msg << "closest_point: Newton slope " << res.f_slope
            << " not negative at the solution (internal error inside the tube)";
        throw std::runtime_error(msg.str());
    }
    return res;
}

}  // namespace delaycert
