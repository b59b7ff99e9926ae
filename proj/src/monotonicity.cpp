#include "delaycert/monotonicity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "delaycert/detail/optimize.hpp"

namespace delaycert {

double MonotonicityProfile::mu() const {
    if (points.empty())
        throw std::domain_error("MonotonicityProfile::mu: profile has no critical points");
    if (points.size() == 1) return period;
    double best = period;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double next = (i + 1 < points.size()) ? points[i + 1] : points[0] + period;
        best = std::min(best, next - points[i]);
    }
    return best;
}

double min_monotone_interval(const MonotonicityProfile& profile) {
    if (!profile.regular)
        throw std::invalid_argument(
            "min_monotone_interval: irregular profile; regularize the signal first");
    return profile.mu();
}

MonotonicityProfile critical_points(const PeriodicSignal& o, const CriticalPointOptions& opts) {
    const double T = o.period();
    const double norm0 = norm_r(o, 0);
    const double dsup = detail::circle_sup([&](double t) { return std::fabs(o.eval(t, 1)); }, T,
                                           std::max(opts.min_grid, 16 * (o.mode_count() + 1)))
                            .second;
    if (dsup <= 1e-12 * std::max(1.0, norm0) * (2.0 * M_PI / T))
        throw std::domain_error("critical_points: degenerate (constant) signal");

    // Grid density: enough to separate the fastest trig mode and the
    // narrowest closure feature.
    long n = std::max<long>(opts.min_grid, 16L * (o.mode_count() + 1));
    for (const SignalTerm& term : o.terms()) {
        if (const auto* p = std::get_if<PulseSumTerm>(&term))
            n += 16L * static_cast<long>(std::ceil(T / p->h));
        if (const auto* q = std::get_if<SlopeTerm>(&term))
            n += 16L * static_cast<long>(std::ceil(8.0 * T / q->arc.width));
    }
    n = std::min<long>(n, 1L << 20);
    const double h = T / static_cast<double>(n);
    const double xtol = opts.root_xtol_rel * T;

    std::vector<double> d(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) d[static_cast<std::size_t>(i)] = o.eval(i * h, 1);

    auto deriv1 = [&](double t) { return o.eval(t, 1); };
    auto deriv2 = [&](double t) { return o.eval(t, 2); };

    std::vector<double> roots;
    for (long i = 0; i < n; ++i) {
        const double di = d[static_cast<std::size_t>(i)];
        const double dj = d[static_cast<std::size_t>((i + 1) % n)];
        if (di == 0.0) {
            roots.push_back(wrap(i * h, T));
        } else if ((di > 0.0) != (dj > 0.0) && dj != 0.0) {
            roots.push_back(wrap(detail::bracketed_root(deriv1, deriv2, i * h, (i + 1) * h, xtol), T));
        }
    }

    // Suspected zeros without a sign change: local minima of |o'| that refine
    // to (numerically) zero. These are the tangential critical points 0 being
    // a regular value of o' rules out.
    std::vector<double> tangencies;
    const double prefilter = 1e-2 * dsup;
    const double zero_tol = 1e-10 * dsup;
    for (long i = 0; i < n; ++i) {
        const double cur = std::fabs(d[static_cast<std::size_t>(i)]);
        if (cur > prefilter) continue;
        const double prev = std::fabs(d[static_cast<std::size_t>((i + n - 1) % n)]);
        const double next = std::fabs(d[static_cast<std::size_t>((i + 1) % n)]);
        if (cur > prev || cur > next) continue;
        bool sign_change = false;
        for (long w = -2; w < 2; ++w) {
            const double a = d[static_cast<std::size_t>(((i + w) % n + n) % n)];
            const double b = d[static_cast<std::size_t>(((i + w + 1) % n + n) % n)];
            sign_change = sign_change || (a > 0.0) != (b > 0.0);
        }
        if (sign_change) continue;  // handled by the bracketing pass
        auto [x, v] = detail::golden_min([&](double t) { return std::fabs(o.eval(t, 1)); },
                                         (i - 1) * h, (i + 1) * h);
        if (v <= zero_tol) tangencies.push_back(wrap(x, T));
    }

    std::vector<double> all = roots;
    all.insert(all.end(), tangencies.begin(), tangencies.end());
    std::sort(all.begin(), all.end());
    std::vector<double> pts;
    for (double t : all) {
        bool dup = false;
        for (double p : pts) dup = dup || circ_dist(p, t, T) < std::max(4.0 * xtol, 1e-15 * T);
        if (!dup) pts.push_back(t);
    }
    if (pts.empty())
        throw std::domain_error("critical_points: no critical points found (numerically monotone "
                                "derivative is inconsistent with periodicity)");

    MonotonicityProfile profile;
    profile.period = T;
    profile.points = pts;
    profile.tangencies = tangencies;
    for (double t : pts) profile.second_derivatives.push_back(o.eval(t, 2));

    const double reg_tol = opts.regularity_rel_tol * norm_r(o, 2);
    profile.regular = tangencies.empty();
    for (double s : profile.second_derivatives)
        profile.regular = profile.regular && std::fabs(s) > reg_tol;
    return profile;
}

}  // namespace delaycert
