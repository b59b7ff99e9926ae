#pragma once

#include <cmath>
#include <stdexcept>

// Wrap-aware arithmetic on the circle R / (period Z). Every routine that takes
// a time argument elsewhere in the library funnels through these helpers, so
// the wrapping convention (half-open [0, period)) lives in exactly one place.

namespace delaycert {

// Map t into [0, period).
inline double wrap(double t, double period) {
    if (!(period > 0.0)) throw std::invalid_argument("wrap: period must be positive");
    double w = t - period * std::floor(t / period);
    if (w >= period) w = 0.0;  // guards against rounding at exact multiples
    return w;
}

// Signed offset of b relative to a, in [-period/2, period/2).
inline double circ_signed(double a, double b, double period) {
    double d = wrap(b - a, period);
    return (d >= 0.5 * period) ? d - period : d;
}

// Shortest distance between a and b on the circle, in [0, period/2].
inline double circ_dist(double a, double b, double period) {
    return std::fabs(circ_signed(a, b, period));
}

// Length of the forward arc a -> b, in [0, period).
inline double forward_arc(double a, double b, double period) {
    return wrap(b - a, period);
}

// Arc starting at `start` of length `width`, possibly wrapping past 0.
struct CircleArc {
    double start = 0.0;
    double width = 0.0;
    double period = 1.0;

    CircleArc() = default;
    CircleArc(double start_, double width_, double period_)
        : start(wrap(start_, period_)), width(width_), period(period_) {
        if (!(width > 0.0) || width > period)
            throw std::invalid_argument("CircleArc: width must lie in (0, period]");
    }

    // Position of t within the arc, as a fraction of width; values outside
    // [0, 1) mean t is not in the arc (the fraction keeps growing up to
    // period/width before wrapping, which callers use to evaluate compactly
    // supported profiles without branching).
    double offset_fraction(double t) const { return forward_arc(start, t, period) / width; }

    bool contains(double t) const { return offset_fraction(t) < 1.0; }
};

}  // namespace delaycert
