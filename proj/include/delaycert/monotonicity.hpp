#pragma once

#include <vector>

#include "delaycert/signal.hpp"

// Critical-point bookkeeping. A profile records where o' vanishes, the value
// of o'' there, and whether 0 is a regular value of o' (every critical point
// simple). The minimum circular gap mu between consecutive critical points is
// the quantity every delay bound in the certifier is measured against.

namespace delaycert {

struct MonotonicityProfile {
    double period = 1.0;
    std::vector<double> points;              // sorted, in [0, period)
    std::vector<double> second_derivatives;  // o'' at each point
    std::vector<double> tangencies;          // suspected zeros without a sign change
    bool regular = false;

    // Minimum circular gap between consecutive critical points.
    double mu() const;
};

struct CriticalPointOptions {
    double regularity_rel_tol = 1e-8;  // |o''| threshold, relative to norm_2(o)
    int min_grid = 64;
    double root_xtol_rel = 1e-13;      // bisection/Newton tolerance, relative to period
};

// Locate all zeros of o' by dense sign-change bracketing plus safeguarded
// Newton. Grid density scales with the number of modes and with closure-term
// feature widths. Throws on constant (degenerate) input.
MonotonicityProfile critical_points(const PeriodicSignal& o, const CriticalPointOptions& opts = {});

// mu of a validated profile; throws if the profile has no critical points.
double min_monotone_interval(const MonotonicityProfile& profile);

}  // namespace delaycert
