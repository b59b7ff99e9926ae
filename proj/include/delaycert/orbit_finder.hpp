#pragma once

#include <Eigen/Dense>

#include "delaycert/field.hpp"
#include "delaycert/ode.hpp"
#include "delaycert/orbit.hpp"

// Periodic orbits of a vector field by Poincare-section shooting, plus the
// Floquet analysis that certifies hyperbolicity. The return map is solved by
// Newton with the exact monodromy-based Jacobian, the converged trajectory is
// sampled over one period and fitted as a trigonometric series, and the
// monodromy spectrum (one trivial multiplier at 1, the rest off the unit
// circle for a hyperbolic orbit) is computed from the variational flow.

namespace delaycert {

struct SectionPlane {
    Eigen::VectorXd point;
    Eigen::VectorXd normal;
};

struct ShootingProblem {
    VectorField field;
    SectionPlane section;
    Eigen::VectorXd guess;
    double period_guess = 0.0;
    OdeOptions ode{1e-12, 1e-12, 1e-3, 4000000};
};

struct ShootingOptions {
    double return_tol = 1e-9;      // scaled by max(1, |x|_inf)
    int max_newton = 50;
    int samples = 4096;            // trajectory samples over one period
    int min_modes = 16;            // trig fit band, doubled until the fit passes
    double transversality_tol = 1e-8;
};

PeriodicOrbit find_orbit(const ShootingProblem& problem, const ShootingOptions& opts = {});

struct FloquetReport {
    Eigen::VectorXcd multipliers;
    int trivial_index = -1;        // multiplier nearest 1
    double trivial_defect = 0.0;   // |mu_trivial - 1|
    bool hyperbolic = false;       // all others at least 1e-3 off the unit circle
    double orbit_residual = 0.0;   // sup |p' - f(p)| over the check grid
    double liouville_error = 0.0;  // relative det(monodromy) vs exp(integral of div f)
    Eigen::MatrixXd monodromy;
};

struct FloquetOptions {
    OdeOptions ode{1e-12, 1e-12, 1e-3, 4000000};
    double residual_tol = 1e-6;    // precondition on the orbit, scaled by max(1, speed)
    double hyperbolic_gap = 1e-3;
    int grid = 1024;
};

FloquetReport floquet(const VectorField& field, const PeriodicOrbit& orbit,
                      const FloquetOptions& opts = {});

struct RecurrenceSeed {
    Eigen::VectorXd point;
    double period = 0.0;
    double mismatch = 0.0;
};

struct RecurrenceOptions {
    double settle_time = 30.0;     // transient discarded before scanning
    double scan_time = 60.0;
    double min_period = 1.0;
    double window_factor = 2.0;    // recurrences sought in [min_period, factor * min_period]
    double threshold = 1e-2;
    OdeOptions ode{1e-10, 1e-12, 1e-3, 4000000};
};

// Nearest-return scan along a long trajectory: the best candidate loop start,
// period, and closure mismatch. Throws when nothing returns below threshold.
RecurrenceSeed recurrence_seed(const VectorField& field, const Eigen::VectorXd& start,
                               const RecurrenceOptions& opts = {});

}  // namespace delaycert
