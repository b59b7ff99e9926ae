#pragma once

#include <vector>

#include <Eigen/Dense>

#include "delaycert/signal.hpp"

// Closed curves in R^d with nonvanishing speed, and the geometry of their
// tubular neighborhoods. The tube radius delta is derived from five extremal
// constants of the curve:
//
//     2m      = min ||p'||            m_star = max ||p''||
//     M       = sqrt(d) max ||p''||_inf        r = m / M
//     M_star  = sqrt(d) max ||s'||_inf,   s = p' / ||p'||  (unit tangent)
//     Delta   = min ||p(t2) - p(t1)|| over circular gaps >= r
//
// Any delta below min(4m^2/(1+m_star), m/(2 M_star), Delta/2) gives a tube in
// which every point has a unique closest orbit time, found here by a Newton
// iteration that the same constants keep monotone.

namespace delaycert {

class PeriodicOrbit {
  public:
    PeriodicOrbit() = default;
    explicit PeriodicOrbit(std::vector<PeriodicSignal> components);

    double period() const { return period_; }
    int dimension() const { return static_cast<int>(components_.size()); }
    const std::vector<PeriodicSignal>& components() const { return components_; }
    const PeriodicSignal& component(int i) const;

    Eigen::VectorXd point(double t) const { return derivative(t, 0); }
    Eigen::VectorXd velocity(double t) const { return derivative(t, 1); }
    Eigen::VectorXd acceleration(double t) const { return derivative(t, 2); }
    Eigen::VectorXd derivative(double t, int k) const;

    Eigen::VectorXd unit_tangent(double t) const;
    // d/dt of the unit tangent, evaluated in closed form from p' and p''.
    Eigen::VectorXd tangent_rate(double t) const;

    PeriodicOrbit shifted(double dt) const;
    PeriodicOrbit scaled(double factor) const;

  private:
    double period_ = 0.0;
    std::vector<PeriodicSignal> components_;
};

// Componentwise analog of the scalar metric: max over k <= r of the sup of
// the Euclidean norm of the k-th derivative mismatch in scaled time, plus
// the period difference.
SignalDistance orbit_distance_r(const PeriodicOrbit& a, const PeriodicOrbit& b, int r,
                                int grid = 4096);

struct TubeGeometry {
    double m = 0.0;        // half the minimum speed
    double m_star = 0.0;   // max ||p''||
    double M = 0.0;        // sqrt(d) max ||p''||_inf
    double r_frak = 0.0;   // m / M
    double M_star = 0.0;   // sqrt(d) max ||s'||_inf
    double Delta = 0.0;    // min chord over the far gap range
    double Delta_lower_bound = 0.0;  // grid value minus Lipschitz slack
    double delta = 0.0;    // chosen tube radius
    double uniform_epsilon = 0.0;    // d_r ball radius the tube survives, 0 if unset
    int grid = 0;
};

struct TubeOptions {
    int grid = 4096;
    int chord_grid = 1024;
    double safety = 0.9;   // delta as a fraction of the theoretical bound
};

// Extremal constants of the orbit and the tube radius they admit.
TubeGeometry tube_constants(const PeriodicOrbit& p, const TubeOptions& opts = {});

// Tube valid not just for p but for every orbit within uniform_epsilon of it
// in the C^r metric (r >= 2). The constants are degraded (m halved, the rest
// doubled, chords measured over the wider gap range the degraded r implies)
// and epsilon is the largest value, found by bisection, for which the
// degraded constants provably dominate every orbit in the ball.
TubeGeometry uniform_tube(const PeriodicOrbit& p, double epsilon_tol = 1e-6,
                          const TubeOptions& opts = {});

struct ClosestPointResult {
    double t0 = 0.0;
    Eigen::VectorXd w0;    // x0 - p(t0), orthogonal to the velocity at t0
    double distance = 0.0;
    double f_slope = 0.0;  // d/dt of (x0 - p(t)) . p'(t) at t0; negative in the tube
    int newton_iters = 0;
};

// Unique closest orbit time of a point inside the tube: coarse scan, then
// Newton on (x0 - p(t)) . p'(t) = 0 to 1e-12 in t. Points farther than
// tube.delta from the orbit raise std::domain_error.
ClosestPointResult closest_point(const PeriodicOrbit& p, const TubeGeometry& tube,
                                 const Eigen::VectorXd& x0, int coarse_grid = 1024);

namespace detail {
// Newton solve without the tube-membership requirement; used by field
// evaluation, where points near the support boundary only need a correct
// inside/outside decision. Falls back to direct distance minimization when
// the Newton slope degenerates (only possible outside the guaranteed tube).
ClosestPointResult closest_point_lenient(const PeriodicOrbit& p, const Eigen::VectorXd& x0,
                                         int coarse_grid);
}  // namespace detail

}  // namespace delaycert
