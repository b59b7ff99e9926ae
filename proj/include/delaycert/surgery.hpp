#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "delaycert/field.hpp"
#include "delaycert/ode.hpp"
#include "delaycert/orbit.hpp"
#include "delaycert/orbit_finder.hpp"
#include "delaycert/signal.hpp"

/*
 * Vector-field surgery: given a base field f with periodic solution p and a
 * repaired observation o_new = a . p_new, construct
 *
 *     f'(x) = f(x) + (eps1(t0(x)) + eps2(t0(x))) lambda(w0 . w0 / delta^2)
 *
 * where t0, w0 are the closest-point data of x in the delta-tube of p_new,
 * eps1 = d(p_new - p)/dt, eps2 = f(p) - f(p_new), and lambda is the surgery
 * bump (1 on [0, 1/2], 0 from 3/4 on). Then p_new solves dx/dt = f'(x)
 * exactly, f' = f outside the tube, and |delta f| shrinks linearly with the
 * signal shift.
 */

namespace delaycert {

// Shift p along a so the observed signal becomes o_new: components gain
// (o_new - o_old) a_i / |a|^2, leaving a . p_new = o_new identically.
// Requires o_old = a . p to 1e-9 (relative to its size).
PeriodicOrbit lift_signal(const PeriodicOrbit& p, const PeriodicSignal& o_old,
                          const PeriodicSignal& o_new, const Eigen::VectorXd& a);

struct EpsilonTerms {
    std::vector<PeriodicSignal> eps1;  // exact componentwise derivative of the lift shift
    std::function<Eigen::VectorXd(double)> eps2;
    double eps1_sup = 0.0;
    double eps2_sup = 0.0;
    double period = 0.0;
};

EpsilonTerms epsilon_terms(const VectorField& f, const PeriodicOrbit& p,
                           const PeriodicOrbit& p_new, int grid = 4096);

class PerturbedField {
  public:
    PerturbedField(VectorField base, PeriodicOrbit orbit, TubeGeometry tube, EpsilonTerms eps,
                   int coarse_grid = 2048);

    int dimension() const { return base_.dimension; }
    const VectorField& base() const { return base_; }
    const PeriodicOrbit& orbit() const { return orbit_; }
    const TubeGeometry& tube() const { return tube_; }
    const EpsilonTerms& epsilon() const { return eps_; }

    // Zero outside the tube by construction; inside, one Newton closest-point
    // solve per query against a cached coarse sample table.
    Eigen::VectorXd delta_f(const Eigen::VectorXd& x) const;
    Eigen::VectorXd eval(const Eigen::VectorXd& x) const { return base_.eval(x) + delta_f(x); }

    // Self-contained copy usable wherever a VectorField is expected.
    VectorField as_field() const;

  private:
    VectorField base_;
    PeriodicOrbit orbit_;
    TubeGeometry tube_;
    EpsilonTerms eps_;
    std::vector<Eigen::VectorXd> table_;
    double table_dt_ = 0.0;
    double slack_ = 0.0;           // coarse-distance overestimate bound
    double support_radius_ = 0.0;  // delta * sqrt(3)/2, where the bump dies
};

PerturbedField build_perturbed_field(const VectorField& f, const PeriodicOrbit& p_new,
                                     const EpsilonTerms& eps, const TubeGeometry& tube);

struct SurgeryRow {
    double scale = 0.0;           // shift multiplier
    double shift_distance = 0.0;  // distance_2(o_old, o_old + scale * shift)
    double sup_delta_f = 0.0;
};

struct SurgeryReport {
    double on_orbit_residual = 0.0;  // sup |p_new' - f'(p_new)| over the grid
    double sup_delta_f = 0.0;        // over random tube points and the orbit
    double c0 = 0.0;
    double c1 = 0.0;                 // finite-difference Jacobian sup (Frobenius)
    double closure_error = 0.0;      // one-period integration of f' from p_new(0)
    double exterior_max = 0.0;       // should be exactly zero
    int exterior_tested = 0;
    std::vector<SurgeryRow> scaling;
};

struct SurgeryVerifyOptions {
    int grid = 4096;
    int tube_samples = 2000;
    int jac_samples = 128;
    int exterior_points = 10000;
    int sweep_levels = 3;
    std::uint64_t seed = 0;
    OdeOptions ode{1e-10, 1e-12, 1e-3, 4000000};
};

// Builds the perturbed field for o_new and for geometrically shrunk shifts,
// and measures every closeness quantity the correction is accountable for:
// the on-orbit residual, interior and exterior sups, derivative magnitudes,
// linear decay of |delta f| with the shift, and one-period flow closure.
SurgeryReport verify_surgery(const VectorField& f, const PeriodicOrbit& p,
                             const PeriodicSignal& o_old, const PeriodicSignal& o_new,
                             const Eigen::VectorXd& a, const TubeGeometry& tube,
                             const SurgeryVerifyOptions& opts = {});

struct ContinuationResult {
    PeriodicOrbit orbit;
    double period_scale = 0.0;  // T_new / T_old, the delay rescale factor
    FloquetReport floquet;
};

// Newton continuation of a hyperbolic orbit of f to the nearby field g,
// shooting from p's own section. Throws with the last residual when g is
// too far for the seed to converge.
ContinuationResult continue_orbit(const VectorField& f, const VectorField& g,
                                  const PeriodicOrbit& p, const ShootingOptions& opts = {});

}  // namespace delaycert
