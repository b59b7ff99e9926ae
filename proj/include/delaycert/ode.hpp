#pragma once

#include <functional>

#include <Eigen/Dense>

namespace delaycert {

// Adaptive Dormand-Prince 5(4) for autonomous systems. Step control is the
// standard mixed absolute/relative error estimate with PI-free 0.9 safety;
// the first-same-as-last stage is reused. Integration is forward only.
struct OdeOptions {
    double rtol = 1e-10;
    double atol = 1e-12;
    double initial_step = 1e-3;
    long max_steps = 4000000;
};

using OdeRhs = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// Called after each accepted step with (t, x); return false to stop early.
using OdeObserver = std::function<bool(double, const Eigen::VectorXd&)>;

// State at t = t1 (or at the observer's stop point). Throws on step-size
// underflow or step-budget exhaustion.
Eigen::VectorXd integrate(const OdeRhs& f, Eigen::VectorXd x0, double span,
                          const OdeOptions& opts = {}, const OdeObserver& observer = {});

}  // namespace delaycert
