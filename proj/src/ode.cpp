#include "delaycert/ode.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace delaycert {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                 e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                 e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

}  // namespace

Eigen::VectorXd integrate(const OdeRhs& f, Eigen::VectorXd x, double span,
                          const OdeOptions& opts, const OdeObserver& observer) {
    if (!(span >= 0.0)) throw std::invalid_argument("integrate: span must be nonnegative");
    if (span == 0.0) return x;

    const double h_floor = 1e-14 * span;
    double t = 0.0;
    double h = std::min(opts.initial_step, span);
    Eigen::VectorXd k1 = f(x);
    if (!k1.allFinite()) throw std::runtime_error("integrate: non-finite derivative at start");

    for (long step = 0; step < opts.max_steps; ++step) {
        if (t >= span) return x;
        h = std::min(h, span - t);
        if (h < h_floor) throw std::runtime_error("integrate: step size underflow");

        const Eigen::VectorXd k2 = f(x + h * (a21 * k1));
        const Eigen::VectorXd k3 = f(x + h * (a31 * k1 + a32 * k2));
        const Eigen::VectorXd k4 = f(x + h * (a41 * k1 + a42 * k2 + a43 * k3));
        const Eigen::VectorXd k5 = f(x + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        const Eigen::VectorXd k6 =
            f(x + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        const Eigen::VectorXd x_new = x + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        const Eigen::VectorXd k7 = f(x_new);
        const Eigen::VectorXd err_vec =
            h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

        if (!x_new.allFinite() || !k7.allFinite())
            throw std::runtime_error("integrate: trajectory became non-finite");

        double err = 0.0;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            const double scale =
                opts.atol + opts.rtol * std::max(std::fabs(x[i]), std::fabs(x_new[i]));
            const double r = err_vec[i] / scale;
            err += r * r;
        }
        err = std::sqrt(err / static_cast<double>(x.size()));

        if (err <= 1.0) {
            t += h;
            x = x_new;
            k1 = k7;  // first stage of the next step equals the last of this one
            if (observer && !observer(t, x)) return x;
        }
        const double factor = (err > 0.0) ? 0.9 * std::pow(err, -0.2) : 5.0;
        h *= std::clamp(factor, 0.2, 5.0);
    }
    throw std::runtime_error("integrate: step budget exhausted");
}

}  // namespace delaycert
