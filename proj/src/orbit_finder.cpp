#include "delaycert/orbit_finder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "delaycert/detail/optimize.hpp"

namespace delaycert {

namespace {

// State layout for the variational flow: x in the head, the fundamental
// matrix V (column-major) in the tail, V(0) = I.
Eigen::VectorXd joint_state(const Eigen::VectorXd& x) {
    const int d = static_cast<int>(x.size());
    Eigen::VectorXd s(d + d * d);
    s.head(d) = x;
    Eigen::Map<Eigen::MatrixXd>(s.data() + d, d, d).setIdentity();
    return s;
}

OdeRhs joint_rhs(const VectorField& field) {
    const int d = field.dimension;
    return [&field, d](const Eigen::VectorXd& s) {
        const Eigen::VectorXd x = s.head(d);
        const Eigen::Map<const Eigen::MatrixXd> V(s.data() + d, d, d);
        Eigen::VectorXd out(d + d * d);
        out.head(d) = field.eval(x);
        Eigen::Map<Eigen::MatrixXd>(out.data() + d, d, d) = field.jacobian(x) * V;
        return out;
    };
}

struct Crossing {
    double t = 0.0;
    Eigen::VectorXd state;
};

// Same-direction crossings of the plane (q, n) by the head coordinates of a
// (possibly joint) trajectory from `state0`, within the time window
// [t_lo, t_hi]. Each bracket from the adaptive steps is refined by bisection
// with short re-integrations from the stored step start.
std::vector<Crossing> plane_crossings(const OdeRhs& rhs, const Eigen::VectorXd& state0,
                                      const Eigen::VectorXd& q, const Eigen::VectorXd& n,
                                      double direction, double t_lo, double t_hi,
                                      const OdeOptions& ode, int head_dim) {
    auto g = [&](const Eigen::VectorXd& s) {
        return direction * n.dot(s.head(head_dim) - q);
    };

    std::vector<Crossing> out;
    double t_prev = 0.0;
    Eigen::VectorXd s_prev = state0;
    auto observer = [&](double t, const Eigen::VectorXd& s) {
        const double ga = g(s_prev), gb = g(s);
        if (t_prev >= t_lo && t <= t_hi && ga < 0.0 && gb >= 0.0) {
            double lo = 0.0, hi = t - t_prev;
            const Eigen::VectorXd base = s_prev;
            for (int i = 0; i < 60 && hi - lo > 1e-13 * std::max(1.0, t); ++i) {
                const double mid = 0.5 * (lo + hi);
                const double gm = g(integrate(rhs, base, mid, ode));
                (gm < 0.0 ? lo : hi) = mid;
            }
            const double tc = 0.5 * (lo + hi);
            out.push_back({t_prev + tc, integrate(rhs, base, tc, ode)});
        }
        t_prev = t;
        s_prev = s;
        return t < t_hi;
    };
    integrate(rhs, state0, t_hi * 1.0000001, ode, observer);
    return out;
}

PeriodicSignal fit_component(double period, const std::vector<double>& samples, int min_modes) {
    const int cap = (static_cast<int>(samples.size()) - 1) / 2;
    for (int n = min_modes; n <= cap; n *= 2) {
        try {
            return from_samples(period, samples, n);
        } catch (const std::runtime_error&) {
            if (n == cap) throw;
        }
        if (n * 2 > cap && n < cap) n = cap / 2;  // final doubling lands on the cap
    }
    return from_samples(period, samples, cap);
}

}  // namespace

PeriodicOrbit find_orbit(const ShootingProblem& problem, const ShootingOptions& opts) {
    const VectorField& field = problem.field;
    const int d = field.dimension;
    if (problem.section.normal.size() != d || problem.section.point.size() != d ||
        problem.guess.size() != d)
        throw std::invalid_argument("find_orbit: section/guess dimension mismatch");
    if (!(problem.period_guess > 0.0))
        throw std::invalid_argument("find_orbit: period guess must be positive");

    const Eigen::VectorXd n = problem.section.normal.normalized();
    const Eigen::VectorXd& q = problem.section.point;

    Eigen::VectorXd x = problem.guess - n * n.dot(problem.guess - q);
    const Eigen::VectorXd fx0 = field.eval(x);
    if (std::fabs(n.dot(fx0)) <= opts.transversality_tol * fx0.norm())
        throw std::invalid_argument("find_orbit: section is tangent to the flow at the guess");
    const double direction = n.dot(fx0) > 0.0 ? 1.0 : -1.0;

    // Orthonormal in-plane basis: the trailing columns of a Householder Q
    // whose first column is the normal.
    Eigen::MatrixXd nmat = n;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(nmat);
    Eigen::MatrixXd Q = qr.householderQ();
    const Eigen::MatrixXd U = Q.rightCols(d - 1);

    const OdeRhs rhs = joint_rhs(field);
    double T_est = problem.period_guess;
    double resid = std::numeric_limits<double>::infinity();

    for (int iter = 0; iter < opts.max_newton; ++iter) {
        const auto crossings = plane_crossings(rhs, joint_state(x), q, n, direction,
                                               0.25 * T_est, 2.0 * T_est, problem.ode, d);
        if (crossings.empty()) {
            std::ostringstream msg;
            msg << "find_orbit: no section return in [" << 0.25 * T_est << ", " << 2.0 * T_est
                << "] (last residual " << resid << ")";
            throw std::runtime_error(msg.str());
        }
        const Crossing& best = *std::min_element(
            crossings.begin(), crossings.end(), [&](const Crossing& a, const Crossing& b) {
                return std::fabs(a.t - T_est) < std::fabs(b.t - T_est);
            });

        const Eigen::VectorXd R = best.state.head(d);
        const Eigen::Map<const Eigen::MatrixXd> M(best.state.data() + d, d, d);
        resid = (R - x).norm();
        const double scale = std::max(1.0, x.cwiseAbs().maxCoeff());
        T_est = best.t;
        if (resid <= opts.return_tol * scale) {
            // Converged: sample one period and fit.
            std::vector<std::vector<double>> samples(
                static_cast<std::size_t>(d), std::vector<double>(static_cast<std::size_t>(opts.samples)));
            Eigen::VectorXd xs = x;
            const double dt = T_est / opts.samples;
            for (int i = 0; i < opts.samples; ++i) {
                for (int c = 0; c < d; ++c)
                    samples[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)] = xs[c];
                xs = integrate([&field](const Eigen::VectorXd& y) { return field.eval(y); }, xs,
                               dt, problem.ode);
            }
            std::vector<PeriodicSignal> comps;
            comps.reserve(static_cast<std::size_t>(d));
            for (int c = 0; c < d; ++c)
                comps.push_back(fit_component(T_est, samples[static_cast<std::size_t>(c)],
                                              opts.min_modes));
            return PeriodicOrbit(std::move(comps));
        }

        // Newton on the projected return map: dR/dx is the monodromy
        // composed with the projection along the flow onto the section.
        const Eigen::VectorXd fR = field.eval(R);
        const double nfR = n.dot(fR);
        if (std::fabs(nfR) <= opts.transversality_tol * fR.norm())
            throw std::runtime_error("find_orbit: section tangency at the return point");
        const Eigen::MatrixXd P = Eigen::MatrixXd::Identity(d, d) - fR * n.transpose() / nfR;
        const Eigen::MatrixXd J = U.transpose() * P * M * U;
        const Eigen::MatrixXd A = J - Eigen::MatrixXd::Identity(d - 1, d - 1);
        Eigen::VectorXd rhs_vec = -U.transpose() * (R - x);
        Eigen::VectorXd dxi = A.fullPivLu().solve(rhs_vec);
        const double cap = 0.2 * (1.0 + x.norm());
        if (dxi.norm() > cap) dxi *= cap / dxi.norm();
        x += U * dxi;
    }
    std::ostringstream msg;
    msg << "find_orbit: Newton did not converge in " << opts.max_newton
        << " iterations (last residual " << resid << ")";
    throw std::runtime_error(msg.str());
}

FloquetReport floquet(const VectorField& field, const PeriodicOrbit& orbit,
                      const FloquetOptions& opts) {
    if (field.dimension != orbit.dimension())
        throw std::invalid_argument("floquet: dimension mismatch");
    const int d = field.dimension;
    const double T = orbit.period();

    double resid = 0.0, speed = 0.0;
    for (int i = 0; i < opts.grid; ++i) {
        const double t = T * i / opts.grid;
        const Eigen::VectorXd v = orbit.velocity(t);
        resid = std::max(resid, (v - field.eval(orbit.point(t))).norm());
        speed = std::max(speed, v.norm());
    }
    if (resid > opts.residual_tol * std::max(1.0, speed)) {
        std::ostringstream msg;
        msg << "floquet: orbit residual " << resid << " exceeds tolerance "
            << opts.residual_tol * std::max(1.0, speed);
        throw std::invalid_argument(msg.str());
    }

    // The monodromy is accumulated as a product of short-segment factors.
    // Strongly contracting orbits make det(M) cancel catastrophically when M
    // is integrated in one piece; each segment factor stays well conditioned,
    // so its determinant (and hence the log-space sum below) keeps full
    // relative accuracy.
    const int segments = 16;
    Eigen::MatrixXd monodromy = Eigen::MatrixXd::Identity(d, d);
    double log_det = 0.0;
    Eigen::VectorXd xs = orbit.point(0.0);
    for (int i = 0; i < segments; ++i) {
        const Eigen::VectorXd seg =
            integrate(joint_rhs(field), joint_state(xs), T / segments, opts.ode);
        const Eigen::Map<const Eigen::MatrixXd> Mi(seg.data() + d, d, d);
        const double di = Mi.determinant();
        if (!(di > 0.0))
            throw std::runtime_error("floquet: segment determinant not positive");
        log_det += std::log(di);
        monodromy = Mi * monodromy;
        xs = seg.head(d);
    }
    FloquetReport report;
    report.orbit_residual = resid;
    report.monodromy = monodromy;
    Eigen::EigenSolver<Eigen::MatrixXd> es(report.monodromy);
    report.multipliers = es.eigenvalues();

    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < d; ++i) {
        const double defect = std::abs(report.multipliers[i] - std::complex<double>(1.0, 0.0));
        if (defect < best) { best = defect; report.trivial_index = i; }
    }
    report.trivial_defect = best;
    report.hyperbolic = true;
    for (int i = 0; i < d; ++i) {
        if (i == report.trivial_index) continue;
        if (std::fabs(std::abs(report.multipliers[i]) - 1.0) <= opts.hyperbolic_gap)
            report.hyperbolic = false;
    }

    // Liouville: det of the monodromy against exp of the divergence integral
    // along the orbit (periodic trapezoid, spectrally accurate). Compared in
    // log space using the segment sum, which survives det(M) underflow.
    double div_integral = 0.0;
    const int m = 4096;
    for (int i = 0; i < m; ++i)
        div_integral += field.divergence(orbit.point(T * i / m));
    div_integral *= T / m;
    report.liouville_error = std::fabs(std::expm1(log_det - div_integral));
    return report;
}

RecurrenceSeed recurrence_seed(const VectorField& field, const Eigen::VectorXd& start,
                               const RecurrenceOptions& opts) {
    if (start.size() != field.dimension)
        throw std::invalid_argument("recurrence_seed: start dimension mismatch");
    auto rhs = [&field](const Eigen::VectorXd& y) { return field.eval(y); };
    Eigen::VectorXd x = integrate(rhs, start, opts.settle_time, opts.ode);

    const double dt = opts.min_period / 64.0;
    const int count = static_cast<int>(std::floor(opts.scan_time / dt)) + 1;
    std::vector<Eigen::VectorXd> pts;
    pts.reserve(static_cast<std::size_t>(count));
    pts.push_back(x);
    for (int i = 1; i < count; ++i) {
        x = integrate(rhs, x, dt, opts.ode);
        pts.push_back(x);
    }

    const int j_lo = static_cast<int>(std::ceil(opts.min_period / dt));
    const int j_hi = static_cast<int>(std::floor(opts.window_factor * opts.min_period / dt));
    RecurrenceSeed seed;
    seed.mismatch = std::numeric_limits<double>::infinity();
    int best_i = -1;
    int best_j = 0;
    for (int i = 0; i < count; ++i) {
        for (int j = j_lo; j <= j_hi && i + j < count; ++j) {
            const double m = (pts[static_cast<std::size_t>(i + j)] - pts[static_cast<std::size_t>(i)]).norm();
            if (m < seed.mismatch) {
                seed.mismatch = m;
                best_i = i;
                best_j = j;
            }
        }
    }
    if (best_i >= 0) {
        seed.point = pts[static_cast<std::size_t>(best_i)];
        seed.period = best_j * dt;
        // The grid argmin aliases the return time to the nearest dt, which
        // inflates the mismatch by about speed * dt / 2. One parabolic step
        // through the squared mismatch at the winning offset and its
        // neighbours recovers the continuous minimiser.
        if (best_j >= 1 && best_i + best_j + 1 < count) {
            auto sq = [&](int j) {
                const double v =
                    (pts[static_cast<std::size_t>(best_i + j)] - pts[static_cast<std::size_t>(best_i)]).norm();
                return v * v;
            };
            const double a = sq(best_j - 1);
            const double b = sq(best_j);
            const double c = sq(best_j + 1);
            const double curvature = a - 2.0 * b + c;
            if (curvature > 0.0) {
                const double corr = std::clamp(0.5 * (a - c) / curvature, -1.0, 1.0);
                const double s = (best_j + corr) * dt;
                const Eigen::VectorXd ret = integrate(rhs, seed.point, s, opts.ode);
                const double refined = (ret - seed.point).norm();
                if (refined < seed.mismatch) {
                    seed.mismatch = refined;
                    seed.period = s;
                }
            }
        }
    }
    if (!(seed.mismatch <= opts.threshold)) {
        std::ostringstream msg;
        msg << "recurrence_seed: best return mismatch " << seed.mismatch
            << " stays above the threshold " << opts.threshold
            << "; scan longer or widen the period window";
        throw std::runtime_error(msg.str());
    }
    return seed;
}

}  // namespace delaycert
