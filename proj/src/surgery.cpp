#include "delaycert/surgery.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include "delaycert/bump.hpp"
#include "delaycert/circle.hpp"
#include "delaycert/detail/optimize.hpp"
#include "delaycert/detail/rng.hpp"

namespace delaycert {

PeriodicOrbit lift_signal(const PeriodicOrbit& p, const PeriodicSignal& o_old,
                          const PeriodicSignal& o_new, const Eigen::VectorXd& a) {
    if (a.size() != p.dimension()) throw std::invalid_argument("lift_signal: a dimension mismatch");
    const double a2 = a.squaredNorm();
    if (!(a2 > 0.0)) throw std::invalid_argument("lift_signal: observation vector must be nonzero");
    const double T = p.period();
    if (std::fabs(o_old.period() - T) > 1e-12 * T || std::fabs(o_new.period() - T) > 1e-12 * T)
        throw std::invalid_argument("lift_signal: period mismatch");

    double fit = 0.0;
    for (int i = 0; i < 4096; ++i) {
        const double t = T * i / 4096.0;
        fit = std::max(fit, std::fabs(a.dot(p.point(t)) - o_old.eval(t)));
    }
    if (fit > 1e-9 * std::max(1.0, norm_r(o_old, 0))) {
        std::ostringstream msg;
        msg << "lift_signal: o_old differs from a . p by " << fit;
        throw std::invalid_argument(msg.str());
    }

    const PeriodicSignal shift = o_new - o_old;
    std::vector<PeriodicSignal> comps;
    comps.reserve(static_cast<std::size_t>(p.dimension()));
    for (int i = 0; i < p.dimension(); ++i) {
        if (a[i] == 0.0)
            comps.push_back(p.component(i));
        else
            comps.push_back(p.component(i) + shift.scaled(a[i] / a2));
    }
    return PeriodicOrbit(std::move(comps));
}

EpsilonTerms epsilon_terms(const VectorField& f, const PeriodicOrbit& p,
                           const PeriodicOrbit& p_new, int grid) {
    if (p.dimension() != p_new.dimension() || p.dimension() != f.dimension)
        throw std::invalid_argument("epsilon_terms: dimension mismatch");
    const double T = p.period();
    if (std::fabs(p_new.period() - T) > 1e-12 * T)
        throw std::invalid_argument("epsilon_terms: period mismatch");

    EpsilonTerms eps;
    eps.period = T;
    eps.eps1.reserve(static_cast<std::size_t>(p.dimension()));
    for (int i = 0; i < p.dimension(); ++i)
        eps.eps1.push_back((p_new.component(i) - p.component(i)).derivative());
    eps.eps2 = [f, p, p_new](double t) -> Eigen::VectorXd {
        return f.eval(p.point(t)) - f.eval(p_new.point(t));
    };
    for (int i = 0; i < grid; ++i) {
        const double t = T * i / grid;
        double s1 = 0.0;
        for (const auto& c : eps.eps1) {
            const double v = c.eval(t);
            s1 += v * v;
        }
        eps.eps1_sup = std::max(eps.eps1_sup, std::sqrt(s1));
        eps.eps2_sup = std::max(eps.eps2_sup, eps.eps2(t).norm());
    }
    return eps;
}

PerturbedField::PerturbedField(VectorField base, PeriodicOrbit orbit, TubeGeometry tube,
                               EpsilonTerms eps, int coarse_grid)
    : base_(std::move(base)), orbit_(std::move(orbit)), tube_(std::move(tube)),
      eps_(std::move(eps)) {
    if (base_.dimension != orbit_.dimension())
        throw std::invalid_argument("PerturbedField: dimension mismatch");
    const double T = orbit_.period();
    table_dt_ = T / coarse_grid;
    table_.reserve(static_cast<std::size_t>(coarse_grid));
    double v_max = 0.0;
    for (int i = 0; i < coarse_grid; ++i) {
        table_.push_back(orbit_.point(i * table_dt_));
        v_max = std::max(v_max, orbit_.velocity(i * table_dt_).norm());
    }
    slack_ = 0.5 * v_max * table_dt_;
    support_radius_ = tube_.delta * std::sqrt(3.0) / 2.0;
}

Eigen::VectorXd PerturbedField::delta_f(const Eigen::VectorXd& x) const {
    const int d = dimension();
    if (x.size() != d) throw std::invalid_argument("PerturbedField: dimension mismatch");
    const double T = orbit_.period();

    double best_d2 = std::numeric_limits<double>::infinity();
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < table_.size(); ++i) {
        const double d2 = (x - table_[i]).squaredNorm();
        if (d2 < best_d2) { best_d2 = d2; best_i = i; }
    }
    // The nearest curve point sits within half a sample arc of some sample,
    // so coarse minus slack lower-bounds the true distance.
    if (std::sqrt(best_d2) - slack_ > support_radius_) return Eigen::VectorXd::Zero(d);

    const double seed_t = static_cast<double>(best_i) * table_dt_;
    double t = seed_t;
    bool converged = false;
    for (int it = 0; it < 80; ++it) {
        const Eigen::VectorXd w = x - orbit_.point(t);
        const double g = w.dot(orbit_.velocity(t));
        const double dg = w.dot(orbit_.acceleration(t)) - orbit_.velocity(t).squaredNorm();
        if (!(std::fabs(dg) > 0.0)) break;
        const double step = -g / dg;
        t += step;
        if (std::fabs(step) < 1e-12 * std::max(1.0, T)) { converged = true; break; }
        if (std::fabs(t - seed_t) > 2.0 * table_dt_ + std::fabs(step)) break;
    }
    if (!converged) {
        auto dist = [&](double u) { return (x - orbit_.point(u)).norm(); };
        t = detail::golden_min(dist, seed_t - table_dt_, seed_t + table_dt_).first;
    }
    t = wrap(t, T);
    const Eigen::VectorXd w0 = x - orbit_.point(t);
    const double y = w0.squaredNorm() / (tube_.delta * tube_.delta);
    if (y >= 0.75) return Eigen::VectorXd::Zero(d);
    const double lam = BumpFunction{BumpProfile::surgery}.eval(y, 0);
    Eigen::VectorXd val(d);
    for (int i = 0; i < d; ++i) val[i] = eps_.eps1[static_cast<std::size_t>(i)].eval(t);
    val += eps_.eps2(t);
    return val * lam;
}

VectorField PerturbedField::as_field() const {
    VectorField vf;
    vf.dimension = dimension();
    vf.smoothness = base_.smoothness;
    PerturbedField copy = *this;
    vf.f = [copy](const Eigen::VectorXd& x) -> Eigen::VectorXd { return copy.eval(x); };
    return vf;
}

PerturbedField build_perturbed_field(const VectorField& f, const PeriodicOrbit& p_new,
                                     const EpsilonTerms& eps, const TubeGeometry& tube) {
    return PerturbedField(f, p_new, tube, eps);
}

namespace {

Eigen::VectorXd random_unit(std::mt19937_64& gen, int d) {
    // Polar Box-Muller on the reproducible uniform stream.
    Eigen::VectorXd v(d);
    int i = 0;
    while (i < d) {
        const double u1 = detail::unit_double(gen);
        const double u2 = detail::unit_double(gen);
        const double r = std::sqrt(-2.0 * std::log(std::max(u1, 1e-300)));
        v[i++] = r * std::cos(2.0 * std::acos(-1.0) * u2);
        if (i < d) v[i++] = r * std::sin(2.0 * std::acos(-1.0) * u2);
    }
    const double n = v.norm();
    return n > 0.0 ? Eigen::VectorXd(v / n) : Eigen::VectorXd::Unit(d, 0);
}

}  // namespace

SurgeryReport verify_surgery(const VectorField& f, const PeriodicOrbit& p,
                             const PeriodicSignal& o_old, const PeriodicSignal& o_new,
                             const Eigen::VectorXd& a, const TubeGeometry& tube,
                             const SurgeryVerifyOptions& opts) {
    const int d = f.dimension;
    const double T = p.period();
    SurgeryReport report;

    // Shared random probe set, reused across the scaling sweep so the decay
    // ratios compare like with like.
    std::mt19937_64 gen(opts.seed);
    std::vector<double> probe_t(static_cast<std::size_t>(opts.tube_samples));
    std::vector<Eigen::VectorXd> probe_dir(static_cast<std::size_t>(opts.tube_samples));
    std::vector<double> probe_rho(static_cast<std::size_t>(opts.tube_samples));
    for (int i = 0; i < opts.tube_samples; ++i) {
        probe_t[static_cast<std::size_t>(i)] = T * detail::unit_double(gen);
        probe_dir[static_cast<std::size_t>(i)] = random_unit(gen, d);
        probe_rho[static_cast<std::size_t>(i)] = 0.95 * tube.delta * detail::unit_double(gen);
    }

    const PeriodicSignal shift = o_new - o_old;
    auto build_at = [&](double scale) {
        const PeriodicSignal o_s = o_old + shift.scaled(scale);
        const PeriodicOrbit p_s = lift_signal(p, o_old, o_s, a);
        return std::pair<PeriodicOrbit, PerturbedField>(
            p_s, build_perturbed_field(f, p_s, epsilon_terms(f, p, p_s), tube));
    };

    auto sup_probe = [&](const PeriodicOrbit& p_s, const PerturbedField& pf) {
        double sup = 0.0;
        for (int i = 0; i < 512; ++i)
            sup = std::max(sup, pf.delta_f(p_s.point(T * i / 512.0)).norm());
        for (int i = 0; i < opts.tube_samples; ++i) {
            const Eigen::VectorXd x = p_s.point(probe_t[static_cast<std::size_t>(i)]) +
                                      probe_rho[static_cast<std::size_t>(i)] *
                                          probe_dir[static_cast<std::size_t>(i)];
            sup = std::max(sup, pf.delta_f(x).norm());
        }
        return sup;
    };

    for (int level = 0; level < opts.sweep_levels; ++level) {
        const double scale = std::pow(0.5, level);
        auto [p_s, pf] = build_at(scale);
        SurgeryRow row;
        row.scale = scale;
        row.shift_distance = distance_r(o_old, o_old + shift.scaled(scale), 2).value;
        row.sup_delta_f = sup_probe(p_s, pf);
        report.scaling.push_back(row);

        if (level == 0) {
            report.sup_delta_f = row.sup_delta_f;
            report.c0 = row.sup_delta_f;

            double resid = 0.0;
            for (int i = 0; i < opts.grid; ++i) {
                const double t = T * i / opts.grid;
                resid = std::max(resid, (p_s.velocity(t) - pf.eval(p_s.point(t))).norm());
            }
            report.on_orbit_residual = resid;

            for (int i = 0; i < opts.jac_samples; ++i) {
                const int k = i * std::max(1, opts.tube_samples / opts.jac_samples);
                const Eigen::VectorXd x = p_s.point(probe_t[static_cast<std::size_t>(k)]) +
                                          probe_rho[static_cast<std::size_t>(k)] *
                                              probe_dir[static_cast<std::size_t>(k)];
                Eigen::MatrixXd J(d, d);
                for (int j = 0; j < d; ++j) {
                    const double h = 1e-6 * (1.0 + std::fabs(x[j]));
                    Eigen::VectorXd xp = x, xm = x;
                    xp[j] += h;
                    xm[j] -= h;
                    J.col(j) = (pf.delta_f(xp) - pf.delta_f(xm)) / (2.0 * h);
                }
                report.c1 = std::max(report.c1, J.norm());
            }

            const Eigen::VectorXd x0 = p_s.point(0.0);
            const Eigen::VectorXd x1 = integrate(
                [&pf](const Eigen::VectorXd& y) { return pf.eval(y); }, x0, T, opts.ode);
            report.closure_error = (x1 - x0).norm();

            // Exterior points: offsets past the support radius, kept only if
            // an independent distance check confirms they are outside.
            const double lo = 1.05 * tube.delta;
            int tested = 0;
            double worst = 0.0;
            int attempts = 0;
            while (tested < opts.exterior_points && attempts < 4 * opts.exterior_points) {
                ++attempts;
                const double t = T * detail::unit_double(gen);
                const Eigen::VectorXd dir = random_unit(gen, d);
                const double rho = lo + 2.0 * tube.delta * detail::unit_double(gen);
                const Eigen::VectorXd x = p_s.point(t) + rho * dir;
                const auto cp = detail::closest_point_lenient(p_s, x, 1024);
                if (cp.distance <= tube.delta * std::sqrt(3.0) / 2.0 * (1.0 + 1e-9)) continue;
                worst = std::max(worst, pf.delta_f(x).norm());
                ++tested;
            }
            report.exterior_max = worst;
            report.exterior_tested = tested;
        }
    }
    return report;
}

ContinuationResult continue_orbit(const VectorField& f, const VectorField& g,
                                  const PeriodicOrbit& p, const ShootingOptions& opts) {
    const FloquetReport base_fl = floquet(f, p);
    if (!base_fl.hyperbolic)
        throw std::invalid_argument("continue_orbit: base orbit is not hyperbolic");

    ShootingProblem problem;
    problem.field = g;
    problem.section.point = p.point(0.0);
    problem.section.normal = f.eval(p.point(0.0)).normalized();
    problem.guess = p.point(0.0);
    problem.period_guess = p.period();

    ContinuationResult result{find_orbit(problem, opts), 0.0, FloquetReport{}};
    result.period_scale = result.orbit.period() / p.period();
    result.floquet = floquet(g, result.orbit);
    return result;
}

}  // namespace delaycert
