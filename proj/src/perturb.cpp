#include "delaycert/perturb.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "delaycert/bump.hpp"
#include "delaycert/detail/optimize.hpp"
#include "delaycert/detail/rng.hpp"
#include "delaycert/monotonicity.hpp"

namespace delaycert {

namespace {

// Grid density matched to the finest structure a signal carries, mirroring
// the critical-point scanner so run analysis resolves every slope feature.
int derivative_grid(const PeriodicSignal& o) {
    const double T = o.period();
    int n = std::max(4096, 32 * (o.mode_count() + 1));
    for (const auto& term : o.terms()) {
        if (const auto* p = std::get_if<PulseSumTerm>(&term)) {
            n = std::max(n, 16 * (static_cast<int>(std::floor(T / p->h)) + 1));
        } else if (const auto* s = std::get_if<SlopeTerm>(&term)) {
            n = std::max(n, static_cast<int>(std::ceil(16.0 * 8.0 * T / s->arc.width)));
        }
    }
    return std::min(n, 1 << 20);
}

double max_abs_derivative(const PeriodicSignal& o, int k, int grid) {
    auto f = [&](double t) { return std::fabs(o.eval(t, k)); };
    return detail::circle_sup(f, o.period(), grid).second;
}

// sup over x of |d^k/dx^k bump(x)| for the standard profile; k = 0 is the
// plateau value 1, higher orders live on the shoulders |x| in [1/2, 1].
double standard_pulse_sup(int k) {
    static const std::array<double, BumpFunction::max_order + 1> cache = [] {
        std::array<double, BumpFunction::max_order + 1> c{};
        const BumpFunction b{BumpProfile::standard};
        c[0] = 1.0;
        const int n = 4000;
        for (int order = 1; order <= BumpFunction::max_order; ++order) {
            double best = 0.0;
            int bi = 0;
            for (int i = 0; i <= n; ++i) {
                const double x = 0.5 + 0.5 * i / n;
                const double v = std::fabs(b.eval(x, order));
                if (v > best) { best = v; bi = i; }
            }
            auto f = [&](double x) { return std::fabs(b.eval(x, order)); };
            const double lo = 0.5 + 0.5 * std::max(0, bi - 1) / n;
            const double hi = 0.5 + 0.5 * std::min(n, bi + 1) / n;
            c[static_cast<std::size_t>(order)] = std::max(best, detail::golden_max(f, lo, hi).second);
        }
        return c;
    }();
    if (k < 0 || k > BumpFunction::max_order)
        throw std::invalid_argument("standard_pulse_sup: order out of range");
    return cache[static_cast<std::size_t>(k)];
}

}  // namespace

PeriodicSignal slope_perturbation(double period, double alpha, double beta, double epsilon,
                                  double interior_bound) {
    if (!(period > 0.0)) throw std::invalid_argument("slope_perturbation: period must be positive");
    if (epsilon == 0.0) return PeriodicSignal::zero(period);
    const double width = forward_arc(alpha, beta, period);
    if (!(width > 0.0) || !(width < period))
        throw std::invalid_argument("slope_perturbation: arc must have width in (0, period)");
    const CircleArc arc(alpha, width, period);
    const double c = BumpFunction{BumpProfile::slope}.integral01();
    const double amp = epsilon * period / (width * c);
    if (interior_bound > 0.0) {
        const double interior = std::max(std::fabs(epsilon), std::fabs(amp - epsilon));
        if (interior >= interior_bound) {
            const double factor = std::max(1.0, std::fabs(period / (width * c) - 1.0));
            std::ostringstream msg;
            msg << "slope_perturbation: interior slope " << interior << " reaches the bound "
                << interior_bound << "; largest admissible |epsilon| is "
                << interior_bound / factor;
            throw std::invalid_argument(msg.str());
        }
    }
    SlopeTerm term;
    term.arc = arc;
    term.epsilon = epsilon;
    term.amp = amp;
    return PeriodicSignal::zero(period).with_term(term);
}

RegularizeResult regularize(const PeriodicSignal& o, const RegularizeOptions& opts) {
    if (!(opts.budget > 0.0)) throw std::invalid_argument("regularize: budget must be positive");
    if (opts.r < 0 || opts.r > 4) throw std::invalid_argument("regularize: r must lie in [0, 4]");
    const double T = o.period();

    bool constant = false;
    MonotonicityProfile prof;
    try {
        prof = critical_points(o);
    } catch (const std::domain_error&) {
        constant = true;
    }
    if (!constant && prof.regular) {
        RegularizeResult res{o, false, 0.0, CircleArc{0.0, T, T}, 0, 0.0};
        return res;
    }

    if (constant) {
        // Nothing to anchor slope surgery to; seed a single harmonic whose
        // C^r norm stays safely inside the budget.
        const double omega = 2.0 * std::acos(-1.0) / T;
        double factor = 1.0;
        for (int k = 1; k <= opts.r; ++k) factor = std::max(factor, std::pow(omega, k));
        const double amp = std::min(opts.budget / 10.0, 0.5 * opts.budget / factor);
        PeriodicSignal out = o + PeriodicSignal::harmonic(T, 1, 0.0, amp);
        const auto prof2 = critical_points(out);
        if (!prof2.regular)
            throw std::runtime_error("regularize: harmonic seed failed to produce a regular profile");
        RegularizeResult res;
        res.signal = out;
        res.changed = true;
        res.interval = CircleArc{0.0, T, T};
        res.distance = distance_r(o, out, opts.r).value;
        return res;
    }

    // Largest one-sign interval of o': classify a dense grid of derivative
    // samples, assemble circular runs of constant sign, and keep the widest.
    const int n = derivative_grid(o);
    const double h = T / n;
    std::vector<double> d(static_cast<std::size_t>(n));
    double dsup = 0.0;
    for (int i = 0; i < n; ++i) {
        d[static_cast<std::size_t>(i)] = o.eval(i * h, 1);
        dsup = std::max(dsup, std::fabs(d[static_cast<std::size_t>(i)]));
    }
    const double tol0 = 1e-9 * dsup;
    auto cls = [&](int i) -> int {
        const double v = d[static_cast<std::size_t>(i)];
        if (v > tol0) return 1;
        if (v < -tol0) return -1;
        return 0;
    };

    struct Run {
        int start = 0;
        int len = 0;
        int sign = 0;
        int argmax = 0;
        double peak = 0.0;
    };
    std::vector<Run> runs;
    int i0 = 0;
    while (i0 < n && cls(i0) != 0 && cls(i0) == cls((i0 + n - 1) % n)) ++i0;
    if (i0 == n)
        throw std::runtime_error("regularize: derivative has a single sign, impossible for a periodic signal");
    for (int step = 0, i = i0; step < n;) {
        const int c = cls(i);
        if (c == 0) {
            i = (i + 1) % n;
            ++step;
            continue;
        }
        Run run{i, 0, c, i, 0.0};
        while (step < n && cls(i) == c) {
            const double mag = std::fabs(d[static_cast<std::size_t>(i)]);
            if (mag > run.peak) { run.peak = mag; run.argmax = i; }
            ++run.len;
            i = (i + 1) % n;
            ++step;
        }
        runs.push_back(run);
    }
    if (runs.empty()) throw std::runtime_error("regularize: no one-sign interval found");
    const Run best = *std::max_element(runs.begin(), runs.end(), [](const Run& a, const Run& b) {
        if (a.len != b.len) return a.len < b.len;
        if (a.peak != b.peak) return a.peak < b.peak;
        return a.start > b.start;
    });

    // Refine the peak and locate (alpha, beta), the maximal subinterval
    // around it where sign * o' stays above half the peak.
    const double sgn = best.sign;
    auto g = [&](double t) { return sgn * o.eval(t, 1); };
    auto dg = [&](double t) { return sgn * o.eval(t, 2); };
    const double t_peak0 = best.argmax * h;
    auto [t_peak, peak] = detail::golden_max(g, t_peak0 - h, t_peak0 + h);
    const double delta0 = 0.5 * peak;
    const double xtol = 1e-13 * T;

    auto edge = [&](int dir) {
        double prev = t_peak;
        for (int s = 1; s <= 2 * n; ++s) {
            const double t = t_peak + dir * s * h;
            if (g(t) <= delta0) {
                const double a = std::min(prev, t), b = std::max(prev, t);
                return detail::bracketed_root([&](double x) { return g(x) - delta0; }, dg, a, b,
                                              xtol);
            }
            prev = t;
        }
        throw std::runtime_error("regularize: failed to bracket the half-peak level");
    };
    const double alpha = edge(-1);
    const double beta = edge(+1);
    const double width = beta - alpha;
    const CircleArc arc(alpha, width, T);

    const double c = BumpFunction{BumpProfile::slope}.integral01();
    const double bound_factor = std::max(1.0, std::fabs(T / (width * c) - 1.0));
    const double unit_norm = norm_r(slope_perturbation(T, alpha, beta, 1.0), opts.r);
    const double eps0 = 0.5 * std::min(delta0 / bound_factor, opts.budget / unit_norm);
    if (!(eps0 > 0.0)) throw std::runtime_error("regularize: no admissible slope level");

    for (int attempt = 0; attempt < opts.max_attempts; ++attempt) {
        const double eps = eps0 * std::pow(2.0, -(attempt / 2)) * (attempt % 2 ? -1.0 : 1.0);
        const PeriodicSignal p = slope_perturbation(T, alpha, beta, eps);
        const PeriodicSignal cand = o - p;
        const double dist = distance_r(o, cand, opts.r).value;
        if (dist > opts.budget) continue;
        try {
            const auto prof2 = critical_points(cand);
            if (!prof2.regular) continue;
        } catch (const std::domain_error&) {
            continue;
        }
        RegularizeResult res;
        res.signal = cand;
        res.changed = true;
        res.epsilon = eps;
        res.interval = arc;
        res.attempts = attempt + 1;
        res.distance = dist;
        return res;
    }
    throw std::runtime_error("regularize: exhausted slope-level candidates without reaching a regular profile");
}

PulseFamily::PulseFamily(double period_, double tau_) : period(period_), tau(tau_) {
    if (!(period > 0.0)) throw std::invalid_argument("PulseFamily: period must be positive");
    if (!(tau > 0.0) || !(2.0 * tau < period))
        throw std::invalid_argument("PulseFamily: tau must lie in (0, period/2)");
    h = 0.5 * tau;
    count = static_cast<int>(std::floor(period / h)) + 1;
}

int PulseFamily::plateau_index(double t) const {
    const double tw = wrap(t, period);
    int j = static_cast<int>(std::lround(tw / h));
    if (j >= count) j = 0;  // times past the last center wrap to the seam pulse
    return j;
}

double PulseFamily::pulse(int j, double t, int k) const {
    if (j < 0 || j >= count) throw std::invalid_argument("PulseFamily::pulse: index out of range");
    const double x = circ_signed(center(j), wrap(t, period), period) / h;
    const double v = BumpFunction{BumpProfile::standard}.eval(x, k);
    return v / std::pow(h, k);
}

double PulseFamily::cr_factor(int r) const {
    if (r < 0 || r > 8) throw std::invalid_argument("PulseFamily::cr_factor: r must lie in [0, 8]");
    double factor = 0.0;
    for (int k = 0; k <= r; ++k)
        factor = std::max(factor, standard_pulse_sup(k) / std::pow(h, k));
    return factor;
}

PeriodicSignal PulseFamily::applied(const PeriodicSignal& base, const Eigen::ArrayXd& coeffs) const {
    if (coeffs.size() != count)
        throw std::invalid_argument("PulseFamily::applied: coefficient count mismatch");
    if (!coeffs.isFinite().all())
        throw std::invalid_argument("PulseFamily::applied: coefficients must be finite");
    if ((coeffs == 0.0).all()) return base;
    PulseSumTerm term;
    term.period = period;
    term.h = h;
    term.coeffs = coeffs;
    return base.with_term(term);
}

RepairResult repair(const PeriodicSignal& o, const DelayParameters& params,
                    const RepairOptions& opts) {
    if (!(opts.budget > 0.0)) throw std::invalid_argument("repair: budget must be positive");
    if (opts.r < 0 || opts.r > 4) throw std::invalid_argument("repair: r must lie in [0, 4]");
    if (opts.max_iters < 1) throw std::invalid_argument("repair: max_iters must be at least 1");

    MonotonicityProfile prof;
    try {
        prof = critical_points(o);
    } catch (const std::domain_error&) {
        throw std::invalid_argument("repair: signal has no usable critical-point profile; regularize first");
    }
    if (!prof.regular)
        throw std::invalid_argument("repair: profile is not regular; regularize first");
    const double mu = prof.mu();
    if (!(params.tau > 0.0) || !(params.tau < mu / 12.0)) {
        std::ostringstream msg;
        msg << "repair: tau = " << params.tau << " must lie in (0, mu/12) with mu = " << mu;
        throw std::invalid_argument(msg.str());
    }

    const double T = o.period();
    const double tau = params.tau;
    const PulseFamily fam(T, tau);

    // Any time lies in the support of at most two pulses, so capping every
    // coefficient at budget / (2 * cr_factor) bounds the C^r norm of the
    // whole train by the budget, independent of how many rounds ran.
    const double cap = opts.budget / (2.0 * fam.cr_factor(opts.r));

    // Repair can only push margins up to roughly the size of the applied
    // pulses. Certification demands what the cap can deliver, floored well
    // above the refutation level so verdict classes never overlap.
    const double norm0 = norm_r(o, 0);
    CertifyOptions copts = opts.certify;
    double refute_abs = copts.refute_abs_tol > 0.0
                            ? copts.refute_abs_tol
                            : std::max(copts.refute_rel_tol * norm0, 1e-300);
    double cert_abs = copts.certify_abs_tol > 0.0
                          ? copts.certify_abs_tol
                          : std::max(4.0 * refute_abs,
                                     std::min(copts.certify_rel_tol * norm0, cap / 8.0));
    copts.refute_abs_tol = refute_abs;
    copts.certify_abs_tol = cert_abs;

    std::mt19937_64 gen(opts.seed);
    Eigen::ArrayXd coeffs = Eigen::ArrayXd::Zero(fam.count);

    RepairResult res;
    res.coefficient_cap = cap;
    res.certify_tol = cert_abs;
    res.seed = opts.seed;

    PeriodicSignal current = o;
    EmbeddingCertificate cert;
    bool dirty = false;  // a draw has been accepted, o carries a pulse train
    for (int it = 1; it <= opts.max_iters; ++it) {
        current = dirty ? fam.applied(o, coeffs) : o;
        cert = certify(current, params, copts);
        if (cert.verdict == Verdict::certified) {
            res.success = true;
            res.iterations = it - 1;  // draw rounds consumed before success
            break;
        }
        res.iterations = it;
        if (!cert.witness.has_value()) break;  // nothing to steer toward

        // The six delay coordinates of the offending pair, mapped to the
        // pulses whose plateaus own them.
        const double t1 = cert.witness->t1;
        const double t2 = cert.witness->t2;
        std::array<double, 6> pts = {t1,          t1 - tau, t1 - 2.0 * tau,
                                     t2, t2 - tau, t2 - 2.0 * tau};
        std::vector<int> idx;
        for (double p : pts) {
            const int j = fam.plateau_index(p);
            if (std::find(idx.begin(), idx.end(), j) == idx.end()) idx.push_back(j);
        }
        // Keep only pulses that act on exactly their own coordinate; partial
        // overlaps (seam effects, near pairs) would couple the draws.
        std::vector<int> clean;
        for (int j : idx) {
            bool ok = true;
            for (double p : pts) {
                const double v = fam.pulse(j, p);
                const bool own = fam.plateau_index(p) == j;
                if (own ? v < 1.0 - 1e-9 : v > 1e-9) { ok = false; break; }
            }
            if (ok) clean.push_back(j);
        }
        if (clean.empty()) clean = idx;  // coupled draws still make progress
        std::sort(clean.begin(), clean.end());

        Eigen::ArrayXd cand = coeffs;
        for (int j : clean) cand[j] = detail::symmetric_double(gen, cap);

        // Side conditions: the draw must not create or destroy critical
        // points and must keep the profile regular.
        bool accept = false;
        try {
            const auto prof2 = critical_points(fam.applied(o, cand));
            accept = prof2.regular && prof2.points.size() == prof.points.size();
        } catch (const std::domain_error&) {
            accept = false;
        }
        if (accept) {
            coeffs = cand;
            dirty = true;
            ++res.accepted;
        } else {
            ++res.rejected;
        }
    }
    if (!res.success) {
        current = dirty ? fam.applied(o, coeffs) : o;
        cert = certify(current, params, copts);
        res.success = cert.verdict == Verdict::certified;
    }
    res.signal = current;
    res.certificate = cert;
    res.distance = distance_r(o, current, opts.r).value;
    return res;
}

}  // namespace delaycert
